//! Bohr-Sommerfeld predictions for the Lax eigenvalues and residual
//! diagnostics against the eigensolver.
//!
//! All `psi` functions take `eta = -lambda` as their argument.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::burgers::DistributionProfile;
use crate::error::{Error, Result};
use crate::landscape::{critical_points, CriticalPointSet};
use crate::laxspec::SpectrumResult;
use crate::potential::{ls_slope, TrigPotential};

type C64 = Complex64;

/// `(1/2pi) sum_k arg((p_- - p_k) / (p_+ - p_k))`, each term in `(-1/2, 1/2]`.
pub fn arg_sum(cps: &CriticalPointSet) -> Result<f64> {
    let (Some(pp), Some(pm)) = (cps.p_plus, cps.p_minus) else {
        return Err(Error::DegenerateCriticalPoints("no roots on the circle".into()));
    };
    Ok(cps.inside.iter().map(|p| ((pm - p) / (pp - p)).arg()).sum::<f64>() / TAU)
}

fn frac(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `-1/4 - N F(eta)` in `[0, 1)`; equals [`psi_general`] when `N = 1`.
pub fn psi_even(u: &TrigPotential, profile: &DistributionProfile, eta: f64) -> Result<f64> {
    if !u.is_even() {
        return Err(Error::NotEven);
    }
    Ok(frac(-0.25 - u.degree() as f64 * profile.f(eta)))
}

/// `-1/4 - N F(eta) + (1/2pi) sum_k [arg(p_- - p_k) - arg(p_+ - p_k)]`
/// in `[0, 1)`, with `eta = -cps.lambda`.
pub fn psi_general(u: &TrigPotential, profile: &DistributionProfile, cps: &CriticalPointSet) -> Result<f64> {
    let eta = -cps.lambda;
    if !(eta > profile.min_u && eta < profile.max_u) {
        return Err(Error::OutOfRegion(format!("eta = {eta}")));
    }
    Ok(frac(-0.25 - u.degree() as f64 * profile.f(eta) + arg_sum(cps)?))
}

pub const PSI_TABLE_SIZE: usize = 2048;

/// Continuous representative of `psi` on `(min u, max u)`, anchored at
/// `3/4` as `eta` tends to `max u`.
#[derive(Clone, Debug)]
pub struct PsiTable {
    u: TrigPotential,
    profile: DistributionProfile,
    /// Descending grid from just below `max u` to just above `min u`.
    etas: Vec<f64>,
    values: Vec<f64>,
}

impl PsiTable {
    pub fn new(u: &TrigPotential) -> Result<Self> {
        Self::with_size(u, PSI_TABLE_SIZE)
    }

    pub fn with_size(u: &TrigPotential, size: usize) -> Result<Self> {
        let profile = DistributionProfile::new(u)?;
        let span = profile.max_u - profile.min_u;
        // cosine spacing resolves the square-root edges
        let etas: Vec<f64> = (0..size)
            .map(|i| {
                let s = (i as f64 + 0.5) / size as f64;
                profile.max_u - span * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
            })
            .collect();
        let mut values = Vec::with_capacity(size);
        let mut prev = 0.75;
        for (i, &eta) in etas.iter().enumerate() {
            let cps = critical_points(u, -eta)?;
            let raw = psi_general(u, &profile, &cps)?;
            let lifted = raw + (prev - raw).round();
            if i > 0 && (lifted - prev).abs() > 0.2 {
                return Err(Error::PhaseUnwrapAmbiguity(i));
            }
            values.push(lifted);
            prev = lifted;
        }
        Ok(Self { u: u.clone(), profile, etas, values })
    }

    pub fn profile(&self) -> &DistributionProfile {
        &self.profile
    }

    fn interp(&self, eta: f64) -> f64 {
        let e = &self.etas;
        if eta >= e[0] {
            return self.values[0];
        }
        if eta <= e[e.len() - 1] {
            return self.values[e.len() - 1];
        }
        let i = e.partition_point(|&x| x > eta);
        let (a, b) = (e[i - 1], e[i]);
        let w = (a - eta) / (a - b);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }

    /// Lifted `psi(eta)`, computed exactly and placed on the branch of the table.
    pub fn eval(&self, eta: f64) -> Result<f64> {
        let cps = critical_points(&self.u, -eta)?;
        let raw = psi_general(&self.u, &self.profile, &cps)?;
        let guess = self.interp(eta);
        Ok(raw + (guess - raw).round())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Small,
    Large,
    Band,
    Transition,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionPartition {
    pub delta: f64,
    /// `Lambda_-(delta) = [-max u + delta, -min u - delta]`.
    pub small: (f64, f64),
    /// `Lambda_+(delta) = [-min u + delta, inf)`.
    pub large_from: f64,
    pub bands: Vec<f64>,
    pub tags: Vec<Region>,
}

impl RegionPartition {
    pub fn region_of(&self, lambda_shifted: f64) -> Region {
        if self.bands.iter().any(|y| (lambda_shifted - y).abs() < self.delta) {
            Region::Band
        } else if lambda_shifted >= self.small.0 && lambda_shifted <= self.small.1 {
            Region::Small
        } else if lambda_shifted >= self.large_from {
            Region::Large
        } else {
            Region::Transition
        }
    }

    pub fn indices(&self, r: Region) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tags[i] == r).collect()
    }
}

/// Tags each `lambda_n` by the region containing `lambda_n + eps`.
pub fn region_classify(spec: &SpectrumResult, min_u: f64, max_u: f64, delta: f64, bands: &[f64]) -> RegionPartition {
    let mut part = RegionPartition {
        delta,
        small: (-max_u + delta, -min_u - delta),
        large_from: -min_u + delta,
        bands: bands.to_vec(),
        tags: Vec::new(),
    };
    part.tags = spec.eigenvalues.iter().map(|l| part.region_of(l + spec.eps)).collect();
    part
}

/// Default `delta`: a tenth of the range of `u`.
pub fn default_delta(min_u: f64, max_u: f64) -> f64 {
    0.1 * (max_u - min_u)
}

/// Solves `A(eta) = target` by bisection; `A` is decreasing.
fn invert_action(profile: &DistributionProfile, target: f64) -> f64 {
    let (mut lo, mut hi) = (profile.min_u, profile.max_u);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if profile.action_closed(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub const FIXED_POINT_TOL: f64 = 1e-13;
pub const FIXED_POINT_MAX: usize = 100;

/// `lambda_hat_n = -eta` where `A(eta) = eps (n + psi(eta))`, iterated on the
/// `psi` term until the update is below [`FIXED_POINT_TOL`].
pub fn predict_small(table: &PsiTable, eps: f64, delta: f64, n: usize) -> Result<f64> {
    let prof = table.profile();
    let inside = |eta: f64| eta > prof.min_u + delta && eta < prof.max_u - delta;
    // start from the value psi takes at the top of the range
    let mut eta = invert_action(prof, eps * (n as f64 + 0.75));
    for _ in 0..FIXED_POINT_MAX {
        let psi = table.eval(eta)?;
        let next = invert_action(prof, eps * (n as f64 + psi));
        if !(next > prof.min_u && next < prof.max_u) {
            return Err(Error::OutOfRegion(format!("iterate left the range at eta = {next}")));
        }
        let step = (next - eta).abs();
        eta = next;
        if step < FIXED_POINT_TOL {
            if !inside(eta) {
                return Err(Error::OutOfRegion(format!("n = {n} solves at eta = {eta}")));
            }
            return Ok(-eta);
        }
    }
    Err(Error::ConvergenceFailure(FIXED_POINT_MAX))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResidual {
    pub n: usize,
    pub p: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsResiduals {
    pub eps: f64,
    pub small: Vec<PairResidual>,
    pub large: Vec<PairResidual>,
    pub max_small: f64,
    pub max_large: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuantizationReport {
    pub delta: f64,
    pub argument: &'static str,
    pub per_eps: Vec<EpsResiduals>,
    /// Slope of `log max small residual` against `log eps`.
    pub small_slope: Option<f64>,
    pub large_slope: Option<f64>,
}

/// Adjacent-pair residuals `|A(eta_n) - A(eta_p) - (n - p + psi_n - psi_p) eps|`
/// on the small region and `|lambda_n - lambda_p - (n - p) eps|` on the
/// large region, where the large region is further cut at `n <= k_max / eps`.
pub fn residual_report(
    table: &PsiTable,
    spectra: &[SpectrumResult],
    delta: f64,
    bands: &[f64],
    k_max: f64,
) -> Result<QuantizationReport> {
    if spectra.len() < 3 {
        return Err(Error::InsufficientLadder(spectra.len()));
    }
    let prof = table.profile();
    let mut per_eps = Vec::new();
    for spec in spectra {
        let part = region_classify(spec, prof.min_u, prof.max_u, delta, bands);
        let lam = &spec.eigenvalues;
        let mut small = Vec::new();
        let mut large = Vec::new();
        for n in 0..lam.len().saturating_sub(1) {
            let p = n + 1;
            if part.tags[n] == Region::Small && part.tags[p] == Region::Small {
                let (en, ep) = (-lam[n], -lam[p]);
                let lhs = prof.action_closed(en) - prof.action_closed(ep);
                let rhs = (n as f64 - p as f64 + table.eval(en)? - table.eval(ep)?) * spec.eps;
                small.push(PairResidual { n, p, residual: (lhs - rhs).abs() });
            }
        }
        let large_idx: Vec<usize> =
            part.indices(Region::Large).into_iter().filter(|&n| n as f64 <= k_max / spec.eps).collect();
        if let Some(&first) = large_idx.first() {
            let base = lam[first] - first as f64 * spec.eps;
            for &n in &large_idx[1..] {
                large.push(PairResidual { n, p: first, residual: (lam[n] - n as f64 * spec.eps - base).abs() });
            }
        }
        let max_small = small.iter().map(|r| r.residual).fold(0.0, f64::max);
        let max_large = spread(&large_idx.iter().map(|&n| lam[n] - n as f64 * spec.eps).collect::<Vec<_>>());
        per_eps.push(EpsResiduals { eps: spec.eps, small, large, max_small, max_large });
    }
    let fit = |f: &dyn Fn(&EpsResiduals) -> f64| {
        let pts: Vec<(f64, f64)> =
            per_eps.iter().filter(|r| f(r) > 0.0).map(|r| (r.eps.ln(), f(r).ln())).collect();
        if pts.len() < 2 {
            return None;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        ls_slope(&xs, &ys)
    };
    let small_slope = fit(&|r| r.max_small);
    let large_slope = fit(&|r| r.max_large);
    Ok(QuantizationReport { delta, argument: "eta = -lambda", per_eps, small_slope, large_slope })
}

/// `max - min` of the values, which is the largest pairwise `|a - b|`.
fn spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Unimodular second factor `e^{-2 i pi psi + (S(p_+) - S(p_-))/eps}` of the
/// small-case determinant expansion.
pub fn quantization_phase(action_diff: C64, psi: f64, eps: f64) -> C64 {
    (C64::new(0.0, -TAU * psi) + action_diff / eps).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laxspec::spectrum;

    fn cosine() -> TrigPotential {
        TrigPotential::preset("cosine").unwrap()
    }

    #[test]
    fn cosine_psi() {
        let u = cosine();
        let prof = DistributionProfile::new(&u).unwrap();
        assert!((psi_even(&u, &prof, 0.0).unwrap() - 0.25).abs() < 1e-12);
        let cps = critical_points(&u, 0.0).unwrap();
        assert!((psi_general(&u, &prof, &cps).unwrap() - 0.25).abs() < 1e-12);
        let t = PsiTable::new(&u).unwrap();
        // lifted: 3/4 - F
        for eta in [-1.5, -0.3, 0.0, 1.2, 1.9] {
            assert!((t.eval(eta).unwrap() - (0.75 - prof.f(eta))).abs() < 1e-12);
        }
        let odd = TrigPotential::preset("fig-level0").unwrap();
        assert_eq!(psi_even(&odd, &prof, 0.0), Err(Error::NotEven));
    }

    #[test]
    fn cosine_predictions_track_eigenvalues() {
        let u = cosine();
        let t = PsiTable::new(&u).unwrap();
        let eps = 0.1;
        let spec = spectrum(&u, eps, 400).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in 0..60 {
            let Ok(l) = predict_small(&t, eps, 0.05, n) else { continue };
            assert!(l > prev);
            prev = l;
            if (-1.5..=1.5).contains(&-spec.eigenvalues[n]) {
                assert!((l - spec.eigenvalues[n]).abs() <= 0.1 * eps, "n={n} {l} {}", spec.eigenvalues[n]);
            }
        }
    }

    #[test]
    fn cosine_regions() {
        let u = cosine();
        let spec = spectrum(&u, 0.05, 400).unwrap();
        let part = region_classify(&spec, -2.0, 2.0, 0.2, &[-2.0, 2.0]);
        assert!((part.small.0 + 1.8).abs() < 1e-15 && (part.small.1 - 1.8).abs() < 1e-15);
        assert!((part.large_from - 2.2).abs() < 1e-15);
        assert_eq!(part.tags.len(), spec.eigenvalues.len());
    }
}
