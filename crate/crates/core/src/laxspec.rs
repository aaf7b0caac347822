//! Truncated Lax operator `L_u(eps) = -i eps d/dx - Pi(u .)` on the span of
//! `e^{ikx}`, `0 <= k < M`, its spectrum, phase constants and gaps.

use num_complex::Complex64;
use serde::Serialize;

use crate::burgers::DistributionProfile;
use crate::eig::hermitian_eigh;
use crate::error::{Error, Result};
use crate::potential::TrigPotential;

type C64 = Complex64;

const PHASE_FLOOR: f64 = 1e-12;

/// Dense row-major Hermitian matrix `H[j,k] = eps j delta_jk - c_{j-k}`.
#[derive(Clone, Debug)]
pub struct LaxMatrix {
    pub m: usize,
    pub eps: f64,
    pub band: usize,
    data: Vec<C64>,
}

impl LaxMatrix {
    /// Builds the matrix from `c_1..c_K`; `eps = 0` gives `-T_u`.
    pub fn from_coeffs(coeffs: &[C64], eps: f64, m: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); m * m];
        for j in 0..m {
            data[j * m + j] = C64::new(eps * j as f64, 0.0);
            for (i, c) in coeffs.iter().enumerate() {
                let d = i + 1;
                if j + d < m {
                    data[(j + d) * m + j] = -c;
                    data[j * m + j + d] = -c.conj();
                }
            }
        }
        Self { m, eps, band: coeffs.len(), data }
    }

    /// Diagonal matrix `eps j`, i.e. the operator with `u = 0`.
    pub fn free(eps: f64, m: usize) -> Self {
        Self::from_coeffs(&[], eps, m)
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.data[j * self.m + k]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for k in 0..=j {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let m = self.m;
        (0..m)
            .map(|j| {
                let lo = j.saturating_sub(self.band);
                let hi = (j + self.band + 1).min(m);
                (lo..hi).map(|k| self.data[j * m + k] * v[k]).sum()
            })
            .collect()
    }
}

pub fn assemble_lax(u: &TrigPotential, eps: f64, m: usize) -> Result<LaxMatrix> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    if m < 4 * u.degree() {
        return Err(Error::TruncationTooSmall(format!("M = {m} < 4N = {}", 4 * u.degree())));
    }
    Ok(LaxMatrix::from_coeffs(u.coeffs(), eps, m))
}

/// `max(8N, ceil((lambda_target + 2 |u|_inf)/eps) + 4N)`.
pub fn auto_truncation(u: &TrigPotential, eps: f64, lambda_target: f64) -> usize {
    let n = u.degree();
    let need = ((lambda_target + 2.0 * u.sup_norm()) / eps).ceil().max(0.0) as usize + 4 * n;
    need.max(8 * n)
}

/// Full spectrum in the chain gauge: `<1|f_0> > 0` and
/// `<f_{n+1}|S f_n> > 0`, with `<a|b> = sum a_k conj(b_k)`.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eps: f64,
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    /// Indices where the chain pairing vanished and the largest component
    /// was made real positive instead.
    pub gauge_fallbacks: Vec<usize>,
}

pub const GAUGE: &str = "<1|f_0> > 0; <f_(n+1)|S f_n> > 0, else largest component real positive";

fn phase_by_largest(f: &mut [C64]) {
    let big = (0..f.len()).fold(0, |b, i| if f[i].norm() > f[b].norm() { i } else { b });
    let w = f[big];
    if w.norm() > 0.0 {
        let ph = w.conj() / w.norm();
        f.iter_mut().for_each(|z| *z *= ph);
    }
}

fn rephase(f: &mut [C64], w: C64) {
    let ph = w.conj() / w.norm();
    f.iter_mut().for_each(|z| *z *= ph);
}

/// `sum_k a[k+1] conj(b[k])`, i.e. `<a|S b>`.
pub fn shifted_inner(a: &[C64], b: &[C64]) -> C64 {
    (0..a.len() - 1).map(|k| a[k + 1] * b[k].conj()).sum()
}

pub fn eigensolve(h: &LaxMatrix) -> Result<SpectrumResult> {
    let e = hermitian_eigh(h.data(), h.m)?;
    let mut vectors = e.vecs;
    let mut gauge_fallbacks = Vec::new();
    for n in 0..vectors.len() {
        let w = if n == 0 {
            vectors[0][0]
        } else {
            let (done, rest) = vectors.split_at(n);
            shifted_inner(&rest[0], &done[n - 1])
        };
        if w.norm() > PHASE_FLOOR {
            rephase(&mut vectors[n], w);
        } else {
            phase_by_largest(&mut vectors[n]);
            gauge_fallbacks.push(n);
        }
    }
    Ok(SpectrumResult { eps: h.eps, m: h.m, eigenvalues: e.vals, vectors, gauge_fallbacks })
}

pub fn spectrum(u: &TrigPotential, eps: f64, m: usize) -> Result<SpectrumResult> {
    eigensolve(&assemble_lax(u, eps, m)?)
}

impl SpectrumResult {
    /// `<1|f_n> = conj(f_n[0])`.
    pub fn inner_one(&self, n: usize) -> C64 {
        self.vectors[n][0].conj()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.eigenvalues.windows(2).map(|w| w[1] - w[0] - self.eps).collect()
    }

    pub fn max_residual(&self, h: &LaxMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for (lam, f) in self.eigenvalues.iter().zip(&self.vectors) {
            let hf = h.apply(f);
            let r: f64 = hf.iter().zip(f).map(|(a, b)| (a - b * lam).norm_sqr()).sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }

    pub fn max_gram_residual(&self) -> f64 {
        let n = self.vectors.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let g: C64 = self.vectors[i].iter().zip(&self.vectors[j]).map(|(a, b)| a * b.conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - want).norm());
            }
        }
        worst
    }
}

/// `theta_n = arg <1|f_n>`, zero when `|<1|f_n>| <= 1e-12`.
pub fn phase_constants(spec: &SpectrumResult) -> Vec<f64> {
    (0..spec.eigenvalues.len())
        .map(|n| {
            let w = spec.inner_one(n);
            if w.norm() > PHASE_FLOOR {
                w.arg()
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SumRule {
    pub gaps: Vec<f64>,
    /// `eps sum_{n < M/2} (n + 1) gamma_n`
    pub weighted_sum: f64,
    /// `mean(u^2) / 2`
    pub target: f64,
    pub residual: f64,
}

/// Trace identity `eps sum_{n>=0} (n+1) gamma_n = (1/2) (1/2pi) int u^2`.
///
/// The sum stops at `n < M/2`: the upper half of a truncated spectrum carries
/// spurious gaps that mirror the lower edge.
pub fn gaps_and_sumrule(spec: &SpectrumResult, u: &TrigPotential) -> Result<SumRule> {
    let n = u.degree();
    if spec.m < 8 * n || spec.eps * (spec.m as f64) < 4.0 * u.sup_norm() {
        return Err(Error::TruncationTooSmall(format!(
            "need M >= 8N and eps M >= 4 |u|_inf (M = {}, eps = {})",
            spec.m, spec.eps
        )));
    }
    Ok(sum_rule_against(spec, 0.5 * u.mean_square()))
}

pub fn sum_rule_against(spec: &SpectrumResult, target: f64) -> SumRule {
    let gaps = spec.gaps();
    let weighted_sum = spec.eps * gaps.iter().take(spec.m / 2).enumerate().map(|(n, g)| (n + 1) as f64 * g).sum::<f64>();
    SumRule { residual: (weighted_sum - target).abs(), gaps, weighted_sum, target }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityReport {
    pub pairings: Vec<C64>,
    pub max_im: f64,
    pub max_abs: f64,
    /// `e^{i(theta_{n+1} - theta_n)}` where both `|<1|f>|` exceed 1e-6.
    pub phase_steps: Vec<Option<C64>>,
    /// Largest distance of a defined phase step from the nearer of `+1, -1`.
    pub max_step_deviation: f64,
    /// Upside-down set: `n >= 1`, `lambda_n + eps` in `Lambda_-(delta)`, and
    /// a phase step opposite to `e^{i (x_+ + x_-)/2 + i pi}` at `eta = -lambda_n`.
    pub j: Vec<usize>,
    /// The same indices with the step compared against `-1` instead, which
    /// agrees with `j` when the maximum of `u` sits at `x = 0`.
    pub j_literal: Vec<usize>,
}

/// `s_n = <f_n | S f_n>` for every eigenvector (gauge invariant).
pub fn shift_pairings(spec: &SpectrumResult) -> Vec<C64> {
    spec.vectors.iter().map(|f| shifted_inner(f, f)).collect()
}

pub fn shift_pairing(spec: &SpectrumResult, profile: &DistributionProfile, delta: f64) -> ParityReport {
    let (min_u, max_u) = (profile.min_u, profile.max_u);
    let pairings = shift_pairings(spec);
    let max_im = pairings.iter().fold(0.0f64, |m, s| m.max(s.im.abs()));
    let max_abs = pairings.iter().fold(0.0f64, |m, s| m.max(s.norm()));
    let nv = spec.eigenvalues.len();
    let mut phase_steps = Vec::with_capacity(nv);
    let mut max_step_deviation: f64 = 0.0;
    let mut j = Vec::new();
    let mut j_literal = Vec::new();
    for n in 0..nv {
        if n + 1 >= nv {
            phase_steps.push(None);
            continue;
        }
        let (a, b) = (spec.inner_one(n), spec.inner_one(n + 1));
        if a.norm() <= 1e-6 || b.norm() <= 1e-6 {
            phase_steps.push(None);
            continue;
        }
        let step = (b / b.norm()) * (a / a.norm()).conj();
        max_step_deviation = max_step_deviation.max((step - 1.0).norm().min((step + 1.0).norm()));
        let lam = spec.eigenvalues[n] + spec.eps;
        if n >= 1 && lam >= -max_u + delta && lam <= -min_u - delta {
            if step.re > 0.0 {
                j_literal.push(n);
            }
            if let Ok((xp, xm)) = profile.antecedents(-spec.eigenvalues[n]) {
                let predicted = C64::from_polar(1.0, 0.5 * (xp + xm) + std::f64::consts::PI);
                if (step * predicted.conj()).re < 0.0 {
                    j.push(n);
                }
            }
        }
        phase_steps.push(Some(step));
    }
    ParityReport { pairings, max_im, max_abs, phase_steps, max_step_deviation, j, j_literal }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_small_matrix() {
        let u = TrigPotential::preset("cosine").unwrap();
        let h = assemble_lax(&u, 1.0, 4).unwrap();
        for j in 0..4 {
            assert_eq!(h.get(j, j), C64::new(j as f64, 0.0));
        }
        for j in 0..3 {
            assert_eq!(h.get(j, j + 1), C64::new(1.0, 0.0));
            assert_eq!(h.get(j + 1, j), C64::new(1.0, 0.0));
        }
        assert_eq!(h.get(0, 2), C64::new(0.0, 0.0));
        assert!(matches!(assemble_lax(&u, 1.0, 3), Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn fig_matrix_is_hermitian_and_banded() {
        let u = TrigPotential::preset("fig-level0").unwrap();
        let h = assemble_lax(&u, 0.1, 256).unwrap();
        assert_eq!(h.hermiticity_residual(), 0.0);
        for j in 0usize..256 {
            for k in 0..256 {
                if j.abs_diff(k) > 6 {
                    assert_eq!(h.get(j, k), C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn free_spectrum() {
        let s = eigensolve(&LaxMatrix::free(1.0, 16)).unwrap();
        for (n, l) in s.eigenvalues.iter().enumerate() {
            assert!((l - n as f64).abs() <= 1e-12);
        }
        let th = phase_constants(&s);
        assert!(th.iter().all(|t| *t == 0.0));
        assert!(shift_pairings(&s).iter().all(|p| p.norm() == 0.0));
        let r = sum_rule_against(&s, 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn cosine_reference_values() {
        let u = TrigPotential::preset("cosine").unwrap();
        let h = assemble_lax(&u, 0.5, 128).unwrap();
        let s = eigensolve(&h).unwrap();
        let want = [-1.0627429, -0.04558353, 0.74250333, 1.40011159, 1.97173236, 2.49469243];
        for (a, b) in s.eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        assert!(s.max_residual(&h) <= 1e-10 * (0.5 * 128.0 + 4.0));
        assert!(s.max_gram_residual() <= 1e-10);
        assert!(s.inner_one(0).im == 0.0 && s.inner_one(0).re > 0.0);
    }
}
