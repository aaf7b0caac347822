//! The Evans determinant `det A(lambda; eps)` evaluated by quadrature on the
//! original contours, and a scan for its real zeros.
//!
//! Everything here works in the frame where `c_N > 0`; the spectrum does not
//! depend on the frame.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::TrigPotential;
use crate::quad::{gk_adaptive, GkSettings};

type C64 = Complex64;

/// Integrand magnitudes this far (in `log`) below the peak of a ray are dropped.
pub const RAY_LOG_DROP: f64 = 46.0;
/// Largest phase increment per initial panel.
pub const PANEL_PHASE: f64 = PI / 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    Gamma(usize),
    GammaNPlus,
    GammaNMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Segment {
    /// From the origin out to `e^{i theta}`.
    RayOut { theta: f64 },
    /// From `e^{i theta}` in to the origin.
    RayIn { theta: f64 },
    /// Counterclockwise arc with `arg` running from `from` to `to`.
    Arc { from: f64, to: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourDescriptor {
    pub kind: ContourKind,
    pub n: usize,
    pub segments: Vec<Segment>,
}

pub fn theta(k: usize, n: usize) -> f64 {
    (2 * k - 1) as f64 * PI / n as f64
}

impl ContourDescriptor {
    pub fn new(kind: ContourKind, n: usize) -> Result<Self> {
        let segments = match kind {
            ContourKind::Gamma(k) if k >= 1 && k < n => {
                let (a, b) = (theta(k, n), theta(k + 1, n));
                vec![Segment::RayOut { theta: a }, Segment::Arc { from: a, to: b }, Segment::RayIn { theta: b }]
            }
            ContourKind::GammaNMinus => {
                let a = theta(n, n);
                vec![Segment::RayOut { theta: a }, Segment::Arc { from: a, to: TAU }]
            }
            ContourKind::GammaNPlus => {
                let b = theta(1, n);
                vec![Segment::Arc { from: 0.0, to: b }, Segment::RayIn { theta: b }]
            }
            ContourKind::Gamma(k) => return Err(Error::InvalidParameter(format!("contour index {k} for N = {n}"))),
        };
        Ok(Self { kind, n, segments })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadSettings {
    pub gk: GkSettings,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { gk: GkSettings { abs_tol: 1e-300, rel_tol: 1e-10, max_evals: 1_000_000 } }
    }
}

/// `log` of `e^{Q(z)/eps} z^{-a}` with `z = r e^{i theta}` and `arg z = theta`.
fn log_integrand(v: &TrigPotential, eps: f64, a: f64, log_r: f64, theta: f64) -> C64 {
    let z = C64::from_polar(log_r.exp(), theta);
    let q = v.eval_q(z).expect("z is away from the origin");
    q / eps - C64::new(log_r, theta) * a
}

/// Initial breakpoints on `[lo, hi]` so that the sampled phase and log
/// magnitude change by at most [`PANEL_PHASE`] per panel.
fn phase_breaks(lo: f64, hi: f64, g: &dyn Fn(f64) -> C64) -> Vec<f64> {
    const SAMPLES: usize = 4000;
    let mut breaks = vec![lo];
    let mut acc = 0.0;
    let mut prev = g(lo);
    for i in 1..=SAMPLES {
        let t = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let cur = g(t);
        acc += (cur.im - prev.im).abs().max((cur.re - prev.re).abs());
        prev = cur;
        if acc > PANEL_PHASE && i < SAMPLES {
            breaks.push(t);
            acc = 0.0;
        }
    }
    breaks.push(hi);
    breaks
}

/// Ray integral `int_0^1 e^{Q/eps} z^{-a} dr / r` along `arg = theta`,
/// in `s = -log r`, with the region below the cut-off discarded.
fn ray_integral(v: &TrigPotential, eps: f64, a: f64, theta: f64, q: &QuadSettings) -> Result<(C64, f64)> {
    let lg = |s: f64| log_integrand(v, eps, a, -s, theta);
    // walk out until the log magnitude has peaked and fallen far enough
    let ds = 0.02;
    let mut s = 0.0;
    let mut peak = lg(0.0).re;
    loop {
        s += ds;
        let l = lg(s).re;
        if !l.is_finite() {
            break;
        }
        peak = peak.max(l);
        if l < peak - RAY_LOG_DROP {
            break;
        }
        if s > 200.0 {
            return Err(Error::QuadratureNoConvergence("ray integrand does not decay".into()));
        }
    }
    let breaks = phase_breaks(0.0, s, &lg);
    let f = |t: f64| lg(t).exp();
    gk_adaptive(&f, &breaks, q.gk)
}

fn arc_integral(v: &TrigPotential, eps: f64, a: f64, from: f64, to: f64, q: &QuadSettings) -> Result<(C64, f64)> {
    let lg = |t: f64| log_integrand(v, eps, a, 0.0, t);
    let breaks = phase_breaks(from, to, &lg);
    let f = |t: f64| C64::new(0.0, 1.0) * lg(t).exp();
    gk_adaptive(&f, &breaks, q.gk)
}

fn check_branch(seg: &Segment) -> Result<()> {
    let ok = |t: f64| (0.0..=TAU).contains(&t);
    let fine = match *seg {
        Segment::RayOut { theta } | Segment::RayIn { theta } => theta > 0.0 && theta < TAU,
        Segment::Arc { from, to } => ok(from) && ok(to) && from < to,
    };
    if fine {
        Ok(())
    } else {
        Err(Error::BranchCutCrossing)
    }
}

/// `int_C e^{Q/eps} z^{-l - lambda/eps} dz / z` over one contour of the
/// normalized potential `v`.
fn contour_integral(v: &TrigPotential, eps: f64, lambda: f64, l: usize, c: &ContourDescriptor, q: &QuadSettings) -> Result<(C64, f64)> {
    let a = l as f64 + lambda / eps;
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    for seg in &c.segments {
        check_branch(seg)?;
        let (val, e) = match *seg {
            Segment::RayOut { theta } => ray_integral(v, eps, a, theta, q)?,
            Segment::RayIn { theta } => {
                let (x, e) = ray_integral(v, eps, a, theta, q)?;
                (-x, e)
            }
            Segment::Arc { from, to } => arc_integral(v, eps, a, from, to, q)?,
        };
        total += val;
        err += e;
    }
    Ok((total, err))
}

/// `A_{k,l}` for `k < N`, and `A^+_{N,l}`, `A^-_{N,l}` through the contour kind.
/// `u` is rotated to `c_N > 0` first.
pub fn oscillatory_a(u: &TrigPotential, eps: f64, lambda: f64, kind: ContourKind, l: usize, q: &QuadSettings) -> Result<(C64, f64)> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let n = u.degree();
    if l < 1 || l > n {
        return Err(Error::InvalidParameter(format!("l = {l} outside 1..={n}")));
    }
    let v = u.normalized();
    let c = ContourDescriptor::new(kind, n)?;
    contour_integral(&v, eps, lambda, l, &c, q)
}

#[derive(Clone, Debug, Serialize)]
pub struct EvansMatrix {
    pub lambda: f64,
    pub eps: f64,
    /// Row-major `A_{k,l}`.
    pub entries: Vec<C64>,
    pub errors: Vec<f64>,
    /// `A^+_{N,l}` and `A^-_{N,l}`.
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

/// Assembles `A(lambda; eps)` with `A_{N,l} = A^+_{N,l} + e^{2 i pi lambda/eps} A^-_{N,l}`,
/// the continuation of the closed contour across the cut.
pub fn evans_matrix(u: &TrigPotential, eps: f64, lambda: f64, q: &QuadSettings) -> Result<EvansMatrix> {
    let n = u.degree();
    let v = u.normalized();
    let mut entries = vec![C64::new(0.0, 0.0); n * n];
    let mut errors = vec![0.0; n * n];
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let twist = C64::from_polar(1.0, TAU * lambda / eps);
    for l in 1..=n {
        for k in 1..n {
            let c = ContourDescriptor::new(ContourKind::Gamma(k), n)?;
            let (x, e) = contour_integral(&v, eps, lambda, l, &c, q)?;
            entries[(k - 1) * n + l - 1] = x;
            errors[(k - 1) * n + l - 1] = e;
        }
        let cp = ContourDescriptor::new(ContourKind::GammaNPlus, n)?;
        let cm = ContourDescriptor::new(ContourKind::GammaNMinus, n)?;
        let (p, ep) = contour_integral(&v, eps, lambda, l, &cp, q)?;
        let (m, em) = contour_integral(&v, eps, lambda, l, &cm, q)?;
        entries[(n - 1) * n + l - 1] = p + twist * m;
        errors[(n - 1) * n + l - 1] = ep + em;
        plus.push(p);
        minus.push(m);
    }
    Ok(EvansMatrix { lambda, eps, entries, errors, plus, minus })
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &[C64], n: usize) -> C64 {
    let mut m = a.to_vec();
    let mut d = C64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x * n + col].norm().total_cmp(&m[y * n + col].norm()).then(y.cmp(&x)))
            .expect("nonempty range");
        if m[piv * n + col].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
            d = -d;
        }
        let p = m[col * n + col];
        d *= p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for j in col..n {
                let t = m[col * n + j];
                m[r * n + j] -= f * t;
            }
        }
    }
    d
}

/// `(det A(lambda; eps), summed quadrature error of the entries)`.
pub fn evans_det(u: &TrigPotential, eps: f64, lambda: f64, q: &QuadSettings) -> Result<(C64, f64)> {
    let m = evans_matrix(u, eps, lambda, q)?;
    let n = u.degree();
    Ok((det(&m.entries, n), m.errors.iter().sum()))
}

/// `det A / prod_k |row_k|`, where the last row is measured by
/// `|A^+_{N,l}| + |A^-_{N,l}|`: the same zeros as `det A`, bounded by one in
/// modulus, and free of the row scales that grow like `e^{c lambda/eps}`.
pub fn evans_det_normalized(u: &TrigPotential, eps: f64, lambda: f64, q: &QuadSettings) -> Result<(C64, f64)> {
    let m = evans_matrix(u, eps, lambda, q)?;
    let n = u.degree();
    let mut scale = 1.0;
    let mut rel_err = 0.0;
    for k in 0..n {
        let norm = if k + 1 < n {
            m.entries[k * n..(k + 1) * n].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
        } else {
            // the last row cancels between its two halves at a zero
            m.plus.iter().zip(&m.minus).map(|(p, q)| (p.norm() + q.norm()).powi(2)).sum::<f64>().sqrt()
        };
        scale *= norm;
        rel_err += m.errors[k * n..(k + 1) * n].iter().sum::<f64>() / norm;
    }
    Ok((det(&m.entries, n) / scale, rel_err))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStatus {
    /// Refined minimum below the acceptance threshold.
    Accepted,
    /// Local minimum of the grid that did not refine to a zero.
    Rejected,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvansZero {
    pub lambda: f64,
    pub abs_det: f64,
    pub status: ZeroStatus,
    pub matched: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvansScan {
    pub eps: f64,
    pub lambdas: Vec<f64>,
    pub abs_det: Vec<f64>,
    pub err_est: Vec<f64>,
    pub median: f64,
    pub zeros: Vec<EvansZero>,
}

impl EvansScan {
    pub fn accepted(&self) -> Vec<f64> {
        self.zeros.iter().filter(|z| z.status == ZeroStatus::Accepted).map(|z| z.lambda).collect()
    }

    /// Attaches the nearest eigenvalue within `tol` to each zero.
    pub fn match_eigenvalues(&mut self, eigs: &[f64], tol: f64) {
        for z in &mut self.zeros {
            z.matched = eigs
                .iter()
                .cloned()
                .filter(|e| (e - z.lambda).abs() <= tol)
                .min_by(|a, b| (a - z.lambda).abs().total_cmp(&(b - z.lambda).abs()));
        }
    }
}

/// Width to which minima of `|det A|` are refined.
pub const ZERO_WIDTH: f64 = 1e-10;
/// A refined minimum is a zero when `|det A| <= ZERO_REL * median`.
pub const ZERO_REL: f64 = 1e-6;

fn golden(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, width: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Samples the normalized `|det A|` on `points` values in `[lo, hi]` and
/// refines the grid minima.
pub fn scan_zeros(u: &TrigPotential, eps: f64, lo: f64, hi: f64, points: usize, q: &QuadSettings) -> Result<EvansScan> {
    if points < 3 || !(hi > lo) {
        return Err(Error::InvalidParameter("scan needs at least 3 points on a nonempty range".into()));
    }
    let lambdas: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let vals: Vec<(C64, f64)> =
        lambdas.par_iter().map(|&l| evans_det_normalized(u, eps, l, q)).collect::<Result<Vec<_>>>()?;
    let abs_det: Vec<f64> = vals.iter().map(|v| v.0.norm()).collect();
    let err_est: Vec<f64> = vals.iter().map(|v| v.1).collect();
    let mut sorted = abs_det.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let h = lambdas[1] - lambdas[0];
    let cands: Vec<usize> = (0..points)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { abs_det[i - 1] };
            let right = if i + 1 == points { f64::INFINITY } else { abs_det[i + 1] };
            abs_det[i] <= left && abs_det[i] < right
        })
        .collect();
    let f = |l: f64| evans_det_normalized(u, eps, l, q).map(|v| v.0.norm());
    let zeros = cands
        .par_iter()
        .map(|&i| {
            let a = (lambdas[i] - h).max(lo);
            let b = (lambdas[i] + h).min(hi);
            let (x, fx) = golden(&f, a, b, ZERO_WIDTH)?;
            let status = if fx <= ZERO_REL * median { ZeroStatus::Accepted } else { ZeroStatus::Rejected };
            Ok(EvansZero { lambda: x, abs_det: fx, status, matched: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvansScan { eps, lambdas, abs_det, err_est, median, zeros })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laxspec::spectrum;

    #[test]
    fn contour_shapes() {
        let c = ContourDescriptor::new(ContourKind::Gamma(1), 2).unwrap();
        assert_eq!(c.segments.len(), 3);
        assert_eq!(c.segments[1], Segment::Arc { from: PI / 2.0, to: 1.5 * PI });
        assert!(ContourDescriptor::new(ContourKind::Gamma(2), 2).is_err());
        let p = ContourDescriptor::new(ContourKind::GammaNPlus, 1).unwrap();
        assert_eq!(p.segments[0], Segment::Arc { from: 0.0, to: PI });
    }

    #[test]
    fn determinant_small() {
        let a = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 1.0)];
        assert!((det(&a, 2) - C64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cosine_det_vanishes_at_eigenvalues() {
        let u = TrigPotential::preset("cosine").unwrap();
        let eps = 0.5;
        let spec = spectrum(&u, eps, 128).unwrap();
        let q = QuadSettings::default();
        let grid: Vec<f64> = (0..41).map(|i| -1.8 + 0.09 * i as f64).map(|l| evans_det(&u, eps, l, &q).unwrap().0.norm()).collect();
        let mut s = grid.clone();
        s.sort_by(f64::total_cmp);
        let med = s[s.len() / 2];
        for &l in spec.eigenvalues.iter().filter(|l| l.abs() < 1.8) {
            let d = evans_det(&u, eps, l, &q).unwrap().0.norm();
            assert!(d <= 1e-4 * med, "{l}: {d:e} vs {med:e}");
        }
        let (a, e) = oscillatory_a(&u, eps, 0.3, ContourKind::GammaNPlus, 1, &q).unwrap();
        assert!(a.norm().is_finite() && e < 1e-8 * a.norm());
    }
}
