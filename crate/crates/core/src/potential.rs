//! Real zero-mean trigonometric polynomials, their meromorphic extension and
//! the primitive `Q` with `-z Q'(z) = u(z)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex64;

/// `u(x) = sum_{k=1..N} c_k e^{ikx} + conj(c_k) e^{-ikx}`.
///
/// The user coefficients are kept as given. `rotation` is the translation
/// `rho` for which `u(x - rho)` has a positive leading coefficient; it is
/// recorded only and applied through [`TrigPotential::normalized`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPotential {
    coeffs: Vec<C64>,
    rotation: f64,
}

#[derive(Serialize, Deserialize)]
struct PotentialJson {
    coeffs: Vec<[f64; 2]>,
    rotation: f64,
}

impl TrigPotential {
    /// Builds a potential from `c_1..c_N`. The mean is zero by construction.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        let last = *coeffs.last().ok_or(Error::EmptyCoefficients)?;
        if last.norm() == 0.0 || !coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::ZeroLeadingCoefficient);
        }
        let n = coeffs.len() as f64;
        let rotation = (last.arg().rem_euclid(TAU) / n).rem_euclid(TAU / n);
        Ok(Self { coeffs, rotation })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Named fixtures: `cosine` is `-2 cos x`; the other two are the
    /// landscape fixtures `8cos x + sin 2x + cos(6x)/5` and
    /// `8cos x - sin(2x)/2 + sin(4x)/4 + cos(6x)/10`.
    pub fn preset(name: &str) -> Option<Self> {
        let z = C64::new(0.0, 0.0);
        let c = match name {
            "cosine" => vec![C64::new(-1.0, 0.0)],
            "fig-level0" => vec![C64::new(4.0, 0.0), C64::new(0.0, -0.5), z, z, z, C64::new(0.1, 0.0)],
            "fig-level0-outside" => vec![
                C64::new(4.0, 0.0),
                C64::new(0.0, 0.25),
                z,
                C64::new(0.0, -0.125),
                z,
                C64::new(0.05, 0.0),
            ],
            _ => return None,
        };
        Self::new(c).ok()
    }

    pub const PRESETS: [&'static str; 3] = ["cosine", "fig-level0", "fig-level0-outside"];

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Fourier coefficient of `e^{ikx}` for any integer `k`.
    pub fn coeff(&self, k: i64) -> C64 {
        let m = k.unsigned_abs() as usize;
        if k == 0 || m > self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else if k > 0 {
            self.coeffs[m - 1]
        } else {
            self.coeffs[m - 1].conj()
        }
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn leading_positive(&self) -> bool {
        let c = self.coeffs[self.coeffs.len() - 1];
        c.im == 0.0 && c.re > 0.0
    }

    /// `v(x) = u(x - rho)`, whose leading coefficient is real positive.
    pub fn normalized(&self) -> TrigPotential {
        let rho = self.rotation;
        let n = self.coeffs.len();
        let mut coeffs: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::from_polar(1.0, -((i + 1) as f64) * rho))
            .collect();
        coeffs[n - 1] = C64::new(coeffs[n - 1].norm(), 0.0);
        TrigPotential { coeffs, rotation: 0.0 }
    }

    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Mean of `u^2` over the torus, `2 sum |c_k|^2`.
    pub fn mean_square(&self) -> f64 {
        2.0 * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `d^m u / dx^m` on the torus.
    pub fn deriv_torus(&self, x: f64, m: u32) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = (i + 1) as f64;
            s += c * C64::new(0.0, k).powu(m) * C64::from_polar(1.0, k * x);
        }
        2.0 * s.re
    }

    pub fn eval_torus(&self, x: f64) -> f64 {
        self.deriv_torus(x, 0)
    }

    pub fn eval_complex(&self, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::ZeroArgument);
        }
        let w = z.inv();
        let (mut zp, mut wp) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        let mut s = C64::new(0.0, 0.0);
        for c in &self.coeffs {
            zp *= z;
            wp *= w;
            s += c * zp + c.conj() * wp;
        }
        Ok(s)
    }

    /// Complex derivative `u'(z)`.
    pub fn deriv_complex(&self, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::ZeroArgument);
        }
        let w = z.inv();
        let mut s = C64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = (i + 1) as i32;
            s += (c * z.powi(k - 1) - c.conj() * w.powi(k + 1)) * k as f64;
        }
        Ok(s)
    }

    pub fn eval_q(&self, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::ZeroArgument);
        }
        let w = z.inv();
        let (mut zp, mut wp) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        let mut s = C64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            zp *= z;
            wp *= w;
            s += (-c * zp + c.conj() * wp) / (i + 1) as f64;
        }
        Ok(s)
    }

    pub fn eval_q_deriv(&self, z: C64) -> Result<C64> {
        Ok(-self.eval_complex(z)? / z)
    }

    pub fn eval_q_second(&self, z: C64) -> Result<C64> {
        // Q'' = (u - z u') / z^2
        Ok((self.eval_complex(z)? - z * self.deriv_complex(z)?) / (z * z))
    }

    /// Samples on `n` uniform points of `[0, 2pi)`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|j| self.eval_torus(TAU * j as f64 / n as f64)).collect()
    }

    /// Grid estimate of `(min u, max u)`, refined by golden section.
    pub fn grid_min_max(&self) -> (f64, f64) {
        let n = 256 * self.degree().max(4);
        let s = self.sample(n);
        let h = TAU / n as f64;
        let (mut imin, mut imax) = (0, 0);
        for (j, v) in s.iter().enumerate() {
            if *v < s[imin] {
                imin = j;
            }
            if *v > s[imax] {
                imax = j;
            }
        }
        let lo = golden_min(|x| self.eval_torus(x), (imin as f64 - 1.0) * h, (imin as f64 + 1.0) * h);
        let hi = -golden_min(|x| -self.eval_torus(x), (imax as f64 - 1.0) * h, (imax as f64 + 1.0) * h);
        (lo.min(s[imin]), hi.max(s[imax]))
    }

    pub fn sup_norm(&self) -> f64 {
        let (a, b) = self.grid_min_max();
        a.abs().max(b.abs())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let p = PotentialJson {
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            rotation: self.rotation,
        };
        serde_json::to_value(p).expect("plain data serializes")
    }

    /// Reads `{"coeffs": [[re, im], ...]}`; a stored rotation is recomputed.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let p: PotentialJson = serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidParameter(format!("potential json: {e}")))?;
        Self::new(p.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect())
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Bell,
    WeaklyBell,
    Neither,
}

/// Points are lifted so that `x_min <= x < x_min + 2pi`.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeReport {
    pub classification: Shape,
    pub x_min: f64,
    pub x_max: f64,
    pub inflections: Option<(f64, f64)>,
    pub min_u: f64,
    pub max_u: f64,
    pub tol: f64,
}

/// Roots of a periodic function found from grid sign changes.
struct PeriodicRoots {
    /// (root, sign of f just after the root)
    roots: Vec<(f64, f64)>,
    tangency: bool,
}

fn periodic_roots(f: &dyn Fn(f64) -> f64, n: usize, tol: f64, zero_rel: f64) -> PeriodicRoots {
    let h = TAU / n as f64;
    let vals: Vec<f64> = (0..n).map(|j| f(j as f64 * h)).collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let z = zero_rel * scale;
    let nz: Vec<usize> = (0..n).filter(|&j| vals[j].abs() > z).collect();
    let mut out = PeriodicRoots { roots: Vec::new(), tangency: false };
    if nz.is_empty() {
        out.tangency = true;
        return out;
    }
    for (i, &a) in nz.iter().enumerate() {
        let b = nz[(i + 1) % nz.len()];
        let gap = if b > a { b - a } else { b + n - a };
        let (sa, sb) = (vals[a].signum(), vals[b].signum());
        if sa == sb {
            if gap > 1 {
                out.tangency = true;
            }
            continue;
        }
        let (mut lo, mut hi) = (a as f64 * h, (a + gap) as f64 * h);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == sa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut r = (0.5 * (lo + hi)).rem_euclid(TAU);
        if TAU - r < 1e-11 {
            r = 0.0;
        }
        out.roots.push((r, sb));
    }
    out.roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn lift(x: f64, base: f64) -> f64 {
    base + (x - base).rem_euclid(TAU)
}

/// Bell / weakly bell / neither classification of a potential.
pub fn classify_shape(u: &TrigPotential, grid_size: usize, tol: f64) -> ShapeReport {
    let grid = grid_size.max(16 * u.degree());
    if u.coeff_l1() <= tol {
        let (mn, mx) = u.grid_min_max();
        return ShapeReport {
            classification: Shape::Neither,
            x_min: 0.0,
            x_max: 0.0,
            inflections: None,
            min_u: mn,
            max_u: mx,
            tol,
        };
    }
    let d1 = periodic_roots(&|x| u.deriv_torus(x, 1), grid, tol, 1e-9);
    let (mn, mx) = u.grid_min_max();
    let mut rep = ShapeReport {
        classification: Shape::Neither,
        x_min: 0.0,
        x_max: 0.0,
        inflections: None,
        min_u: mn,
        max_u: mx,
        tol,
    };
    if d1.tangency || d1.roots.len() != 2 {
        return rep;
    }
    // sign after root: +1 at a minimum, -1 at a maximum
    let (xmin, xmax) = if d1.roots[0].1 > 0.0 {
        (d1.roots[0].0, d1.roots[1].0)
    } else {
        (d1.roots[1].0, d1.roots[0].0)
    };
    rep.x_min = xmin;
    rep.x_max = lift(xmax, xmin);
    rep.min_u = u.eval_torus(xmin);
    rep.max_u = u.eval_torus(xmax);
    rep.classification = Shape::WeaklyBell;

    let d2 = periodic_roots(&|x| u.deriv_torus(x, 2), grid, tol, 1e-9);
    if d2.tangency || d2.roots.len() != 2 {
        return rep;
    }
    let mut xi: Vec<f64> = d2.roots.iter().map(|r| lift(r.0, xmin)).collect();
    xi.sort_by(f64::total_cmp);
    let third_scale = (0..grid)
        .map(|j| u.deriv_torus(TAU * j as f64 / grid as f64, 3).abs())
        .fold(0.0, f64::max);
    let simple = xi.iter().all(|&x| u.deriv_torus(x, 3).abs() > 1e-9 * third_scale);
    if simple && xi[0] > xmin && xi[0] < rep.x_max && xi[1] > rep.x_max && xi[1] < xmin + TAU {
        rep.classification = Shape::Bell;
        rep.inflections = Some((xi[0], xi[1]));
    }
    rep
}

/// Default classification grid `4096 max(1, N/8)`.
pub fn default_shape_grid(n: usize) -> usize {
    4096 * (n / 8).max(1)
}

pub fn classify(u: &TrigPotential) -> ShapeReport {
    classify_shape(u, default_shape_grid(u.degree()), 1e-12)
}

/// Discrete Fourier coefficients `c_1..c_N` of uniform samples on `[0, 2pi)`.
///
/// Trailing coefficients below `1e-13` of the largest one are dropped, so
/// the returned degree can be smaller than `n`.
pub fn truncate_fourier(samples: &[f64], n: usize) -> Result<TrigPotential> {
    let l = samples.len();
    if n == 0 || l < 4 * n {
        return Err(Error::GridTooCoarse(format!("{l} samples for degree {n}")));
    }
    let mut coeffs = Vec::with_capacity(n);
    for k in 1..=n {
        let mut s = C64::new(0.0, 0.0);
        for (j, v) in samples.iter().enumerate() {
            let m = (k * j) % l;
            s += v * C64::from_polar(1.0, -TAU * m as f64 / l as f64);
        }
        coeffs.push(s / l as f64);
    }
    let big = coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    while coeffs.len() > 1 && coeffs[coeffs.len() - 1].norm() <= 1e-13 * big {
        coeffs.pop();
    }
    TrigPotential::new(coeffs)
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxRecord {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub sup_error: f64,
    pub comonotone: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub records: Vec<ApproxRecord>,
    pub n0: Option<usize>,
    pub slope: Option<f64>,
    /// argmax of the samples, refined by a parabola through three points.
    pub sample_x_max: f64,
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Truncates the sampled function along `ladder` and checks comonotonicity.
pub fn comonotone_check(samples: &[f64], ladder: &[usize]) -> Result<ApproxReport> {
    let l = samples.len();
    let diffs: Vec<f64> = (0..l).map(|j| samples[(j + 1) % l] - samples[j]).collect();
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let changes = (0..nz.len()).filter(|&i| nz[i].signum() != nz[(i + 1) % nz.len()].signum()).count();
    if changes != 2 {
        return Err(Error::NotWeaklyBellShaped);
    }
    let mean = samples.iter().sum::<f64>() / l as f64;
    let imax = (0..l).fold(0, |b, j| if samples[j] > samples[b] { j } else { b });
    let (ym, y0, yp) = (samples[(imax + l - 1) % l], samples[imax], samples[(imax + 1) % l]);
    let denom = ym - 2.0 * y0 + yp;
    let off = if denom != 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
    let sample_x_max = ((imax as f64 + off) * TAU / l as f64).rem_euclid(TAU);

    let mut records = Vec::new();
    for &n in ladder {
        let un = truncate_fourier(samples, n)?;
        let rep = classify_shape(&un, default_shape_grid(n).max(16 * n), 1e-12);
        let sup_error = (0..l)
            .map(|j| (samples[j] - mean - un.eval_torus(TAU * j as f64 / l as f64)).abs())
            .fold(0.0, f64::max);
        records.push(ApproxRecord {
            n,
            x_min: rep.x_min,
            x_max: rep.x_max.rem_euclid(TAU),
            sup_error,
            comonotone: rep.classification != Shape::Neither,
        });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| records[i].n);
    let mut n0 = None;
    for &i in order.iter().rev() {
        if records[i].comonotone {
            n0 = Some(records[i].n);
        } else {
            break;
        }
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.sup_error > 1e-13)
        .map(|r| ((r.n as f64).ln(), r.sup_error.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(ApproxReport { records, n0, slope: ls_slope(&xs, &ys), sample_x_max })
}

/// Signed angular distance `a - b` wrapped to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn parse_cosine() {
        let u = TrigPotential::new(vec![c(-1.0, 0.0)]).unwrap();
        assert_eq!(u.degree(), 1);
        assert!(u.is_even());
        assert!((u.rotation() - PI).abs() < 1e-15);
        for x in [0.0f64, 0.3, 2.0] {
            assert!((u.eval_torus(x) + 2.0 * x.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn parse_errors() {
        assert_eq!(TrigPotential::new(vec![]), Err(Error::EmptyCoefficients));
        assert_eq!(TrigPotential::new(vec![c(1.0, 0.0), c(0.0, 0.0)]), Err(Error::ZeroLeadingCoefficient));
    }

    #[test]
    fn rotation_makes_leading_positive() {
        let u = TrigPotential::new(vec![c(0.3, 0.1), c(0.0, 1.0)]).unwrap();
        let v = u.normalized();
        assert!(v.leading_positive());
        let rho = u.rotation();
        for x in [0.1, 1.0, 4.0] {
            assert!((v.eval_torus(x) - u.eval_torus(x - rho)).abs() < 1e-13);
        }
        let w = TrigPotential::new(vec![c(0.0, 1.0)]).unwrap();
        assert!((w.rotation() - PI / 2.0).abs() < 1e-15);
        // u(x) = -2 sin x; u(x - pi/2) = 2 cos x
        assert!((w.eval_torus(0.0 - w.rotation()) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fig_preset_matches_formula() {
        let u = TrigPotential::preset("fig-level0").unwrap();
        for x in [0.0f64, 0.7, 2.9, 5.5] {
            let f = 8.0 * x.cos() + (2.0 * x).sin() + (6.0 * x).cos() / 5.0;
            assert!((u.eval_torus(x) - f).abs() < 1e-13);
        }
        let v = TrigPotential::preset("fig-level0-outside").unwrap();
        for x in [0.0f64, 0.7, 2.9, 5.5] {
            let f = 8.0 * x.cos() - (2.0 * x).sin() / 2.0 + (4.0 * x).sin() / 4.0 + (6.0 * x).cos() / 10.0;
            assert!((v.eval_torus(x) - f).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_values() {
        let u = TrigPotential::preset("cosine").unwrap();
        assert!(u.eval_complex(c(0.0, 1.0)).unwrap().norm() < 1e-15);
        assert!((u.eval_complex(c(2.0, 0.0)).unwrap() - c(-2.5, 0.0)).norm() < 1e-15);
        assert!((u.eval_q(c(0.0, 1.0)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        assert!((u.eval_q(c(0.0, -1.0)).unwrap() - c(0.0, -2.0)).norm() < 1e-15);
        assert_eq!(u.eval_complex(c(0.0, 0.0)), Err(Error::ZeroArgument));
        assert_eq!(u.eval_q(c(0.0, 0.0)), Err(Error::ZeroArgument));
    }

    #[test]
    fn cosine_is_bell() {
        let u = TrigPotential::preset("cosine").unwrap();
        for grid in [4096, 8192] {
            let r = classify_shape(&u, grid, 1e-12);
            assert_eq!(r.classification, Shape::Bell);
            assert!(r.x_min.abs() < 1e-11);
            assert!((r.x_max - PI).abs() < 1e-11);
            let (a, b) = r.inflections.unwrap();
            assert!((a - PI / 2.0).abs() < 1e-11 && (b - 1.5 * PI).abs() < 1e-11);
            assert!((r.min_u + 2.0).abs() < 1e-14 && (r.max_u - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_is_neither() {
        let u = TrigPotential::new(vec![c(0.0, 0.0), c(1e-300, 0.0)]).unwrap();
        // cos 2x has four extrema
        assert_eq!(classify(&u).classification, Shape::Neither);
        let w = TrigPotential::new(vec![c(1e-320, 0.0)]).unwrap();
        assert_eq!(classify(&w).classification, Shape::Neither);
    }

    #[test]
    fn truncation_of_cosine() {
        let s: Vec<f64> = (0..64).map(|j| -2.0 * (TAU * j as f64 / 64.0).cos()).collect();
        let u = truncate_fourier(&s, 1).unwrap();
        assert!((u.coeff(1) - c(-1.0, 0.0)).norm() < 1e-14);
        let u4 = truncate_fourier(&s, 4).unwrap();
        for k in 2..=4 {
            assert!(u4.coeff(k).norm() < 1e-14);
        }
        assert!(matches!(truncate_fourier(&s[..12], 4), Err(Error::GridTooCoarse(_))));
    }
}
