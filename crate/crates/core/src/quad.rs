//! Quadrature rules: adaptive Simpson, adaptive Gauss-Kronrod (7/15) for
//! complex integrands, and Gauss-Legendre nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Largest number of subintervals adaptive Simpson may create.
pub const SIMPSON_CAP: usize = 1 << 20;

struct Simpson<'a> {
    f: &'a dyn Fn(f64) -> C64,
    intervals: usize,
}

impl Simpson<'_> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> Result<C64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
        let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
        let diff = left + right - whole;
        self.intervals += 1;
        if self.intervals > SIMPSON_CAP {
            return Err(Error::QuadratureNoConvergence(format!("simpson cap on [{a}, {b}]")));
        }
        if depth == 0 || diff.norm() <= 15.0 * tol || m <= a || m >= b {
            return Ok(left + right + diff / 15.0);
        }
        let l = self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson with absolute tolerance, complex valued.
pub fn simpson_c(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    // a fixed first split keeps symmetric integrands from fooling the test
    let n = 8;
    let h = (b - a) / n as f64;
    let mut s = Simpson { f, intervals: 0 };
    let mut total = C64::new(0.0, 0.0);
    for i in 0..n {
        let (x0, x1) = (a + i as f64 * h, if i + 1 == n { b } else { a + (i + 1) as f64 * h });
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = (f0 + fm * 4.0 + f1) * ((x1 - x0) / 6.0);
        total += s.step(x0, x1, f0, fm, f1, whole, tol / n as f64, 60)?;
    }
    Ok(total)
}

pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    simpson_c(&|x| C64::new(f(x), 0.0), a, b, tol).map(|z| z.re)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7/K15 panel: (Kronrod value, |Kronrod - Gauss|).
pub fn gk15(f: &dyn Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

#[derive(PartialEq)]
struct Panel {
    err: f64,
    idx: usize,
    a: f64,
    b: f64,
    val: C64,
}

impl Eq for Panel {}

impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err).then(o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GkSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for GkSettings {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-11, max_evals: 1_000_000 }
    }
}

/// Globally adaptive G7/K15 starting from the given panel breakpoints.
/// Returns the value and the summed error estimate.
pub fn gk_adaptive(f: &dyn Fn(f64) -> C64, breaks: &[f64], s: GkSettings) -> Result<(C64, f64)> {
    let mut heap = BinaryHeap::new();
    let mut idx = 0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        let (val, err) = gk15(f, w[0], w[1]);
        evals += 15;
        heap.push(Panel { err, idx, a: w[0], b: w[1], val });
        idx += 1;
    }
    // running sums drive the stopping test; the returned value is summed
    // in insertion order for reproducibility
    let exact = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by_key(|p| p.idx);
        panels.iter().fold((C64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.val, e + p.err))
    };
    let (mut total, mut err) = exact(&heap);
    loop {
        if err <= s.abs_tol.max(s.rel_tol * total.norm()) {
            let (t, e) = exact(&heap);
            if e <= s.abs_tol.max(s.rel_tol * t.norm()) {
                return Ok((t, e));
            }
            (total, err) = (t, e);
        }
        if evals + 30 > s.max_evals {
            return Err(Error::QuadratureNoConvergence(format!("{evals} evaluations, error {err:e}")));
        }
        let worst = heap.pop().expect("at least one panel");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::QuadratureNoConvergence("panel below machine resolution".into()));
        }
        total -= worst.val;
        err -= worst.err;
        for (a, b) in [(worst.a, m), (m, worst.b)] {
            let (val, e) = gk15(f, a, b);
            total += val;
            err += e;
            heap.push(Panel { err: e, idx, a, b, val });
            idx += 1;
        }
        evals += 30;
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_sqrt() {
        let v = simpson(&|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let s = simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-11).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn gk_oscillatory() {
        let f = |x: f64| C64::from_polar(1.0, 40.0 * x);
        let breaks: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let (v, e) = gk_adaptive(&f, &breaks, GkSettings::default()).unwrap();
        let exact = (C64::from_polar(1.0, 40.0) - 1.0) / C64::new(0.0, 40.0);
        assert!((v - exact).norm() < 1e-12 && e < 1e-10);
    }

    #[test]
    fn legendre_exactness() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((s - 2.0 / 23.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
