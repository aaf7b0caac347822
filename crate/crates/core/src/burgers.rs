//! Distribution function, antecedents, action integral, multivalued Burgers
//! branches and the weak-limit Fourier coefficients.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{classify, Shape, TrigPotential};
use crate::quad::{gauss_legendre, simpson, simpson_c};

type C64 = Complex64;

/// Default absolute tolerance of [`DistributionProfile::action`].
pub const ACTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct DistributionProfile {
    pub u: TrigPotential,
    pub x_min: f64,
    /// Lifted into `(x_min, x_min + 2pi)`.
    pub x_max: f64,
    pub min_u: f64,
    pub max_u: f64,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) < 0 < f(hi) in the orientation given
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl DistributionProfile {
    pub fn new(u: &TrigPotential) -> Result<Self> {
        let rep = classify(u);
        if rep.classification == Shape::Neither {
            return Err(Error::NotWeaklyBellShaped);
        }
        Ok(Self { u: u.clone(), x_min: rep.x_min, x_max: rep.x_max, min_u: rep.min_u, max_u: rep.max_u })
    }

    /// `(x_+, x_-)` with `u(x_+-) = eta` on the ascending and descending arcs.
    pub fn antecedents(&self, eta: f64) -> Result<(f64, f64)> {
        if !(eta > self.min_u && eta < self.max_u) {
            return Err(Error::OutOfRangeEta(eta));
        }
        let u = &self.u;
        let xp = bisect(|x| u.eval_torus(x) - eta, self.x_min, self.x_max);
        let xm = bisect(|x| eta - u.eval_torus(x), self.x_max, self.x_min + TAU);
        Ok((xp, xm))
    }

    /// `F(eta) = |{u >= eta}| / 2pi`.
    pub fn f(&self, eta: f64) -> f64 {
        if eta <= self.min_u {
            return 1.0;
        }
        if eta >= self.max_u {
            return 0.0;
        }
        let (xp, xm) = self.antecedents(eta).expect("eta inside the range");
        ((xm - xp) / TAU).clamp(0.0, 1.0)
    }

    /// `A(eta) = int_eta^{max u} F` with the default tolerance.
    pub fn action(&self, eta: f64) -> Result<f64> {
        self.action_tol(eta, ACTION_TOL)
    }

    pub fn action_tol(&self, eta: f64, tol: f64) -> Result<f64> {
        if eta >= self.max_u {
            return Ok(0.0);
        }
        let below = (self.min_u - eta).max(0.0);
        let eta = eta.max(self.min_u);
        // nu = max u - w^2 removes the square-root edge of F at the top
        let w_end = (self.max_u - eta).sqrt();
        let v = simpson(&|w| 2.0 * w * self.f(self.max_u - w * w), 0.0, w_end, tol)?;
        Ok(v + below)
    }

    /// `A(eta)` from the antecedents and a primitive of `u`, exact up to
    /// the root solves.
    pub fn action_closed(&self, eta: f64) -> f64 {
        if eta >= self.max_u {
            return 0.0;
        }
        if eta <= self.min_u {
            return -eta;
        }
        let (xp, xm) = self.antecedents(eta).expect("eta inside the range");
        let prim = |x: f64| -> f64 {
            self.u
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = (i + 1) as f64;
                    2.0 * (c * C64::from_polar(1.0, k * x) / C64::new(0.0, k)).re
                })
                .sum()
        };
        (prim(xm) - prim(xp) - eta * (xm - xp)) / TAU
    }

    /// Fourier coefficient of the weak limit at time `t`, integrated over
    /// `eta` after the substitution `eta = min + (max-min)(1 - cos pi s)/2`.
    pub fn weak_limit_fourier(&self, t: f64, k: i64) -> Result<C64> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be nonzero".into()));
        }
        let kf = k as f64;
        let span = self.max_u - self.min_u;
        let g = |s: f64| -> C64 {
            let eta = self.min_u + 0.5 * span * (1.0 - (PI * s).cos());
            let Ok((xp, xm)) = self.antecedents(eta) else {
                return C64::new(0.0, 0.0);
            };
            let jac = 0.5 * span * PI * (PI * s).sin();
            (C64::from_polar(1.0, -kf * (xp + 2.0 * eta * t)) - C64::from_polar(1.0, -kf * (xm + 2.0 * eta * t))) * jac
        };
        let pref = C64::new(0.0, -1.0 / (2.0 * kf * PI));
        let v = simpson_c(&g, 0.0, 1.0, 1e-8 / pref.norm())?;
        Ok(pref * v)
    }
}

/// Values `u_0 < u_1 < ... < u_{2P}` at `(t, x)` and their feet `y_j`.
#[derive(Clone, Debug, Serialize)]
pub struct BranchSet {
    pub t: f64,
    pub x: f64,
    pub values: Vec<f64>,
    pub feet: Vec<f64>,
}

pub fn alt_sum(b: &BranchSet) -> f64 {
    b.values.iter().enumerate().map(|(n, v)| if n % 2 == 0 { *v } else { -v }).sum()
}

/// The map `y -> G(y) = y + 2 u(y) t` split into monotone pieces.
#[derive(Clone, Debug)]
pub struct CharacteristicMap {
    u: TrigPotential,
    pub t: f64,
    /// Zeros of `G'` in `[0, 2pi)`, ascending.
    pub critical: Vec<f64>,
}

pub const SCAN_GRID: usize = 8192;
const TANGENCY_TOL: f64 = 1e-10;

impl CharacteristicMap {
    pub fn new(u: &TrigPotential, t: f64) -> Result<Self> {
        if classify(u).classification == Shape::Neither {
            return Err(Error::NotWeaklyBellShaped);
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("t must be nonnegative, got {t}")));
        }
        let gp = |y: f64| 1.0 + 2.0 * t * u.deriv_torus(y, 1);
        let h = TAU / SCAN_GRID as f64;
        let vals: Vec<f64> = (0..=SCAN_GRID).map(|j| gp(j as f64 * h)).collect();
        let mut critical = Vec::new();
        for j in 0..SCAN_GRID {
            let (a, b) = (vals[j], vals[j + 1]);
            if a == 0.0 {
                critical.push(j as f64 * h);
            } else if a * b < 0.0 {
                let r = if a < 0.0 {
                    bisect(gp, j as f64 * h, (j + 1) as f64 * h)
                } else {
                    bisect(|y| -gp(y), j as f64 * h, (j + 1) as f64 * h)
                };
                critical.push(r);
            }
        }
        Ok(Self { u: u.clone(), t, critical })
    }

    pub fn g(&self, y: f64) -> f64 {
        y + 2.0 * self.t * self.u.eval_torus(y)
    }

    /// Positions of the caustics, `G(c) mod 2pi`, ascending.
    pub fn caustics(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.critical.iter().map(|&y| self.g(y).rem_euclid(TAU)).collect();
        c.sort_by(f64::total_cmp);
        c
    }

    fn solve_piece(&self, a: f64, b: f64, target: f64) -> f64 {
        let inc = self.g(b) > self.g(a);
        bisect(|y| if inc { self.g(y) - target } else { target - self.g(y) }, a, b)
    }

    pub fn branches(&self, x: f64) -> Result<BranchSet> {
        let mut feet = Vec::new();
        if self.critical.is_empty() {
            let g0 = self.g(0.0);
            let m = ((g0 - x) / TAU).ceil();
            let target = x + TAU * m;
            let y = if (target - g0).abs() < 1e-300 { 0.0 } else { self.solve_piece(0.0, TAU, target) };
            feet.push(y.rem_euclid(TAU));
        } else {
            let c = &self.critical;
            for &cy in c {
                let d = (self.g(cy) - x) / TAU;
                if (d - d.round()).abs() * TAU < TANGENCY_TOL {
                    return Err(Error::BranchCountEven(x));
                }
            }
            for i in 0..c.len() {
                let a = c[i];
                let b = if i + 1 < c.len() { c[i + 1] } else { c[0] + TAU };
                let (ga, gb) = (self.g(a), self.g(b));
                let (lo, hi) = (ga.min(gb), ga.max(gb));
                let mut m = ((lo - x) / TAU).ceil();
                while x + TAU * m < hi {
                    let target = x + TAU * m;
                    if target > lo {
                        feet.push(self.solve_piece(a, b, target).rem_euclid(TAU));
                    }
                    m += 1.0;
                }
            }
        }
        if feet.len() % 2 == 0 {
            return Err(Error::BranchCountEven(x));
        }
        let mut pairs: Vec<(f64, f64)> = feet.iter().map(|&y| (self.u.eval_torus(y), y)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(BranchSet {
            t: self.t,
            x,
            values: pairs.iter().map(|p| p.0).collect(),
            feet: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// `(1/2pi) int alt_sum(x) e^{-ikx} dx`, integrated between caustics
    /// with a cosine-mapped Gauss-Legendre rule that absorbs the
    /// square-root behaviour of the branches at fold points.
    pub fn alt_sum_fourier(&self, k: i64) -> Result<C64> {
        let mut breaks = vec![0.0];
        breaks.extend(self.caustics().into_iter().filter(|&c| c > 1e-12 && c < TAU - 1e-12));
        breaks.push(TAU);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let (nodes, weights) = gauss_legendre(48);
        let panels = 4;
        let mut total = C64::new(0.0, 0.0);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            for p in 0..panels {
                let (s0, s1) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
                for (z, wt) in nodes.iter().zip(&weights) {
                    let s = s0 + 0.5 * (s1 - s0) * (z + 1.0);
                    let x = a + 0.5 * (b - a) * (1.0 - (PI * s).cos());
                    let jac = 0.5 * (b - a) * PI * (PI * s).sin() * 0.5 * (s1 - s0);
                    let v = alt_sum(&self.branches(x)?);
                    total += C64::from_polar(v * jac * wt, -(k as f64) * x);
                }
            }
        }
        Ok(total / TAU)
    }
}

/// Branches of the multivalued solution at `(t, x)`.
pub fn branches(u: &TrigPotential, t: f64, x: f64) -> Result<BranchSet> {
    CharacteristicMap::new(u, t)?.branches(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldSample {
    pub t: f64,
    pub x: f64,
    pub count: usize,
    pub alt_sum: f64,
}

/// `alt_sum` on a uniform grid of `n` points, shifting a point by `1e-7`
/// when it falls on a caustic.
pub fn alt_sum_field(u: &TrigPotential, t: f64, n: usize) -> Result<Vec<FieldSample>> {
    let map = CharacteristicMap::new(u, t)?;
    (0..n)
        .map(|j| {
            let x = TAU * j as f64 / n as f64;
            let b = match map.branches(x) {
                Err(Error::BranchCountEven(_)) => map.branches(x + 1e-7)?,
                r => r?,
            };
            Ok(FieldSample { t, x, count: b.values.len(), alt_sum: alt_sum(&b) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine() -> DistributionProfile {
        DistributionProfile::new(&TrigPotential::preset("cosine").unwrap()).unwrap()
    }

    #[test]
    fn distribution_values() {
        let p = cosine();
        assert_eq!(p.f(3.0), 0.0);
        assert_eq!(p.f(-3.0), 1.0);
        assert!((p.f(0.0) - 0.5).abs() < 1e-13);
        assert!((p.f(1.0) - 1.0 / 3.0).abs() < 1e-13);
        let (a, b) = p.antecedents(0.0).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-13 && (b - 1.5 * PI).abs() < 1e-13);
        assert!(matches!(p.antecedents(2.5), Err(Error::OutOfRangeEta(_))));
    }

    #[test]
    fn antecedent_edges() {
        let p = cosine();
        let (a, b) = p.antecedents(2.0 - 1e-8).unwrap();
        assert!((a - PI).abs() < 1e-3 && (b - PI).abs() < 1e-3);
        let (a, b) = p.antecedents(-2.0 + 1e-8).unwrap();
        assert!(a < 1e-3 && b > TAU - 1e-3);
    }

    #[test]
    fn action_values() {
        let p = cosine();
        assert_eq!(p.action(2.0).unwrap(), 0.0);
        assert!((p.action(-2.0).unwrap() - 2.0).abs() < 1e-8);
        assert!((p.action(0.0).unwrap() - 2.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn branch_counts() {
        let u = TrigPotential::preset("cosine").unwrap();
        let b = branches(&u, 0.0, 1.3).unwrap();
        assert_eq!(b.values.len(), 1);
        assert!((b.values[0] - u.eval_torus(1.3)).abs() < 1e-12);
        let early = CharacteristicMap::new(&u, 0.2).unwrap();
        for j in 0..512 {
            assert_eq!(early.branches(TAU * j as f64 / 512.0).unwrap().values.len(), 1);
        }
        let late = CharacteristicMap::new(&u, 0.5).unwrap();
        let mut three = 0;
        for j in 0..512 {
            let x = TAU * (j as f64 + 0.5) / 512.0;
            let b = late.branches(x).unwrap();
            assert!(b.values.len() == 1 || b.values.len() == 3);
            three += (b.values.len() == 3) as usize;
            for v in &b.values {
                assert!((v - u.eval_torus(x - 2.0 * v * 0.5)).abs() < 1e-9);
            }
        }
        assert!(three > 0);
    }

    #[test]
    fn alt_sum_signs() {
        let b = BranchSet { t: 0.0, x: 0.0, values: vec![1.0, 2.0, 4.0], feet: vec![0.0; 3] };
        assert_eq!(alt_sum(&b), 3.0);
    }

    #[test]
    fn weak_limit_at_time_zero() {
        let p = cosine();
        let v = p.weak_limit_fourier(0.0, 1).unwrap();
        assert!((v - C64::new(-1.0, 0.0)).norm() < 1e-7);
        let w = p.weak_limit_fourier(0.5, -1).unwrap();
        assert!((w - p.weak_limit_fourier(0.5, 1).unwrap().conj()).norm() < 1e-9);
    }
}
