//! Fourier coefficients of `u^eps(t)` from the explicit formula, the
//! `eps -> 0` limit operator, and a pseudo-spectral reference solver for
//! `u_t = d/dx (eps |D| u - u^2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::eig::hermitian_eigh;
use crate::error::{Error, Result};
use crate::laxspec::{eigensolve, phase_constants, LaxMatrix};
use crate::potential::TrigPotential;

type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExplicitFormula,
    LimitOperator,
    ReferenceIntegrator,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionState {
    pub eps: f64,
    pub t: f64,
    /// `u_hat(t)(k)` for `0 <= k <= kmax`.
    pub coeffs: Vec<C64>,
    pub method: Method,
    pub m: usize,
    /// Step-halving estimate for the reference solver.
    pub error_estimate: Option<f64>,
}

impl EvolutionState {
    /// `sum_{k >= 1} |u_hat(k)|^2`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().skip(1).map(|c| c.norm_sqr()).sum()
    }

    /// The real trigonometric polynomial with these coefficients.
    pub fn potential(&self) -> Result<TrigPotential> {
        TrigPotential::new(self.coeffs[1..].to_vec())
    }
}

/// `l^2` distance of `a - b` relative to `|b|`, over the common modes `k >= 1`.
pub fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let n = a.len().min(b.len());
    let num: f64 = (1..n).map(|k| (a[k] - b[k]).norm_sqr()).sum();
    let den: f64 = (1..n).map(|k| b[k].norm_sqr()).sum();
    (num / den).sqrt()
}

fn check_sizes(u0: &TrigPotential, kmax: usize, m: usize) -> Result<()> {
    if kmax > m / 2 {
        return Err(Error::TruncationTooSmall(format!("kmax = {kmax} exceeds M/2 = {}", m / 2)));
    }
    let tail: f64 = u0.coeffs().iter().skip(m / 2).map(|c| c.norm_sqr()).sum();
    if tail > 1e-10 {
        return Err(Error::TruncationTooSmall(format!("tail mass {tail:e} beyond M/2")));
    }
    Ok(())
}

/// `(P^k Pi u0)[0]` for `k <= kmax`, where `P = phase * exp(2 i t H) S*`
/// and `(S* h)_j = h_{j+1}`.
fn iterate(h: &LaxMatrix, phase: C64, t: f64, u0: &TrigPotential, kmax: usize) -> Result<Vec<C64>> {
    let m = h.m;
    let e = hermitian_eigh(h.data(), m)?;
    // P0 = V diag(e^{2 i t lambda}) V*, stored row-major
    let w: Vec<C64> = e.vals.iter().map(|l| C64::from_polar(1.0, 2.0 * t * l) * phase).collect();
    let mut prop = vec![C64::new(0.0, 0.0); m * m];
    for (n, v) in e.vecs.iter().enumerate() {
        for j in 0..m {
            let a = v[j] * w[n];
            let row = &mut prop[j * m..(j + 1) * m];
            for (k, r) in row.iter_mut().enumerate() {
                *r += a * v[k].conj();
            }
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); m];
    for (i, c) in u0.coeffs().iter().enumerate() {
        if i + 1 < m {
            x[i + 1] = *c;
        }
    }
    let mut out = vec![x[0]];
    for _ in 0..kmax {
        let shifted: Vec<C64> = (0..m).map(|j| if j + 1 < m { x[j + 1] } else { C64::new(0.0, 0.0) }).collect();
        x = (0..m).map(|j| (0..m).map(|k| prop[j * m + k] * shifted[k]).sum()).collect();
        out.push(x[0]);
    }
    Ok(out)
}

pub fn fourier_evolution(u0: &TrigPotential, eps: f64, t: f64, kmax: usize, m: usize) -> Result<EvolutionState> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    check_sizes(u0, kmax, m)?;
    let h = LaxMatrix::from_coeffs(u0.coeffs(), eps, m);
    let coeffs = iterate(&h, C64::from_polar(1.0, eps * t), t, u0, kmax)?;
    Ok(EvolutionState { eps, t, coeffs, method: Method::ExplicitFormula, m, error_estimate: None })
}

/// Same iteration with `exp(-2 i t T_u0) S*`.
pub fn weak_limit_operator(u0: &TrigPotential, t: f64, kmax: usize, m: usize) -> Result<EvolutionState> {
    check_sizes(u0, kmax, m)?;
    // eps = 0 gives -T_u0
    let h = LaxMatrix::from_coeffs(u0.coeffs(), 0.0, m);
    let coeffs = iterate(&h, C64::new(1.0, 0.0), t, u0, kmax)?;
    Ok(EvolutionState { eps: 0.0, t, coeffs, method: Method::LimitOperator, m, error_estimate: None })
}

struct Solver {
    n: usize,
    eps: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    wave: Vec<f64>,
    keep: Vec<bool>,
}

impl Solver {
    fn new(n: usize, eps: f64) -> Self {
        let mut planner = FftPlanner::new();
        let wave: Vec<f64> = (0..n).map(|j| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 }).collect();
        // 2/3 rule
        let keep = wave.iter().map(|k| k.abs() <= n as f64 / 3.0).collect();
        Self { n, eps, fft: planner.plan_fft_forward(n), ifft: planner.plan_fft_inverse(n), wave, keep }
    }

    /// `-ik (u^2)^` from spectral values.
    fn nonlinear(&self, uh: &[C64]) -> Vec<C64> {
        let mut buf: Vec<C64> = uh.iter().zip(&self.keep).map(|(c, &k)| if k { *c } else { C64::new(0.0, 0.0) }).collect();
        self.ifft.process(&mut buf);
        for z in buf.iter_mut() {
            let r = z.re;
            *z = C64::new(r * r, 0.0);
        }
        self.fft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter()
            .zip(&self.wave)
            .zip(&self.keep)
            .map(|((v, &k), &kp)| if kp { C64::new(0.0, -k) * v * scale } else { C64::new(0.0, 0.0) })
            .collect()
    }

    /// Linear symbol `i eps k |k|` of `eps d/dx |D|`.
    fn linear(&self, dt: f64) -> Vec<C64> {
        self.wave.iter().map(|k| C64::from_polar(1.0, self.eps * k * k.abs() * dt)).collect()
    }

    fn run(&self, u0: &[C64], t_end: f64, steps: usize, sup0: f64) -> Result<Vec<C64>> {
        let dt = t_end / steps as f64;
        let e_half = self.linear(0.5 * dt);
        let e_full = self.linear(dt);
        let mul = |a: &[C64], b: &[C64]| -> Vec<C64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
        let axpy = |x: &[C64], a: f64, y: &[C64]| -> Vec<C64> { x.iter().zip(y).map(|(p, q)| p + q * a).collect() };
        let mut u = u0.to_vec();
        for step in 0..steps {
            let a = self.nonlinear(&u);
            let eu = mul(&e_half, &u);
            let b = self.nonlinear(&mul(&e_half, &axpy(&u, 0.5 * dt, &a)));
            let c = self.nonlinear(&axpy(&eu, 0.5 * dt, &b));
            let d = self.nonlinear(&axpy(&mul(&e_full, &u), dt, &mul(&e_half, &c)));
            u = (0..self.n)
                .map(|j| {
                    e_full[j] * u[j] + dt / 6.0 * (e_full[j] * a[j] + 2.0 * e_half[j] * (b[j] + c[j]) + d[j])
                })
                .collect();
            if step % 64 == 63 || step + 1 == steps {
                let mut buf = u.clone();
                self.ifft.process(&mut buf);
                let sup = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
                if !sup.is_finite() || sup > 10.0 * sup0 {
                    return Err(Error::BlowupDetected(sup));
                }
            }
        }
        Ok(u)
    }
}

/// RK4 with integrating factor on `modes` grid points and `2/3` dealiasing.
/// The returned estimate is the `l^2` change when the step is halved.
pub fn reference_integrator(u0: &TrigPotential, eps: f64, t_end: f64, dt: f64, modes: usize, kmax: usize) -> Result<EvolutionState> {
    if !(dt > 0.0) || dt > 0.5 / (eps * modes as f64) {
        return Err(Error::InvalidParameter(format!("dt = {dt} exceeds 0.5/(eps M) = {}", 0.5 / (eps * modes as f64))));
    }
    if 3 * (u0.degree().max(kmax)) > modes {
        return Err(Error::TruncationTooSmall(format!("{modes} modes cannot hold degree {} after dealiasing", u0.degree().max(kmax))));
    }
    let solver = Solver::new(modes, eps);
    let mut uh = vec![C64::new(0.0, 0.0); modes];
    for (i, c) in u0.coeffs().iter().enumerate() {
        uh[i + 1] = *c;
        uh[modes - i - 1] = c.conj();
    }
    let sup0 = u0.sup_norm();
    let steps = ((t_end / dt).round() as usize).max(1);
    if t_end == 0.0 {
        let coeffs = uh[..=kmax].to_vec();
        return Ok(EvolutionState { eps, t: 0.0, coeffs, method: Method::ReferenceIntegrator, m: modes, error_estimate: Some(0.0) });
    }
    let coarse = solver.run(&uh, t_end, steps, sup0)?;
    let fine = solver.run(&uh, t_end, 2 * steps, sup0)?;
    let err = (0..modes).map(|k| (coarse[k] - fine[k]).norm_sqr()).sum::<f64>().sqrt();
    Ok(EvolutionState {
        eps,
        t: t_end,
        coeffs: fine[..=kmax].to_vec(),
        method: Method::ReferenceIntegrator,
        m: modes,
        error_estimate: Some(err),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyCheck {
    pub dt: f64,
    /// `(n, measured omega_{n+1} - omega_n, 2 lambda_n + eps)`.
    pub rows: Vec<(usize, f64, f64)>,
    pub max_residual: f64,
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Phase-constant velocities from the Lax spectra of `u(t1)` and `u(t2)`,
/// compared with `omega_{n+1} - omega_n = 2 lambda_n + eps` on `indices`.
pub fn frequency_check(
    u0: &TrigPotential,
    eps: f64,
    t1: f64,
    t2: f64,
    kmax: usize,
    m: usize,
    indices: &[usize],
) -> Result<FrequencyCheck> {
    let theta_at = |t: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let s = fourier_evolution(u0, eps, t, kmax, m)?;
        let coeffs: Vec<C64> = s.coeffs[1..].to_vec();
        let spec = eigensolve(&LaxMatrix::from_coeffs(&coeffs, eps, m))?;
        Ok((phase_constants(&spec), spec.eigenvalues))
    };
    let (th1, lam) = theta_at(t1)?;
    let (th2, _) = theta_at(t2)?;
    let dt = t2 - t1;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &n in indices {
        let d0 = wrap(th2[n] - th1[n]);
        let d1 = wrap(th2[n + 1] - th1[n + 1]);
        if d0.abs() > PI / 2.0 || d1.abs() > PI / 2.0 {
            return Err(Error::PhaseUnwrapAmbiguity(n));
        }
        let measured = (d1 - d0) / dt;
        let want = 2.0 * lam[n] + eps;
        worst = worst.max((measured - want).abs());
        rows.push((n, measured, want));
    }
    Ok(FrequencyCheck { dt, rows, max_residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine() -> TrigPotential {
        TrigPotential::preset("cosine").unwrap()
    }

    #[test]
    fn time_zero_is_identity() {
        let u = TrigPotential::preset("fig-level0").unwrap();
        let s = fourier_evolution(&u, 0.5, 0.0, 8, 64).unwrap();
        let l = weak_limit_operator(&u, 0.0, 8, 64).unwrap();
        for k in 1..=8 {
            assert!((s.coeffs[k] - u.coeff(k as i64)).norm() < 1e-12);
            assert!((l.coeffs[k] - u.coeff(k as i64)).norm() < 1e-12);
        }
        assert!(s.coeffs[0].norm() < 1e-12);
    }

    #[test]
    fn mass_is_conserved() {
        let u = cosine();
        for t in [0.1, 0.3, 1.0] {
            let s = fourier_evolution(&u, 0.5, t, 128, 256).unwrap();
            assert!((s.mass() - 1.0).abs() < 1e-8, "t={t}: {}", s.mass());
            assert!(s.coeffs[0].norm() < 1e-10);
        }
    }

    #[test]
    fn dispersion_dominated() {
        let u = cosine();
        let s = reference_integrator(&u, 4.0, 0.05, 1e-4, 32, 4).unwrap();
        let lin = C64::from_polar(1.0, 4.0 * 0.05) * u.coeff(1);
        assert!((s.coeffs[1] - lin).norm() < 0.1 * lin.norm());
    }
}
