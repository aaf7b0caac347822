//! The acceptance suite: one check per criterion, each returning the
//! measured quantities next to its threshold.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::burgers::{CharacteristicMap, DistributionProfile};
use crate::evans::{scan_zeros, QuadSettings};
use crate::evolve::{fourier_evolution, reference_integrator, relative_l2};
use crate::landscape::{
    action_integral, band_values, check_s2, critical_points, delta_zeros, eval_s_second, merge_tree, prune_tree,
    NodeKind,
};
use crate::laxspec::{auto_truncation, eigensolve, gaps_and_sumrule, shift_pairing, spectrum, LaxMatrix};
use crate::potential::{comonotone_check, wrap_angle, TrigPotential};
use crate::quantize::{predict_small, psi_even, psi_general, region_classify, residual_report, PsiTable, Region};

type C64 = Complex64;

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn outcome(id: u32, name: &'static str, r: crate::Result<(bool, String)>) -> Outcome {
    match r {
        Ok((pass, detail)) => Outcome { id, name, pass, detail },
        Err(e) => Outcome { id, name, pass: false, detail: format!("error: {e}") },
    }
}

fn preset(name: &str) -> TrigPotential {
    TrigPotential::preset(name).expect("built-in preset")
}

/// Runs criteria 1 to 14 in order.
pub fn run_suite() -> Vec<Outcome> {
    vec![
        outcome(1, "free operator exactness", free_operator()),
        outcome(2, "sum rule", sum_rule()),
        outcome(3, "evans zeros vs eigensolver", evans_vs_eigensolver()),
        outcome(4, "small-eigenvalue residual scaling", small_scaling()),
        outcome(5, "large-eigenvalue spacing", large_spacing()),
        outcome(6, "action identity", action_identity()),
        outcome(7, "second derivative identity", second_derivative()),
        outcome(8, "phase parity", phase_parity()),
        outcome(9, "explicit formula vs rk4", explicit_vs_rk4()),
        outcome(10, "zero-dispersion convergence", zero_dispersion()),
        outcome(11, "burgers consistency", burgers_consistency()),
        outcome(12, "comonotone approximation", comonotone()),
        outcome(13, "landscape combinatorics", landscape()),
        outcome(14, "psi consistency", psi_consistency()),
    ]
}

pub fn free_operator() -> crate::Result<(bool, String)> {
    let s = eigensolve(&LaxMatrix::free(1.0, 256))?;
    let dl = s.eigenvalues.iter().enumerate().map(|(n, l)| (l - n as f64).abs()).fold(0.0, f64::max);
    let dg = s.gaps().iter().map(|g| g.abs()).fold(0.0, f64::max);
    Ok((dl <= 1e-12 && dg <= 1e-12, format!("max |lambda_n - n| = {dl:e}, max |gamma_n| = {dg:e} (tol 1e-12)")))
}

/// Residuals at or below this multiple of `|u|^2` are round-off.
pub const SUM_RULE_FLOOR: f64 = 1e-12;

pub fn sum_rule() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let norm2 = u.mean_square();
    let r: Vec<f64> = [256, 512]
        .iter()
        .map(|&m| spectrum(&u, 0.5, m).and_then(|s| gaps_and_sumrule(&s, &u)).map(|x| x.residual))
        .collect::<crate::Result<_>>()?;
    let small = r.iter().all(|x| *x <= 1e-3 * norm2);
    let floor = SUM_RULE_FLOOR * norm2;
    let decreasing = r[1] < r[0] || (r[0] <= floor && r[1] <= floor);
    Ok((
        small && decreasing,
        format!("residual M=256: {:e}, M=512: {:e} (tol {:e}; decreasing or both below round-off {floor:e})", r[0], r[1], 1e-3 * norm2),
    ))
}

pub fn evans_vs_eigensolver() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let q = QuadSettings::default();
    let mut worst: f64 = 0.0;
    let mut counts = Vec::new();
    for eps in [0.5, 0.25] {
        let eig = spectrum(&u, eps, auto_truncation(&u, eps, 10.0))?.eigenvalues;
        for (lo, hi) in [(-1.8, 1.8), (2.2, 6.0)] {
            let pts = ((hi - lo) / (eps / 8.0)).ceil() as usize + 1;
            let scan = scan_zeros(&u, eps, lo, hi, pts, &q)?;
            let zeros = scan.accepted();
            let inside: Vec<f64> = eig.iter().cloned().filter(|l| *l >= lo && *l <= hi).collect();
            let near = |x: f64, set: &[f64]| set.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
            for z in &zeros {
                worst = worst.max(near(*z, &eig));
            }
            for e in &inside {
                worst = worst.max(near(*e, &zeros));
            }
            counts.push(format!("eps={eps} [{lo},{hi}]: {} zeros / {} eigenvalues", zeros.len(), inside.len()));
        }
    }
    Ok((worst <= 1e-3, format!("max bidirectional distance {worst:e} (tol 1e-3); {}", counts.join("; "))))
}

pub fn small_scaling() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let table = PsiTable::new(&u)?;
    let bands = band_values(&u)?;
    let spectra = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&e| spectrum(&u, e, auto_truncation(&u, e, 10.0)))
        .collect::<crate::Result<Vec<_>>>()?;
    let rep = residual_report(&table, &spectra, 0.2, &bands, large_k(&u))?;
    let slope = rep.small_slope.unwrap_or(f64::NAN);
    let maxes: Vec<String> = rep.per_eps.iter().map(|r| format!("{:e}", r.max_small)).collect();
    Ok((slope >= 1.2, format!("slope {slope:.4} (min 1.2); max residuals {}", maxes.join(", "))))
}

/// `K` for the large-eigenvalue window `n <= K/eps`.
pub fn large_k(u: &TrigPotential) -> f64 {
    let (lo, _) = u.grid_min_max();
    -lo + 4.0
}

pub fn large_spacing() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let eps = 0.05;
    let (lo, hi) = u.grid_min_max();
    let k = large_k(&u);
    let spec = spectrum(&u, eps, auto_truncation(&u, eps, k + 4.0))?;
    let part = region_classify(&spec, lo, hi, 0.3, &band_values(&u)?);
    let idx: Vec<usize> = part.indices(Region::Large).into_iter().filter(|&n| n as f64 <= k / eps).collect();
    let shifted: Vec<f64> = idx.iter().map(|&n| spec.eigenvalues[n] - n as f64 * eps).collect();
    let spread = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - shifted.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        !idx.is_empty() && spread <= 0.05 * eps,
        format!("{} eigenvalues, max |lambda_n - lambda_p - (n-p) eps| = {spread:e} (tol {:e})", idx.len(), 0.05 * eps),
    ))
}

/// `n` evenly spaced points of `Lambda_-(delta)` minus the bands.
fn small_grid(u: &TrigPotential, prof: &DistributionProfile, delta: f64, n: usize) -> crate::Result<Vec<f64>> {
    let bands = band_values(u)?;
    let (a, b) = (-prof.max_u + delta, -prof.min_u - delta);
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .filter(|l| bands.iter().all(|y| (l - y).abs() >= delta))
        .collect())
}

pub fn action_identity() -> crate::Result<(bool, String)> {
    let cos = preset("cosine");
    let pc = DistributionProfile::new(&cos)?;
    let a = action_integral(&cos, 0.0, &pc)?;
    let closed = (a.lhs - C64::new(0.0, 4.0)).norm();
    let fig = preset("fig-level0");
    let pf = DistributionProfile::new(&fig)?;
    let grid = small_grid(&fig, &pf, 0.2, 50)?;
    let mut worst: f64 = 0.0;
    for l in &grid {
        worst = worst.max(action_integral(&fig, *l, &pf)?.residual);
    }
    Ok((
        a.residual <= 1e-8 && closed <= 1e-8 && worst <= 1e-6,
        format!(
            "cosine residual {:e}, |lhs - 4i| = {closed:e} (tol 1e-8); fig-level0 max residual {worst:e} over {} points (tol 1e-6)",
            a.residual,
            grid.len()
        ),
    ))
}

pub fn second_derivative() -> crate::Result<(bool, String)> {
    let cos = preset("cosine");
    let c = critical_points(&cos, 0.0)?;
    let rc = check_s2(&cos, &c)?;
    let exact = (eval_s_second(&cos, 0.0, C64::new(0.0, 1.0))?.norm() - 2.0).abs();
    let fig = preset("fig-level0");
    let rf = check_s2(&fig, &critical_points(&fig, 0.0)?)?;
    Ok((
        rc <= 1e-10 && exact <= 1e-10 && rf <= 1e-8,
        format!("cosine residual {rc:e}, ||S''(i)| - 2| = {exact:e} (tol 1e-10); fig-level0 residual {rf:e} (tol 1e-8)"),
    ))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

pub fn phase_parity() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let prof = DistributionProfile::new(&u)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [0.5, 0.1] {
        let s = spectrum(&u, eps, auto_truncation(&u, eps, 10.0))?;
        let r = shift_pairing(&s, &prof, 0.2);
        let im_ok = r.max_im <= 1e-8 * r.max_abs + 1e-12;
        let step_ok = r.max_step_deviation <= 1e-6;
        ok &= im_ok && step_ok;
        parts.push(format!("eps={eps}: max Im {:e} vs {:e}, step deviation {:e}", r.max_im, 1e-8 * r.max_abs + 1e-12, r.max_step_deviation));
    }
    let mut sums = Vec::new();
    for eps in [0.2, 0.05] {
        let s = spectrum(&u, eps, auto_truncation(&u, eps, 10.0))?;
        let r = shift_pairing(&s, &prof, 0.2);
        let weigh = |set: &[usize]| set.iter().map(|&n| sinc(PI * prof.f(-s.eigenvalues[n])) * eps).fold(0.0, |a, b| a + b);
        sums.push((weigh(&r.j), r.j.len(), weigh(&r.j_literal), r.j_literal.len()));
    }
    // both sums vanish when every step follows the predicted phase
    let decreasing = sums[1].0 < sums[0].0 || (sums[0].0 == 0.0 && sums[1].0 == 0.0);
    ok &= decreasing;
    parts.push(format!(
        "upside-down sum eps=0.2: {:e} (|J| = {}), eps=0.05: {:e} (|J| = {}); steps equal to +1: {:e} ({}), {:e} ({})",
        sums[0].0, sums[0].1, sums[1].0, sums[1].1, sums[0].2, sums[0].3, sums[1].2, sums[1].3
    ));
    Ok((ok, parts.join("; ")))
}

pub fn explicit_vs_rk4() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let a = fourier_evolution(&u, 0.5, 0.3, 8, 128)?;
    let b = reference_integrator(&u, 0.5, 0.3, 1e-4, 128, 8)?;
    let d = relative_l2(&a.coeffs, &b.coeffs);
    Ok((d <= 1e-5, format!("relative l2 difference {d:e} (tol 1e-5); rk4 step-halving estimate {:e}", b.error_estimate.unwrap_or(0.0))))
}

pub fn zero_dispersion() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let prof = DistributionProfile::new(&u)?;
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_target: f64 = 0.0;
    for t in [0.15, 0.5] {
        let map = CharacteristicMap::new(&u, t)?;
        let mut errs = [[0.0; 3]; 2];
        for (i, eps) in [0.2, 0.025].into_iter().enumerate() {
            let s = fourier_evolution(&u, eps, t, 3, auto_truncation(&u, eps, 2.0 * u.sup_norm()))?;
            for k in 1..=3 {
                let target = prof.weak_limit_fourier(t, k as i64)?;
                let other = map.alt_sum_fourier(k as i64)?;
                worst_target = worst_target.max((target - other).norm());
                errs[i][k - 1] = (s.coeffs[k] - target).norm();
            }
        }
        for k in 0..3 {
            let ratio = errs[1][k] / errs[0][k];
            worst_ratio = worst_ratio.max(ratio);
            ok &= ratio <= 0.5;
        }
    }
    ok &= worst_target <= 1e-5;
    Ok((ok, format!("max error ratio eps=0.025 / eps=0.2: {worst_ratio:.4} (max 0.5); target agreement {worst_target:e} (tol 1e-5)")))
}

pub fn burgers_consistency() -> crate::Result<(bool, String)> {
    let u = preset("cosine");
    let prof = DistributionProfile::new(&u)?;
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.15, 0.5] {
        let map = CharacteristicMap::new(&u, t)?;
        for k in (-8i64..=8).filter(|k| *k != 0) {
            worst = worst.max((prof.weak_limit_fourier(t, k)? - map.alt_sum_fourier(k)?).norm());
        }
    }
    Ok((worst <= 1e-5, format!("max |transform - integral| = {worst:e} over |k| <= 8 (tol 1e-5)")))
}

/// Samples of `-sum_{k>=1} cos(k (x - x0)) / k^5` with `2^14` terms; its
/// maximum sits at `x0 + pi`.
pub fn bell_samples(l: usize, x0: f64) -> Vec<f64> {
    const TERMS: usize = 1 << 14;
    (0..l)
        .map(|j| {
            let x = TAU * j as f64 / l as f64 - x0;
            // smallest terms first
            -(1..=TERMS).rev().map(|k| (k as f64 * x).cos() / (k as f64).powi(5)).sum::<f64>()
        })
        .collect()
}

pub fn comonotone() -> crate::Result<(bool, String)> {
    let x0 = 0.7;
    let samples = bell_samples(4096, x0);
    let rep = comonotone_check(&samples, &[8, 16, 32, 64])?;
    let n0_ok = rep.n0.is_some_and(|n| n <= 16);
    let slope = rep.slope.unwrap_or(f64::NAN);
    let last = rep.records.iter().find(|r| r.n == 64).expect("64 is on the ladder");
    let dx = wrap_angle(last.x_max - (x0 + PI)).abs();
    Ok((
        n0_ok && slope <= -1.5 && dx <= 0.05,
        format!("N0 = {:?} (max 16), sup-error slope {slope:.4} (max -1.5), |x_max(64) - x_max| = {dx:e} (tol 0.05)", rep.n0),
    ))
}

pub fn landscape() -> crate::Result<(bool, String)> {
    let u = preset("fig-level0");
    let cps = critical_points(&u, 0.0)?;
    let on = cps.roots.len() - cps.inside.len() - cps.outside.len();
    let tree = merge_tree(&u, 0.0, None)?;
    let pr = prune_tree(&tree)?;
    let mut leaves: Vec<usize> = pr.pairs().iter().map(|p| p.0).collect();
    let mut nodes: Vec<usize> = pr.pairs().iter().map(|p| p.1).collect();
    leaves.sort();
    leaves.dedup();
    nodes.sort();
    nodes.dedup();
    let bijection = leaves.len() == tree.n && nodes.len() == tree.internal_count();
    let matched = tree.nodes.iter().filter(|n| n.kind != NodeKind::Leaf).all(|n| n.saddle_value.is_some());
    let ok = tree.leaf_count() == 6 && tree.internal_count() == u.degree() && bijection && cps.roots.len() == 12 && on == 2 && matched;
    let pairs: Vec<String> = pr.pairs().iter().map(|(l, n)| format!("l{l}-node{n}")).collect();
    Ok((
        ok,
        format!(
            "{} roots ({} on circle), {} leaves, {} internal nodes, pairing {}, all merges matched to saddles: {matched}",
            cps.roots.len(),
            on,
            tree.leaf_count(),
            tree.internal_count(),
            pairs.join(" ")
        ),
    ))
}

pub fn psi_consistency() -> crate::Result<(bool, String)> {
    let mut worst_even: f64 = 0.0;
    // even fixtures of degree one, where the even shortcut is exact
    for u in [preset("cosine"), TrigPotential::from_real(&[-1.5])?] {
        let prof = DistributionProfile::new(&u)?;
        for l in small_grid(&u, &prof, 0.2, 50)? {
            let a = psi_general(&u, &prof, &critical_points(&u, l)?)?;
            let b = psi_even(&u, &prof, -l)?;
            let d = (a - b).rem_euclid(1.0);
            worst_even = worst_even.max(d.min(1.0 - d));
        }
    }
    let mut worst_zero: f64 = 0.0;
    let mut count = 0;
    for name in ["cosine", "fig-level0"] {
        let u = preset(name);
        let eps = 0.1;
        let table = PsiTable::new(&u)?;
        let prof = table.profile().clone();
        let delta = 0.2;
        let zeros = delta_zeros(&u, eps, -prof.max_u + delta, -prof.min_u - delta, 400)?;
        let preds: Vec<f64> = (0..((prof.max_u - prof.min_u) / eps) as usize + 2)
            .filter_map(|n| predict_small(&table, eps, delta, n).ok())
            .collect();
        for z in zeros.iter().filter(|z| -**z > prof.min_u + delta && -**z < prof.max_u - delta) {
            worst_zero = worst_zero.max(preds.iter().map(|p| (p - z).abs()).fold(f64::INFINITY, f64::min));
            count += 1;
        }
    }
    Ok((
        worst_even <= 1e-8 && worst_zero <= 1e-8 && count > 0,
        format!("max |psi_general - psi_even| mod 1 = {worst_even:e}; max |Delta zero - prediction| = {worst_zero:e} over {count} zeros (tol 1e-8)"),
    ))
}
