use bolab::burgers::DistributionProfile;
use bolab::evolve::*;
use bolab::laxspec::auto_truncation;
use bolab::TrigPotential;

#[test]
fn explicit_vs_rk4() {
    let u = TrigPotential::preset("cosine").unwrap();
    let a = fourier_evolution(&u, 0.5, 0.3, 8, 128).unwrap();
    let b = reference_integrator(&u, 0.5, 0.3, 1e-4, 128, 8).unwrap();
    let d = relative_l2(&a.coeffs, &b.coeffs);
    assert!(d <= 1e-5, "{d:e}");
    assert!(b.error_estimate.unwrap() < 1e-8);
}

#[test]
fn limit_sandwich_and_trend() {
    let u = TrigPotential::preset("cosine").unwrap();
    let p = DistributionProfile::new(&u).unwrap();
    for t in [0.15, 0.5] {
        let l = weak_limit_operator(&u, t, 4, 512).unwrap();
        for k in 1..=3 {
            let target = p.weak_limit_fourier(t, k as i64).unwrap();
            let mut errs = vec![];
            for eps in [0.2, 0.025] {
                let m = auto_truncation(&u, eps, 2.0 * u.sup_norm());
                let s = fourier_evolution(&u, eps, t, 3, m).unwrap();
                errs.push((s.coeffs[k] - target).norm());
            }
            assert!((l.coeffs[k] - target).norm() <= 2e-3);
            assert!(errs[1] <= 0.5 * errs[0], "t {t} k {k}: {errs:?}");
        }
    }
}

#[test]
fn frequencies() {
    let u = TrigPotential::preset("cosine").unwrap();
    for dt in [0.01, 0.005] {
        let f = frequency_check(&u, 0.5, 0.0, dt, 64, 128, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert!(f.max_residual <= 1e-2, "{:?}", f.rows);
    }
}
