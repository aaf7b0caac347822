use bolab::burgers::{alt_sum_field, CharacteristicMap, DistributionProfile};
use bolab::TrigPotential;
use std::f64::consts::TAU;

#[test]
fn branch_transform_matches_weak_limit_integral() {
    let u = TrigPotential::preset("cosine").unwrap();
    let p = DistributionProfile::new(&u).unwrap();
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.15, 0.5] {
        let map = CharacteristicMap::new(&u, t).unwrap();
        for k in (-8i64..=8).filter(|k| *k != 0) {
            let a = map.alt_sum_fourier(k).unwrap();
            let b = p.weak_limit_fourier(t, k).unwrap();
            worst = worst.max((a - b).norm());
        }
    }
    println!("max difference {worst:e}");
    assert!(worst < 1e-5);
}

#[test]
fn alt_sum_field_has_zero_mean() {
    let u = TrigPotential::preset("cosine").unwrap();
    let f = alt_sum_field(&u, 0.5, 1024).unwrap();
    let mean = f.iter().map(|s| s.alt_sum).sum::<f64>() / 1024.0;
    assert!(mean.abs() < 1e-6);
    assert!(f.iter().any(|s| s.count == 3));
}

#[test]
fn distribution_matches_grid_count() {
    let u = TrigPotential::preset("fig-level0").unwrap();
    let p = DistributionProfile::new(&u).unwrap();
    let n = 100_000;
    let samples = u.sample(n);
    let mut prev = 1.0;
    for i in 0..1000 {
        let eta = p.min_u + (p.max_u - p.min_u) * (i as f64 + 0.5) / 1000.0;
        let f = p.f(eta);
        assert!(f <= prev + 1e-15);
        prev = f;
        let count = samples.iter().filter(|v| **v >= eta).count() as f64 / n as f64;
        assert!((TAU * (f - count)).abs() <= 2.0 * TAU / n as f64 * 2.0);
    }
}
