use bolab::evans::*;
use bolab::laxspec::spectrum;
use bolab::TrigPotential;

fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().map(|x| b.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

#[test]
fn weak_cosine_zeros_match_eigenvalues() {
    let u = TrigPotential::from_real(&[-0.5]).unwrap();
    let eps = 0.4;
    let (lo, hi) = (-0.9, 2.5);
    let spec = spectrum(&u, eps, 128).unwrap();
    let mut s = scan_zeros(&u, eps, lo, hi, 120, &QuadSettings::default()).unwrap();
    let z = s.accepted();
    let eig: Vec<f64> = spec.eigenvalues.iter().cloned().filter(|l| *l > lo && *l < hi).collect();
    assert_eq!(z.len(), eig.len());
    assert!(max_distance(&z, &eig) < 1e-6 && max_distance(&eig, &z) < 1e-6);
    s.match_eigenvalues(&spec.eigenvalues, 1e-6);
    assert!(s.zeros.iter().filter(|z| z.status == ZeroStatus::Accepted).all(|z| z.matched.is_some()));
}

#[test]
fn scan_rejects_bad_ranges() {
    let u = TrigPotential::preset("cosine").unwrap();
    let q = QuadSettings::default();
    assert!(scan_zeros(&u, 0.5, 1.0, 1.0, 10, &q).is_err());
    assert!(scan_zeros(&u, 0.5, 0.0, 1.0, 2, &q).is_err());
}
