use bolab::landscape::band_values;
use bolab::laxspec::{auto_truncation, spectrum};
use bolab::quantize::*;
use bolab::TrigPotential;

#[test]
fn cosine_ladder_residuals() {
    let u = TrigPotential::preset("cosine").unwrap();
    let t = PsiTable::new(&u).unwrap();
    let bands = band_values(&u).unwrap();
    let spectra: Vec<_> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&e| spectrum(&u, e, auto_truncation(&u, e, 10.0)).unwrap())
        .collect();
    let r = residual_report(&t, &spectra, 0.2, &bands, 6.0).unwrap();
    for w in r.per_eps.windows(2) {
        assert!(w[1].max_small < w[0].max_small);
        assert!(!w[1].small.is_empty() && !w[1].large.is_empty());
    }
    assert!(r.small_slope.unwrap() > 1.2);
    assert!(r.per_eps.iter().all(|e| e.max_large < 0.05 * e.eps));
}

#[test]
fn predictions_track_small_eigenvalues() {
    let u = TrigPotential::preset("cosine").unwrap();
    let t = PsiTable::new(&u).unwrap();
    let bands = band_values(&u).unwrap();
    let mut worst = Vec::new();
    for eps in [0.1, 0.05] {
        let s = spectrum(&u, eps, auto_truncation(&u, eps, 10.0)).unwrap();
        let part = region_classify(&s, -2.0, 2.0, 0.2, &bands);
        let idx = part.indices(Region::Small);
        assert!(!idx.is_empty());
        let mut w: f64 = 0.0;
        for n in idx {
            if let Ok(p) = predict_small(&t, eps, 0.2, n) {
                w = w.max((p - s.eigenvalues[n]).abs());
            }
        }
        worst.push(w);
    }
    // the error is o(eps) and shrinks with eps
    assert!(worst[0] < 0.1 * 0.1 && worst[1] < worst[0], "{worst:?}");
}

#[test]
fn ladder_needs_three_values() {
    let u = TrigPotential::preset("cosine").unwrap();
    let t = PsiTable::new(&u).unwrap();
    let s = spectrum(&u, 0.5, 64).unwrap();
    let r = residual_report(&t, &[s.clone(), s], 0.2, &[], 6.0);
    assert!(matches!(r, Err(bolab::Error::InsufficientLadder(2))));
}
