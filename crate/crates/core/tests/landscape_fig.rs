use bolab::burgers::DistributionProfile;
use bolab::landscape::*;
use bolab::TrigPotential;

#[test]
fn fig_level0_tree() {
    let u = TrigPotential::preset("fig-level0").unwrap();
    let cps = critical_points(&u, 0.0).unwrap();
    assert_eq!(cps.roots.len(), 12);
    assert_eq!(cps.case, Case::Small);
    assert!(check_s2(&u, &cps).unwrap() <= 1e-8);
    let p = DistributionProfile::new(&u).unwrap();
    let a = action_integral(&u, 0.0, &p).unwrap();
    assert!(a.residual <= 1e-6, "{:?}", a);
    let t = merge_tree(&u, 0.0, None).unwrap();
    let pr = prune_tree(&t).unwrap();
    let order: Vec<usize> = pr.steps.iter().map(|s| s.leaf).collect();
    assert_eq!(order, vec![1, 5, 4, 2, 3]);
    assert_eq!(pr.survivor, 6);
    let mut nodes: Vec<usize> = pr.pairs().iter().map(|p| p.1).collect();
    nodes.sort();
    nodes.dedup();
    assert_eq!(nodes.len(), 6);
    for nd in t.nodes.iter().filter(|n| n.kind != NodeKind::Leaf) {
        assert!((nd.level - nd.saddle_value.unwrap()).abs() < 1e-2);
    }
    assert_eq!(t.leaf_count(), 6);
    assert_eq!(t.internal_count(), 6);
}

#[test]
fn delta_zeros_match_predictions() {
    use bolab::quantize::{predict_small, PsiTable};
    for name in ["cosine", "fig-level0"] {
        let u = TrigPotential::preset(name).unwrap();
        let eps = 0.1;
        let t = PsiTable::new(&u).unwrap();
        let p = t.profile().clone();
        let (lo, hi) = (-p.max_u + 0.3, -p.min_u - 0.3);
        let z = delta_zeros(&u, eps, lo, hi, 400).unwrap();
        let preds: Vec<f64> = (0..200).filter_map(|n| predict_small(&t, eps, 0.05, n).ok()).collect();
        let inner: Vec<f64> = z.iter().cloned().filter(|l| -l > p.min_u + 0.06 && -l < p.max_u - 0.06).collect();
        assert!(inner.len() > 10);
        for l in inner {
            let d = preds.iter().map(|q| (q - l).abs()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-8, "{name}: zero {l} off by {d:e}");
        }
    }
}
