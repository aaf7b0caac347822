use bolab::burgers::DistributionProfile;
use bolab::landscape::{critical_points, prune_tree, Case, MergeTree, NodeKind, TreeNode};
use bolab::laxspec::{assemble_lax, eigensolve, gaps_and_sumrule, spectrum};
use bolab::potential::TrigPotential;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn coeffs(max_n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=max_n).prop_filter_map("nonzero leading", |v| {
        let c: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        (c.last().unwrap().norm() > 0.05).then_some(c)
    })
}

fn node(id: usize, kind: NodeKind, label: Option<usize>, level: f64, children: Vec<usize>) -> TreeNode {
    TreeNode { id, kind, label, level, children, saddle: None, saddle_value: None, position: None }
}

/// Merges random pairs of components at decreasing levels; the continent
/// wraps one leaf-only component at a random step.
fn random_tree(n: usize, perm: &[usize], picks: &[(usize, usize)], cont_step: usize) -> MergeTree {
    let mut nodes: Vec<TreeNode> = (0..n).map(|i| node(i, NodeKind::Leaf, Some(perm[i]), 0.0, vec![])).collect();
    // (top node id, contains continent)
    let mut active: Vec<(usize, bool)> = (0..n).map(|i| (i, false)).collect();
    let mut level = -1.0;
    let mut placed = false;
    for step in 0..n {
        if step == cont_step.min(n - 1) && !placed {
            let k = picks[step].0 % active.len();
            let id = nodes.len();
            nodes.push(node(id, NodeKind::Continent, None, level, vec![active[k].0]));
            active[k] = (id, true);
            placed = true;
            level -= 1.0;
        }
        if active.len() == 1 {
            break;
        }
        let a = picks[step].0 % active.len();
        let (ta, ca) = active.remove(a);
        let b = picks[step].1 % active.len();
        let (tb, cb) = active.remove(b);
        let id = nodes.len();
        nodes.push(node(id, NodeKind::Merge, None, level, vec![ta, tb]));
        active.push((id, ca || cb));
        level -= 1.0;
    }
    MergeTree::from_nodes(n, Case::Small, nodes).unwrap()
}

fn is_ancestor(tree: &MergeTree, top: usize, x: usize) -> bool {
    top == x || tree.nodes[top].children.iter().any(|&c| is_ancestor(tree, c, x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pruning_is_a_bijection(
        n in 1usize..12,
        seed in prop::collection::vec(any::<u32>(), 12),
        picks in prop::collection::vec((any::<usize>(), any::<usize>()), 12),
        cont_step in 0usize..12,
    ) {
        let mut perm: Vec<usize> = (1..=n).collect();
        for i in (1..n).rev() {
            perm.swap(i, seed[i] as usize % (i + 1));
        }
        let tree = random_tree(n, &perm, &picks, cont_step);
        let pr = prune_tree(&tree).unwrap();
        let pairs = pr.pairs();
        let mut leaves: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut internal: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        leaves.sort();
        internal.sort();
        prop_assert_eq!(leaves, (1..=n).collect::<Vec<_>>());
        let mut expect: Vec<usize> = tree.nodes.iter().filter(|x| x.kind != NodeKind::Leaf).map(|x| x.id).collect();
        expect.sort();
        prop_assert_eq!(internal, expect);
        for (label, nd) in pairs {
            let leaf = tree.nodes.iter().find(|x| x.label == Some(label)).unwrap().id;
            prop_assert!(is_ancestor(&tree, nd, leaf));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lax_spectrum_residuals(c in coeffs(3), eps in 0.2f64..1.0) {
        let u = TrigPotential::new(c).unwrap();
        let h = assemble_lax(&u, eps, 48).unwrap();
        prop_assert_eq!(h.hermiticity_residual(), 0.0);
        let s = eigensolve(&h).unwrap();
        let bound = 1e-10 * (eps * 48.0 + 2.0 * u.sup_norm());
        prop_assert!(s.max_residual(&h) <= bound);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.eigenvalues[0] >= -u.sup_norm() - 1e-9);
    }

    #[test]
    fn sum_rule_holds(c in coeffs(2), eps in 0.3f64..1.0) {
        let u = TrigPotential::new(c).unwrap();
        let m = ((4.0 * u.sup_norm() / eps).ceil() as usize + 64).max(128);
        let s = spectrum(&u, eps, m).unwrap();
        let r = gaps_and_sumrule(&s, &u).unwrap();
        prop_assert!(r.residual <= 1e-8 * (1.0 + r.target));
    }

    /// Roots reach the unit circle exactly when `-lambda` is a value of `u`.
    #[test]
    fn circle_roots_iff_in_range(c in coeffs(3), t in -1.5f64..1.5) {
        let u = TrigPotential::new(c).unwrap();
        let (lo, hi) = u.grid_min_max();
        let eta = 0.5 * (lo + hi) + t * 0.5 * (hi - lo);
        prop_assume!((eta - lo).abs() > 1e-2 * (hi - lo) && (eta - hi).abs() > 1e-2 * (hi - lo));
        let cps = critical_points(&u, -eta);
        prop_assume!(cps.is_ok());
        let cps = cps.unwrap();
        let on = cps.roots.len() - cps.inside.len() - cps.outside.len();
        prop_assert_eq!(on > 0, eta > lo && eta < hi);
        prop_assert_eq!(cps.inside.len(), cps.outside.len());
        // roots come in pairs p, 1/conj(p)
        for p in &cps.inside {
            let q = C64::new(1.0, 0.0) / p.conj();
            prop_assert!(cps.outside.iter().any(|r| (r - q).norm() < 1e-6 * q.norm()));
        }
    }

    /// `2 pi F(eta)` is the measure of `{u >= eta}`.
    #[test]
    fn distribution_matches_grid_count(a in 0.3f64..2.0, t in -0.9f64..0.9) {
        let u = TrigPotential::from_real(&[-a]).unwrap();
        let p = DistributionProfile::new(&u).unwrap();
        let eta = t * 2.0 * a;
        let n = 1 << 14;
        let count = u.sample(n).iter().filter(|v| **v >= eta).count();
        prop_assert!((p.f(eta) - count as f64 / n as f64).abs() <= 2.0 / n as f64);
    }
}

#[test]
fn circle_case_classification() {
    let u = TrigPotential::preset("cosine").unwrap();
    assert_eq!(critical_points(&u, 0.5).unwrap().case, Case::Small);
    assert_eq!(critical_points(&u, 3.0).unwrap().case, Case::Large);
}
