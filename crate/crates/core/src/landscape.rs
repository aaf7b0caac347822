//! The phase `S_lambda(z) = Q(z) - lambda log z`: critical points, spacing
//! diagnostics, the action identity, sampled landscapes, the merge tree of
//! its superlevel sets and the tree-pruning pairing.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::burgers::DistributionProfile;
use crate::error::{Error, Result};
use crate::potential::TrigPotential;
use crate::roots::poly_roots;

type C64 = Complex64;

pub const CIRCLE_TOL: f64 = 1e-6;

/// `Q(z) - lambda log z` with `arg z` in `(0, 2pi)`.
pub fn eval_s(u: &TrigPotential, lambda: f64, z: C64) -> Result<C64> {
    if z.norm() == 0.0 || (z.im == 0.0 && z.re > 0.0) {
        return Err(Error::OnBranchCut);
    }
    let arg = z.im.atan2(z.re).rem_euclid(TAU);
    Ok(u.eval_q(z)? - C64::new(z.norm().ln(), arg) * lambda)
}

/// `S''(z) = Q''(z) + lambda / z^2`.
pub fn eval_s_second(u: &TrigPotential, lambda: f64, z: C64) -> Result<C64> {
    Ok(u.eval_q_second(z)? + lambda / (z * z))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Small,
    Large,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPointSet {
    pub lambda: f64,
    /// All `2N` roots of `z^N (u(z) + lambda)`.
    pub roots: Vec<C64>,
    /// Roots inside the disk, ordered by argument in `[0, 2pi)`.
    pub inside: Vec<C64>,
    pub outside: Vec<C64>,
    pub p_plus: Option<C64>,
    pub p_minus: Option<C64>,
    pub case: Case,
}

/// Coefficients (ascending) of `z^N (u(z) + lambda)`.
pub fn critical_polynomial(u: &TrigPotential, lambda: f64) -> Vec<C64> {
    let n = u.degree();
    let mut p = vec![C64::new(0.0, 0.0); 2 * n + 1];
    for (i, c) in u.coeffs().iter().enumerate() {
        let k = i + 1;
        p[n + k] += c;
        p[n - k] += c.conj();
    }
    p[n] += lambda;
    p
}

fn by_arg(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.arg().rem_euclid(TAU).total_cmp(&b.arg().rem_euclid(TAU)).then(a.norm().total_cmp(&b.norm()))
}

pub fn critical_points(u: &TrigPotential, lambda: f64) -> Result<CriticalPointSet> {
    let roots = poly_roots(&critical_polynomial(u, lambda))?;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    let mut on = Vec::new();
    for &z in &roots {
        let r = z.norm();
        if (r - 1.0).abs() <= CIRCLE_TOL {
            on.push(z);
        } else if r < 1.0 {
            inside.push(z);
        } else {
            outside.push(z);
        }
    }
    inside.sort_by(by_arg);
    outside.sort_by(by_arg);
    let (case, p_plus, p_minus) = match on.len() {
        0 => (Case::Large, None, None),
        2 => {
            let d0 = u.deriv_torus(on[0].arg(), 1);
            let d1 = u.deriv_torus(on[1].arg(), 1);
            if d0 * d1 >= 0.0 {
                return Err(Error::DegenerateCriticalPoints("on-circle roots on one arc".into()));
            }
            let (pp, pm) = if d0 > 0.0 { (on[0], on[1]) } else { (on[1], on[0]) };
            // project onto the circle; the exact roots have modulus one
            (Case::Small, Some(pp / pp.norm()), Some(pm / pm.norm()))
        }
        k => return Err(Error::DegenerateCriticalPoints(format!("{k} roots on the circle"))),
    };
    Ok(CriticalPointSet { lambda, roots, inside, outside, p_plus, p_minus, case })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpacingReport {
    pub min_pair_distance: f64,
    pub min_abs_inside: Option<f64>,
    pub min_distance_to_pm: Option<f64>,
    /// Real critical values `y = -u(z*)` for zeros `z*` of `u'`.
    pub bands: Vec<f64>,
    /// Two roots closer than `1e-6`.
    pub degenerate: bool,
    /// `lambda` lies within `delta` of a band value.
    pub in_band: bool,
}

/// Real values `-u(z*)` over the zeros of `z^{N+1} u'(z)`.
pub fn band_values(u: &TrigPotential) -> Result<Vec<f64>> {
    let n = u.degree();
    let mut p = vec![C64::new(0.0, 0.0); 2 * n + 1];
    for (i, c) in u.coeffs().iter().enumerate() {
        let k = i + 1;
        p[n + k] += c * k as f64;
        p[n - k] -= c.conj() * k as f64;
    }
    let scale = u.coeff_l1();
    let mut ys: Vec<f64> = Vec::new();
    for z in poly_roots(&p)? {
        let v = u.eval_complex(z)?;
        if v.im.abs() <= 1e-8 * (scale + v.norm()) {
            ys.push(-v.re);
        }
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(ys)
}

pub fn spacing_report(u: &TrigPotential, cps: &CriticalPointSet, delta: f64) -> Result<SpacingReport> {
    let r = &cps.roots;
    let mut min_pair = f64::INFINITY;
    for i in 0..r.len() {
        for j in 0..i {
            min_pair = min_pair.min((r[i] - r[j]).norm());
        }
    }
    let min_abs_inside = cps.inside.iter().map(|z| z.norm()).reduce(f64::min);
    let min_distance_to_pm = match (cps.p_plus, cps.p_minus) {
        (Some(a), Some(b)) => cps.inside.iter().map(|z| (z - a).norm().min((z - b).norm())).reduce(f64::min),
        _ => None,
    };
    let bands = band_values(u)?;
    let in_band = bands.iter().any(|y| (cps.lambda - y).abs() < delta);
    Ok(SpacingReport {
        min_pair_distance: min_pair,
        min_abs_inside,
        min_distance_to_pm,
        bands,
        degenerate: min_pair < 1e-6,
        in_band,
    })
}

fn small_case(cps: &CriticalPointSet) -> Result<(C64, C64)> {
    match (cps.p_plus, cps.p_minus) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::DegenerateCriticalPoints("no roots on the circle".into())),
    }
}

/// `|S''(p)|` against `c_N |p_+ - p_-| prod |p_k - p|^2 / |p_k|` at `p = p_+, p_-`.
pub fn check_s2(u: &TrigPotential, cps: &CriticalPointSet) -> Result<f64> {
    let (pp, pm) = small_case(cps)?;
    let cn = u.coeffs()[u.degree() - 1].norm();
    let mut worst: f64 = 0.0;
    for p in [pp, pm] {
        let direct = eval_s_second(u, cps.lambda, p)?.norm();
        let prod: f64 = cps.inside.iter().map(|q| (q - p).norm_sqr() / q.norm()).product();
        worst = worst.max((direct - cn * (pp - pm).norm() * prod).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct ActionCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
}

/// `S(p_+) - S(p_-)` against `2 i pi A(-lambda)`.
///
/// The left side is `i int_{x_+}^{x_-} (u + lambda) dx`, evaluated through
/// `d/dx Q(e^{ix}) = -i u(x)`, which never touches a logarithm.
pub fn action_integral(u: &TrigPotential, lambda: f64, profile: &DistributionProfile) -> Result<ActionCheck> {
    let eta = -lambda;
    if !(eta > profile.min_u && eta < profile.max_u) {
        return Err(Error::OutOfRegion(format!("-lambda = {eta} outside (min u, max u)")));
    }
    let lhs = action_lhs(u, lambda)?;
    let rhs = C64::new(0.0, TAU * profile.action_tol(eta, 1e-12)?);
    Ok(ActionCheck { lhs, rhs, residual: (lhs - rhs).norm() })
}

/// `S(p_+) - S(p_-) = Q(p_+) - Q(p_-) + i lambda (x_- - x_+)`.
pub fn action_lhs(u: &TrigPotential, lambda: f64) -> Result<C64> {
    let cps = critical_points(u, lambda)?;
    let (pp, pm) = small_case(&cps)?;
    let width = (pm.arg() - pp.arg()).rem_euclid(TAU);
    Ok(u.eval_q(pp)? - u.eval_q(pm)? + C64::new(0.0, lambda * width))
}

/// Polar sampling grid: `nr` log-spaced radii in `[r_min, r_max]`, `ntheta`
/// angles `2 pi j / ntheta`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PolarGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub cap: f64,
}

impl PolarGrid {
    pub fn radius(&self, i: usize) -> f64 {
        if self.nr == 1 {
            return self.r_max;
        }
        self.r_min * (self.r_max / self.r_min).powf(i as f64 / (self.nr - 1) as f64)
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.ntheta as f64
    }

    /// Default `600 x 1200` grid on `r_min <= |z| <= 1`.
    pub fn for_potential(u: &TrigPotential, lambda: f64) -> Self {
        Self { nr: 600, ntheta: 1200, r_min: inner_radius(u, lambda), r_max: 1.0, cap: 1e3 }
    }
}

/// Radius below which the `z^{-N}` term of `Q` dominates the rest tenfold.
pub fn inner_radius(u: &TrigPotential, lambda: f64) -> f64 {
    let n = u.degree();
    let cn = u.coeffs()[n - 1].norm();
    let ratio = |r: f64| {
        let lead = cn / (n as f64 * r.powi(n as i32));
        let rest: f64 = u.coeffs()[..n - 1]
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() / (i + 1) as f64 * (r.powi(-(i as i32 + 1)) + r.powi(i as i32 + 1)))
            .sum::<f64>()
            + cn * r.powi(n as i32) / n as f64
            + lambda.abs() * r.ln().abs();
        lead / rest.max(1e-300)
    };
    let (mut lo, mut hi) = (1e-8f64.ln(), 0.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid.exp()) >= 10.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// Clamped `Re S` on the grid, row-major by radius; the ring `|z| = 1` is
/// set to exactly zero.
pub fn level_grid(u: &TrigPotential, lambda: f64, g: &PolarGrid) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..g.nr)
        .into_par_iter()
        .map(|i| {
            let r = g.radius(i);
            (0..g.ntheta)
                .map(|j| {
                    if (r - 1.0).abs() < 1e-15 {
                        return 0.0;
                    }
                    let z = C64::from_polar(r, g.angle(j));
                    let v = u.eval_q(z).map(|q| q.re).unwrap_or(f64::INFINITY) - lambda * r.ln();
                    if v.is_nan() {
                        g.cap
                    } else {
                        v.clamp(-g.cap, g.cap)
                    }
                })
                .collect()
        })
        .collect();
    rows.concat()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Leaf,
    Merge,
    Continent,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeNode {
    pub id: usize,
    pub kind: NodeKind,
    /// Mountain index `k` (ray `arg = 2 k pi / N`) for leaves.
    pub label: Option<usize>,
    pub level: f64,
    pub children: Vec<usize>,
    /// Matched critical point and its `Re S`, for internal nodes.
    pub saddle: Option<[f64; 2]>,
    pub saddle_value: Option<f64>,
    /// Grid position of the merge event.
    pub position: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MergeTree {
    pub n: usize,
    pub case: Case,
    pub nodes: Vec<TreeNode>,
    pub root: usize,
    pub continent: usize,
}

impl MergeTree {
    /// Builds a tree from nodes; checks the shape expected of a landscape tree.
    pub fn from_nodes(n: usize, case: Case, nodes: Vec<TreeNode>) -> Result<Self> {
        let mut parent = vec![None; nodes.len()];
        for nd in &nodes {
            for &c in &nd.children {
                if c >= nodes.len() || parent[c].is_some() {
                    return Err(Error::MalformedTree(format!("bad child {c}")));
                }
                parent[c] = Some(nd.id);
            }
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::MalformedTree(format!("{} roots", roots.len())));
        }
        let leaves = nodes.iter().filter(|x| x.kind == NodeKind::Leaf).count();
        let cont: Vec<usize> = nodes.iter().filter(|x| x.kind == NodeKind::Continent).map(|x| x.id).collect();
        if leaves != n || cont.len() != 1 || nodes.len() != 2 * n {
            return Err(Error::MalformedTree(format!(
                "{leaves} leaves, {} continent nodes, {} nodes for N = {n}",
                cont.len(),
                nodes.len()
            )));
        }
        for nd in &nodes {
            let want = match nd.kind {
                NodeKind::Leaf => 0,
                NodeKind::Merge => 2,
                NodeKind::Continent => 1,
            };
            if nd.children.len() != want {
                return Err(Error::MalformedTree(format!("node {} has {} children", nd.id, nd.children.len())));
            }
        }
        Ok(Self { n, case, root: roots[0], continent: cont[0], nodes })
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|x| x.kind == NodeKind::Leaf).count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    pub fn to_json(&self, pruning: Option<&Pruning>) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "case": self.case,
            "root": self.root,
            "continent": self.continent,
            "nodes": self.nodes,
            "pruning": pruning,
        })
    }
}

struct Dsu {
    parent: Vec<u32>,
    /// unwrapped angular offset relative to the parent
    off: Vec<i64>,
}

impl Dsu {
    fn find(&mut self, x: usize) -> (usize, i64) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] as usize != cur {
            path.push(cur);
            cur = self.parent[cur] as usize;
        }
        let root = cur;
        // compress from the top down, accumulating offsets
        let mut acc = 0;
        for &node in path.iter().rev() {
            acc += self.off[node];
            self.off[node] = acc;
            self.parent[node] = root as u32;
        }
        (root, if x == root { 0 } else { self.off[x] })
    }
}

struct Event {
    node: usize,
    cell: usize,
}

/// Superlevel-set merge tree of `Re S` for the potential rotated so that
/// `c_N > 0`. Leaves are the mountains along `arg = 2 k pi / N`.
pub fn merge_tree(u: &TrigPotential, lambda: f64, grid: Option<PolarGrid>) -> Result<MergeTree> {
    let v = u.normalized();
    let cps = critical_points(&v, lambda)?;
    let spacing = spacing_report(&v, &cps, 0.0)?;
    if spacing.degenerate {
        return Err(Error::DegenerateCriticalPoints(format!(
            "root separation {:e}",
            spacing.min_pair_distance
        )));
    }
    let g = grid.unwrap_or_else(|| PolarGrid::for_potential(&v, lambda));
    if (g.r_max - 1.0).abs() > 1e-15 {
        return Err(Error::InvalidParameter("merge tree grid must end on the unit circle".into()));
    }
    let vals = level_grid(&v, lambda, &g);
    let (nr, nt) = (g.nr, g.ntheta);
    let n = v.degree();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));

    let mut dsu = Dsu { parent: (0..vals.len() as u32).collect(), off: vec![0; vals.len()] };
    let mut active = vec![false; vals.len()];
    let mut comp_node: Vec<Option<usize>> = vec![None; vals.len()];
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut continent: Option<usize> = None;

    for &c in &order {
        let (i, j) = (c / nt, c % nt);
        active[c] = true;
        let touches_leaf = [i * nt + (j + 1) % nt, i * nt + (j + nt - 1) % nt, (i + 1).min(nr - 1) * nt + j]
            .into_iter()
            .any(|nb| nb != c && active[nb] && comp_node[dsu.find(nb).0].is_some());
        if i == 0 && !touches_leaf {
            let id = nodes.len();
            nodes.push(TreeNode {
                id,
                kind: NodeKind::Leaf,
                label: None,
                level: vals[c],
                children: vec![],
                saddle: None,
                saddle_value: None,
                position: Some([g.radius(0), g.angle(j)]),
            });
            comp_node[c] = Some(id);
        }
        let mut nbrs = vec![(i * nt + (j + 1) % nt, 1i64), (i * nt + (j + nt - 1) % nt, -1)];
        if i > 0 {
            nbrs.push(((i - 1) * nt + j, 0));
        }
        if i + 1 < nr {
            nbrs.push(((i + 1) * nt + j, 0));
        }
        for (nb, step) in nbrs {
            if !active[nb] {
                continue;
            }
            let (rc, oc) = dsu.find(c);
            let (rn, on) = dsu.find(nb);
            if rc == rn {
                if oc + step - on != 0 && continent.is_none() {
                    if let Some(child) = comp_node[rc] {
                        let id = nodes.len();
                        nodes.push(TreeNode {
                            id,
                            kind: NodeKind::Continent,
                            label: None,
                            level: vals[c],
                            children: vec![child],
                            saddle: None,
                            saddle_value: None,
                            position: Some([g.radius(i), g.angle(j)]),
                        });
                        comp_node[rc] = Some(id);
                        continent = Some(id);
                        events.push(Event { node: id, cell: c });
                    }
                }
                continue;
            }
            let merged = match (comp_node[rc], comp_node[rn]) {
                (Some(a), Some(b)) if vals[c] < g.cap => {
                    let id = nodes.len();
                    nodes.push(TreeNode {
                        id,
                        kind: NodeKind::Merge,
                        label: None,
                        level: vals[c],
                        children: vec![a.min(b), a.max(b)],
                        saddle: None,
                        saddle_value: None,
                        position: Some([g.radius(i), g.angle(j)]),
                    });
                    events.push(Event { node: id, cell: c });
                    Some(id)
                }
                // plateau of clamped cells: the two pieces are one mountain
                (Some(a), Some(b)) => {
                    let keep = a.min(b);
                    let drop = a.max(b);
                    nodes[drop].label = Some(usize::MAX);
                    Some(keep)
                }
                (a, b) => a.or(b),
            };
            dsu.parent[rn] = rc as u32;
            dsu.off[rn] = oc + step - on;
            comp_node[rc] = merged;
        }
    }
    let continent = continent.ok_or_else(|| Error::GridTooCoarse("no continent event".into()))?;

    // drop leaves that were absorbed in a clamped plateau and renumber
    let keep: Vec<bool> = nodes.iter().map(|x| x.label != Some(usize::MAX)).collect();
    let mut new_id = vec![usize::MAX; nodes.len()];
    let mut k = 0;
    for (i, &kp) in keep.iter().enumerate() {
        if kp {
            new_id[i] = k;
            k += 1;
        }
    }
    let mut out: Vec<TreeNode> = nodes
        .into_iter()
        .filter(|x| x.label != Some(usize::MAX))
        .map(|mut x| {
            x.id = new_id[x.id];
            x.children = x.children.iter().map(|&c| new_id[c]).collect();
            x
        })
        .collect();
    // leaf labels from the ray of the birth cell
    let mut seen = vec![false; n + 1];
    for x in out.iter_mut().filter(|x| x.kind == NodeKind::Leaf) {
        let theta = x.position.expect("leaves carry a position")[1];
        let mut lab = ((theta * n as f64 / TAU).round() as usize) % n;
        if lab == 0 {
            lab = n;
        }
        if seen[lab] {
            return Err(Error::GridTooCoarse(format!("two mountains on ray {lab}")));
        }
        seen[lab] = true;
        x.label = Some(lab);
    }
    match_saddles(&v, &cps, &g, &vals, &events, &new_id, &mut out)?;
    let continent = new_id[continent];
    MergeTree::from_nodes(n, cps.case, out).map(|mut t| {
        t.continent = continent;
        t
    })
}

fn match_saddles(
    v: &TrigPotential,
    cps: &CriticalPointSet,
    g: &PolarGrid,
    vals: &[f64],
    events: &[Event],
    new_id: &[usize],
    nodes: &mut [TreeNode],
) -> Result<()> {
    let nt = g.ntheta;
    let mut cands: Vec<(C64, f64)> =
        cps.inside.iter().map(|&p| (p, eval_s(v, cps.lambda, p).map(|s| s.re).unwrap_or(f64::NAN))).collect();
    if let (Some(a), Some(b)) = (cps.p_plus, cps.p_minus) {
        cands.push((a, 0.0));
        cands.push((b, 0.0));
    }
    let mut used = vec![false; cands.len()];
    for ev in events {
        let (i, j) = (ev.cell / nt, ev.cell % nt);
        let mut spread: f64 = 0.0;
        let mut nb = vec![i * nt + (j + 1) % nt, i * nt + (j + nt - 1) % nt];
        if i > 0 {
            nb.push((i - 1) * nt + j);
        }
        if i + 1 < g.nr {
            nb.push((i + 1) * nt + j);
        }
        for c in nb {
            spread = spread.max((vals[c] - vals[ev.cell]).abs());
        }
        let tol = 3.0 * spread + 1e-9;
        let pos = C64::from_polar(g.radius(i), g.angle(j));
        let level = vals[ev.cell];
        let best = (0..cands.len())
            .filter(|&k| !used[k] && (cands[k].1 - level).abs() <= tol)
            .min_by(|&a, &b| (cands[a].0 - pos).norm().total_cmp(&(cands[b].0 - pos).norm()));
        let Some(k) = best else {
            return Err(Error::GridTooCoarse(format!("merge at level {level} has no saddle within {tol:e}")));
        };
        used[k] = true;
        // p_+ and p_- form one event
        if cands[k].1 == 0.0 && cps.p_plus.is_some() {
            for (m, c) in cands.iter().enumerate() {
                if c.1 == 0.0 {
                    used[m] = true;
                }
            }
        }
        let node = &mut nodes[new_id[ev.node]];
        node.saddle = Some([cands[k].0.re, cands[k].0.im]);
        node.saddle_value = Some(cands[k].1);
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct PruneStep {
    pub node: usize,
    /// Label of the pruned leaf.
    pub leaf: usize,
    /// Labels of leaves pruned so far that descend from `node`.
    pub encircled: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pruning {
    pub steps: Vec<PruneStep>,
    /// The leaf left in the subtree under the continent node.
    pub survivor: usize,
    pub continent: usize,
}

impl Pruning {
    /// Pruned leaves together with the survivor, each paired with a node.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut p: Vec<(usize, usize)> = self.steps.iter().map(|s| (s.leaf, s.node)).collect();
        p.push((self.survivor, self.continent));
        p
    }
}

/// Rep of a subtree: a leaf label or the continent placeholder.
#[derive(Clone, Copy, PartialEq)]
enum Rep {
    Leaf(usize),
    Continent,
}

/// Pruning of both subtrees: the one under the continent node and the one
/// above it, where the continent node acts as a leaf that is never pruned.
/// At every binary node the leaf with the smaller label is removed.
pub fn prune_tree(tree: &MergeTree) -> Result<Pruning> {
    let nodes = &tree.nodes;
    let cont = tree.continent;
    let mut rep: Vec<Option<Rep>> = vec![None; nodes.len()];
    for nd in nodes.iter().filter(|x| x.kind == NodeKind::Leaf) {
        rep[nd.id] = Some(Rep::Leaf(nd.label.ok_or_else(|| Error::MalformedTree("unlabelled leaf".into()))?));
    }
    let mut order: Vec<usize> = nodes.iter().filter(|x| x.kind != NodeKind::Leaf).map(|x| x.id).collect();
    order.sort_by(|&a, &b| nodes[b].level.total_cmp(&nodes[a].level).then(a.cmp(&b)));
    let mut steps = Vec::new();
    let mut pruned_at: Vec<(usize, usize)> = Vec::new(); // (leaf label, leaf node id)
    let mut survivor = None;
    // children are always processed before parents in the order above,
    // except for ties which are resolved by checking readiness
    let mut pending = order;
    while !pending.is_empty() {
        let pos = pending
            .iter()
            .position(|&id| nodes[id].children.iter().all(|&c| rep[c].is_some()))
            .ok_or_else(|| Error::MalformedTree("cycle".into()))?;
        let id = pending.remove(pos);
        let nd = &nodes[id];
        if nd.kind == NodeKind::Continent {
            match rep[nd.children[0]] {
                Some(Rep::Leaf(l)) => survivor = Some(l),
                _ => return Err(Error::MalformedTree("continent above continent".into())),
            }
            rep[id] = Some(Rep::Continent);
            continue;
        }
        let (a, b) = (rep[nd.children[0]].unwrap(), rep[nd.children[1]].unwrap());
        let (cut, keep) = match (a, b) {
            (Rep::Continent, Rep::Leaf(l)) | (Rep::Leaf(l), Rep::Continent) => (l, Rep::Continent),
            (Rep::Leaf(x), Rep::Leaf(y)) => (x.min(y), Rep::Leaf(x.max(y))),
            _ => return Err(Error::MalformedTree("two continents".into())),
        };
        let leaf_node = nodes
            .iter()
            .find(|x| x.label == Some(cut))
            .map(|x| x.id)
            .ok_or_else(|| Error::MalformedTree("missing leaf".into()))?;
        pruned_at.push((cut, leaf_node));
        let encircled: Vec<usize> = pruned_at
            .iter()
            .filter(|(_, ln)| descends(nodes, id, *ln, cont))
            .map(|(l, _)| *l)
            .collect();
        steps.push(PruneStep { node: id, leaf: cut, encircled });
        rep[id] = Some(keep);
    }
    let survivor = survivor.ok_or_else(|| Error::MalformedTree("no continent".into()))?;
    Ok(Pruning { steps, survivor, continent: cont })
}

/// Whether `target` lies below `top` without passing through `stop`
/// (unless `top` is `stop` itself).
fn descends(nodes: &[TreeNode], top: usize, target: usize, stop: usize) -> bool {
    if top == target {
        return true;
    }
    nodes[top].children.iter().any(|&c| c != stop && descends(nodes, c, target, stop))
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaFactor {
    pub delta: C64,
    /// The unimodular second term of `delta`.
    pub phase: C64,
    pub p_abs: f64,
    pub psi: f64,
}

/// `Delta = 1 - e^{-2 i pi psi + (S(p_+) - S(p_-))/eps}` and the magnitude of
/// the saddle prefactor `|P| = |det V| / (|S''(p_+)|^(1/2) prod_k |S''(p_k)|^(1/2))`,
/// where `V` is the Vandermonde matrix in `1/p` of `p_1, .., p_{N-1}, p_+`
/// with the exponential weights removed.
pub fn delta_factor(
    u: &TrigPotential,
    profile: &DistributionProfile,
    lambda: f64,
    eps: f64,
    cps: &CriticalPointSet,
) -> Result<DeltaFactor> {
    let (pp, _) = small_case(cps)?;
    let psi = crate::quantize::psi_general(u, profile, cps)?;
    let diff = action_lhs(u, lambda)?;
    let phase = crate::quantize::quantization_phase(diff, psi, eps);
    let mut pts: Vec<C64> = cps.inside.clone();
    pts.push(pp);
    let n = u.degree() as i32;
    let mut det = 1.0;
    for k in 0..pts.len() {
        for j in 0..k {
            det *= (pts[k] - pts[j]).norm();
        }
        det *= pts[k].norm().powi(-(n + 1));
    }
    let mut denom = eval_s_second(u, lambda, pp)?.norm().sqrt();
    for p in &cps.inside {
        denom *= eval_s_second(u, lambda, *p)?.norm().sqrt();
    }
    Ok(DeltaFactor { delta: C64::new(1.0, 0.0) - phase, phase, p_abs: det / denom, psi })
}

/// Zeros of `Delta` in `[lo, hi]`: sign changes of `arg` of the phase on a
/// uniform grid away from the cut at `pi`, refined by bisection.
pub fn delta_zeros(u: &TrigPotential, eps: f64, lo: f64, hi: f64, grid: usize) -> Result<Vec<f64>> {
    let profile = DistributionProfile::new(u)?;
    let arg_at = |lambda: f64| -> Result<f64> {
        let cps = critical_points(u, lambda)?;
        Ok(delta_factor(u, &profile, lambda, eps, &cps)?.phase.arg())
    };
    let xs: Vec<f64> = (0..=grid).map(|i| lo + (hi - lo) * i as f64 / grid as f64).collect();
    let args = xs.iter().map(|&x| arg_at(x)).collect::<Result<Vec<f64>>>()?;
    let mut zeros = Vec::new();
    for i in 0..grid {
        let (a, b) = (args[i], args[i + 1]);
        if a.signum() == b.signum() || (a - b).abs() > PI_CUT {
            continue;
        }
        let (mut l, mut r, mut fl) = (xs[i], xs[i + 1], a);
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m == l || m == r {
                break;
            }
            let fm = arg_at(m)?;
            if fm.signum() == fl.signum() {
                l = m;
                fl = fm;
            } else {
                r = m;
            }
        }
        zeros.push(0.5 * (l + r));
    }
    Ok(zeros)
}

/// Jumps of the principal argument larger than this are branch wraps.
const PI_CUT: f64 = 3.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine() -> TrigPotential {
        TrigPotential::preset("cosine").unwrap()
    }

    #[test]
    fn phase_values() {
        let u = cosine();
        let d = eval_s(&u, 0.0, C64::new(0.0, 1.0)).unwrap() - eval_s(&u, 0.0, C64::new(0.0, -1.0)).unwrap();
        assert!((d - C64::new(0.0, 4.0)).norm() < 1e-14);
        assert_eq!(eval_s(&u, 0.3, C64::new(2.0, 0.0)), Err(Error::OnBranchCut));
        for x in [0.3, 2.0, 4.0] {
            assert!(eval_s(&u, 0.7, C64::from_polar(1.0, x)).unwrap().re.abs() < 1e-13);
        }
    }

    #[test]
    fn cosine_critical_points() {
        let u = cosine();
        let c = critical_points(&u, 0.0).unwrap();
        assert_eq!(c.case, Case::Small);
        assert!((c.p_plus.unwrap() - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((c.p_minus.unwrap() - C64::new(0.0, -1.0)).norm() < 1e-12);
        let l = critical_points(&u, 3.0).unwrap();
        assert_eq!(l.case, Case::Large);
        let s5 = 5f64.sqrt();
        assert!((l.inside[0] - C64::new((3.0 - s5) / 2.0, 0.0)).norm() < 1e-12);
        assert!((l.outside[0] - C64::new((3.0 + s5) / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cosine_bands_and_spacing() {
        let u = cosine();
        let c = critical_points(&u, 0.0).unwrap();
        let s = spacing_report(&u, &c, 0.2).unwrap();
        assert_eq!(s.bands.len(), 2);
        assert!((s.bands[0] + 2.0).abs() < 1e-12 && (s.bands[1] - 2.0).abs() < 1e-12);
        assert!(s.min_pair_distance >= 0.5 && !s.degenerate && !s.in_band);
    }

    #[test]
    fn double_root_is_flagged() {
        let u = cosine();
        // lambda = 2: u + 2 = -(z - 1)^2 / z
        let c = critical_points(&u, 2.0 - 1e-14);
        match c {
            Ok(c) => {
                let s = spacing_report(&u, &c, 0.1).unwrap();
                assert!(s.degenerate && s.in_band);
            }
            Err(Error::DegenerateCriticalPoints(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn second_derivative_identity_cosine() {
        let u = cosine();
        let c = critical_points(&u, 0.0).unwrap();
        assert!(check_s2(&u, &c).unwrap() <= 1e-10);
        assert!((eval_s_second(&u, 0.0, C64::new(0.0, 1.0)).unwrap().norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn action_cosine() {
        let u = cosine();
        let p = DistributionProfile::new(&u).unwrap();
        let a = action_integral(&u, 0.0, &p).unwrap();
        assert!((a.lhs - C64::new(0.0, 4.0)).norm() < 1e-12);
        assert!(a.residual <= 1e-8);
        let edge = action_integral(&u, -2.0 + 1e-6, &p).unwrap();
        assert!(edge.lhs.norm() < 1e-6 && edge.rhs.norm() < 1e-6);
    }

    #[test]
    fn star_tree_pruning() {
        let leaf = |id, label| TreeNode {
            id,
            kind: NodeKind::Leaf,
            label: Some(label),
            level: 10.0,
            children: vec![],
            saddle: None,
            saddle_value: None,
            position: None,
        };
        let inner = |id, kind, level, children| TreeNode {
            id,
            kind,
            label: None,
            level,
            children,
            saddle: None,
            saddle_value: None,
            position: None,
        };
        let nodes = vec![
            leaf(0, 1),
            leaf(1, 2),
            inner(2, NodeKind::Merge, 1.0, vec![0, 1]),
            inner(3, NodeKind::Continent, 0.0, vec![2]),
        ];
        let t = MergeTree::from_nodes(2, Case::Small, nodes).unwrap();
        let p = prune_tree(&t).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!((p.steps[0].leaf, p.steps[0].node), (1, 2));
        assert_eq!(p.survivor, 2);
    }
}
