use std::path::{Path, PathBuf};

use bolab::acceptance::{run_suite, Outcome};
use bolab::burgers::{alt_sum_field, CharacteristicMap, DistributionProfile};
use bolab::evans::{scan_zeros, QuadSettings};
use bolab::evolve::{fourier_evolution, reference_integrator, relative_l2, weak_limit_operator, EvolutionState};
use bolab::landscape::{critical_points, level_grid, merge_tree, prune_tree, PolarGrid};
use bolab::laxspec::{gaps_and_sumrule, phase_constants, shift_pairing, spectrum, SpectrumResult};
use bolab::potential::TrigPotential;
use bolab::quantize::{default_delta, predict_small, region_classify, residual_report, PsiTable, Region};
use bolab::landscape::band_values;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub type CmdResult = Result<Value, String>;

/// Collects the files a command writes, relative to the output directory.
pub struct Sink {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, String> {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), String> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        w.write_record(header).map_err(|e| e.to_string())?;
        for r in rows {
            w.write_record(&r).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &Value) -> Result<(), String> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())? + "\n";
        std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        self.files.push(name.into());
        Ok(())
    }
}

fn s(x: impl ToString) -> String {
    x.to_string()
}

fn e(err: bolab::Error) -> String {
    err.to_string()
}

/// File name for the `i`-th member of a ladder.
fn indexed(stem: &str, i: usize, n: usize) -> String {
    if n == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{i}.csv")
    }
}

fn delta_for(cfg: &RunConfig, u: &TrigPotential) -> f64 {
    let (lo, hi) = u.grid_min_max();
    cfg.delta.unwrap_or_else(|| default_delta(lo, hi))
}

fn spectra(cfg: &RunConfig, u: &TrigPotential) -> Result<Vec<SpectrumResult>, String> {
    cfg.eps.iter().map(|&eps| spectrum(u, eps, cfg.truncation_for(u, eps)).map_err(e)).collect()
}

pub fn run_spectrum(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let prof = DistributionProfile::new(&u).ok();
    let delta = delta_for(cfg, &u);
    let mut summary = Vec::new();
    for (i, spec) in spectra(cfg, &u)?.iter().enumerate() {
        let theta = phase_constants(spec);
        let gaps = spec.gaps();
        let pairings = bolab::laxspec::shift_pairings(spec);
        let rows = (0..spec.m).map(|n| {
            vec![
                s(n),
                s(spec.eigenvalues[n]),
                gaps.get(n).map(s).unwrap_or_default(),
                s(theta[n]),
                s(pairings[n].re),
                s(pairings[n].im),
                s(spec.inner_one(n).norm()),
            ]
        });
        let name = indexed("spectrum", i, cfg.eps.len());
        sink.csv(&name, &["n", "lambda", "gap", "theta", "re_pairing", "im_pairing", "abs_inner_1"], rows)?;
        let rule = gaps_and_sumrule(spec, &u).ok();
        let parity = prof.as_ref().map(|p| shift_pairing(spec, p, delta));
        summary.push(json!({
            "eps": spec.eps,
            "m": spec.m,
            "file": name,
            "gauge_fallbacks": spec.gauge_fallbacks,
            "sum_rule": rule.map(|r| json!({"weighted_sum": r.weighted_sum, "target": r.target, "residual": r.residual})),
            "parity": parity.map(|r| json!({"max_im": r.max_im, "max_abs": r.max_abs, "max_step_deviation": r.max_step_deviation, "j": r.j})),
        }));
    }
    let v = json!({ "gauge": bolab::laxspec::GAUGE, "spectra": summary });
    sink.json("spectrum_summary.json", &v)?;
    Ok(v)
}

pub fn run_quantize(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let table = PsiTable::new(&u).map_err(e)?;
    let bands = band_values(&u).map_err(e)?;
    let delta = delta_for(cfg, &u);
    let specs = spectra(cfg, &u)?;
    let (lo, hi) = u.grid_min_max();
    let mut rows = Vec::new();
    for spec in &specs {
        let part = region_classify(spec, lo, hi, delta, &bands);
        for n in part.indices(Region::Small) {
            let pred = predict_small(&table, spec.eps, delta, n).ok();
            rows.push(vec![
                s(spec.eps),
                s(n),
                s(spec.eigenvalues[n]),
                pred.map(s).unwrap_or_default(),
                pred.map(|p| s((p - spec.eigenvalues[n]).abs())).unwrap_or_default(),
            ]);
        }
    }
    sink.csv("predictions.csv", &["eps", "n", "lambda", "predicted", "abs_error"], rows)?;
    let k = -lo + 4.0;
    let rep = if specs.len() >= 3 { Some(residual_report(&table, &specs, delta, &bands, k).map_err(e)?) } else { None };
    if let Some(r) = &rep {
        let small = r.per_eps.iter().flat_map(|p| p.small.iter().map(move |x| vec![s(p.eps), s(x.n), s(x.p), s(x.residual)]));
        sink.csv("residuals_small.csv", &["eps", "n", "p", "residual"], small.collect::<Vec<_>>())?;
        let large = r.per_eps.iter().flat_map(|p| p.large.iter().map(move |x| vec![s(p.eps), s(x.n), s(x.p), s(x.residual)]));
        sink.csv("residuals_large.csv", &["eps", "n", "p", "residual"], large.collect::<Vec<_>>())?;
    }
    let v = json!({
        "delta": delta,
        "bands": bands,
        "k_large": k,
        "small_slope": rep.as_ref().and_then(|r| r.small_slope),
        "large_slope": rep.as_ref().and_then(|r| r.large_slope),
        "max_small": rep.as_ref().map(|r| r.per_eps.iter().map(|p| json!({"eps": p.eps, "small": p.max_small, "large": p.max_large})).collect::<Vec<_>>()),
        "note": if rep.is_none() { Some("residual report needs at least 3 values of eps") } else { None },
    });
    sink.json("quantize.json", &v)?;
    Ok(v)
}

pub fn run_evans(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let o = &cfg.evans;
    let q = QuadSettings::default();
    let mut scan_rows = Vec::new();
    let mut zero_rows = Vec::new();
    let mut summary = Vec::new();
    for spec in spectra(cfg, &u)? {
        let mut scan = scan_zeros(&u, spec.eps, o.lo, o.hi, o.points, &q).map_err(e)?;
        scan.match_eigenvalues(&spec.eigenvalues, o.match_tol);
        for i in 0..scan.lambdas.len() {
            scan_rows.push(vec![s(spec.eps), s(scan.lambdas[i]), s(scan.abs_det[i]), s(scan.err_est[i])]);
        }
        for z in &scan.zeros {
            let status = serde_json::to_value(z.status).map_err(|x| x.to_string())?;
            zero_rows.push(vec![
                s(spec.eps),
                s(z.lambda),
                s(z.abs_det),
                status.as_str().unwrap_or_default().to_string(),
                z.matched.map(s).unwrap_or_default(),
            ]);
        }
        let inside: Vec<f64> = spec.eigenvalues.iter().cloned().filter(|l| *l >= o.lo && *l <= o.hi).collect();
        let accepted = scan.accepted();
        let unmatched = inside.iter().filter(|l| accepted.iter().all(|z| (*z - **l).abs() > o.match_tol)).count();
        summary.push(json!({"eps": spec.eps, "median": scan.median, "accepted": accepted.len(), "eigenvalues": inside.len(), "unmatched_eigenvalues": unmatched}));
    }
    sink.csv("evans_scan.csv", &["eps", "lambda", "abs_det", "err_est"], scan_rows)?;
    sink.csv("evans_zeros.csv", &["eps", "lambda", "abs_det", "status", "matched"], zero_rows)?;
    let v = json!({ "range": [o.lo, o.hi], "points": o.points, "per_eps": summary });
    sink.json("evans.json", &v)?;
    Ok(v)
}

pub fn run_landscape(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let o = &cfg.landscape;
    let mut grid = PolarGrid::for_potential(&u, o.lambda);
    grid.nr = o.nr;
    grid.ntheta = o.ntheta;
    let cps = critical_points(&u, o.lambda).map_err(e)?;
    let rows = cps.roots.iter().map(|z| {
        let loc = match z.norm() {
            r if (r - 1.0).abs() <= bolab::landscape::CIRCLE_TOL => "circle",
            r if r < 1.0 => "inside",
            _ => "outside",
        };
        vec![s(z.re), s(z.im), s(z.norm()), s(z.arg()), loc.to_string()]
    });
    sink.csv("critical_points.csv", &["re", "im", "abs", "arg", "location"], rows.collect::<Vec<_>>())?;
    if o.write_grid {
        let levels = level_grid(&u, o.lambda, &grid);
        let rows = (0..grid.nr).flat_map(|i| {
            let levels = &levels;
            (0..grid.ntheta).map(move |j| vec![s(i), s(j), s(grid.radius(i)), s(grid.angle(j)), s(levels[i * grid.ntheta + j])])
        });
        sink.csv("level_grid.csv", &["i", "j", "r", "theta", "level"], rows.collect::<Vec<_>>())?;
    }
    let tree = merge_tree(&u, o.lambda, Some(grid)).map_err(e)?;
    let pruning = prune_tree(&tree).map_err(e)?;
    sink.json("tree.json", &tree.to_json(Some(&pruning)))?;
    let v = json!({
        "lambda": o.lambda,
        "grid": grid,
        "case": cps.case,
        "leaves": tree.leaf_count(),
        "internal_nodes": tree.internal_count(),
        "pairs": pruning.pairs(),
    });
    Ok(v)
}

pub fn run_burgers(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let prof = DistributionProfile::new(&u).map_err(e)?;
    let mut field = Vec::new();
    let mut fourier = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &cfg.times {
        for f in alt_sum_field(&u, t, cfg.burgers.grid).map_err(e)? {
            field.push(vec![s(f.t), s(f.x), s(f.count), s(f.alt_sum)]);
        }
        let map = CharacteristicMap::new(&u, t).map_err(e)?;
        for k in 1..=cfg.kmax as i64 {
            let a = prof.weak_limit_fourier(t, k).map_err(e)?;
            let b = map.alt_sum_fourier(k).map_err(e)?;
            worst = worst.max((a - b).norm());
            fourier.push(vec![s(t), s(k), s(a.re), s(a.im), s(b.re), s(b.im)]);
        }
    }
    sink.csv("burgers_field.csv", &["t", "x", "branches", "alt_sum"], field)?;
    sink.csv("burgers_fourier.csv", &["t", "k", "re_integral", "im_integral", "re_branches", "im_branches"], fourier)?;
    let v = json!({ "times": cfg.times, "kmax": cfg.kmax, "max_discrepancy": worst });
    sink.json("burgers.json", &v)?;
    Ok(v)
}

fn state_rows(st: &EvolutionState) -> Vec<Vec<String>> {
    let method = serde_json::to_value(st.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    st.coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| vec![s(st.eps), s(st.t), s(k), s(c.re), s(c.im), method.clone()])
        .collect()
}

const STATE_HEADER: [&str; 6] = ["eps", "t", "k", "re", "im", "method"];

pub fn run_evolve(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &eps in &cfg.eps {
        let m = cfg.truncation_for(&u, eps).max(2 * cfg.kmax);
        for &t in &cfg.times {
            let st = fourier_evolution(&u, eps, t, cfg.kmax, m).map_err(e)?;
            rows.extend(state_rows(&st));
            let mut rec = json!({"eps": eps, "t": t, "m": m, "mass": st.mass()});
            if cfg.evolve.reference {
                let r = reference_integrator(&u, eps, t, cfg.evolve.dt, cfg.evolve.modes, cfg.kmax).map_err(e)?;
                rec["relative_l2_vs_reference"] = json!(relative_l2(&st.coeffs, &r.coeffs));
                rec["reference_error_estimate"] = json!(r.error_estimate);
                rows.extend(state_rows(&r));
            }
            summary.push(rec);
        }
    }
    sink.csv("evolve.csv", &STATE_HEADER, rows)?;
    let v = json!({ "runs": summary });
    sink.json("evolve.json", &v)?;
    Ok(v)
}

pub fn run_weaklimit(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let u = cfg.potential()?;
    let prof = DistributionProfile::new(&u).ok();
    let m = match cfg.truncation {
        crate::config::Truncation::Fixed(m) => m,
        crate::config::Truncation::Auto(_) => 512,
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &t in &cfg.times {
        let st = weak_limit_operator(&u, t, cfg.kmax, m).map_err(e)?;
        rows.extend(state_rows(&st));
        let mut worst = None;
        if let Some(p) = &prof {
            let mut w: f64 = 0.0;
            for k in 1..=cfg.kmax {
                w = w.max((st.coeffs[k] - p.weak_limit_fourier(t, k as i64).map_err(e)?).norm());
            }
            worst = Some(w);
        }
        summary.push(json!({"t": t, "m": m, "max_vs_burgers": worst}));
    }
    sink.csv("weaklimit.csv", &STATE_HEADER, rows)?;
    let v = json!({ "runs": summary });
    sink.json("weaklimit.json", &v)?;
    Ok(v)
}

fn suite_json(outcomes: &[Outcome]) -> Value {
    json!(outcomes)
}

pub fn run_report(cfg: &RunConfig, sink: &mut Sink) -> CmdResult {
    let first = suite_json(&run_suite());
    let mut criteria = first.as_array().cloned().unwrap_or_default();
    if cfg.report.determinism_check {
        let a = serde_json::to_vec(&first).map_err(|x| x.to_string())?;
        let b = serde_json::to_vec(&suite_json(&run_suite())).map_err(|x| x.to_string())?;
        let same = a == b;
        criteria.push(json!({
            "id": 15,
            "name": "determinism",
            "pass": same,
            "detail": format!("two in-process runs {} ({} bytes)", if same { "byte-identical" } else { "differ" }, a.len()),
        }));
    }
    let all = criteria.iter().all(|c| c["pass"].as_bool() == Some(true));
    let v = json!({ "all_pass": all, "criteria": criteria });
    sink.json("acceptance.json", &v)?;
    Ok(v)
}
