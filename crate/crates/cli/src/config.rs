use std::path::{Path, PathBuf};

use bolab::potential::TrigPotential;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSpec {
    Preset(String),
    /// `c_1..c_N` as `[re, im]` pairs.
    Coeffs(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Truncation {
    Fixed(usize),
    Auto(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvansOptions {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Matching tolerance between zeros and eigenvalues.
    pub match_tol: f64,
}

impl Default for EvansOptions {
    fn default() -> Self {
        Self { lo: -1.8, hi: 1.8, points: 400, match_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeOptions {
    pub lambda: f64,
    pub nr: usize,
    pub ntheta: usize,
    /// Write the full level grid CSV.
    pub write_grid: bool,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self { lambda: 0.0, nr: 600, ntheta: 1200, write_grid: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BurgersOptions {
    pub grid: usize,
}

impl Default for BurgersOptions {
    fn default() -> Self {
        Self { grid: 512 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    /// Also run the RK4 reference solver.
    pub reference: bool,
    pub dt: f64,
    pub modes: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { reference: false, dt: 1e-4, modes: 128 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportOptions {
    /// Run the suite a second time and compare the outputs byte for byte.
    pub determinism_check: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { determinism_check: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub eps: Vec<f64>,
    pub truncation: Truncation,
    /// Largest eigenvalue the `auto` truncation must resolve.
    pub lambda_target: f64,
    /// Region margin; `null` picks the default from the range of `u`.
    pub delta: Option<f64>,
    pub times: Vec<f64>,
    pub kmax: usize,
    pub evans: EvansOptions,
    pub landscape: LandscapeOptions,
    pub burgers: BurgersOptions,
    pub evolve: EvolveOptions,
    pub report: ReportOptions,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: PotentialSpec::Preset("cosine".into()),
            eps: vec![0.5],
            truncation: Truncation::Auto("auto".into()),
            lambda_target: 10.0,
            delta: None,
            times: vec![0.15, 0.5],
            kmax: 8,
            evans: EvansOptions::default(),
            landscape: LandscapeOptions::default(),
            burgers: BurgersOptions::default(),
            evolve: EvolveOptions::default(),
            report: ReportOptions::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.potential()?;
        if self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err("every eps must be positive and finite".into());
        }
        match &self.truncation {
            Truncation::Auto(s) if s != "auto" => return Err(format!("truncation must be an integer or \"auto\", got {s:?}")),
            Truncation::Fixed(0) => return Err("truncation must be positive".into()),
            _ => {}
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err("delta must be positive".into());
            }
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err("times must be finite and nonnegative".into());
        }
        if !(self.evans.hi > self.evans.lo) || self.evans.points < 3 {
            return Err("evans needs lo < hi and at least 3 points".into());
        }
        if self.landscape.nr < 2 || self.landscape.ntheta < 8 {
            return Err("landscape grid too small".into());
        }
        if self.burgers.grid == 0 {
            return Err("burgers grid must be positive".into());
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<TrigPotential, String> {
        match &self.potential {
            PotentialSpec::Preset(name) => TrigPotential::preset(name).ok_or_else(|| format!("unknown preset {name:?}")),
            PotentialSpec::Coeffs(c) => {
                TrigPotential::new(c.iter().map(|p| Complex64::new(p[0], p[1])).collect()).map_err(|e| e.to_string())
            }
        }
    }

    /// Truncation used at `eps`.
    pub fn truncation_for(&self, u: &TrigPotential, eps: f64) -> usize {
        match self.truncation {
            Truncation::Fixed(m) => m,
            Truncation::Auto(_) => bolab::laxspec::auto_truncation(u, eps, self.lambda_target),
        }
    }
}
