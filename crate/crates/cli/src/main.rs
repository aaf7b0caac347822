mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::json;

use commands::Sink;
use config::{PotentialSpec, RunConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Spectrum,
    Quantize,
    Evans,
    Landscape,
    Burgers,
    Evolve,
    Weaklimit,
    Report,
}

/// Numerical experiments on the Benjamin-Ono Lax spectrum and its
/// zero-dispersion limit.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    command: Command,
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Potential preset, overriding the config.
    #[arg(long)]
    preset: Option<String>,
}

const EXIT_COMPUTE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn resolve(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.preset {
        cfg.potential = PotentialSpec::Preset(p.clone());
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
        eprintln!("config error: {err}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut sink = match Sink::new(&cfg.out) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_COMPUTE);
        }
    };
    let run = match args.command {
        Command::Spectrum => commands::run_spectrum,
        Command::Quantize => commands::run_quantize,
        Command::Evans => commands::run_evans,
        Command::Landscape => commands::run_landscape,
        Command::Burgers => commands::run_burgers,
        Command::Evolve => commands::run_evolve,
        Command::Weaklimit => commands::run_weaklimit,
        Command::Report => commands::run_report,
    };
    let result = run(&cfg, &mut sink);
    let u = cfg.potential().expect("validated");
    let truncation: Vec<_> = cfg.eps.iter().map(|&e| json!({"eps": e, "m": cfg.truncation_for(&u, e)})).collect();
    let command = format!("{:?}", args.command).to_lowercase();
    let mut manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": bolab::VERSION,
        "command": command,
        "config": cfg,
        "potential": u.to_json(),
        "truncation": truncation,
    });
    let code = match &result {
        Ok(summary) => {
            manifest["status"] = json!("ok");
            manifest["summary"] = summary.clone();
            0
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            manifest["status"] = json!("error");
            manifest["error"] = json!(msg);
            EXIT_COMPUTE
        }
    };
    manifest["files"] = json!(sink.files);
    if let Err(msg) = sink.json("manifest.json", &manifest) {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_COMPUTE);
    }
    if code == 0 {
        if let Command::Report = args.command {
            if result.as_ref().ok().and_then(|v| v["all_pass"].as_bool()) == Some(false) {
                eprintln!("some acceptance criteria failed; see acceptance.json");
            }
        }
    }
    ExitCode::from(code)
}
