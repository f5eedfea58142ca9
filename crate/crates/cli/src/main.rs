//! `fumot`: forward solves, synthetic data, reconstructions and experiments.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fumot_core::config::{ExperimentConfig, InitialGuess, Preset};
use fumot_core::experiments;
use fumot_core::io::{read_field, FieldFile};
use fumot_core::{Error, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "fumot", version, about = "Transport-regime fluorescence UMOT solver and reconstructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve all transport problems on the inversion grid and write H, S, psi.
    Forward(Common),
    /// Generate noisy internal data on the fine grid and transfer it to the inversion grid.
    InternalData(Common),
    /// Recover sigma_xf from H by projected L-BFGS.
    ReconstructSigma(Common),
    /// Recover eta from S by CG on the normal equations.
    ReconstructEta {
        #[command(flatten)]
        common: Common,
        /// sigma_xf CSV written by reconstruct-sigma; the true coefficient is used otherwise.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Strong scattering: small data misfit with a large coefficient error.
    Example1(Common),
    /// Two-stage reconstruction with Shepp-Logan sigma_xf and Derenzo eta.
    Example2(Common),
    /// Spot illumination on the disk and recovery on the skeleton.
    SkeletonDemo(Common),
    /// Evaluate the linearized uniqueness conditions.
    CheckConditions(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file overlaid on the preset; its `name` selects the base experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for noise and random initial guesses.
    #[arg(long)]
    seed: Option<u64>,
    /// Single multiplicative noise level, replacing the configured list.
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory; defaults to the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "desk")]
    preset: String,
}

impl Common {
    fn load(&self, default: &str) -> Result<ExperimentConfig> {
        let preset: Preset = self.preset.parse()?;
        let mut cfg = ExperimentConfig::for_experiment(default, preset)?;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            cfg = cfg.merged(&text)?;
            if cfg.name != default {
                cfg = ExperimentConfig::for_experiment(&cfg.name, preset)?.merged(&text)?;
            }
        }
        if let Some(seed) = self.seed {
            cfg.noise.seed = seed;
            if let InitialGuess::Random { seed: s, .. } = &mut cfg.sigma.initial {
                *s = seed;
            }
        }
        if let Some(tau) = self.noise {
            cfg.noise.levels = vec![tau];
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn threads(&self) -> Result<()> {
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

fn to_json<T: serde::Serialize>(v: T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Parse(e.to_string()))
}

fn read_sigma(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<f64>> {
    let file: FieldFile = read_field(path)?;
    experiments::nodal_from_file(&cfg.grid.spatial()?, &file)
}

fn run(cli: Cli) -> Result<Value> {
    let (common, default) = match &cli.command {
        Command::Forward(c) | Command::InternalData(c) | Command::ReconstructSigma(c) => (c, "example2"),
        Command::ReconstructEta { common, .. } => (common, "example2"),
        Command::Example1(c) | Command::CheckConditions(c) => (c, "example1"),
        Command::Example2(c) => (c, "example2"),
        Command::SkeletonDemo(c) => (c, "skeleton-demo"),
    };
    common.threads()?;
    let cfg = common.load(default)?;
    let out = Some(cfg.output.as_path());
    match &cli.command {
        Command::Forward(_) => to_json(experiments::run_forward(&cfg, out)?.0),
        Command::InternalData(_) => to_json(experiments::run_internal_data(&cfg, out)?.0),
        Command::ReconstructSigma(_) => to_json(experiments::run_reconstruct_sigma(&cfg, out)?),
        Command::ReconstructEta { sigma, .. } => {
            let sigma = sigma.as_deref().map(|p| read_sigma(&cfg, p)).transpose()?;
            to_json(experiments::run_reconstruct_eta(&cfg, sigma, out)?)
        }
        Command::Example1(_) => to_json(experiments::run_example1(&cfg, out)?),
        Command::Example2(_) => to_json(experiments::run_example2(&cfg, out)?),
        Command::SkeletonDemo(_) => to_json(experiments::run_skeleton_demo(&cfg, out)?),
        Command::CheckConditions(_) => {
            let report = experiments::run_check_conditions(&cfg, out)?;
            if !report.pass {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
                emit(&serde_json::to_value(&report).unwrap_or_default());
                return Err(Error::Config(format!("linearized uniqueness conditions fail: {}", failed.join(", "))));
            }
            to_json(report)
        }
    }
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn emit(v: &Value) {
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
