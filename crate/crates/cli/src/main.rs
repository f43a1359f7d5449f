//! Command line front end: convergence sweeps, single-level spectra,
//! invariant check suites and mesh reports, configured by a JSON file with
//! flag overrides.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
//! 3 a convergence criterion or check failed.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conlap::harness::{
    build_preset, run_checks, run_convergence, to_csv, to_json, ExperimentConfig, Preset,
};
use conlap::Error;

#[derive(Parser)]
#[command(name = "conlap", about = "Spectra of combinatorial connection Laplacians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mesh refinement sweep and report eigenvalue errors and orders.
    Converge(ExperimentArgs),
    /// Solve the finest configured level and report its spectrum.
    Spectrum(ExperimentArgs),
    /// Run an invariant check suite and report defects.
    Check {
        /// algebra, whitney, decay or all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report mesh quality of the finest configured level.
    Mesh(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated strictly increasing mesh parameters.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    num_eigs: Option<usize>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// json or csv
    #[arg(long, default_value = "json")]
    format: String,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg: ExperimentConfig = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::InvalidInput(format!("cannot read {}: {}", path.display(), e))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::InvalidInput(format!("bad config: {}", e)))?
            }
            None => {
                let preset = self
                    .preset
                    .as_deref()
                    .ok_or_else(|| Error::InvalidInput("--config or --preset required".into()))?;
                let levels = self
                    .levels
                    .clone()
                    .ok_or_else(|| Error::InvalidInput("--levels required".into()))?;
                serde_json::from_value(serde_json::json!({
                    "preset": preset,
                    "levels": levels,
                }))
                .map_err(|e| Error::InvalidInput(format!("bad preset: {}", e)))?
            }
        };
        if let Some(p) = &self.preset {
            cfg.preset = p.parse::<Preset>()?;
        }
        if let Some(l) = &self.levels {
            cfg.levels = l.clone();
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.degree {
            cfg.degree = v;
        }
        if let Some(v) = self.num_eigs {
            cfg.num_eigs = v;
        }
        if let Some(v) = self.quad_order {
            cfg.quad_order = v;
        }
        cfg.validate()?;
        if self.format != "json" && self.format != "csv" {
            return Err(Error::InvalidInput(format!(
                "unknown format '{}'",
                self.format
            )));
        }
        Ok(cfg)
    }

    fn emit(&self, text: &str) -> Result<(), Error> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| {
                Error::InvalidInput(format!("cannot write {}: {}", path.display(), e))
            }),
            None => {
                print!("{}", text);
                Ok(())
            }
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::InvalidInput(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run_experiment(args: &ExperimentArgs, single_level: bool) -> Result<ExitCode, Error> {
    let mut cfg = args.resolve()?;
    if single_level {
        cfg.levels = vec![*cfg.levels.last().unwrap()];
    }
    let report = run_convergence(&cfg)?;
    let text = if args.format == "csv" {
        to_csv(&report)
    } else {
        to_json(&report)
    };
    args.emit(&text)?;
    if !single_level && !report.errors_monotone() {
        eprintln!("convergence criterion failed: errors not monotone across last three levels");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Converge(args) => run_experiment(args, false),
        Command::Spectrum(args) => run_experiment(args, true),
        Command::Check { suite, out } => {
            let report = run_checks(suite)?;
            let mut text =
                serde_json::to_string_pretty(&report).expect("serializable check report");
            text.push('\n');
            match out {
                Some(path) => fs::write(path, &text).map_err(|e| {
                    Error::InvalidInput(format!("cannot write {}: {}", path.display(), e))
                })?,
                None => print!("{}", text),
            }
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("check suite '{}' failed", suite);
                Ok(ExitCode::from(3))
            }
        }
        Command::Mesh(args) => {
            let cfg = args.resolve()?;
            let g = build_preset(cfg.preset, *cfg.levels.last().unwrap())?;
            let mut text = serde_json::to_string_pretty(&g.mesh_report())
                .expect("serializable mesh report");
            text.push('\n');
            args.emit(&text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code(&e)
        }
    }
}
