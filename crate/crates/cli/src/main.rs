use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use tat_cli::experiment::{run_forward, run_geodesic};
use tat_cli::{render_pgm, run_experiment, selftest, ExperimentConfig};
use tat_core::field::read_field;
use tat_core::Variant;

#[derive(Parser)]
#[command(name = "tat", version, about = "Thermoacoustic forward modelling and Neumann-series reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the measurement and write the trace and energy history.
    Forward(ExperimentArgs),
    /// Run the Neumann-series reconstruction.
    Reconstruct(ExperimentArgs),
    /// Trace the ray fan and estimate T0 and T1.
    Geodesic(ExperimentArgs),
    /// Render a .tatf field as a PGM image.
    Render {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, requires = "max", allow_hyphen_values = true)]
        min: Option<f64>,
        #[arg(long, requires = "min", allow_hyphen_values = true)]
        max: Option<f64>,
    },
    /// Run quick consistency checks on random data.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a preset as JSON.
    Config {
        #[arg(long, default_value = "example1")]
        preset: String,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration file; overrides --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "example1")]
    preset: String,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::preset(&self.preset)?,
        };
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(n) = self.terms {
            cfg.n_terms = n;
        }
        if let Some(dir) = &self.out {
            cfg.out_dir = dir.clone();
        }
        if let Some(n) = self.grid {
            cfg.grid = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Forward(args) => {
            let cfg = args.resolve()?;
            let result = run_forward(&cfg)?;
            println!("steps {}", result.trace.nt() - 1);
            println!("dt {:.6e}", result.dt);
            println!("damping_integral {:.6e}", result.damping_integral);
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Reconstruct(args) => {
            let cfg = args.resolve()?;
            let summary = run_experiment(&cfg)?;
            for (m, e) in summary.errors_percent.iter().enumerate() {
                println!("term {:>3}  error {e:.3}%", m + 1);
            }
            println!("t0_estimate {:.6}", summary.geometry.t0);
            println!("t1_estimate {:.6}", summary.geometry.t1);
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Geodesic(args) => {
            let cfg = args.resolve()?;
            let g = run_geodesic(&cfg)?;
            println!("t0_estimate {:.6}", g.t0);
            println!("t1_estimate {:.6}", g.t1);
            if g.t0 >= cfg.solve.t_final {
                println!("warning: T = {} does not exceed the T0 estimate", cfg.solve.t_final);
            }
        }
        Command::Render { input, output, min, max } => {
            let field = read_field(&input)?;
            render_pgm(&field, &output, min.zip(max))?;
        }
        Command::Selftest { seed } => {
            let checks = selftest::run(seed)?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
        Command::Config { preset } => println!("{}", ExperimentConfig::preset(&preset)?.to_json()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

