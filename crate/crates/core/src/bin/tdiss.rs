use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torus_dissipation::cli::{self, Command, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "tdiss", version, about = "Dissipation times of noisy maps on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and JSON artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: logical cores, or run.jobs).
    #[arg(long)]
    jobs: Option<usize>,
    /// Run a single eps instead of the configured grid.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Norm curves ||T^n|| and their coarse analogue.
    Norms(Common),
    /// Dissipation times and rate fits.
    Dissipation(Common),
    /// Distance from the pseudospectrum to circles of given radius.
    Pseudospectrum(Common),
    /// Correlation series of the configured observables.
    Correlations(Common),
    /// Upper and lower bounds around the dissipation time.
    Bounds(Common),
    /// Every analysis enabled in the configuration.
    Sweep(Common),
    /// Closed-form oracle checks.
    Selftest,
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (cmd, common) = match args.command {
        Sub::Norms(c) => (Command::Norms, c),
        Sub::Dissipation(c) => (Command::Dissipation, c),
        Sub::Pseudospectrum(c) => (Command::Pseudospectrum, c),
        Sub::Correlations(c) => (Command::Correlations, c),
        Sub::Bounds(c) => (Command::Bounds, c),
        Sub::Sweep(c) => (Command::Sweep, c),
        Sub::Selftest => {
            let checks = cli::selftest();
            let mut ok = true;
            for c in &checks {
                println!("{}: {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.pass;
            }
            return if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    let result = ExperimentConfig::load(&common.config).and_then(|cfg| {
        let opts = RunOptions {
            out: common.out.clone(),
            jobs: common.jobs,
            eps: common.eps,
        };
        cli::run(cmd, &cfg, &opts)
    });
    let code = cli::status(&result);
    match &result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for v in &outcome.violations {
                eprintln!("bound violation: {v}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(code as u8)
}
