use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinlab::experiments::{run_all, Experiment, ExperimentConfig, Session};
use spinlab::Error;

#[derive(Parser)]
#[command(
    name = "spinlab",
    version,
    about = "Spinning-particle field experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Config TOML path, or `default` for the built-in desk-scale setup.
    #[arg(long, global = true, default_value = "default")]
    config: String,
    /// Directory for CSV files and summary.txt.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Smaller box and shorter runs.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Soliton fixed point, limit frequency and attraction rates.
    Attract,
    /// Scattering state and remainder decay.
    Scatter,
    /// Free-wave energy, Huygens support and decay.
    Freewave,
    /// Laplace-side nu and the cross-checks against the dynamics.
    Laplace,
    /// Threshold and high-energy resolvent behaviour.
    Resolvent,
    /// Transform, constraint and integrator checks.
    Structural,
    /// Everything above.
    All,
    /// Print the resolved configuration as TOML.
    Config,
}

fn experiments(c: Cmd) -> Vec<Experiment> {
    match c {
        Cmd::Attract => vec![Experiment::Attract],
        Cmd::Scatter => vec![Experiment::Scatter],
        Cmd::Freewave => vec![Experiment::FreeWave],
        Cmd::Laplace => vec![Experiment::Laplace],
        Cmd::Resolvent => vec![Experiment::Resolvent],
        Cmd::Structural => vec![Experiment::Structural],
        Cmd::All | Cmd::Config => Experiment::ALL.to_vec(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.quick {
        cfg = cfg.quick();
    }
    if let Cmd::Config = cli.cmd {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let session = match Session::new(cfg, cli.seed, cli.out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_all(&session, &experiments(cli.cmd)) {
        Ok(reports) => {
            for r in &reports {
                println!("[{}] {:.1}s", r.experiment, r.seconds);
                for c in &r.criteria {
                    println!("{c}");
                }
            }
            if reports.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 3 })
        }
    }
}
