use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use quantum_bgk::config::{load_config, SolverConfig};
use quantum_bgk::driver::{self, EXIT_ERROR};

/// Stationary quantum BGK solver in a slab with inflow boundaries.
#[derive(Parser)]
#[command(name = "qbgk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write profiles.csv, convergence.csv and report.json.
    Solve { config: PathBuf },
    /// Solve at each tau and write sweep.csv.
    Sweep {
        config: PathBuf,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
    },
    /// Check the hypotheses on the boundary data only.
    Check { config: PathBuf },
    /// Print the boundary constants.
    Constants { config: PathBuf },
}

fn load(path: &Path) -> Result<SolverConfig, i32> {
    load_config(path).map_err(|e| {
        eprintln!("error: stage `config` failed: {e}");
        EXIT_ERROR
    })
}

fn print_json(value: &impl serde::Serialize) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => eprintln!("error: {e}"),
    }
}

fn run(cli: Cli) -> Result<i32, i32> {
    let fail = |stage: &str| {
        let stage = stage.to_string();
        move |e: quantum_bgk::Error| {
            eprintln!("error: stage `{stage}` failed: {e}");
            EXIT_ERROR
        }
    };
    match cli.command {
        Command::Solve { config } => {
            let config = load(&config)?;
            let out = driver::run_solve(&config).map_err(fail("solve"))?;
            if let Some(msg) = &out.summary.error {
                eprintln!("error: stage `{}` failed: {msg}", out.summary.stage);
            }
            println!(
                "converged={} iterations={} output={}",
                out.summary.converged,
                out.summary.iterations,
                out.output_dir.display()
            );
            Ok(out.exit_code)
        }
        Command::Sweep { config, tau } => {
            let config = load(&config)?;
            let out = driver::run_sweep(&config, &tau).map_err(fail("sweep"))?;
            for row in &out.summary {
                println!(
                    "tau={} converged={} contraction={:e}{}",
                    row.tau,
                    row.converged,
                    row.contraction_estimate,
                    row.error.as_ref().map(|e| format!(" error={e}")).unwrap_or_default()
                );
            }
            match driver::empirical_tau0(&out.summary) {
                Some(t) => println!("empirical tau_0: {t}"),
                None => println!("empirical tau_0: none of the swept values contracts"),
            }
            Ok(out.exit_code)
        }
        Command::Check { config } => {
            let config = load(&config)?;
            let (code, report) = driver::run_check(&config).map_err(fail("check"))?;
            print_json(&report);
            Ok(code)
        }
        Command::Constants { config } => {
            let config = load(&config)?;
            let tc = driver::run_constants(&config).map_err(fail("constants"))?;
            print_json(&tc);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse()) {
        Ok(c) | Err(c) => c,
    };
    ExitCode::from(code as u8)
}
