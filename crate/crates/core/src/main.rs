use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparsol::check::{all_passed, run_check};
use sparsol::config::RunConfig;
use sparsol::driver::{run_solve, run_sweep};
use sparsol::error::Error;
use sparsol::grid::GridSpec;

#[derive(Parser)]
#[command(name = "sparsol", version, about = "Sparsifying preconditioner for periodic Helmholtz and Schrödinger problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output table path (CSV).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the media seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the GMRES relative tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the GMRES iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single configuration and print the result row.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump the solution, medium term, and right-hand side
        /// (requires --out to name the files).
        #[arg(long)]
        dump_fields: bool,
    },
    /// Run the benchmark sweep from the [sweep] section.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the self-check oracle suite on a small grid.
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Error> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.media.as_mut().expect("resolved").seed = seed;
    }
    if let Some(tol) = common.tol {
        cfg.tol = tol;
    }
    if let Some(max_iter) = common.max_iter {
        cfg.max_iter = max_iter;
    }
    // Re-validate after overrides.
    cfg.resolve()?;
    Ok(cfg)
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Solve { common, dump_fields } => {
            let cfg = load_config(&common)?;
            if dump_fields && common.out.is_none() {
                return Err(Error::Config("--dump-fields requires --out".into()));
            }
            let row = run_solve(&cfg, common.out.as_deref(), dump_fields)?;
            println!(
                "freq={} N={} b={} T_s={:.3}s T_a={:.3e}s n_p={} T_p={:.3}s residual={:.3e}",
                row.freq, row.n_total, row.b, row.t_s, row.t_a, row.n_p, row.t_p, row.true_residual
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { common } => {
            let cfg = load_config(&common)?;
            let rows = run_sweep(&cfg, common.out.as_deref())?;
            let mut any_failed = false;
            for row in &rows {
                println!(
                    "freq={} N={} b={} n_p={} status={}",
                    row.freq, row.n_total, row.b, row.n_p, row.status
                );
                any_failed |= row.status != "ok";
            }
            if any_failed {
                Ok(ExitCode::from(EXIT_FAILURE))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Check { common } => {
            // Without a config, check the reference small grid.
            let (grid, seed) = match &common.config {
                Some(_) => {
                    let cfg = load_config(&common)?;
                    if cfg.n > 16 {
                        return Err(Error::Config(format!(
                            "check mode builds dense oracles; n must be <= 16, got {}",
                            cfg.n
                        )));
                    }
                    (cfg.grid(), cfg.media.as_ref().map(|m| m.seed).unwrap_or(0))
                }
                None => (
                    GridSpec::new(2, 12, 3).expect("reference grid is valid"),
                    common.seed.unwrap_or(0),
                ),
            };
            let outcomes = run_check(grid, seed)?;
            for o in &outcomes {
                println!("{} {} — {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            if all_passed(&outcomes) {
                println!("all {} checks passed", outcomes.len());
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_FAILURE))
            }
        }
    }
}
