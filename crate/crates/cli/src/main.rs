//! Batch driver for the space-time Trefftz DG solver: single runs,
//! h-convergence sweeps, ρ-sweeps, and the property suite, all configured
//! through plain-text files and emitting CSV tables.
//!
//! Exit codes: 0 success, 1 property failure, 2 config parse failure,
//! 3 solver failure.

use trefftz_wave_cli::config;
use trefftz_wave_cli::output;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;
use trefftz_wave::analysis::{rates, rho_rates};
use trefftz_wave::driver::{run_convergence, run_level, run_rho_sweep, DriverError};
use trefftz_wave::properties::{run_properties, PropertyConfig};
use trefftz_wave::solver::SolverError;

#[derive(Parser)]
#[command(name = "tdg", about = "Space-time Trefftz DG convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// run configuration file (`key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// output path; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// solve once at the first configured level
    Run(CommonArgs),
    /// sweep the configured levels and report h-convergence rates
    Convergence(CommonArgs),
    /// sweep the configured lambda1 list at a fixed level
    RhoSweep(CommonArgs),
    /// run the bundled analytical property suite
    Properties(CommonArgs),
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read config {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    RunConfig::parse(&text).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(2)
    })
}

fn driver_exit(e: &DriverError) -> ExitCode {
    if let DriverError::Solver(SolverError::SingularBlock { slab, source }) = e {
        eprintln!("solver failure in slab {slab}: {source}");
        return ExitCode::from(3);
    }
    eprintln!("run failed: {e}");
    ExitCode::from(3)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = match load_config(&args.config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let spec = cfg.to_spec();
            match run_level(&spec, cfg.levels[0]) {
                Ok(report) => {
                    let csv = output::convergence_csv(&[report], &[[None, None, None]]);
                    if emit(&args.out, &csv).is_err() {
                        return ExitCode::from(3);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => driver_exit(&e),
            }
        }
        Command::Convergence(args) => {
            let cfg = match load_config(&args.config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let spec = cfg.to_spec();
            match run_convergence(&spec, &cfg.levels) {
                Ok(reports) => {
                    let rs = if reports.len() >= 2 {
                        match rates(&reports) {
                            Ok(r) => r,
                            Err(e) => {
                                eprintln!("rate computation failed: {e}");
                                return ExitCode::from(3);
                            }
                        }
                    } else {
                        vec![[None, None, None]]
                    };
                    let csv = output::convergence_csv(&reports, &rs);
                    if emit(&args.out, &csv).is_err() {
                        return ExitCode::from(3);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => driver_exit(&e),
            }
        }
        Command::RhoSweep(args) => {
            let cfg = match load_config(&args.config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if cfg.lambda1.len() < 2 {
                eprintln!("config line 0, field \"lambda1\": rho sweep needs at least two values");
                return ExitCode::from(2);
            }
            let spec = cfg.to_spec();
            let level = *cfg.levels.last().expect("validated nonempty");
            match run_rho_sweep(&spec, level, &cfg.lambda1) {
                Ok(reports) => {
                    let rs = match rho_rates(&reports) {
                        Ok(r) => r,
                        Err(e) => {
                            eprintln!("rate computation failed: {e}");
                            return ExitCode::from(3);
                        }
                    };
                    let csv = output::rho_sweep_csv(&reports, &rs);
                    if emit(&args.out, &csv).is_err() {
                        return ExitCode::from(3);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => driver_exit(&e),
            }
        }
        Command::Properties(args) => {
            let cfg = match load_config(&args.config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let results = run_properties(&PropertyConfig {
                seed: cfg.seed,
                flip_flux_sign: cfg.flip_flux_sign,
            });
            let mut text = String::new();
            for r in &results {
                text.push_str(&format!(
                    "{} {}: {}\n",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                ));
            }
            if emit(&args.out, &text).is_err() {
                return ExitCode::from(3);
            }
            if let Some(first_fail) = results.iter().find(|r| !r.pass) {
                eprintln!("property failed: {}", first_fail.name);
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
    }
}
