//! `sedh`: run, resume, verify and analyze stochastic-electrodynamics
//! hydrogen simulations.
//!
//! Exit codes: 0 success, 1 error, 2 the electron ionised.

mod analyze;
mod config;
mod run;
mod svg;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use sedh_core::dynamics::Outcome;
use sedh_core::field::lambda_matrices;
use sedh_core::verification::{correlator_suite, gauge_suite, lambda_identity_suite, tampered_lambda8, Level};

const EXIT_ERROR: u8 = 1;
const EXIT_IONISED: u8 = 2;

#[derive(Parser)]
#[command(name = "sedh", version, about = "Stochastic electrodynamics of a hydrogen-like atom")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Lambda,
    Gauge,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a trajectory described by a TOML run file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the run file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to the run file, then $SEDH_OUT_DIR, then ./sedh-out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this many consecutive seeds in parallel.
        #[arg(long, default_value_t = 1)]
        ensemble: u32,
    },
    /// Continue a run from its checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        /// New end time (the run file's end time by default).
        #[arg(long)]
        t_end: Option<f64>,
        /// Output directory; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the field synthesis against its analytic properties.
    VerifyCorrelators {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Run only these suites (all by default).
        #[arg(long, value_enum, value_delimiter = ',')]
        suite: Vec<SuiteArg>,
        /// Also write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Corrupt one lambda-matrix entry (checks that the identity suite notices).
        #[arg(long, hide = true)]
        tamper_lambda8: bool,
    },
    /// Histogram a finished run against the reference densities.
    Analyze {
        run_dir: PathBuf,
        /// Where to write the tables and plots; defaults to the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, file: Option<PathBuf>) -> PathBuf {
    flag.or(file)
        .or_else(|| std::env::var_os("SEDH_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sedh-out"))
}

fn outcome_code(outcome: Outcome) -> ExitCode {
    match outcome {
        Outcome::Completed => ExitCode::SUCCESS,
        Outcome::Ionised => ExitCode::from(EXIT_IONISED),
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ERROR)
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, ensemble: u32) -> ExitCode {
    let mut file = match config::ConfigFile::load(config) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    if let Some(s) = seed {
        file.run.seed = s;
    }
    let dir = out_dir(out, file.output.dir.clone());
    if ensemble <= 1 {
        return match run::run_one(&file, &dir) {
            Ok(outcome) => {
                println!("{}: {outcome:?} at t = {}", dir.display(), summary_time(&dir));
                outcome_code(outcome)
            }
            Err(e) => fail(e),
        };
    }
    match run::run_ensemble(&file, &dir, ensemble) {
        Ok(outcomes) => {
            let mut code = ExitCode::SUCCESS;
            for (k, o) in outcomes.iter().enumerate() {
                match o {
                    Ok(outcome) => {
                        println!("member {k}: {outcome:?}");
                        if *outcome == Outcome::Ionised && code == ExitCode::SUCCESS {
                            code = ExitCode::from(EXIT_IONISED);
                        }
                    }
                    Err(e) => {
                        eprintln!("member {k}: error: {e}");
                        code = ExitCode::from(EXIT_ERROR);
                    }
                }
            }
            code
        }
        Err(e) => fail(e),
    }
}

fn summary_time(dir: &Path) -> String {
    std::fs::read_to_string(dir.join(run::SUMMARY))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v["trajectory"]["t_final"].as_f64())
        .map_or_else(|| "?".into(), |t| t.to_string())
}

fn cmd_verify(level: LevelArg, seed: u64, suites: &[SuiteArg], json: Option<PathBuf>, tamper_lambda8: bool) -> ExitCode {
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let wanted = |s: SuiteArg| suites.is_empty() || suites.contains(&s);
    let mut results = Vec::new();
    if wanted(SuiteArg::Lambda) {
        let lambda = if tamper_lambda8 { tampered_lambda8() } else { lambda_matrices() };
        results.push(lambda_identity_suite(&lambda));
    }
    if wanted(SuiteArg::Gauge) {
        results.push(gauge_suite(level, seed));
    }
    if wanted(SuiteArg::Mc) {
        results.push(correlator_suite(level, seed));
    }
    for r in &results {
        println!("[{}] {:<18} {:>8.2}s  {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.seconds, r.detail);
    }
    let rows: Vec<_> = results.iter().flat_map(|r| r.rows.iter()).collect();
    if !rows.is_empty() {
        println!();
        println!("{:<34} {:>10} {:>14} {:>12} {:>14} {:>8}", "point", "component", "MC mean", "std err", "target", "z");
        for z in rows {
            println!(
                "{:<34} {:>10} {:>14.6e} {:>12.3e} {:>14.6e} {:>8.2}",
                z.point, z.component, z.mean, z.stderr, z.target, z.z
            );
        }
    }
    if let Some(path) = json {
        if let Err(e) = std::fs::write(&path, serde_json::to_string_pretty(&results).unwrap() + "\n") {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ERROR)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, seed, out, ensemble } => cmd_run(&config, seed, out, ensemble),
        Command::Resume { checkpoint, t_end, out } => match run::resume(&checkpoint, t_end, out.as_deref()) {
            Ok(outcome) => outcome_code(outcome),
            Err(e) => fail(e),
        },
        Command::VerifyCorrelators { level, seed, suite, json, tamper_lambda8 } => {
            cmd_verify(level, seed, &suite, json, tamper_lambda8)
        }
        Command::Analyze { run_dir, out } => match analyze::analyze(&run_dir, out.as_deref()) {
            Ok(a) => {
                println!(
                    "{} rows over t = {}: KS(energy) = {:.4}, KS(radius) = {:.4}",
                    a.rows, a.time_covered, a.energy.ks, a.radius.ks
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
