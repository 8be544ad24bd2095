use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use muskat_core::config::{parse_config, Mode, SimConfig};
use muskat_core::curve::run_curve;
use muskat_core::diagnostics::all_verdicts;
use muskat_core::error::MuskatError;
use muskat_core::graph::run_graph;
use muskat_core::grid::RealField;
use muskat_core::norms::NormReport;
use muskat_core::oracle::convergence_study;
use muskat_core::runlog::{read_field_csv, RunLog};

/// Simulation and verification runner for the Muskat interface problem.
#[derive(Parser)]
#[command(name = "muskat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured interface and persist a run log.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the norm report of a field as JSON, read either from a CSV
    /// with columns `x,f` or from the initial data of a config.
    Norms {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        field: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the theorem verdicts for a persisted run log as JSON.
    Verify {
        #[arg(long)]
        log: PathBuf,
        /// Also write the verdicts to `<dir>/verdicts.json`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Self-convergence of the flux under grid refinement, as JSON.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        /// Also write the report to `<dir>/convergence.json`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Config(MuskatError),
    Halt(i32),
}

impl From<MuskatError> for Failure {
    fn from(e: MuskatError) -> Self {
        Failure::Config(e)
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("MUSKAT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        MuskatError::config(
            "MUSKAT_THREADS",
            format!("expected a non-negative integer, got {raw:?}"),
        )
    })?;
    if n > 0 {
        // fails only if the pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn write_json(dir: &Path, name: &str, text: &str) -> Result<(), MuskatError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn run(config_path: &Path, output: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg: SimConfig = parse_config(config_path)?;
    if let Some(dir) = output {
        cfg.output_dir = dir;
    }
    match cfg.mode {
        Mode::Graph | Mode::Curve => {
            let log = if cfg.mode == Mode::Graph {
                run_graph(&cfg)?
            } else {
                run_curve(&cfg)?
            };
            log.write(&cfg.output_dir)?;
            let turning = log
                .turning_time
                .map(|t| format!(", turning_time {t:.6e}"))
                .unwrap_or_default();
            eprintln!(
                "{:?}: {} reports written to {}{turning}",
                log.status,
                log.reports.len(),
                cfg.output_dir.display()
            );
            match log.status.exit_code() {
                0 => Ok(()),
                code => Err(Failure::Halt(code)),
            }
        }
        Mode::Norms => print_norms(&cfg),
        Mode::Convergence => print_convergence(&cfg, Some(cfg.output_dir.clone())),
        Mode::Verify => Err(MuskatError::config(
            "mode",
            "verify works on an existing run log; use `muskat verify --log <dir>`",
        )
        .into()),
    }
}

fn print_norms(cfg: &SimConfig) -> Result<(), Failure> {
    print_report(&cfg.initial_field()?)
}

fn print_report(f: &RealField) -> Result<(), Failure> {
    let report = NormReport::compute(f, 0.0);
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(MuskatError::from)?
    );
    Ok(())
}

fn print_convergence(cfg: &SimConfig, output: Option<PathBuf>) -> Result<(), Failure> {
    let report = convergence_study(
        &cfg.initial_field()?,
        &cfg.resolutions(),
        cfg.rho_bar,
        &cfg.quad,
    )?;
    let text = serde_json::to_string_pretty(&report).map_err(MuskatError::from)?;
    if let Some(dir) = output {
        write_json(&dir, "convergence.json", &text)?;
    }
    println!("{text}");
    Ok(())
}

fn verify(log_dir: &Path, output: Option<PathBuf>) -> Result<(), Failure> {
    let log = RunLog::load(log_dir)?;
    let verdicts = all_verdicts(&log);
    let text = serde_json::to_string_pretty(&verdicts).map_err(MuskatError::from)?;
    if let Some(dir) = output {
        write_json(&dir, "verdicts.json", &text)?;
    }
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|_| match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::Norms {
            field: Some(path), ..
        } => read_field_csv(&path)
            .map_err(Failure::from)
            .and_then(|f| print_report(&f)),
        Command::Norms { config, .. } => parse_config(&config.expect("clap requires one source"))
            .map_err(Failure::from)
            .and_then(|cfg| print_norms(&cfg)),
        Command::Verify { log, output } => verify(&log, output),
        Command::Convergence { config, output } => parse_config(&config)
            .map_err(Failure::from)
            .and_then(|cfg| print_convergence(&cfg, output)),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Halt(code)) => ExitCode::from(code as u8),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
