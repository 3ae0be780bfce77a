use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jumpcompare::config::{parse_config, Kind, ScenarioConfig};
use jumpcompare::report::{outcomes_csv, write_atomic, GallerySummary, RunReport, TOOL_VERSION};
use jumpcompare::run::{run_check, run_gallery, run_simulate, run_spotcheck, Overrides};
use jumpcompare::{gallery, CliError};

const THREADS_VAR: &str = "JUMPCOMPARE_THREADS";

#[derive(Parser)]
#[command(name = "jumpcompare", version, about = "Comparison checks and coupled simulation for jump-diffusion SDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for both the Monte Carlo paths and the condition sampler.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Euler step size.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Directory for report files; reports go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall-clock time in reports (makes them non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the condition checker on a scenario.
    Check { config: String },
    /// Run the checker and the coupled Monte Carlo simulation.
    Simulate { config: String },
    /// Run every built-in scenario.
    Gallery {
        /// Use 10 paths per scenario; reports are flagged low-power.
        #[arg(long)]
        smoke: bool,
    },
    /// Run the matrix-cone checker on a matrix scenario.
    MatrixCheck { config: String },
    /// Evaluate the generator residual of the smoothed orthant distance.
    PideSpotcheck { config: String },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// A path, or `gallery:<id>` for a built-in scenario.
fn load(source: &str) -> Result<ScenarioConfig, CliError> {
    match source.strip_prefix("gallery:") {
        Some(id) => gallery::scenario(id),
        None => parse_config(Path::new(source)),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Run(e.to_string()))
}

fn emit_report(cli: &Cli, report: &RunReport) -> Result<(), CliError> {
    match &cli.out {
        Some(dir) => {
            write_atomic(&dir.join(format!("{}.json", report.scenario)), &report.to_json())?;
            println!("{}", report.summary_line());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let o = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        step: cli.step,
        timing: cli.timing,
    };
    match &cli.command {
        Command::Check { config } => {
            let report = run_check(load(config)?, &o)?;
            emit_report(cli, &report)?;
            Ok(report.exit_code())
        }
        Command::MatrixCheck { config } => {
            let cfg = load(config)?;
            if cfg.kind() != Kind::Matrix {
                return Err(CliError::Usage("matrix-check needs a matrix scenario".into()));
            }
            let report = run_check(cfg, &o)?;
            emit_report(cli, &report)?;
            Ok(report.exit_code())
        }
        Command::Simulate { config } => {
            let (report, run) = run_simulate(load(config)?, &o)?;
            match (cli.format, &cli.out) {
                (Format::Csv, Some(dir)) => {
                    write_atomic(&dir.join(format!("{}.csv", report.scenario)), &outcomes_csv(&run.outcomes))?;
                    emit_report(cli, &report)?;
                }
                (Format::Csv, None) => print!("{}", outcomes_csv(&run.outcomes)),
                (Format::Json, _) => emit_report(cli, &report)?,
            }
            Ok(report.exit_code())
        }
        Command::Gallery { smoke } => {
            let reports = run_gallery(&o, *smoke)?;
            let attention: Vec<String> = reports
                .iter()
                .filter(|r| r.attention_needed)
                .map(|r| r.scenario.clone())
                .collect();
            for r in &reports {
                println!("{}", r.summary_line());
                if let Some(dir) = &cli.out {
                    write_atomic(&dir.join(format!("{}.json", r.scenario)), &r.to_json())?;
                }
            }
            if let Some(dir) = &cli.out {
                let summary = GallerySummary {
                    tool_version: TOOL_VERSION.to_string(),
                    scenarios: reports.iter().map(|r| r.scenario.clone()).collect(),
                    attention_needed: attention.clone(),
                    low_power: reports.iter().any(|r| r.low_power),
                };
                let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Run(e.to_string()))? + "\n";
                write_atomic(&dir.join("gallery-summary.json"), &text)?;
            }
            if attention.is_empty() {
                Ok(0)
            } else {
                eprintln!("attention needed: {}", attention.join(", "));
                Ok(1)
            }
        }
        Command::PideSpotcheck { config } => {
            let run = run_spotcheck(load(config)?, &o)?;
            let text = serde_json::to_string_pretty(&run).map_err(|e| CliError::Run(e.to_string()))? + "\n";
            match &cli.out {
                Some(dir) => {
                    write_atomic(&dir.join(format!("{}-spotcheck.json", run.scenario)), &text)?;
                    println!(
                        "{} residual={:.3e} passed={}",
                        run.scenario, run.spotcheck.max_interior_residual, run.spotcheck.passed
                    );
                }
                None => print!("{text}"),
            }
            Ok(i32::from(!run.spotcheck.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::EXIT_CODE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::EXIT_CODE as u8)
        }
    }
}
