//! Executes scenarios: condition checks, Monte Carlo and generator diagnostics.

use std::time::Instant;

use jumpcompare_core::conditions::check_theorem31;
use jumpcompare_core::engine::{mc_comparison, McRun};
use jumpcompare_core::generator::supersolution_spotcheck;
use jumpcompare_core::psdcone::{check_theorem37, mc_matrix_comparison};

use crate::config::{Problem, ScenarioConfig};
use crate::error::CliError;
use crate::gallery;
use crate::report::{CheckSection, RunReport, SpotCheckRun};

/// Path count used by `gallery --smoke`.
pub const SMOKE_PATHS: usize = 10;

/// Smoothing width for the supersolution spot-check.
pub const SPOTCHECK_ETA: f64 = 1e-3;

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    /// Replaces both the Monte Carlo and the sampling seed.
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub step: Option<f64>,
    pub timing: bool,
}

impl Overrides {
    /// The resolved config that is echoed in the report.
    pub fn apply(&self, mut cfg: ScenarioConfig) -> ScenarioConfig {
        if let Some(seed) = self.seed {
            cfg.mc_mut().seed = seed;
            cfg.check_mut().seed = seed;
        }
        if let Some(paths) = self.paths {
            cfg.mc_mut().paths = paths;
        }
        if let Some(step) = self.step {
            cfg.mc_mut().step = step;
        }
        cfg
    }
}

fn scenario_name(cfg: &ScenarioConfig) -> String {
    cfg.id().unwrap_or("scenario").to_string()
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn check(problem: &Problem) -> Result<CheckSection, CliError> {
    Ok(match problem {
        Problem::Vector(p) => CheckSection::Vector(check_theorem31(p)),
        Problem::Matrix(p) => CheckSection::Matrix(check_theorem37(p).map_err(run_err)?),
    })
}

fn simulate(problem: &Problem, cfg: &ScenarioConfig) -> Result<McRun, CliError> {
    let mc = cfg.mc();
    if !(mc.step > 0.0 && mc.step.is_finite()) {
        return Err(CliError::Schema(format!("mc.step must be positive, got {}", mc.step)));
    }
    match problem {
        Problem::Vector(p) => mc_comparison(p, mc.paths, mc.step, mc.seed).map_err(run_err),
        Problem::Matrix(p) => mc_matrix_comparison(p, mc.paths, mc.step, mc.seed).map_err(run_err),
    }
}

/// Checker only.
pub fn run_check(cfg: ScenarioConfig, o: &Overrides) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let cfg = o.apply(cfg);
    let problem = cfg.build()?;
    let section = check(&problem)?;
    let mut report = RunReport::new(scenario_name(&cfg), cfg, section, None);
    if o.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

/// Checker plus coupled simulation; also returns the per-path outcomes.
pub fn run_simulate(cfg: ScenarioConfig, o: &Overrides) -> Result<(RunReport, McRun), CliError> {
    let start = Instant::now();
    let cfg = o.apply(cfg);
    let problem = cfg.build()?;
    let section = check(&problem)?;
    let run = simulate(&problem, &cfg)?;
    let mut report = RunReport::new(scenario_name(&cfg), cfg, section, Some(run.report.clone()));
    if o.timing {
        report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok((report, run))
}

/// Every built-in scenario, checked and simulated.
pub fn run_gallery(o: &Overrides, smoke: bool) -> Result<Vec<RunReport>, CliError> {
    let mut o = *o;
    if smoke {
        o.paths = Some(SMOKE_PATHS);
    }
    gallery::all()
        .into_iter()
        .map(|cfg| run_simulate(cfg, &o).map(|(r, _)| r))
        .collect()
}

/// Generator residual of the smoothed orthant distance on the stacked system.
pub fn run_spotcheck(cfg: ScenarioConfig, o: &Overrides) -> Result<SpotCheckRun, CliError> {
    let cfg = o.apply(cfg);
    let Problem::Vector(p) = cfg.build()? else {
        return Err(CliError::Usage("pide-spotcheck needs a vector scenario".into()));
    };
    let spotcheck = supersolution_spotcheck(&p, SPOTCHECK_ETA, p.sampling.count, p.sampling.seed).map_err(run_err)?;
    Ok(SpotCheckRun {
        scenario: scenario_name(&cfg),
        tool_version: crate::report::TOOL_VERSION.to_string(),
        spotcheck,
        config: cfg,
    })
}
