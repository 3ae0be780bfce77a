//! Machine-readable run reports and their on-disk forms.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use jumpcompare_core::conditions::{Theorem31Report, VerdictStatus};
use jumpcompare_core::engine::{McReport, PathOutcome};
use jumpcompare_core::generator::SpotCheckReport;
use jumpcompare_core::psdcone::Theorem37Report;
use serde::{Deserialize, Serialize};

use crate::config::{Kind, ScenarioConfig};
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Monte Carlo runs below this many paths are flagged as low-power.
pub const LOW_POWER_PATHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckSection {
    Vector(Theorem31Report),
    Matrix(Theorem37Report),
}

impl CheckSection {
    pub fn status(&self) -> VerdictStatus {
        match self {
            CheckSection::Vector(r) => r.overall,
            CheckSection::Matrix(r) => r.verdict.status,
        }
    }

    /// Most negative margin among violated checks.
    pub fn worst_margin(&self) -> Option<f64> {
        match self {
            CheckSection::Vector(r) => r.worst_margin().or_else(|| r.ii_prime.is_violated().then_some(r.ii_prime.min_margin)),
            CheckSection::Matrix(r) => r.verdict.is_violated().then_some(r.verdict.min_margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub tool_version: String,
    pub kind: Kind,
    pub verdict: VerdictStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
    pub check: CheckSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McReport>,
    /// Checker verdict versus simulation: not Violated exactly when no path violated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
    pub attention_needed: bool,
    pub low_power: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
    pub config: ScenarioConfig,
}

impl RunReport {
    pub fn new(scenario: String, config: ScenarioConfig, check: CheckSection, mc: Option<McReport>) -> Self {
        let verdict = check.status();
        let agreement = mc.as_ref().map(|r| verdict.is_violated() == (r.violating > 0));
        Self {
            scenario,
            tool_version: TOOL_VERSION.to_string(),
            kind: config.kind(),
            verdict,
            worst_margin: check.worst_margin(),
            check,
            low_power: mc.as_ref().is_some_and(|r| r.paths < LOW_POWER_PATHS),
            mc,
            attention_needed: agreement == Some(false),
            agreement,
            wall_clock_seconds: None,
            config,
        }
    }

    /// 0 when the verdict is not Violated and no simulated path violated, else 1.
    pub fn exit_code(&self) -> i32 {
        let mc_violation = self.mc.as_ref().is_some_and(|r| r.violating > 0);
        i32::from(self.verdict.is_violated() || mc_violation)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// One human-readable line.
    pub fn summary_line(&self) -> String {
        let mut line = format!("{:<20} verdict={:?}", self.scenario, self.verdict);
        if let Some(m) = self.worst_margin {
            let _ = write!(line, " margin={m:.3e}");
        }
        if let Some(mc) = &self.mc {
            let _ = write!(
                line,
                " violating={}/{} fraction={:.4} wilson=[{:.4},{:.4}]",
                mc.violating, mc.paths, mc.violation_fraction, mc.wilson_low, mc.wilson_high
            );
        }
        if let Some(a) = self.agreement {
            let _ = write!(line, " agreement={a}");
        }
        if self.low_power {
            line.push_str(" low-power");
        }
        if self.attention_needed {
            line.push_str(" ATTENTION");
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotCheckRun {
    pub scenario: String,
    pub tool_version: String,
    pub spotcheck: SpotCheckReport,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GallerySummary {
    pub tool_version: String,
    pub scenarios: Vec<String>,
    pub attention_needed: Vec<String>,
    pub low_power: bool,
}

pub const CSV_HEADER: &str = "path_id,violation_max,first_violation_time,failed";

/// Per-path outcomes; floats keep 17 significant digits.
pub fn outcomes_csv(outcomes: &[PathOutcome]) -> String {
    let mut out = String::with_capacity(64 * (outcomes.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        let first = o.first_violation_time.map(|t| format!("{t:.16e}")).unwrap_or_default();
        let _ = writeln!(out, "{},{:.16e},{},{}", o.path_id, o.violation_max, first, o.failed);
    }
    out
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_round_trips_floats() {
        let rows = vec![
            PathOutcome { path_id: 0, violation_max: 0.1 + 0.2, first_violation_time: Some(1.0 / 3.0), failed: false },
            PathOutcome { path_id: 1, violation_max: 0.0, first_violation_time: None, failed: true },
        ];
        let csv = outcomes_csv(&rows);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(!csv.contains('\r'));
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f[1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(f[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(lines[2], "1,0.0000000000000000e0,,true");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
