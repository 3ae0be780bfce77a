//! Scenario files: one JSON document per scenario, with a strict schema.

use std::path::Path;

use jumpcompare_core::model::{
    AffineCoefficients, ComparisonProblem, MarkMeasure, RegularityBudget, SampleDomain, SdeModel, Tolerances,
};
use jumpcompare_core::psdcone::{LyapunovCoefficients, LyapunovMap, MatrixComparisonProblem, MatrixModel, SymMatrix};
use jumpcompare_core::{ModelError, PsdError};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Vector,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkAtomConfig {
    pub mark: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub mu: f64,
    pub rho: Vec<f64>,
}

/// `x -> matrix x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineBlock {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// `sigma_{k alpha}(x) = offset[k][alpha] + sum_j linear[k][alpha][j] x_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionBlock {
    pub linear: Vec<Vec<Vec<f64>>>,
    pub offset: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorModelConfig {
    pub drift: AffineBlock,
    pub diffusion: DiffusionBlock,
    /// One block per mark atom.
    #[serde(default)]
    pub jumps: Vec<AffineBlock>,
    #[serde(default)]
    pub marks: Vec<MarkAtomConfig>,
    /// Overrides the certificate computed from the coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
}

/// `x -> a x + x a^T + c` on symmetric matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovBlock {
    pub a: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixModelConfig {
    pub drift: LyapunovBlock,
    pub diffusion: LyapunovBlock,
    #[serde(default)]
    pub jumps: Vec<LyapunovBlock>,
    #[serde(default)]
    pub marks: Vec<MarkAtomConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorInitial {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixInitial {
    pub x1: Vec<Vec<f64>>,
    pub x2: Vec<Vec<f64>>,
}

pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_STEP: f64 = 1.0 / 512.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_mc_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_path: Option<f64>,
}

fn default_paths() -> usize {
    DEFAULT_PATHS
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_mc_seed() -> u64 {
    1
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: DEFAULT_PATHS,
            step: DEFAULT_STEP,
            seed: default_mc_seed(),
            eps_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Defaults to `[1e-6, 1e-4, 1e-2, 1e-1, 1, radius]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<f64>>,
    #[serde(default = "default_check_seed")]
    pub seed: u64,
    #[serde(default = "default_eps_check")]
    pub eps_check: f64,
    #[serde(default = "default_eps_sample")]
    pub eps_sample: f64,
}

fn default_samples() -> usize {
    10_000
}

fn default_radius() -> f64 {
    2.0
}

fn default_check_seed() -> u64 {
    0x5eed
}

fn default_eps_check() -> f64 {
    1e-9
}

fn default_eps_sample() -> f64 {
    1e-6
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            radius: default_radius(),
            ladder: None,
            seed: default_check_seed(),
            eps_check: default_eps_check(),
            eps_sample: default_eps_sample(),
        }
    }
}

impl CheckConfig {
    pub fn sample_domain(&self) -> SampleDomain {
        let mut d = SampleDomain::new(self.radius, self.samples, self.seed);
        if let Some(l) = &self.ladder {
            d.ladder = l.clone();
        }
        d
    }

    pub fn tolerances(&self, eps_path: Option<f64>) -> Tolerances {
        Tolerances {
            eps_check: self.eps_check,
            eps_sample: self.eps_sample,
            eps_path,
            ..Tolerances::default()
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: Kind,
    pub m: usize,
    pub d: usize,
    pub horizon: [f64; 2],
    pub model1: VectorModelConfig,
    pub model2: VectorModelConfig,
    pub initial: VectorInitial,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub check: CheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixScenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: Kind,
    /// Matrix order.
    pub m: usize,
    /// Brownian dimension; the matrix case is scalar-driven.
    #[serde(default = "one")]
    pub d: usize,
    pub horizon: [f64; 2],
    pub model1: MatrixModelConfig,
    pub model2: MatrixModelConfig,
    pub initial: MatrixInitial,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub check: CheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioConfig {
    Vector(VectorScenario),
    Matrix(MatrixScenario),
}

#[derive(Deserialize)]
struct KindProbe {
    kind: Kind,
}

fn json_error(e: serde_json::Error) -> CliError {
    use serde_json::error::Category;
    let (line, column) = (e.line(), e.column());
    match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => CliError::Parse {
            line,
            column,
            message: e.to_string(),
        },
        Category::Data => CliError::Schema(format!("line {line}, column {column}: {e}")),
    }
}

impl ScenarioConfig {
    /// Parses a scenario document. `kind` selects the schema, which then
    /// rejects unknown keys with line-level messages.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        // syntax errors surface here, before the schema is consulted
        serde_json::from_str::<serde::de::IgnoredAny>(text).map_err(json_error)?;
        let probe: KindProbe = serde_json::from_str(text).map_err(json_error)?;
        let config = match probe.kind {
            Kind::Vector => ScenarioConfig::Vector(serde_json::from_str(text).map_err(json_error)?),
            Kind::Matrix => ScenarioConfig::Matrix(serde_json::from_str(text).map_err(json_error)?),
        };
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario configs always serialize")
    }

    pub fn kind(&self) -> Kind {
        match self {
            ScenarioConfig::Vector(_) => Kind::Vector,
            ScenarioConfig::Matrix(_) => Kind::Matrix,
        }
    }

    pub fn id(&self) -> Option<&str> {
        match self {
            ScenarioConfig::Vector(v) => v.id.as_deref(),
            ScenarioConfig::Matrix(v) => v.id.as_deref(),
        }
    }

    pub fn set_id(&mut self, id: &str) {
        match self {
            ScenarioConfig::Vector(v) => v.id = Some(id.to_string()),
            ScenarioConfig::Matrix(v) => v.id = Some(id.to_string()),
        }
    }

    pub fn mc(&self) -> &McConfig {
        match self {
            ScenarioConfig::Vector(v) => &v.mc,
            ScenarioConfig::Matrix(v) => &v.mc,
        }
    }

    pub fn mc_mut(&mut self) -> &mut McConfig {
        match self {
            ScenarioConfig::Vector(v) => &mut v.mc,
            ScenarioConfig::Matrix(v) => &mut v.mc,
        }
    }

    pub fn check_mut(&mut self) -> &mut CheckConfig {
        match self {
            ScenarioConfig::Vector(v) => &mut v.check,
            ScenarioConfig::Matrix(v) => &mut v.check,
        }
    }

    /// Builds and validates the problem described by the file.
    pub fn build(&self) -> Result<Problem, CliError> {
        match self {
            ScenarioConfig::Vector(v) => v.build().map(Problem::Vector),
            ScenarioConfig::Matrix(v) => v.build().map(Problem::Matrix),
        }
    }
}

/// Reads and parses a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json_str(&text)
}

pub enum Problem {
    Vector(ComparisonProblem),
    Matrix(MatrixComparisonProblem),
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::Unordered(msg) => CliError::Order(msg),
        other => CliError::Schema(other.to_string()),
    }
}

fn dense(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(schema(format!("{what} must be {nrows} x {ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if v.len() != n {
        return Err(schema(format!("{what} must have length {n}, got {}", v.len())));
    }
    Ok(v.to_vec())
}

fn marks(atoms: &[MarkAtomConfig]) -> Result<MarkMeasure, CliError> {
    let dim = atoms.first().map_or(1, |a| a.mark.len());
    if atoms.iter().any(|a| a.mark.len() != dim) {
        return Err(schema("all marks must have the same length"));
    }
    Ok(MarkMeasure::from_pairs(dim, atoms.iter().map(|a| (a.mark.clone(), a.weight))))
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<(), CliError> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(schema(format!("{what} contains non-finite numbers")))
    }
}

impl VectorScenario {
    fn model(&self, cfg: &VectorModelConfig, name: &str) -> Result<SdeModel, CliError> {
        let (m, d) = (self.m, self.d);
        if cfg.jumps.len() != cfg.marks.len() {
            return Err(schema(format!(
                "{name}: {} jump blocks for {} mark atoms",
                cfg.jumps.len(),
                cfg.marks.len()
            )));
        }
        let mut a = AffineCoefficients::zeros(m, d, cfg.jumps.len());
        a.drift_matrix = dense(&cfg.drift.matrix, m, m, &format!("{name}.drift.matrix"))?;
        a.drift_offset = vector(&cfg.drift.offset, m, &format!("{name}.drift.offset"))?;
        a.diffusion_offset = dense(&cfg.diffusion.offset, m, d, &format!("{name}.diffusion.offset"))?;
        let lin = &cfg.diffusion.linear;
        if lin.len() != m || lin.iter().any(|r| r.len() != d || r.iter().any(|c| c.len() != m)) {
            return Err(schema(format!("{name}.diffusion.linear must be {m} x {d} x {m}")));
        }
        for (k, rows) in lin.iter().enumerate() {
            for (alpha, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    a.set_diffusion_linear(k, alpha, j, *v);
                }
            }
        }
        for (j, block) in cfg.jumps.iter().enumerate() {
            a.jumps[j].matrix = dense(&block.matrix, m, m, &format!("{name}.jumps[{j}].matrix"))?;
            a.jumps[j].offset = vector(&block.offset, m, &format!("{name}.jumps[{j}].offset"))?;
        }
        check_finite(
            a.drift_matrix
                .iter()
                .chain(&a.drift_offset)
                .chain(a.diffusion_linear.iter())
                .chain(a.diffusion_offset.iter())
                .chain(a.jumps.iter().flat_map(|g| g.matrix.iter().chain(&g.offset)))
                .copied(),
            name,
        )?;
        let marks = marks(&cfg.marks)?;
        let model = SdeModel::affine(a, marks).map_err(model_error)?;
        match &cfg.budget {
            None => Ok(model),
            Some(b) => {
                let model = SdeModel::new(model.coefficients, model.marks, RegularityBudget::new(b.mu, b.rho.clone()));
                jumpcompare_core::model::validate_model(&model).map_err(model_error)?;
                Ok(model)
            }
        }
    }

    pub fn build(&self) -> Result<ComparisonProblem, CliError> {
        if self.kind != Kind::Vector {
            return Err(schema("vector scenario with non-vector kind"));
        }
        if self.m == 0 || self.d == 0 {
            return Err(schema("m and d must be positive"));
        }
        let m1 = self.model(&self.model1, "model1")?;
        let m2 = self.model(&self.model2, "model2")?;
        let x1 = vector(&self.initial.x1, self.m, "initial.x1")?;
        let x2 = vector(&self.initial.x2, self.m, "initial.x2")?;
        let p = ComparisonProblem::new(m1, m2, (self.horizon[0], self.horizon[1]), x1, x2)
            .with_sampling(self.check.sample_domain())
            .with_tolerances(self.check.tolerances(self.mc.eps_path));
        p.validate().map_err(model_error)?;
        Ok(p)
    }
}

fn symmetric(rows: &[Vec<f64>], m: usize, what: &str) -> Result<SymMatrix, CliError> {
    let a = dense(rows, m, m, what)?;
    check_finite(a.iter().copied(), what)?;
    if (&a - a.transpose()).amax() > 1e-12 {
        return Err(schema(format!("{what} must be symmetric")));
    }
    Ok(SymMatrix::from_dense(&a))
}

impl MatrixScenario {
    fn lyapunov(&self, block: &LyapunovBlock, what: &str) -> Result<LyapunovMap, CliError> {
        let a = dense(&block.a, self.m, self.m, &format!("{what}.a"))?;
        check_finite(a.iter().copied(), what)?;
        Ok(LyapunovMap {
            a,
            c: symmetric(&block.c, self.m, &format!("{what}.c"))?,
        })
    }

    fn model(&self, cfg: &MatrixModelConfig, name: &str) -> Result<MatrixModel, CliError> {
        if cfg.jumps.len() != cfg.marks.len() {
            return Err(schema(format!(
                "{name}: {} jump blocks for {} mark atoms",
                cfg.jumps.len(),
                cfg.marks.len()
            )));
        }
        let coefficients = LyapunovCoefficients {
            drift: self.lyapunov(&cfg.drift, &format!("{name}.drift"))?,
            diffusion: self.lyapunov(&cfg.diffusion, &format!("{name}.diffusion"))?,
            jumps: cfg
                .jumps
                .iter()
                .enumerate()
                .map(|(j, b)| self.lyapunov(b, &format!("{name}.jumps[{j}]")))
                .collect::<Result<_, _>>()?,
        };
        MatrixModel::lyapunov(coefficients, marks(&cfg.marks)?).map_err(model_error)
    }

    pub fn build(&self) -> Result<MatrixComparisonProblem, CliError> {
        if self.kind != Kind::Matrix {
            return Err(schema("matrix scenario with non-matrix kind"));
        }
        if self.m == 0 {
            return Err(schema("matrix order m must be positive"));
        }
        if self.d != 1 {
            return Err(schema(format!("matrix scenarios are driven by one Brownian motion, got d = {}", self.d)));
        }
        let p = MatrixComparisonProblem::new(
            self.model(&self.model1, "model1")?,
            self.model(&self.model2, "model2")?,
            (self.horizon[0], self.horizon[1]),
            symmetric(&self.initial.x1, self.m, "initial.x1")?,
            symmetric(&self.initial.x2, self.m, "initial.x2")?,
        )
        .with_sampling(self.check.sample_domain())
        .with_tolerances(self.check.tolerances(self.mc.eps_path));
        p.validate().map_err(|e| match e {
            PsdError::OrderMismatch(msg) => CliError::Order(msg),
            PsdError::Model(e) => model_error(e),
            other => CliError::Schema(other.to_string()),
        })?;
        Ok(p)
    }
}
