//! SDE models with finitely many jump marks, regularity budgets, and the
//! two-model comparison problem.
//!
//! A model is the tuple `(b, sigma, gamma, n)` of
//!
//! ```text
//! dX = b(t, X) dt + sigma(t, X) dW + ∫_E gamma(t, X-, e) Ñ(dt, de)
//! ```
//!
//! where the mark measure `n` is a finite list of weighted atoms, so every
//! integral against `n(de)` is an exact weighted sum.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::linalg::{norm2, spectral_norm};
use crate::rng::stream;

/// `b(t, x)` written into an `m`-vector.
pub type DriftFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `sigma(t, x)` written row-major into an `m * d` buffer.
pub type DiffusionFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `gamma(t, x, e_j)` for atom index `j` with mark `e_j`, written into an `m`-vector.
pub type JumpFn = Arc<dyn Fn(f64, &[f64], usize, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkAtom {
    pub mark: Vec<f64>,
    pub weight: f64,
}

/// Finite jump-mark measure stored as weighted atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkMeasure {
    pub dim: usize,
    pub atoms: Vec<MarkAtom>,
}

impl MarkMeasure {
    pub fn new(dim: usize, atoms: Vec<MarkAtom>) -> Self {
        Self { dim, atoms }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            atoms: Vec::new(),
        }
    }

    /// Atoms given as `(mark, weight)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (Vec<f64>, f64)>>(dim: usize, pairs: I) -> Self {
        let atoms = pairs
            .into_iter()
            .map(|(mark, weight)| MarkAtom { mark, weight })
            .collect();
        Self { dim, atoms }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass `n(E)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.atoms[j].weight
    }

    pub fn mark(&self, j: usize) -> &[f64] {
        &self.atoms[j].mark
    }

    /// Indices of atoms with strictly positive weight. Zero-weight atoms are
    /// `n`-null and never take part in "n(de)-a.s." statements.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.weight > 0.0)
            .map(|(j, _)| j)
    }
}

/// Lipschitz/growth constant `mu` and per-atom jump bound `rho(e_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityBudget {
    pub mu: f64,
    pub rho: Vec<f64>,
}

impl RegularityBudget {
    pub fn new(mu: f64, rho: Vec<f64>) -> Self {
        Self { mu, rho }
    }

    /// `∫ rho^2 dn` over the atoms of `marks`.
    pub fn rho_square_integral(&self, marks: &MarkMeasure) -> f64 {
        marks
            .atoms
            .iter()
            .zip(&self.rho)
            .map(|(a, r)| a.weight * r * r)
            .sum()
    }

    /// Pointwise maximum of two budgets over the same atoms.
    pub fn join(&self, other: &RegularityBudget) -> RegularityBudget {
        let n = self.rho.len().max(other.rho.len());
        let get = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        RegularityBudget {
            mu: self.mu.max(other.mu),
            rho: (0..n)
                .map(|i| get(&self.rho, i).max(get(&other.rho, i)))
                .collect(),
        }
    }
}

/// Jump coefficient of one atom: `gamma(t, x, e_j) = matrix * x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineJump {
    pub matrix: DMatrix<f64>,
    pub offset: Vec<f64>,
}

impl AffineJump {
    pub fn zero(m: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(m, m),
            offset: vec![0.0; m],
        }
    }
}

/// Affine coefficient family with closed-form condition checks.
///
/// * drift `b(x) = B x + c`
/// * diffusion `sigma_{k,alpha}(x) = sum_j V_{k,alpha,j} x_j + U_{k,alpha}`;
///   `V` is stored as the `(m*d) x m` matrix of the linear map
///   `x -> vec(sigma(x) - U)` with row index `k * d + alpha`
/// * jumps `gamma(x, e_j) = G_j x + g_j`, one entry per mark atom
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCoefficients {
    pub m: usize,
    pub d: usize,
    pub drift_matrix: DMatrix<f64>,
    pub drift_offset: Vec<f64>,
    pub diffusion_linear: DMatrix<f64>,
    pub diffusion_offset: DMatrix<f64>,
    pub jumps: Vec<AffineJump>,
}

impl AffineCoefficients {
    /// All-zero coefficients with `atoms` jump entries.
    pub fn zeros(m: usize, d: usize, atoms: usize) -> Self {
        Self {
            m,
            d,
            drift_matrix: DMatrix::zeros(m, m),
            drift_offset: vec![0.0; m],
            diffusion_linear: DMatrix::zeros(m * d, m),
            diffusion_offset: DMatrix::zeros(m, d),
            jumps: vec![AffineJump::zero(m); atoms],
        }
    }

    /// Sets `V_{k,alpha,j}`.
    pub fn set_diffusion_linear(&mut self, k: usize, alpha: usize, j: usize, value: f64) {
        self.diffusion_linear[(k * self.d + alpha, j)] = value;
    }

    pub fn diffusion_linear_entry(&self, k: usize, alpha: usize, j: usize) -> f64 {
        self.diffusion_linear[(k * self.d + alpha, j)]
    }

    pub fn check_dimensions(&self, atoms: usize) -> Result<(), ModelError> {
        let (m, d) = (self.m, self.d);
        let bad = |what: &str| Err(ModelError::DimensionMismatch(what.to_string()));
        if m == 0 || d == 0 {
            return bad("m and d must be positive");
        }
        if self.drift_matrix.shape() != (m, m) || self.drift_offset.len() != m {
            return bad("drift must be m x m plus an m-vector");
        }
        if self.diffusion_linear.shape() != (m * d, m) || self.diffusion_offset.shape() != (m, d) {
            return bad("diffusion must be an m x d x m tensor plus an m x d matrix");
        }
        if self.jumps.len() != atoms {
            return Err(ModelError::DimensionMismatch(format!(
                "{} affine jump entries for {} mark atoms",
                self.jumps.len(),
                atoms
            )));
        }
        if self
            .jumps
            .iter()
            .any(|g| g.matrix.shape() != (m, m) || g.offset.len() != m)
        {
            return bad("each jump entry must be m x m plus an m-vector");
        }
        let finite = self.drift_matrix.iter().all(|v| v.is_finite())
            && self.drift_offset.iter().all(|v| v.is_finite())
            && self.diffusion_linear.iter().all(|v| v.is_finite())
            && self.diffusion_offset.iter().all(|v| v.is_finite())
            && self
                .jumps
                .iter()
                .all(|g| g.matrix.iter().chain(&g.offset).all(|v| v.is_finite()));
        if !finite {
            return Err(ModelError::InfiniteBudget(
                "affine coefficients contain non-finite entries".into(),
            ));
        }
        Ok(())
    }

    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = self.drift_offset[k];
            for (j, xj) in x.iter().enumerate() {
                s += self.drift_matrix[(k, j)] * xj;
            }
            *o = s;
        }
    }

    pub fn diffusion_into(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.m {
            for a in 0..self.d {
                let row = k * self.d + a;
                let mut s = self.diffusion_offset[(k, a)];
                for (j, xj) in x.iter().enumerate() {
                    s += self.diffusion_linear[(row, j)] * xj;
                }
                out[row] = s;
            }
        }
    }

    pub fn jump_into(&self, atom: usize, x: &[f64], out: &mut [f64]) {
        let g = &self.jumps[atom];
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = g.offset[k];
            for (j, xj) in x.iter().enumerate() {
                s += g.matrix[(k, j)] * xj;
            }
            *o = s;
        }
    }

    /// Drift of the uncompensated form, `b(x) - ∫ gamma(x, e) n(de) = M x + r`,
    /// returned as `(M, r)`.
    pub fn compensated_drift(&self, marks: &MarkMeasure) -> (DMatrix<f64>, Vec<f64>) {
        let mut mat = self.drift_matrix.clone();
        let mut off = self.drift_offset.clone();
        for j in marks.active() {
            let w = marks.weight(j);
            mat -= &self.jumps[j].matrix * w;
            for (o, g) in off.iter_mut().zip(&self.jumps[j].offset) {
                *o -= w * g;
            }
        }
        (mat, off)
    }
}

/// Evaluatable coefficients `(b, sigma, gamma)` of one SDE.
#[derive(Clone)]
pub struct CoefficientTriple {
    pub m: usize,
    pub d: usize,
    /// Dimension `l` of the mark argument the jump coefficient expects.
    pub mark_dim: usize,
    drift: DriftFn,
    diffusion: DiffusionFn,
    jump: JumpFn,
    affine: Option<Arc<AffineCoefficients>>,
}

impl fmt::Debug for CoefficientTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientTriple")
            .field("m", &self.m)
            .field("d", &self.d)
            .field("mark_dim", &self.mark_dim)
            .field("affine", &self.affine)
            .finish_non_exhaustive()
    }
}

impl CoefficientTriple {
    pub fn black_box(
        m: usize,
        d: usize,
        mark_dim: usize,
        drift: DriftFn,
        diffusion: DiffusionFn,
        jump: JumpFn,
    ) -> Self {
        Self {
            m,
            d,
            mark_dim,
            drift,
            diffusion,
            jump,
            affine: None,
        }
    }

    /// Closures evaluating an affine family, with the family attached.
    pub fn from_affine(affine: AffineCoefficients, mark_dim: usize) -> Self {
        let aff = Arc::new(affine);
        let (a1, a2, a3) = (aff.clone(), aff.clone(), aff.clone());
        Self {
            m: aff.m,
            d: aff.d,
            mark_dim,
            drift: Arc::new(move |_, x, out| a1.drift_into(x, out)),
            diffusion: Arc::new(move |_, x, out| a2.diffusion_into(x, out)),
            jump: Arc::new(move |_, x, j, _, out| a3.jump_into(j, x, out)),
            affine: Some(aff),
        }
    }

    /// Attaches an affine description to black-box closures. `validate_model`
    /// checks that both agree.
    pub fn with_affine(mut self, affine: AffineCoefficients) -> Self {
        self.affine = Some(Arc::new(affine));
        self
    }

    pub fn affine(&self) -> Option<&AffineCoefficients> {
        self.affine.as_deref()
    }

    #[inline]
    pub fn drift_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, out)
    }

    #[inline]
    pub fn diffusion_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(t, x, out)
    }

    #[inline]
    pub fn jump_into(&self, t: f64, x: &[f64], atom: usize, mark: &[f64], out: &mut [f64]) {
        (self.jump)(t, x, atom, mark, out)
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.drift_into(t, x, &mut out);
        out
    }

    /// Row-major `m x d`.
    pub fn diffusion(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m * self.d];
        self.diffusion_into(t, x, &mut out);
        out
    }

    pub fn jump(&self, t: f64, x: &[f64], atom: usize, mark: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.jump_into(t, x, atom, mark, &mut out);
        out
    }
}

/// One SDE: coefficients, mark measure and regularity budget.
#[derive(Debug, Clone)]
pub struct SdeModel {
    pub coefficients: CoefficientTriple,
    pub marks: MarkMeasure,
    pub budget: RegularityBudget,
}

impl SdeModel {
    pub fn new(coefficients: CoefficientTriple, marks: MarkMeasure, budget: RegularityBudget) -> Self {
        Self {
            coefficients,
            marks,
            budget,
        }
    }

    /// Affine model whose budget is the certificate from [`lipschitz_certificate`].
    pub fn affine(affine: AffineCoefficients, marks: MarkMeasure) -> Result<Self, ModelError> {
        let budget = lipschitz_certificate(&affine, &marks)?;
        let coefficients = CoefficientTriple::from_affine(affine, marks.dim);
        let model = Self::new(coefficients, marks, budget);
        validate_model(&model)?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.coefficients.m
    }

    pub fn noise_dim(&self) -> usize {
        self.coefficients.d
    }

    /// `sum_j w_j gamma(t, x, e_j)` added into `out` (which is not cleared).
    pub fn add_compensator(&self, t: f64, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        for j in self.marks.active() {
            let w = self.marks.weight(j);
            self.coefficients
                .jump_into(t, x, j, self.marks.mark(j), scratch);
            for (o, g) in out.iter_mut().zip(scratch.iter()) {
                *o += w * g;
            }
        }
    }
}

/// Where and how densely the sampled checkers probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    /// Half-width `R` of the sampling box.
    pub radius: f64,
    pub count: usize,
    /// Magnitudes used for near-boundary probes.
    pub ladder: Vec<f64>,
    pub seed: u64,
}

impl SampleDomain {
    pub fn default_ladder(radius: f64) -> Vec<f64> {
        vec![1e-6, 1e-4, 1e-2, 1e-1, 1.0, radius]
    }

    pub fn new(radius: f64, count: usize, seed: u64) -> Self {
        Self {
            radius,
            count,
            ladder: Self::default_ladder(radius),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(ModelError::InvalidProblem(format!(
                "sampling radius must be positive, got {}",
                self.radius
            )));
        }
        if self.count == 0 {
            return Err(ModelError::InvalidProblem("sample count must be at least 1".into()));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(ModelError::InvalidProblem(
                "magnitude ladder must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SampleDomain {
    fn default() -> Self {
        Self::new(2.0, 10_000, 0x5eed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack for exact comparisons on affine coefficients.
    pub eps_check: f64,
    /// Slack for sampled (black-box) inequality checks.
    pub eps_sample: f64,
    /// Pathwise violation threshold; `None` selects `5 sqrt(h) (1 + |x1| + |x2|)`.
    pub eps_path: Option<f64>,
    /// Floating-point equality tolerance.
    pub eps_lin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_check: 1e-9,
            eps_sample: 1e-6,
            eps_path: None,
            eps_lin: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.eps_check) || !ok(self.eps_sample) || !ok(self.eps_lin) {
            return Err(ModelError::InvalidProblem("tolerances must be strictly positive".into()));
        }
        if let Some(p) = self.eps_path {
            if !ok(p) {
                return Err(ModelError::InvalidProblem("eps_path must be strictly positive".into()));
            }
        }
        Ok(())
    }
}

/// Two models driven by the same noise, with ordered initial states.
#[derive(Debug, Clone)]
pub struct ComparisonProblem {
    pub model1: SdeModel,
    pub model2: SdeModel,
    pub t0: f64,
    pub t_end: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub sampling: SampleDomain,
    pub tolerances: Tolerances,
}

impl ComparisonProblem {
    pub fn new(model1: SdeModel, model2: SdeModel, horizon: (f64, f64), x1: Vec<f64>, x2: Vec<f64>) -> Self {
        Self {
            model1,
            model2,
            t0: horizon.0,
            t_end: horizon.1,
            x1,
            x2,
            sampling: SampleDomain::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_sampling(mut self, sampling: SampleDomain) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn dim(&self) -> usize {
        self.model1.dim()
    }

    pub fn marks(&self) -> &MarkMeasure {
        &self.model1.marks
    }

    /// Both affine descriptions, when present.
    pub fn affine_pair(&self) -> Option<(&AffineCoefficients, &AffineCoefficients)> {
        Some((self.model1.coefficients.affine()?, self.model2.coefficients.affine()?))
    }

    /// One budget valid for both models.
    pub fn shared_budget(&self) -> RegularityBudget {
        self.model1.budget.join(&self.model2.budget)
    }

    /// Minimal `C* = 4 mu + mu^2 + ∫ rho^2 dn` for the shared budget.
    pub fn c_star(&self) -> f64 {
        constant_c_star(&self.shared_budget(), self.marks())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        validate_model(&self.model1)?;
        validate_model(&self.model2)?;
        let (m1, m2) = (&self.model1.coefficients, &self.model2.coefficients);
        if m1.m != m2.m || m1.d != m2.d {
            return Err(ModelError::DimensionMismatch(format!(
                "models have (m, d) = ({}, {}) and ({}, {})",
                m1.m, m1.d, m2.m, m2.d
            )));
        }
        if self.model1.marks != self.model2.marks {
            return Err(ModelError::InvalidProblem(
                "both models must share the same mark atoms and weights".into(),
            ));
        }
        if !(self.t0 >= 0.0 && self.t0 < self.t_end && self.t_end.is_finite()) {
            return Err(ModelError::InvalidProblem(format!(
                "horizon must satisfy 0 <= t0 < T, got ({}, {})",
                self.t0, self.t_end
            )));
        }
        if self.x1.len() != m1.m || self.x2.len() != m1.m {
            return Err(ModelError::DimensionMismatch("initial states must have length m".into()));
        }
        if let Some(k) = (0..m1.m).find(|&k| self.x1[k] < self.x2[k]) {
            return Err(ModelError::Unordered(format!(
                "x1[{k}] = {} < x2[{k}] = {}",
                self.x1[k], self.x2[k]
            )));
        }
        self.sampling.validate()?;
        self.tolerances.validate()
    }
}

/// Checks dimensions, mark weights, the jump budget, and (when an affine
/// description is attached) agreement of closures with it.
pub fn validate_model(model: &SdeModel) -> Result<(), ModelError> {
    let c = &model.coefficients;
    if c.m == 0 || c.d == 0 {
        return Err(ModelError::DimensionMismatch("m and d must be positive".into()));
    }
    if c.mark_dim != model.marks.dim {
        return Err(ModelError::DimensionMismatch(format!(
            "jump coefficient expects marks in R^{}, measure lives in R^{}",
            c.mark_dim, model.marks.dim
        )));
    }
    for (index, atom) in model.marks.atoms.iter().enumerate() {
        if atom.mark.len() != model.marks.dim {
            return Err(ModelError::DimensionMismatch(format!(
                "mark atom {index} has length {}, expected {}",
                atom.mark.len(),
                model.marks.dim
            )));
        }
        if !(atom.weight >= 0.0 && atom.weight.is_finite()) {
            return Err(ModelError::NegativeWeight {
                index,
                weight: atom.weight,
            });
        }
        if atom.mark.iter().all(|v| *v == 0.0) {
            return Err(ModelError::ZeroMark { index });
        }
    }
    let b = &model.budget;
    if b.rho.len() != model.marks.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "budget has {} rho values for {} atoms",
            b.rho.len(),
            model.marks.len()
        )));
    }
    if !(b.mu >= 0.0 && b.mu.is_finite()) || b.rho.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(ModelError::InfiniteBudget("mu and rho must be finite and nonnegative".into()));
    }
    if !b.rho_square_integral(&model.marks).is_finite() {
        return Err(ModelError::InfiniteBudget("∫ rho^2 dn is not finite".into()));
    }
    if let Some(aff) = c.affine() {
        aff.check_dimensions(model.marks.len())?;
        if aff.m != c.m || aff.d != c.d {
            return Err(ModelError::DimensionMismatch(
                "affine description and coefficient triple disagree on (m, d)".into(),
            ));
        }
        check_affine_agreement(model, aff)?;
    }
    Ok(())
}

const AGREEMENT_POINTS: usize = 16;

fn check_affine_agreement(model: &SdeModel, aff: &AffineCoefficients) -> Result<(), ModelError> {
    let c = &model.coefficients;
    let (m, d) = (c.m, c.d);
    let mut rng = stream(0xa5a5_0f0f, 0);
    let mut x = vec![0.0; m];
    let (mut got, mut want) = (vec![0.0; m * d], vec![0.0; m * d]);
    for p in 0..AGREEMENT_POINTS {
        let t: f64 = rng.random_range(0.0..1.0);
        for v in x.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        let tol = 1e-9 * (1.0 + norm2(&x));
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol * (1.0 + v.abs()));
        c.drift_into(t, &x, &mut got[..m]);
        aff.drift_into(&x, &mut want[..m]);
        if !close(&got[..m], &want[..m]) {
            return Err(ModelError::AffineMismatch(format!("drift, sample {p}")));
        }
        c.diffusion_into(t, &x, &mut got);
        aff.diffusion_into(&x, &mut want);
        if !close(&got, &want) {
            return Err(ModelError::AffineMismatch(format!("diffusion, sample {p}")));
        }
        for j in 0..model.marks.len() {
            c.jump_into(t, &x, j, model.marks.mark(j), &mut got[..m]);
            aff.jump_into(j, &x, &mut want[..m]);
            if !close(&got[..m], &want[..m]) {
                return Err(ModelError::AffineMismatch(format!("jump atom {j}, sample {p}")));
            }
        }
    }
    Ok(())
}

/// Regularity budget certified by operator norms of the affine family.
///
/// With `V` the stacked diffusion map,
/// `mu = max(||B|| + ||V||, |c| + |U|_F)` bounds both the Lipschitz sum
/// `|b(x)-b(x')| + |sigma(x)-sigma(x')|` and the linear growth of `|b| + |sigma|`;
/// `rho_j = max(||G_j||, |g_j|)` bounds the jump increments and growth.
pub fn lipschitz_certificate(
    affine: &AffineCoefficients,
    marks: &MarkMeasure,
) -> Result<RegularityBudget, ModelError> {
    affine.check_dimensions(marks.len())?;
    let lin = spectral_norm(&affine.drift_matrix) + spectral_norm(&affine.diffusion_linear);
    let growth = norm2(&affine.drift_offset) + affine.diffusion_offset.norm();
    let rho = affine
        .jumps
        .iter()
        .map(|g| spectral_norm(&g.matrix).max(norm2(&g.offset)))
        .collect();
    Ok(RegularityBudget {
        mu: lin.max(growth),
        rho,
    })
}

/// `C = 1 + 2 mu + mu^2 + ∫ rho^2 dn`.
pub fn constant_c(budget: &RegularityBudget, marks: &MarkMeasure) -> f64 {
    let mu = budget.mu;
    1.0 + 2.0 * mu + mu * mu + budget.rho_square_integral(marks)
}

/// `C* = 4 mu + mu^2 + ∫ rho^2 dn`.
pub fn constant_c_star(budget: &RegularityBudget, marks: &MarkMeasure) -> f64 {
    let mu = budget.mu;
    4.0 * mu + mu * mu + budget.rho_square_integral(marks)
}
