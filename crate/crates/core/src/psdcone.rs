//! Geometry of the PSD cone and the comparison condition for matrix-valued
//! SDEs driven by one Brownian motion and the shared jump measure.
//!
//! For `y = Q diag(lambda) Q^T`, `y^± = Q diag(lambda^±) Q^T`,
//! `d^2(y) = |y^-|_F^2` and `∇d^2(y) = -2 y^-`. The second derivative is the
//! spectral quadratic form of `phi(l) = (l^-)^2`:
//!
//! ```text
//! D^2 d^2(y)[H, H] = sum_i phi''(l_i) Ht_ii^2
//!                  + sum_{i != j} (phi'(l_i) - phi'(l_j)) / (l_i - l_j) Ht_ij^2,
//! Ht = Q^T H Q.
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{Verdict, WitnessCollector};
use crate::engine::{default_eps_path, run_paths, sample_drivers, simulate_coupled, violation_summary_by, McRun};
use crate::error::{LinalgError, ModelError, PsdError};
use crate::linalg::{jacobi_eigen, spectral_norm};
use crate::model::{
    constant_c_star, validate_model, CoefficientTriple, ComparisonProblem, MarkMeasure, RegularityBudget,
    SampleDomain, SdeModel, Tolerances,
};
use crate::rng::stream;

/// Eigenvalues at most this far from zero make the Hessian form degenerate.
pub const ETA_SEP: f64 = 1e-8;

const STREAM_THEOREM: u64 = 500;

/// Symmetric matrix stored as its upper triangle, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    order: usize,
    packed: Vec<f64>,
}

fn packed_len(m: usize) -> usize {
    m * (m + 1) / 2
}

impl SymMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            order: m,
            packed: vec![0.0; packed_len(m)],
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_diagonal(&vec![1.0; m])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut s = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            s.set(i, i, *v);
        }
        s
    }

    /// Upper-triangular entries row by row.
    pub fn from_packed(m: usize, packed: Vec<f64>) -> Result<Self, ModelError> {
        if packed.len() != packed_len(m) {
            return Err(ModelError::DimensionMismatch(format!(
                "order {m} needs {} packed entries, got {}",
                packed_len(m),
                packed.len()
            )));
        }
        Ok(Self { order: m, packed })
    }

    /// Symmetric part `(a + a^T) / 2` of a square matrix.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        let mut s = Self::zeros(m);
        for i in 0..m {
            for j in i..m {
                s.set(i, j, 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.order - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.packed[k] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |i, j| self.get(i, j))
    }

    /// Coordinates in the orthonormal basis `E_ii`, `(E_ij + E_ji)/sqrt 2`.
    pub fn svec(&self) -> Vec<f64> {
        let m = self.order;
        let mut out = Vec::with_capacity(packed_len(m));
        for i in 0..m {
            for j in i..m {
                let v = self.get(i, j);
                out.push(if i == j { v } else { v * std::f64::consts::SQRT_2 });
            }
        }
        out
    }

    pub fn from_svec(m: usize, v: &[f64]) -> Self {
        let mut s = Self::zeros(m);
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                s.set(i, j, if i == j { v[k] } else { v[k] / std::f64::consts::SQRT_2 });
                k += 1;
            }
        }
        s
    }

    /// `tr(a b)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        let m = self.order;
        let mut s = 0.0;
        for i in 0..m {
            for j in i..m {
                let p = self.get(i, j) * other.get(i, j);
                s += if i == j { p } else { 2.0 * p };
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            order: self.order,
            packed: self.packed.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        assert_eq!(self.order, other.order, "symmetric matrices of different order");
        SymMatrix {
            order: self.order,
            packed: self.packed.iter().zip(&other.packed).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp {
    pub q: DMatrix<f64>,
    /// Ascending.
    pub lambda: Vec<f64>,
}

impl EigDecomp {
    /// `Q diag(f(lambda)) Q^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = DVector::from_iterator(self.lambda.len(), self.lambda.iter().map(|l| f(*l)));
        let dense = &self.q * DMatrix::from_diagonal(&d) * self.q.transpose();
        SymMatrix::from_dense(&dense)
    }
}

pub fn eig_sym(y: &SymMatrix) -> Result<EigDecomp, LinalgError> {
    let e = jacobi_eigen(&y.to_dense())?;
    Ok(EigDecomp {
        q: e.vectors,
        lambda: e.values,
    })
}

/// `(y^+, y^-)` with `y = y^+ - y^-`.
pub fn psd_split(y: &SymMatrix) -> Result<(SymMatrix, SymMatrix), LinalgError> {
    let e = eig_sym(y)?;
    Ok((e.map(|l| l.max(0.0)), e.map(|l| (-l).max(0.0))))
}

/// `|y^-|_F^2 = sum (lambda_i^-)^2`.
pub fn dist2_psd(y: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(eig_sym(y)?.lambda.iter().map(|l| l.min(0.0).powi(2)).sum())
}

pub fn grad_dist2_psd(y: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    Ok(eig_sym(y)?.map(|l| 2.0 * l.min(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianForm {
    pub value: f64,
    /// Some eigenvalue lies within [`ETA_SEP`] of zero; `value` then comes
    /// from central second differences.
    pub degenerate: bool,
}

/// `D^2 d^2(y)[H, H]` by the spectral divided-difference formula.
pub fn hess_quadform_psd(y: &SymMatrix, h: &SymMatrix) -> Result<HessianForm, LinalgError> {
    let e = eig_sym(y)?;
    if e.lambda.iter().any(|l| l.abs() <= ETA_SEP) {
        let s = 1e-4 * (1.0 + y.norm()) / (1.0 + h.norm());
        let f = |sign: f64| dist2_psd(&y.add(&h.scale(sign * s)));
        let value = (f(1.0)? - 2.0 * dist2_psd(y)? + f(-1.0)?) / (s * s);
        return Ok(HessianForm {
            value,
            degenerate: true,
        });
    }
    let ht = e.q.transpose() * h.to_dense() * &e.q;
    let lam = &e.lambda;
    let n = lam.len();
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..n {
            let weight = match (lam[i] < 0.0, lam[j] < 0.0) {
                (true, true) => 2.0,
                (false, false) => 0.0,
                _ => (2.0 * lam[i].min(0.0) - 2.0 * lam[j].min(0.0)) / (lam[i] - lam[j]),
            };
            value += weight * ht[(i, j)] * ht[(i, j)];
        }
    }
    Ok(HessianForm {
        value,
        degenerate: false,
    })
}

pub type MatrixMapFn = Arc<dyn Fn(f64, &SymMatrix) -> SymMatrix + Send + Sync>;
pub type MatrixJumpFn = Arc<dyn Fn(f64, &SymMatrix, usize, &[f64]) -> SymMatrix + Send + Sync>;

/// `x -> A x + x A^T + C` on symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovMap {
    pub a: DMatrix<f64>,
    pub c: SymMatrix,
}

impl LyapunovMap {
    pub fn zero(m: usize) -> Self {
        Self {
            a: DMatrix::zeros(m, m),
            c: SymMatrix::zeros(m),
        }
    }

    pub fn apply(&self, x: &SymMatrix) -> SymMatrix {
        let xd = x.to_dense();
        let mut out = SymMatrix::from_dense(&(&self.a * &xd + &xd * self.a.transpose()));
        out = out.add(&self.c);
        out
    }

    /// Operator-norm bound `2 |A|` of the linear part in Frobenius norm.
    pub fn lipschitz(&self) -> f64 {
        2.0 * spectral_norm(&self.a)
    }
}

/// Affine Lyapunov family: drift, diffusion and per-atom jump maps.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCoefficients {
    pub drift: LyapunovMap,
    pub diffusion: LyapunovMap,
    pub jumps: Vec<LyapunovMap>,
}

impl LyapunovCoefficients {
    pub fn zeros(m: usize, atoms: usize) -> Self {
        Self {
            drift: LyapunovMap::zero(m),
            diffusion: LyapunovMap::zero(m),
            jumps: vec![LyapunovMap::zero(m); atoms],
        }
    }

    pub fn order(&self) -> usize {
        self.drift.a.nrows()
    }

    fn check_dimensions(&self, atoms: usize) -> Result<(), ModelError> {
        let m = self.order();
        let maps = std::iter::once(&self.drift)
            .chain(std::iter::once(&self.diffusion))
            .chain(&self.jumps);
        for map in maps {
            if map.a.nrows() != m || map.a.ncols() != m || map.c.order() != m {
                return Err(ModelError::DimensionMismatch(format!("Lyapunov blocks must be {m} x {m}")));
            }
        }
        if self.jumps.len() != atoms {
            return Err(ModelError::DimensionMismatch(format!(
                "{} jump maps for {atoms} atoms",
                self.jumps.len()
            )));
        }
        Ok(())
    }

    /// `mu = max(2|A| + 2|S|, |C|_F + |D|_F)`, `rho_j = max(2|G_j|, |g_j|_F)`.
    pub fn certificate(&self) -> RegularityBudget {
        let lin = self.drift.lipschitz() + self.diffusion.lipschitz();
        let growth = self.drift.c.norm() + self.diffusion.c.norm();
        RegularityBudget {
            mu: lin.max(growth),
            rho: self.jumps.iter().map(|g| g.lipschitz().max(g.c.norm())).collect(),
        }
    }
}

/// Matrix-valued SDE `dX = b dt + sigma dW + ∫ gamma Ñ(dt, de)` on `S^m`
/// with scalar `W`.
#[derive(Clone)]
pub struct MatrixModel {
    pub m: usize,
    drift: MatrixMapFn,
    diffusion: MatrixMapFn,
    jump: MatrixJumpFn,
    pub marks: MarkMeasure,
    pub budget: RegularityBudget,
    lyapunov: Option<Arc<LyapunovCoefficients>>,
}

impl fmt::Debug for MatrixModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixModel")
            .field("m", &self.m)
            .field("marks", &self.marks)
            .field("budget", &self.budget)
            .field("lyapunov", &self.lyapunov)
            .finish_non_exhaustive()
    }
}

impl MatrixModel {
    pub fn black_box(
        m: usize,
        drift: MatrixMapFn,
        diffusion: MatrixMapFn,
        jump: MatrixJumpFn,
        marks: MarkMeasure,
        budget: RegularityBudget,
    ) -> Self {
        Self {
            m,
            drift,
            diffusion,
            jump,
            marks,
            budget,
            lyapunov: None,
        }
    }

    pub fn lyapunov(coefficients: LyapunovCoefficients, marks: MarkMeasure) -> Result<Self, ModelError> {
        coefficients.check_dimensions(marks.len())?;
        let budget = coefficients.certificate();
        let aff = Arc::new(coefficients);
        let (a1, a2, a3) = (aff.clone(), aff.clone(), aff.clone());
        let model = Self {
            m: aff.order(),
            drift: Arc::new(move |_, x| a1.drift.apply(x)),
            diffusion: Arc::new(move |_, x| a2.diffusion.apply(x)),
            jump: Arc::new(move |_, x, j, _| a3.jumps[j].apply(x)),
            marks,
            budget,
            lyapunov: Some(aff),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn lyapunov_coefficients(&self) -> Option<&LyapunovCoefficients> {
        self.lyapunov.as_deref()
    }

    pub fn drift(&self, t: f64, x: &SymMatrix) -> SymMatrix {
        (self.drift)(t, x)
    }

    pub fn diffusion(&self, t: f64, x: &SymMatrix) -> SymMatrix {
        (self.diffusion)(t, x)
    }

    pub fn jump(&self, t: f64, x: &SymMatrix, atom: usize) -> SymMatrix {
        (self.jump)(t, x, atom, self.marks.mark(atom))
    }

    /// The same SDE in `svec` coordinates of `R^{m(m+1)/2}` with `d = 1`.
    pub fn to_sde_model(&self) -> SdeModel {
        let m = self.m;
        let (f1, f2, f3) = (self.drift.clone(), self.diffusion.clone(), self.jump.clone());
        let drift = Arc::new(move |t: f64, x: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&f1(t, &SymMatrix::from_svec(m, x)).svec());
        });
        let diffusion = Arc::new(move |t: f64, x: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&f2(t, &SymMatrix::from_svec(m, x)).svec());
        });
        let jump = Arc::new(move |t: f64, x: &[f64], j: usize, e: &[f64], out: &mut [f64]| {
            out.copy_from_slice(&f3(t, &SymMatrix::from_svec(m, x), j, e).svec());
        });
        let coefficients = CoefficientTriple::black_box(packed_len(m), 1, self.marks.dim, drift, diffusion, jump);
        SdeModel::new(coefficients, self.marks.clone(), self.budget.clone())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.m == 0 {
            return Err(ModelError::DimensionMismatch("matrix order must be positive".into()));
        }
        validate_model(&self.to_sde_model())
    }
}

/// Two matrix SDEs on `[t0, T]` from `x1 >= x2` in the PSD order.
#[derive(Debug, Clone)]
pub struct MatrixComparisonProblem {
    pub model1: MatrixModel,
    pub model2: MatrixModel,
    pub t0: f64,
    pub t_end: f64,
    pub x1: SymMatrix,
    pub x2: SymMatrix,
    pub sampling: SampleDomain,
    pub tolerances: Tolerances,
}

impl MatrixComparisonProblem {
    pub fn new(model1: MatrixModel, model2: MatrixModel, horizon: (f64, f64), x1: SymMatrix, x2: SymMatrix) -> Self {
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

    pub fn order(&self) -> usize {
        self.model1.m
    }

    pub fn marks(&self) -> &MarkMeasure {
        &self.model1.marks
    }

    pub fn c_star(&self) -> f64 {
        constant_c_star(&self.model1.budget.join(&self.model2.budget), self.marks())
    }

    pub fn validate(&self) -> Result<(), PsdError> {
        self.model1.validate()?;
        self.model2.validate()?;
        let m = self.order();
        if self.model2.m != m || self.x1.order() != m || self.x2.order() != m {
            return Err(ModelError::DimensionMismatch("matrix orders differ".into()).into());
        }
        if self.model1.marks != self.model2.marks {
            return Err(ModelError::InvalidProblem("both models must share the mark measure".into()).into());
        }
        if self.t0.partial_cmp(&self.t_end) != Some(std::cmp::Ordering::Less) {
            return Err(ModelError::InvalidProblem(format!("empty horizon [{}, {}]", self.t0, self.t_end)).into());
        }
        self.sampling.validate()?;
        self.tolerances.validate()?;
        let gap = eig_sym(&self.x1.sub(&self.x2))?;
        let low = gap.lambda.first().copied().unwrap_or(0.0);
        if low < -self.tolerances.eps_check {
            return Err(PsdError::OrderMismatch(format!(
                "x1 - x2 has eigenvalue {low}, not positive semidefinite"
            )));
        }
        Ok(())
    }

    /// The vectorized problem in `svec` coordinates.
    pub fn to_vector_problem(&self) -> ComparisonProblem {
        ComparisonProblem::new(
            self.model1.to_sde_model(),
            self.model2.to_sde_model(),
            (self.t0, self.t_end),
            self.x1.svec(),
            self.x2.svec(),
        )
        .with_sampling(self.sampling.clone())
        .with_tolerances(self.tolerances)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixEvaluation {
    pub lhs: f64,
    pub rhs: f64,
    pub degenerate: bool,
}

/// Both sides of the matrix inequality at `(t, x, x')`:
///
/// ```text
/// lhs = -4 <x^-, b1(t, x^+ + x') - b2(t, x')>
///     + D^2 d^2(x)[sigma1(t, x + x') - sigma2(t, x')]
///     + 2 sum_j w_j [ |(x + Δγ_j)^-|^2 - |x^-|^2 + 2 <x^-, Δγ_j> ]
/// rhs = C* |x^-|^2
/// ```
///
/// with `Δγ_j = gamma1(t, x + x', e_j) - gamma2(t, x', e_j)` and the trace
/// inner product.
pub fn eval_theorem37(
    p: &MatrixComparisonProblem,
    t: f64,
    x: &SymMatrix,
    x_prime: &SymMatrix,
) -> Result<MatrixEvaluation, LinalgError> {
    let (xp, xm) = psd_split(x)?;
    let shifted = x.add(x_prime);
    let (m1, m2) = (&p.model1, &p.model2);

    let db = m1.drift(t, &xp.add(x_prime)).sub(&m2.drift(t, x_prime));
    let mut lhs = -4.0 * xm.inner(&db);

    let ds = m1.diffusion(t, &shifted).sub(&m2.diffusion(t, x_prime));
    let hess = hess_quadform_psd(x, &ds)?;
    lhs += hess.value;

    let neg2 = xm.inner(&xm);
    for j in p.marks().active() {
        let dg = m1.jump(t, &shifted, j).sub(&m2.jump(t, x_prime, j));
        let after = dist2_psd(&x.add(&dg))?;
        lhs += 2.0 * p.marks().weight(j) * (after - neg2 + 2.0 * xm.inner(&dg));
    }
    Ok(MatrixEvaluation {
        lhs,
        rhs: p.c_star() * neg2,
        degenerate: hess.degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem37Report {
    /// Witnesses store packed upper triangles of `x` and `x'`.
    pub verdict: Verdict,
    /// Samples with an eigenvalue of `x` within [`ETA_SEP`] of zero, which
    /// never count as violations.
    pub degenerate_samples: usize,
}

fn random_orthogonal(rng: &mut impl Rng, m: usize) -> Result<DMatrix<f64>, LinalgError> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    Ok(jacobi_eigen(&(&a + a.transpose()))?.vectors)
}

/// Samples `(t, x, x')`: `x = Q diag(lambda) Q^T` with random orthogonal `Q`
/// and signed ladder eigenvalues (after structured probes `±l I` and signed
/// diagonals for small orders), `x'` uniform entries in `[-R, R]`.
pub fn check_theorem37(p: &MatrixComparisonProblem) -> Result<Theorem37Report, PsdError> {
    p.validate()?;
    let m = p.order();
    let mut rng = stream(p.sampling.seed, STREAM_THEOREM);
    let mut col = WitnessCollector::new(p.tolerances.eps_check);
    let ladder = &p.sampling.ladder;
    let r = p.sampling.radius;

    let mut structured: Vec<Vec<f64>> = Vec::new();
    for &level in ladder {
        if m <= 6 {
            for pattern in 0..(1u32 << m) {
                structured.push((0..m).map(|k| if pattern >> k & 1 == 1 { -level } else { level }).collect());
            }
        } else {
            structured.push(vec![-level; m]);
            structured.push(vec![level; m]);
        }
    }

    let mut degenerate = 0;
    for i in 0..p.sampling.count {
        let t = rng.random_range(p.t0..=p.t_end);
        let x = match structured.get(i) {
            Some(diag) => SymMatrix::from_diagonal(diag),
            None => {
                let q = random_orthogonal(&mut rng, m)?;
                let lambda: Vec<f64> = (0..m)
                    .map(|_| {
                        let level = ladder[rng.random_range(0..ladder.len())];
                        let mag = level * (0.5 + 0.5 * rng.random::<f64>());
                        if rng.random::<bool>() {
                            mag
                        } else {
                            -mag
                        }
                    })
                    .collect();
                let dense = &q * DMatrix::from_diagonal(&DVector::from_vec(lambda)) * q.transpose();
                SymMatrix::from_dense(&dense)
            }
        };
        let x_prime = SymMatrix::from_dense(&DMatrix::from_fn(m, m, |_, _| rng.random_range(-r..=r)));
        let ev = eval_theorem37(p, t, &x, &x_prime)?;
        col.count_sample();
        if ev.degenerate {
            degenerate += 1;
            continue;
        }
        col.offer(t, x.packed(), x_prime.packed(), None, ev.rhs - ev.lhs);
    }
    Ok(Theorem37Report {
        verdict: col.sampled(),
        degenerate_samples: degenerate,
    })
}

/// `max(0, -lambda_min(X1 - X2))` for `svec` states.
fn psd_gap(m: usize) -> impl Fn(&[f64], &[f64]) -> f64 {
    move |a, b| {
        let diff: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
        match eig_sym(&SymMatrix::from_svec(m, &diff)) {
            Ok(e) => (-e.lambda[0]).max(0.0),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Monte Carlo check of `X1 >= X2` in the PSD order: the engine runs the
/// `svec`-vectorized pair and each path reports the largest
/// `max(0, -lambda_min(X1 - X2))`, jump left limits included.
pub fn mc_matrix_comparison(p: &MatrixComparisonProblem, paths: usize, h: f64, seed: u64) -> Result<McRun, PsdError> {
    p.validate()?;
    let vector = p.to_vector_problem();
    let eps_path = p
        .tolerances
        .eps_path
        .unwrap_or_else(|| default_eps_path(h, &vector.x1, &vector.x2));
    let horizon = (p.t0, p.t_end);
    sample_drivers(&MarkMeasure::empty(p.marks().dim), horizon, h, 1, seed, 0)?;
    let gap = psd_gap(p.order());
    let run = run_paths(paths, h, seed, eps_path, |i| {
        let drivers = sample_drivers(vector.marks(), horizon, h, 1, seed, i)?;
        let (a, b) = simulate_coupled(&vector, &drivers)?;
        Ok(violation_summary_by((&a, &b), eps_path, &gap))
    })?;
    Ok(run)
}
