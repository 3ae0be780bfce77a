//! Integro-differential generator of a jump-diffusion and the residual of
//! the distance-function PDE
//!
//! ```text
//! L u + B u - C u + d_K^2(x) = 0,   u(T, x) = d_K^2(x),
//! L u = ∂u/∂t + <Du, b> + 1/2 tr[D^2u sigma sigma^T],
//! B u = ∫ [u(t, x + gamma) - u(t, x) - <Du, gamma>] n(de).
//! ```
//!
//! These are diagnostics. Deciding the supersolution property would need
//! every test function; [`crate::conditions::check_ii_prime`] is the
//! decidable surrogate.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeneratorError, ModelError};
use crate::geometry::{dist2_k, ConePoint};
use crate::linalg::{dot, norm2};
use crate::model::{CoefficientTriple, ComparisonProblem, RegularityBudget, SdeModel};
use crate::rng::stream;

pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync>;

/// Relative step of the central second differences.
pub const HESSIAN_FD_STEP: f64 = 1e-3;

/// Tolerance used when registering analytic derivatives.
pub const DERIVATIVE_TOL: f64 = 1e-5;

/// A `C^{1,2}` function `phi(t, x)` with optional analytic derivatives.
/// Missing derivatives fall back to central finite differences.
#[derive(Clone)]
pub struct TestFunction {
    value: ScalarFn,
    time_derivative: Option<ScalarFn>,
    gradient: Option<GradientFn>,
    hessian: Option<HessianFn>,
    /// Relative step for first-order differences in `t` and `x`.
    pub fd_step: f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("time_derivative", &self.time_derivative.is_some())
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl TestFunction {
    pub fn new(value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            time_derivative: None,
            gradient: None,
            hessian: None,
            fd_step: 1e-5,
        }
    }

    pub fn with_time_derivative(mut self, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(f));
        self
    }

    pub fn with_gradient(mut self, f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(f));
        self
    }

    pub fn with_hessian(mut self, f: impl Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(f));
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    /// Drops the analytic derivatives, leaving finite differences only.
    pub fn finite_difference_only(&self) -> Self {
        Self {
            value: self.value.clone(),
            time_derivative: None,
            gradient: None,
            hessian: None,
            fd_step: self.fd_step,
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    pub fn time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        match &self.time_derivative {
            Some(f) => f(t, x),
            None => self.fd_time_derivative(t, x),
        }
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(f) => f(t, x),
            None => self.fd_gradient(t, x),
        }
    }

    pub fn hessian(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        match &self.hessian {
            Some(f) => f(t, x),
            None => self.fd_hessian(t, x),
        }
    }

    fn fd_time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        let h = self.fd_step * (1.0 + t.abs());
        (self.value(t + h, x) - self.value(t - h, x)) / (2.0 * h)
    }

    fn fd_gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let h = self.fd_step * (1.0 + norm2(x));
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + h;
                let up = self.value(t, &y);
                y[i] = x[i] - h;
                let down = self.value(t, &y);
                y[i] = x[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn fd_hessian(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let h = HESSIAN_FD_STEP * (1.0 + norm2(x));
        let f0 = self.value(t, x);
        let mut y = x.to_vec();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            y[i] = x[i] + h;
            let up = self.value(t, &y);
            y[i] = x[i] - h;
            let down = self.value(t, &y);
            y[i] = x[i];
            out[(i, i)] = (up - 2.0 * f0 + down) / (h * h);
            for j in (i + 1)..n {
                let mut corner = |si: f64, sj: f64| {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    let v = self.value(t, &y);
                    y[i] = x[i];
                    y[j] = x[j];
                    v
                };
                let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Compares every supplied analytic derivative with central finite
    /// differences at the given points; the tolerance is
    /// `1e-5 * max(1, |analytic|)`.
    pub fn validate_at(&self, points: &[(f64, Vec<f64>)]) -> Result<(), GeneratorError> {
        let check = |what: &'static str, t: f64, analytic: f64, numeric: f64| {
            if (analytic - numeric).abs() <= DERIVATIVE_TOL * analytic.abs().max(1.0) {
                Ok(())
            } else {
                Err(GeneratorError::DerivativeMismatch {
                    what,
                    t,
                    analytic,
                    numeric,
                })
            }
        };
        for (t, x) in points {
            let t = *t;
            if let Some(f) = &self.time_derivative {
                check("time derivative", t, f(t, x), self.fd_time_derivative(t, x))?;
            }
            if let Some(f) = &self.gradient {
                for (a, n) in f(t, x).iter().zip(self.fd_gradient(t, x)) {
                    check("gradient", t, *a, n)?;
                }
            }
            if let Some(f) = &self.hessian {
                for (a, n) in f(t, x).iter().zip(self.fd_hessian(t, x).iter()) {
                    check("hessian", t, *a, *n)?;
                }
            }
        }
        Ok(())
    }
}

/// `∂phi/∂t + <Dphi, b> + 1/2 tr[D^2phi sigma sigma^T]` at `(t, x)`.
pub fn eval_l(phi: &TestFunction, model: &SdeModel, t: f64, x: &[f64]) -> f64 {
    let c = &model.coefficients;
    let (m, d) = (c.m, c.d);
    let grad = phi.gradient(t, x);
    let hess = phi.hessian(t, x);
    let b = c.drift(t, x);
    let sigma = DMatrix::from_row_slice(m, d, &c.diffusion(t, x));
    let a = &sigma * sigma.transpose();
    phi.time_derivative(t, x) + dot(&grad, &b) + 0.5 * hess.component_mul(&a).sum()
}

/// `sum_j w_j [phi(t, x + gamma_j) - phi(t, x) - <Dphi, gamma_j>]` at `(t, x)`.
pub fn eval_b(phi: &TestFunction, model: &SdeModel, t: f64, x: &[f64]) -> f64 {
    let marks = &model.marks;
    if marks.active().next().is_none() {
        return 0.0;
    }
    let f0 = phi.value(t, x);
    let grad = phi.gradient(t, x);
    marks
        .active()
        .map(|j| {
            let g = model.coefficients.jump(t, x, j, marks.mark(j));
            let shifted: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
            marks.weight(j) * (phi.value(t, &shifted) - f0 - dot(&grad, &g))
        })
        .sum()
}

/// The difference system `Xbar = (X1 - X2, X2)` of two models sharing a
/// mark measure and Brownian dimension:
///
/// ```text
/// bbar(s, xbar) = (b1(s, xbar1 + xbar2) - b2(s, xbar2), b2(s, xbar2))
/// ```
///
/// and likewise for `sigma` and `gamma`. The budget is
/// `sqrt(2) (mu1 + 2 mu2)` (per atom for `rho`), which bounds both the
/// Lipschitz constant and the growth of the stacked coefficients.
pub fn stack_models(model1: &SdeModel, model2: &SdeModel) -> Result<SdeModel, ModelError> {
    let (c1, c2) = (model1.coefficients.clone(), model2.coefficients.clone());
    if c1.m != c2.m || c1.d != c2.d || c1.mark_dim != c2.mark_dim {
        return Err(ModelError::DimensionMismatch("stacked models need equal (m, d, l)".into()));
    }
    if model1.marks != model2.marks {
        return Err(ModelError::InvalidProblem("stacked models must share the mark measure".into()));
    }
    let (m, d) = (c1.m, c1.d);
    let split = move |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let sum = x[..m].iter().zip(&x[m..]).map(|(a, b)| a + b).collect();
        (sum, x[m..].to_vec())
    };

    let (d1, d2) = (c1.clone(), c2.clone());
    let drift = Arc::new(move |t: f64, x: &[f64], out: &mut [f64]| {
        let (sum, lower) = split(x);
        let (top, bottom) = out.split_at_mut(m);
        d1.drift_into(t, &sum, top);
        d2.drift_into(t, &lower, bottom);
        for k in 0..m {
            top[k] -= bottom[k];
        }
    });
    let (s1, s2) = (c1.clone(), c2.clone());
    let diffusion = Arc::new(move |t: f64, x: &[f64], out: &mut [f64]| {
        let (sum, lower) = split(x);
        let (top, bottom) = out.split_at_mut(m * d);
        s1.diffusion_into(t, &sum, top);
        s2.diffusion_into(t, &lower, bottom);
        for k in 0..m * d {
            top[k] -= bottom[k];
        }
    });
    let (j1, j2) = (c1.clone(), c2);
    let jump = Arc::new(move |t: f64, x: &[f64], atom: usize, e: &[f64], out: &mut [f64]| {
        let (sum, lower) = split(x);
        let (top, bottom) = out.split_at_mut(m);
        j1.jump_into(t, &sum, atom, e, top);
        j2.jump_into(t, &lower, atom, e, bottom);
        for k in 0..m {
            top[k] -= bottom[k];
        }
    });
    let coefficients = CoefficientTriple::black_box(2 * m, d, c1.mark_dim, drift, diffusion, jump);
    let (b1, b2) = (&model1.budget, &model2.budget);
    let scale = std::f64::consts::SQRT_2;
    let budget = RegularityBudget {
        mu: scale * (b1.mu + 2.0 * b2.mu),
        rho: b1.rho.iter().zip(&b2.rho).map(|(r1, r2)| scale * (r1 + 2.0 * r2)).collect(),
    };
    Ok(SdeModel::new(coefficients, model1.marks.clone(), budget))
}

/// `L phi + B phi - C phi + d_K^2(xbar)` for the stacked system.
pub fn supersolution_residual(phi: &TestFunction, model_bar: &SdeModel, t: f64, x_bar: &ConePoint, c: f64) -> f64 {
    let packed = x_bar.packed();
    eval_l(phi, model_bar, t, &packed) + eval_b(phi, model_bar, t, &packed) - c * phi.value(t, &packed)
        + dist2_k(x_bar)
}

/// `C^2` surrogate of `(s^-)^2`: equal to `s^2` for `s <= -eta`, zero for
/// `s >= eta`, and `eta^2 p(s / eta)` in between with the quintic
/// `p(u) = u^5/16 - 3u^3/8 + u^2/2 - 3u/16` matching value, slope and
/// curvature at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedHinge {
    pub eta: f64,
}

impl SmoothedHinge {
    pub fn new(eta: f64) -> Result<Self, GeneratorError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(GeneratorError::InvalidEta(eta));
        }
        Ok(Self { eta })
    }

    pub fn value(&self, s: f64) -> f64 {
        let eta = self.eta;
        if s <= -eta {
            s * s
        } else if s >= eta {
            0.0
        } else {
            let u = s / eta;
            let u2 = u * u;
            eta * eta * (u * (u2 * u2 / 16.0 - 3.0 * u2 / 8.0 - 3.0 / 16.0) + u2 / 2.0)
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let eta = self.eta;
        if s <= -eta {
            2.0 * s
        } else if s >= eta {
            0.0
        } else {
            let u = s / eta;
            let u2 = u * u;
            eta * (5.0 * u2 * u2 / 16.0 - 9.0 * u2 / 8.0 + u - 3.0 / 16.0)
        }
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        let eta = self.eta;
        if s <= -eta {
            2.0
        } else if s >= eta {
            0.0
        } else {
            let u = s / eta;
            1.25 * u * u * u - 2.25 * u + 1.0
        }
    }
}

/// Smoothed `d_K^2` on packed points `(x1, x2)`: the sum of
/// [`SmoothedHinge`] over the first block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedDist2 {
    pub hinge: SmoothedHinge,
}

impl SmoothedDist2 {
    pub fn new(eta: f64) -> Result<Self, GeneratorError> {
        Ok(Self {
            hinge: SmoothedHinge::new(eta)?,
        })
    }

    pub fn value(&self, x_bar: &ConePoint) -> f64 {
        x_bar.x1.iter().map(|s| self.hinge.value(*s)).sum()
    }

    /// Packed gradient of length `2m`.
    pub fn gradient(&self, x_bar: &ConePoint) -> Vec<f64> {
        let m = x_bar.dim();
        let mut g = vec![0.0; 2 * m];
        for (k, s) in x_bar.x1.iter().enumerate() {
            g[k] = self.hinge.derivative(*s);
        }
        g
    }

    /// Diagonal of the packed Hessian (the off-diagonal part vanishes).
    pub fn hessian_diag(&self, x_bar: &ConePoint) -> Vec<f64> {
        let m = x_bar.dim();
        let mut h = vec![0.0; 2 * m];
        for (k, s) in x_bar.x1.iter().enumerate() {
            h[k] = self.hinge.second_derivative(*s);
        }
        h
    }

    /// Time-independent [`TestFunction`] on packed `R^{2m}` with analytic
    /// derivatives.
    pub fn test_function(&self) -> TestFunction {
        let (v, g, h) = (*self, *self, *self);
        TestFunction::new(move |_, x| v.value(&ConePoint::from_packed(x)))
            .with_time_derivative(|_, _| 0.0)
            .with_gradient(move |_, x| g.gradient(&ConePoint::from_packed(x)))
            .with_hessian(move |_, x| {
                DMatrix::from_diagonal(&DVector::from_vec(h.hessian_diag(&ConePoint::from_packed(x))))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotCheckReport {
    pub eta: f64,
    pub c: f64,
    pub samples: usize,
    /// Largest residual over sampled points with every `x1_k >= eta`.
    pub max_interior_residual: f64,
    pub worst_point: Option<(f64, Vec<f64>)>,
    pub eps_check: f64,
    pub passed: bool,
}

/// Residual of the smoothed distance on the stacked system at sampled points
/// of `K` whose difference block stays at least `eta` away from the boundary.
/// There the smoothed distance vanishes with its derivatives, so the residual
/// is the jump term alone and is `<= 0` exactly when no atom pushes the
/// difference out of the orthant.
pub fn supersolution_spotcheck(
    p: &ComparisonProblem,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<SpotCheckReport, GeneratorError> {
    let smooth = SmoothedDist2::new(eta)?;
    let phi = smooth.test_function();
    let stacked = stack_models(&p.model1, &p.model2)?;
    let c = crate::model::constant_c(&p.shared_budget(), p.marks());
    let m = p.dim();
    let r = p.sampling.radius;
    let mut rng = stream(seed, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_point = None;
    for _ in 0..samples {
        let t = rng.random_range(p.t0..=p.t_end);
        let x1: Vec<f64> = (0..m).map(|_| rng.random_range(eta..=r.max(2.0 * eta))).collect();
        let x2: Vec<f64> = (0..m).map(|_| rng.random_range(-r..=r)).collect();
        let point = ConePoint::new(x1, x2);
        let res = supersolution_residual(&phi, &stacked, t, &point, c);
        if res > worst {
            worst = res;
            worst_point = Some((t, point.packed()));
        }
    }
    Ok(SpotCheckReport {
        eta,
        c,
        samples,
        max_interior_residual: worst,
        worst_point,
        eps_check: p.tolerances.eps_check,
        passed: worst <= p.tolerances.eps_check,
    })
}
