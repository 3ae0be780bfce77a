//! Checkers for the comparison conditions of two jump-diffusion models.
//!
//! Ordering `X1 >= X2` for all ordered initial states holds iff
//! `sigma1 == sigma2` and, for every coordinate `k`,
//!
//! * (a) `sigma1_k` depends only on `x_k`;
//! * (b) `x_k + gamma1_k(t, x + x', e) - gamma2_k(t, x', e) >= 0` for all
//!   `x >= 0`, all `x'`, n-a.e. `e`;
//! * (c) for `delta >= 0` with `delta_k = 0` and all `x'`,
//!   `b1_k(t, delta + x') - ∫ gamma1_k(t, delta + x', e) n(de)
//!    >= b2_k(t, x') - ∫ gamma2_k(t, x', e) n(de)`.
//!
//! The same property is equivalent to the single inequality evaluated by
//! [`eval_ii_prime`]. On the affine family, (b) and (c) are affine in
//! `(x, x')`, so the quantifiers reduce to exact coefficient tests: the
//! `x'`-coefficients must vanish, the `x`-coefficients must be nonnegative,
//! and the constants must satisfy the scalar inequality. Black-box
//! coefficients are sampled and can only ever yield
//! [`VerdictStatus::NoViolationFound`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConditionError;
use crate::geometry::negative_part;
use crate::model::{AffineCoefficients, ComparisonProblem, MarkMeasure, SampleDomain};
use crate::rng::{stream, StreamRng};

/// Witnesses kept per verdict.
pub const MAX_WITNESSES: usize = 5;

// Stream ids separating the random probes of each sub-check.
const STREAM_SIGMA: u64 = 1;
const STREAM_A: u64 = 100;
const STREAM_B: u64 = 200;
const STREAM_C: u64 = 300;
const STREAM_II: u64 = 400;
const STREAM_COROLLARY: u64 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    /// Certified by the exact affine reduction.
    Holds,
    /// Sampling found no counterexample.
    NoViolationFound,
    Violated,
}

impl VerdictStatus {
    pub fn is_violated(self) -> bool {
        self == VerdictStatus::Violated
    }

    /// Combines sub-verdicts: any violation wins, `Holds` needs all `Holds`.
    pub fn combine<I: IntoIterator<Item = VerdictStatus>>(items: I) -> VerdictStatus {
        let mut out = VerdictStatus::Holds;
        for s in items {
            match s {
                VerdictStatus::Violated => return VerdictStatus::Violated,
                VerdictStatus::NoViolationFound => out = VerdictStatus::NoViolationFound,
                VerdictStatus::Holds => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub atom: Option<usize>,
    /// Value of the checked inequality at the witness, `>= 0` when it holds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub witnesses: Vec<Witness>,
    pub samples_used: usize,
    /// Smallest margin seen (sampled) or exact slack of the reduction (affine).
    pub min_margin: f64,
}

impl Verdict {
    fn holds(min_margin: f64) -> Self {
        Self {
            status: VerdictStatus::Holds,
            witnesses: Vec::new(),
            samples_used: 0,
            min_margin,
        }
    }

    pub fn is_violated(&self) -> bool {
        self.status.is_violated()
    }
}

/// Tracks the smallest margins over a stream of evaluations.
#[derive(Debug)]
pub(crate) struct WitnessCollector {
    eps: f64,
    samples: usize,
    min_margin: f64,
    worst: Vec<Witness>,
}

impl WitnessCollector {
    pub(crate) fn new(eps: f64) -> Self {
        Self {
            eps,
            samples: 0,
            min_margin: f64::INFINITY,
            worst: Vec::new(),
        }
    }

    pub(crate) fn count_sample(&mut self) {
        self.samples += 1;
    }

    pub(crate) fn offer(&mut self, t: f64, x: &[f64], x_prime: &[f64], atom: Option<usize>, margin: f64) {
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        self.min_margin = self.min_margin.min(margin);
        if margin >= -self.eps {
            return;
        }
        if self.worst.len() == MAX_WITNESSES && margin >= self.worst[MAX_WITNESSES - 1].margin {
            return;
        }
        let w = Witness {
            t,
            x: x.to_vec(),
            x_prime: x_prime.to_vec(),
            atom,
            margin,
        };
        // stable insertion keeps earlier samples ahead on ties
        let pos = self.worst.partition_point(|o| o.margin <= margin);
        self.worst.insert(pos, w);
        self.worst.truncate(MAX_WITNESSES);
    }

    /// Sampled verdict: never `Holds`.
    pub(crate) fn sampled(self) -> Verdict {
        Verdict {
            status: if self.worst.is_empty() {
                VerdictStatus::NoViolationFound
            } else {
                VerdictStatus::Violated
            },
            witnesses: self.worst,
            samples_used: self.samples,
            min_margin: self.min_margin,
        }
    }

    /// Verdict of an exact reduction: `Violated` exactly when the collector
    /// holds a witness, otherwise `Holds` with the given slack.
    pub(crate) fn exact(self, slack: f64) -> Verdict {
        if self.worst.is_empty() {
            Verdict::holds(slack)
        } else {
            Verdict {
                status: VerdictStatus::Violated,
                samples_used: self.samples,
                min_margin: self.worst[0].margin,
                witnesses: self.worst,
            }
        }
    }
}

/// Random probe points over a [`SampleDomain`].
struct Probe<'a> {
    rng: StreamRng,
    domain: &'a SampleDomain,
    m: usize,
    horizon: (f64, f64),
}

impl<'a> Probe<'a> {
    fn new(p: &'a ComparisonProblem, stream_id: u64) -> Self {
        Self {
            rng: stream(p.sampling.seed, stream_id),
            domain: &p.sampling,
            m: p.dim(),
            horizon: (p.t0, p.t_end),
        }
    }

    fn time(&mut self) -> f64 {
        let (a, b) = self.horizon;
        a + (b - a) * self.rng.random::<f64>()
    }

    /// Uniform in the box `[-R, R]^m`.
    fn box_point(&mut self) -> Vec<f64> {
        let r = self.domain.radius;
        (0..self.m).map(|_| self.rng.random_range(-r..=r)).collect()
    }

    fn magnitude(&mut self) -> f64 {
        let ladder = &self.domain.ladder;
        let level = ladder[self.rng.random_range(0..ladder.len())];
        level * (0.5 + 0.5 * self.rng.random::<f64>())
    }

    /// Each coordinate independently zero, positive or negative with a
    /// magnitude drawn from the ladder.
    fn signed_ladder_point(&mut self) -> Vec<f64> {
        (0..self.m)
            .map(|_| {
                let u: f64 = self.rng.random();
                if u < 0.2 {
                    0.0
                } else if u < 0.6 {
                    self.magnitude()
                } else {
                    -self.magnitude()
                }
            })
            .collect()
    }

    /// Nonnegative point, coordinates zero with probability 1/4.
    fn nonneg_ladder_point(&mut self) -> Vec<f64> {
        (0..self.m)
            .map(|_| {
                if self.rng.random::<f64>() < 0.25 {
                    0.0
                } else {
                    self.magnitude()
                }
            })
            .collect()
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn unit(m: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = scale;
    v
}

fn sigma_gap(p: &ComparisonProblem, t: f64, x: &[f64]) -> f64 {
    let s1 = p.model1.coefficients.diffusion(t, x);
    let s2 = p.model2.coefficients.diffusion(t, x);
    s1.iter().zip(&s2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `sigma1 == sigma2`: exact on affine pairs, sampled otherwise.
pub fn check_sigma_equal(p: &ComparisonProblem) -> Verdict {
    match p.affine_pair() {
        Some((a1, a2)) => sigma_equal_affine(p, a1, a2),
        None => check_sigma_equal_sampled(p),
    }
}

fn sigma_equal_affine(p: &ComparisonProblem, a1: &AffineCoefficients, a2: &AffineCoefficients) -> Verdict {
    let eps = p.tolerances.eps_check;
    let m = p.dim();
    let differs = (&a1.diffusion_offset - &a2.diffusion_offset).amax() > eps
        || (&a1.diffusion_linear - &a2.diffusion_linear).amax() > eps;
    let mut col = WitnessCollector::new(eps);
    if differs {
        // one of x = 0, x = ±e_j exposes any coefficient gap
        let mut candidates = vec![vec![0.0; m]];
        for j in 0..m {
            candidates.push(unit(m, j, 1.0));
            candidates.push(unit(m, j, -1.0));
        }
        for x in candidates {
            col.count_sample();
            let gap = sigma_gap(p, p.t0, &x);
            col.offer(p.t0, &x, &x, None, -gap);
        }
    }
    col.exact(0.0)
}

/// Sampled `sigma1 == sigma2` at box and ladder points.
pub fn check_sigma_equal_sampled(p: &ComparisonProblem) -> Verdict {
    let mut probe = Probe::new(p, STREAM_SIGMA);
    let mut col = WitnessCollector::new(p.tolerances.eps_sample);
    for i in 0..p.sampling.count {
        let t = probe.time();
        let x = if i % 2 == 0 {
            probe.box_point()
        } else {
            probe.signed_ladder_point()
        };
        col.count_sample();
        let gap = sigma_gap(p, t, &x);
        col.offer(t, &x, &x, None, -gap);
    }
    col.sampled()
}

fn sigma_row_change(p: &ComparisonProblem, k: usize, t: f64, x: &[f64], y: &[f64]) -> f64 {
    let c = &p.model1.coefficients;
    let d = c.d;
    let sx = c.diffusion(t, x);
    let sy = c.diffusion(t, y);
    (0..d)
        .map(|a| (sx[k * d + a] - sy[k * d + a]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Condition (a) per coordinate.
pub fn check_condition_a(p: &ComparisonProblem) -> Vec<Verdict> {
    match p.affine_pair() {
        Some((a1, _)) => {
            let eps = p.tolerances.eps_check;
            let (m, d) = (p.dim(), a1.d);
            (0..m)
                .map(|k| {
                    let mut col = WitnessCollector::new(eps);
                    for j in (0..m).filter(|&j| j != k) {
                        let coupled = (0..d).any(|a| a1.diffusion_linear_entry(k, a, j).abs() > eps);
                        if coupled {
                            let x = vec![0.0; m];
                            let y = unit(m, j, 1.0);
                            col.count_sample();
                            let change = sigma_row_change(p, k, p.t0, &y, &x);
                            col.offer(p.t0, &x, &y, None, -change);
                        }
                    }
                    col.exact(0.0)
                })
                .collect()
        }
        None => check_condition_a_sampled(p),
    }
}

/// Sampled condition (a): perturbing `x_j`, `j != k`, over the ladder must
/// leave row `k` of `sigma1` unchanged.
pub fn check_condition_a_sampled(p: &ComparisonProblem) -> Vec<Verdict> {
    let m = p.dim();
    (0..m)
        .map(|k| {
            let mut probe = Probe::new(p, STREAM_A + k as u64);
            let mut col = WitnessCollector::new(p.tolerances.eps_sample);
            if m == 1 {
                return col.sampled();
            }
            for i in 0..p.sampling.count {
                let t = probe.time();
                let x = probe.box_point();
                let mut j = i % (m - 1);
                if j >= k {
                    j += 1;
                }
                let delta = if probe.rng.random::<bool>() {
                    probe.magnitude()
                } else {
                    -probe.magnitude()
                };
                let mut y = x.clone();
                y[j] += delta;
                col.count_sample();
                let change = sigma_row_change(p, k, t, &y, &x);
                col.offer(t, &x, &y, None, -change);
            }
            col.sampled()
        })
        .collect()
}

/// `x_k + gamma1_k(t, x + x', e_j) - gamma2_k(t, x', e_j)`.
pub fn condition_b_margin(p: &ComparisonProblem, k: usize, atom: usize, t: f64, x: &[f64], x_prime: &[f64]) -> f64 {
    let mark = p.marks().mark(atom);
    let g1 = p.model1.coefficients.jump(t, &add(x, x_prime), atom, mark);
    let g2 = p.model2.coefficients.jump(t, x_prime, atom, mark);
    x[k] + g1[k] - g2[k]
}

/// `[b1_k - ∫ gamma1_k dn](t, delta + x') - [b2_k - ∫ gamma2_k dn](t, x')`.
pub fn condition_c_margin(p: &ComparisonProblem, k: usize, t: f64, delta: &[f64], x_prime: &[f64]) -> f64 {
    let y = add(delta, x_prime);
    compensated_drift_k(&p.model1, k, t, &y) - compensated_drift_k(&p.model2, k, t, x_prime)
}

fn compensated_drift_k(model: &crate::model::SdeModel, k: usize, t: f64, x: &[f64]) -> f64 {
    let m = model.dim();
    let mut comp = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    model.add_compensator(t, x, &mut scratch, &mut comp);
    model.coefficients.drift(t, x)[k] - comp[k]
}

/// Witness location for an affine inequality `coef . z + constant >= 0`
/// violated through coefficient `coef_i` of direction `i`.
///
/// Returns the scale `s` so that `z = s e_i` (with the sign needed to make the
/// coefficient term negative) gives a value `<= min(constant, 0) - |coef_i|`.
fn witness_scale(coef: f64, constant: f64) -> f64 {
    1.0 + constant.max(0.0) / coef.abs()
}

/// Condition (b) per coordinate.
pub fn check_condition_b(p: &ComparisonProblem) -> Vec<Verdict> {
    match p.affine_pair() {
        Some((a1, a2)) => condition_b_affine(p, a1, a2),
        None => check_condition_b_sampled(p),
    }
}

fn condition_b_affine(p: &ComparisonProblem, a1: &AffineCoefficients, a2: &AffineCoefficients) -> Vec<Verdict> {
    let eps = p.tolerances.eps_check;
    let m = p.dim();
    let t = p.t0;
    let zero = vec![0.0; m];
    (0..m)
        .map(|k| {
            let mut col = WitnessCollector::new(eps);
            let mut slack = f64::INFINITY;
            for j in p.marks().active() {
                let (g1, g2) = (&a1.jumps[j], &a2.jumps[j]);
                let constant = g1.offset[k] - g2.offset[k];
                slack = slack.min(constant);
                if constant < -eps {
                    col.count_sample();
                    col.offer(t, &zero, &zero, Some(j), condition_b_margin(p, k, j, t, &zero, &zero));
                }
                for i in 0..m {
                    // x'-coefficient must vanish
                    let dx = g1.matrix[(k, i)] - g2.matrix[(k, i)];
                    if dx.abs() > eps {
                        let s = witness_scale(dx, constant);
                        let xp = unit(m, i, -s * dx.signum());
                        col.count_sample();
                        col.offer(t, &zero, &xp, Some(j), condition_b_margin(p, k, j, t, &zero, &xp));
                    }
                    // x-coefficient must be nonnegative
                    let cx = if i == k { 1.0 } else { 0.0 } + g1.matrix[(k, i)];
                    slack = slack.min(cx.max(0.0).min(constant.max(0.0)) + cx.min(0.0));
                    if cx < -eps {
                        let s = witness_scale(cx, constant);
                        let x = unit(m, i, s);
                        col.count_sample();
                        col.offer(t, &x, &zero, Some(j), condition_b_margin(p, k, j, t, &x, &zero));
                    }
                }
            }
            col.exact(if slack.is_finite() { slack } else { 0.0 })
        })
        .collect()
}

/// Sampled condition (b) over `x >= 0` (including `x = 0`), free `x'` and
/// every positive-weight atom.
pub fn check_condition_b_sampled(p: &ComparisonProblem) -> Vec<Verdict> {
    let m = p.dim();
    let atoms: Vec<usize> = p.marks().active().collect();
    (0..m)
        .map(|k| {
            let mut probe = Probe::new(p, STREAM_B + k as u64);
            let mut col = WitnessCollector::new(p.tolerances.eps_sample);
            for i in 0..p.sampling.count {
                let (t, x, xp) = if i == 0 {
                    (p.t0, vec![0.0; m], vec![0.0; m])
                } else {
                    (probe.time(), probe.nonneg_ladder_point(), probe.box_point())
                };
                col.count_sample();
                for &j in &atoms {
                    col.offer(t, &x, &xp, Some(j), condition_b_margin(p, k, j, t, &x, &xp));
                }
            }
            col.sampled()
        })
        .collect()
}

/// Condition (c) per coordinate.
pub fn check_condition_c(p: &ComparisonProblem) -> Vec<Verdict> {
    match p.affine_pair() {
        Some((a1, a2)) => condition_c_affine(p, a1, a2),
        None => check_condition_c_sampled(p),
    }
}

fn condition_c_affine(p: &ComparisonProblem, a1: &AffineCoefficients, a2: &AffineCoefficients) -> Vec<Verdict> {
    let eps = p.tolerances.eps_check;
    let m = p.dim();
    let t = p.t0;
    let zero = vec![0.0; m];
    let (m1, d1) = a1.compensated_drift(p.marks());
    let (m2, d2) = a2.compensated_drift(p.marks());
    (0..m)
        .map(|k| {
            let mut col = WitnessCollector::new(eps);
            let constant = d1[k] - d2[k];
            if constant < -eps {
                col.count_sample();
                col.offer(t, &zero, &zero, None, condition_c_margin(p, k, t, &zero, &zero));
            }
            for i in 0..m {
                let dx = m1[(k, i)] - m2[(k, i)];
                if dx.abs() > eps {
                    let s = witness_scale(dx, constant);
                    let xp = unit(m, i, -s * dx.signum());
                    col.count_sample();
                    col.offer(t, &zero, &xp, None, condition_c_margin(p, k, t, &zero, &xp));
                }
                if i != k && m1[(k, i)] < -eps {
                    let s = witness_scale(m1[(k, i)], constant);
                    let delta = unit(m, i, s);
                    col.count_sample();
                    col.offer(t, &delta, &zero, None, condition_c_margin(p, k, t, &delta, &zero));
                }
            }
            col.exact(constant)
        })
        .collect()
}

/// Sampled condition (c) over `delta >= 0` with `delta_k = 0` and free `x'`.
pub fn check_condition_c_sampled(p: &ComparisonProblem) -> Vec<Verdict> {
    let m = p.dim();
    (0..m)
        .map(|k| {
            let mut probe = Probe::new(p, STREAM_C + k as u64);
            let mut col = WitnessCollector::new(p.tolerances.eps_sample);
            for i in 0..p.sampling.count {
                let (t, delta, xp) = if i == 0 {
                    (p.t0, vec![0.0; m], vec![0.0; m])
                } else {
                    let mut delta = probe.nonneg_ladder_point();
                    delta[k] = 0.0;
                    (probe.time(), delta, probe.box_point())
                };
                col.count_sample();
                col.offer(t, &delta, &xp, None, condition_c_margin(p, k, t, &delta, &xp));
            }
            col.sampled()
        })
        .collect()
}

/// Left and right sides of the single-inequality characterization at
/// `(t, x, x')`:
///
/// ```text
/// lhs = -2 <x^-, b1(t, x^+ + x') - b2(t, x')>
///     + sum_k 1{x_k < 0} |sigma1_k(t, x + x') - sigma2_k(t, x')|^2
///     + sum_k 1{x_k < 0} ∫ [ ((x_k + Δγ_k)^-)^2 - x_k^2 - 2 x_k Δγ_k ] dn
///     + sum_k 1{x_k >= 0} ∫ ((x_k + Δγ_k)^-)^2 dn
/// rhs = C* |x^-|^2
/// ```
///
/// with `Δγ_k = gamma1_k(t, x + x', e) - gamma2_k(t, x', e)`.
pub fn eval_ii_prime(p: &ComparisonProblem, t: f64, x: &[f64], x_prime: &[f64]) -> (f64, f64) {
    let c1 = &p.model1.coefficients;
    let c2 = &p.model2.coefficients;
    let (m, d) = (c1.m, c1.d);
    let neg: Vec<f64> = x.iter().map(|v| negative_part(*v)).collect();
    let pos_plus: Vec<f64> = x.iter().zip(x_prime).map(|(v, w)| v.max(0.0) + w).collect();
    let shifted = add(x, x_prime);

    let b1 = c1.drift(t, &pos_plus);
    let b2 = c2.drift(t, x_prime);
    let mut lhs = -2.0 * (0..m).map(|k| neg[k] * (b1[k] - b2[k])).sum::<f64>();

    let s1 = c1.diffusion(t, &shifted);
    let s2 = c2.diffusion(t, x_prime);
    for k in (0..m).filter(|&k| x[k] < 0.0) {
        lhs += (0..d).map(|a| (s1[k * d + a] - s2[k * d + a]).powi(2)).sum::<f64>();
    }

    let marks: &MarkMeasure = p.marks();
    for j in marks.active() {
        let w = marks.weight(j);
        let e = marks.mark(j);
        let g1 = c1.jump(t, &shifted, j, e);
        let g2 = c2.jump(t, x_prime, j, e);
        for k in 0..m {
            let dg = g1[k] - g2[k];
            let after = negative_part(x[k] + dg).powi(2);
            if x[k] < 0.0 {
                lhs += w * (after - x[k] * x[k] - 2.0 * x[k] * dg);
            } else {
                lhs += w * after;
            }
        }
    }
    let rhs = p.c_star() * neg.iter().map(|v| v * v).sum::<f64>();
    (lhs, rhs)
}

/// Sampled check of the single-inequality characterization. The first probes
/// cover every magnitude of the ladder in every sign pattern (for `m <= 10`);
/// the rest mix signs and magnitudes per coordinate.
pub fn check_ii_prime(p: &ComparisonProblem) -> Verdict {
    let m = p.dim();
    let mut probe = Probe::new(p, STREAM_II);
    let mut col = WitnessCollector::new(p.tolerances.eps_sample);
    let budget = p.sampling.count;
    let mut structured = Vec::new();
    if m <= 10 {
        for &level in &p.sampling.ladder {
            for pattern in 0..(1u32 << m) {
                let x: Vec<f64> = (0..m)
                    .map(|k| if pattern >> k & 1 == 1 { -level } else { level })
                    .collect();
                structured.push(x);
            }
        }
    }
    for i in 0..budget {
        let t = probe.time();
        let xp = probe.box_point();
        let x = match structured.get(i) {
            Some(x) => x.clone(),
            None => probe.signed_ladder_point(),
        };
        let (lhs, rhs) = eval_ii_prime(p, t, &x, &xp);
        col.count_sample();
        col.offer(t, &x, &xp, None, rhs - lhs);
    }
    col.sampled()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem31Report {
    pub sigma_equal: Verdict,
    pub cond_a: Vec<Verdict>,
    pub cond_b: Vec<Verdict>,
    pub cond_c: Vec<Verdict>,
    pub ii_prime: Verdict,
    /// Combined status of sigma-equality and (a), (b), (c).
    pub battery: VerdictStatus,
    pub overall: VerdictStatus,
    /// Whether the battery and the single inequality agree on violation.
    pub agreement: bool,
}

impl Theorem31Report {
    /// Most negative margin over all violated sub-verdicts.
    pub fn worst_margin(&self) -> Option<f64> {
        std::iter::once(&self.sigma_equal)
            .chain(&self.cond_a)
            .chain(&self.cond_b)
            .chain(&self.cond_c)
            .filter(|v| v.is_violated())
            .map(|v| v.min_margin)
            .reduce(f64::min)
    }
}

/// Runs every sub-check and combines them.
pub fn check_theorem31(p: &ComparisonProblem) -> Theorem31Report {
    let sigma_equal = check_sigma_equal(p);
    let cond_a = check_condition_a(p);
    let cond_b = check_condition_b(p);
    let cond_c = check_condition_c(p);
    let ii_prime = check_ii_prime(p);
    let battery = VerdictStatus::combine(
        std::iter::once(&sigma_equal)
            .chain(&cond_a)
            .chain(&cond_b)
            .chain(&cond_c)
            .map(|v| v.status),
    );
    let overall = VerdictStatus::combine([battery, ii_prime.status]);
    let overall = match (battery, overall) {
        // the sampled inequality never upgrades to Holds, nor downgrades it
        (VerdictStatus::Holds, VerdictStatus::NoViolationFound) => VerdictStatus::Holds,
        (_, s) => s,
    };
    Theorem31Report {
        agreement: battery.is_violated() == ii_prime.is_violated(),
        sigma_equal,
        cond_a,
        cond_b,
        cond_c,
        ii_prime,
        battery,
        overall,
    }
}

/// One-dimensional specializations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorollaryVariant {
    /// General jumps: sigma equality, compensated drift order, jump monotonicity.
    Jumps,
    /// `gamma1 == gamma2`: sigma equality, `b1 >= b2`, jump monotonicity.
    EqualJumps,
    /// `gamma1 == gamma2 == 0`: sigma equality and `b1 >= b2`.
    NoJumps,
}

/// Checks the scalar corollary conditions directly (not through the
/// multidimensional battery).
pub fn check_corollary_1d(p: &ComparisonProblem, variant: CorollaryVariant) -> Result<Verdict, ConditionError> {
    p.validate()?;
    let m = p.dim();
    if m != 1 {
        return Err(ConditionError::DimensionError(m));
    }
    match variant {
        CorollaryVariant::Jumps => {}
        CorollaryVariant::EqualJumps => {
            if !jumps_equal(p, false) {
                return Err(ConditionError::VariantPreconditionError(
                    "equal-jump variant needs gamma1 == gamma2".into(),
                ));
            }
        }
        CorollaryVariant::NoJumps => {
            if !jumps_equal(p, true) {
                return Err(ConditionError::VariantPreconditionError(
                    "no-jump variant needs gamma1 == gamma2 == 0".into(),
                ));
            }
        }
    }
    let sigma = check_sigma_equal(p);
    let drift = match variant {
        CorollaryVariant::Jumps => scalar_drift_line(p, true),
        _ => scalar_drift_line(p, false),
    };
    let mut parts = vec![sigma, drift];
    if variant != CorollaryVariant::NoJumps {
        parts.push(scalar_jump_line(p));
    }
    let status = VerdictStatus::combine(parts.iter().map(|v| v.status));
    let samples_used = parts.iter().map(|v| v.samples_used).sum();
    let min_margin = parts.iter().map(|v| v.min_margin).fold(f64::INFINITY, f64::min);
    let mut witnesses: Vec<Witness> = parts.into_iter().flat_map(|v| v.witnesses).collect();
    witnesses.sort_by(|a, b| a.margin.total_cmp(&b.margin));
    witnesses.truncate(MAX_WITNESSES);
    Ok(Verdict {
        status,
        witnesses,
        samples_used,
        min_margin,
    })
}

fn jumps_equal(p: &ComparisonProblem, require_zero: bool) -> bool {
    let eps = p.tolerances.eps_check;
    if let Some((a1, a2)) = p.affine_pair() {
        return p.marks().active().all(|j| {
            let (g1, g2) = (&a1.jumps[j], &a2.jumps[j]);
            let same = (&g1.matrix - &g2.matrix).amax() <= eps && (g1.offset[0] - g2.offset[0]).abs() <= eps;
            let zero = g1.matrix.amax() <= eps && g1.offset[0].abs() <= eps;
            same && (!require_zero || zero)
        });
    }
    let mut probe = Probe::new(p, STREAM_COROLLARY);
    let eps = p.tolerances.eps_sample;
    let atoms: Vec<usize> = p.marks().active().collect();
    (0..p.sampling.count.min(1000)).all(|_| {
        let t = probe.time();
        let x = probe.box_point();
        atoms.iter().all(|&j| {
            let e = p.marks().mark(j);
            let g1 = p.model1.coefficients.jump(t, &x, j, e)[0];
            let g2 = p.model2.coefficients.jump(t, &x, j, e)[0];
            (g1 - g2).abs() <= eps && (!require_zero || g1.abs() <= eps)
        })
    })
}

/// `b1(x) [- ∫ gamma1 dn] >= b2(x) [- ∫ gamma2 dn]` for all `x`.
fn scalar_drift_line(p: &ComparisonProblem, compensated: bool) -> Verdict {
    let drift_at = |model: &crate::model::SdeModel, t: f64, x: f64| {
        if compensated {
            compensated_drift_k(model, 0, t, &[x])
        } else {
            model.coefficients.drift(t, &[x])[0]
        }
    };
    if let Some((a1, a2)) = p.affine_pair() {
        let eps = p.tolerances.eps_check;
        let (slope1, off1, slope2, off2) = if compensated {
            let (m1, d1) = a1.compensated_drift(p.marks());
            let (m2, d2) = a2.compensated_drift(p.marks());
            (m1[(0, 0)], d1[0], m2[(0, 0)], d2[0])
        } else {
            (a1.drift_matrix[(0, 0)], a1.drift_offset[0], a2.drift_matrix[(0, 0)], a2.drift_offset[0])
        };
        let mut col = WitnessCollector::new(eps);
        let constant = off1 - off2;
        let slope = slope1 - slope2;
        let mut probes = Vec::new();
        if constant < -eps {
            probes.push(0.0);
        }
        if slope.abs() > eps {
            probes.push(-witness_scale(slope, constant) * slope.signum());
        }
        for x in probes {
            col.count_sample();
            let margin = drift_at(&p.model1, p.t0, x) - drift_at(&p.model2, p.t0, x);
            col.offer(p.t0, &[x], &[x], None, margin);
        }
        return col.exact(constant);
    }
    let mut probe = Probe::new(p, STREAM_COROLLARY + 1);
    let mut col = WitnessCollector::new(p.tolerances.eps_sample);
    for i in 0..p.sampling.count {
        let t = probe.time();
        let x = if i % 2 == 0 {
            probe.box_point()[0]
        } else {
            probe.signed_ladder_point()[0]
        };
        col.count_sample();
        let margin = drift_at(&p.model1, t, x) - drift_at(&p.model2, t, x);
        col.offer(t, &[x], &[x], None, margin);
    }
    col.sampled()
}

/// `x1 + gamma1(t, x1, e) >= x2 + gamma2(t, x2, e)` for all `x1 >= x2`, n-a.e.
/// Witnesses record `x = [x1]`, `x_prime = [x2]`.
fn scalar_jump_line(p: &ComparisonProblem) -> Verdict {
    let margin_at = |t: f64, x1: f64, x2: f64, j: usize| {
        let e = p.marks().mark(j);
        let g1 = p.model1.coefficients.jump(t, &[x1], j, e)[0];
        let g2 = p.model2.coefficients.jump(t, &[x2], j, e)[0];
        x1 + g1 - x2 - g2
    };
    if let Some((a1, a2)) = p.affine_pair() {
        let eps = p.tolerances.eps_check;
        let mut col = WitnessCollector::new(eps);
        let mut slack = f64::INFINITY;
        for j in p.marks().active() {
            // x1 = x2 + s: s (1 + G1) + x2 (G1 - G2) + (g1 - g2)
            let g1 = a1.jumps[j].matrix[(0, 0)];
            let g2 = a2.jumps[j].matrix[(0, 0)];
            let constant = a1.jumps[j].offset[0] - a2.jumps[j].offset[0];
            let spread = 1.0 + g1;
            let level = g1 - g2;
            slack = slack.min(constant);
            let mut probes = Vec::new();
            if constant < -eps {
                probes.push((0.0, 0.0));
            }
            if spread < -eps {
                probes.push((witness_scale(spread, constant), 0.0));
            }
            if level.abs() > eps {
                let x2 = -witness_scale(level, constant) * level.signum();
                probes.push((x2, x2));
            }
            for (x1, x2) in probes {
                col.count_sample();
                col.offer(p.t0, &[x1], &[x2], Some(j), margin_at(p.t0, x1, x2, j));
            }
        }
        return col.exact(if slack.is_finite() { slack } else { 0.0 });
    }
    let mut probe = Probe::new(p, STREAM_COROLLARY + 2);
    let mut col = WitnessCollector::new(p.tolerances.eps_sample);
    let atoms: Vec<usize> = p.marks().active().collect();
    for i in 0..p.sampling.count {
        let t = probe.time();
        let x2 = probe.box_point()[0];
        let s = if i % 4 == 0 { 0.0 } else { probe.magnitude() };
        col.count_sample();
        for &j in &atoms {
            col.offer(t, &[x2 + s], &[x2], Some(j), margin_at(t, x2 + s, x2, j));
        }
    }
    col.sampled()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AffineCoefficients, MarkMeasure, SdeModel};
    use nalgebra::DMatrix;

    fn pair(a1: AffineCoefficients, a2: AffineCoefficients, marks: MarkMeasure) -> ComparisonProblem {
        let m = a1.m;
        let m1 = SdeModel::affine(a1, marks.clone()).unwrap();
        let m2 = SdeModel::affine(a2, marks).unwrap();
        ComparisonProblem::new(m1, m2, (0.0, 1.0), vec![0.0; m], vec![0.0; m])
    }

    fn one_atom() -> MarkMeasure {
        MarkMeasure::from_pairs(1, [(vec![1.0], 1.0)])
    }

    #[test]
    fn identical_diffusions_hold() {
        let mut a = AffineCoefficients::zeros(2, 1, 0);
        a.diffusion_offset[(0, 0)] = 0.3;
        a.set_diffusion_linear(1, 0, 1, 0.7);
        let p = pair(a.clone(), a, MarkMeasure::empty(1));
        assert_eq!(check_sigma_equal(&p).status, VerdictStatus::Holds);
    }

    #[test]
    fn small_constant_sigma_gap_is_violated() {
        let a2 = AffineCoefficients::zeros(1, 1, 0);
        let mut a1 = a2.clone();
        a1.diffusion_offset[(0, 0)] = 1e-3;
        let p = pair(a1, a2, MarkMeasure::empty(1));
        let v = check_sigma_equal(&p);
        assert_eq!(v.status, VerdictStatus::Violated);
        assert!(v.witnesses[0].margin < -p.tolerances.eps_check);
        assert!((v.witnesses[0].margin + 1e-3).abs() < 1e-15);
    }

    #[test]
    fn condition_a_detects_cross_dependence() {
        let mut a = AffineCoefficients::zeros(2, 1, 0);
        a.set_diffusion_linear(0, 0, 1, 1.0);
        let p = pair(a.clone(), a, MarkMeasure::empty(1));
        let v = check_condition_a(&p);
        assert_eq!(v[0].status, VerdictStatus::Violated);
        assert_eq!(v[0].witnesses[0].x_prime, vec![0.0, 1.0]);
        assert_eq!(v[1].status, VerdictStatus::Holds);
    }

    #[test]
    fn condition_a_diagonal_and_constant_hold() {
        let mut a = AffineCoefficients::zeros(3, 2, 0);
        for k in 0..3 {
            a.set_diffusion_linear(k, 1, k, 0.4);
        }
        a.diffusion_offset = DMatrix::from_element(3, 2, 0.2);
        let p = pair(a.clone(), a, MarkMeasure::empty(1));
        assert!(check_condition_a(&p).iter().all(|v| v.status == VerdictStatus::Holds));
    }

    #[test]
    fn condition_b_constant_jumps() {
        let mut a1 = AffineCoefficients::zeros(1, 1, 1);
        let a2 = AffineCoefficients::zeros(1, 1, 1);
        a1.jumps[0].offset[0] = 1.0;
        let p = pair(a1.clone(), a2.clone(), one_atom());
        assert_eq!(check_condition_b(&p)[0].status, VerdictStatus::Holds);

        a1.jumps[0].offset[0] = -0.5;
        let p = pair(a1, a2, one_atom());
        let v = &check_condition_b(&p)[0];
        assert_eq!(v.status, VerdictStatus::Violated);
        let w = &v.witnesses[0];
        assert_eq!((w.x.clone(), w.x_prime.clone(), w.margin), (vec![0.0], vec![0.0], -0.5));
    }

    #[test]
    fn condition_b_zero_jumps_hold() {
        let a = AffineCoefficients::zeros(2, 1, 1);
        let p = pair(a.clone(), a, one_atom());
        assert!(check_condition_b(&p).iter().all(|v| v.status == VerdictStatus::Holds));
    }

    #[test]
    fn condition_b_overshooting_jump_matches_grid_search() {
        let mut a = AffineCoefficients::zeros(1, 1, 1);
        a.jumps[0].matrix[(0, 0)] = -1.5;
        let p = pair(a.clone(), a, one_atom());
        // oracle: dense grid over x in [0, 10], x' in [-10, 10]
        let mut worst = f64::INFINITY;
        for i in 0..=100 {
            for j in 0..=200 {
                let x = 0.1 * i as f64;
                let xp = -10.0 + 0.1 * j as f64;
                worst = worst.min(x + (-1.5) * (x + xp) - (-1.5) * xp);
            }
        }
        assert!(worst < 0.0);
        assert_eq!(check_condition_b(&p)[0].status, VerdictStatus::Violated);
    }

    #[test]
    fn condition_c_examples() {
        // drift gap of one with nonnegative off-diagonals
        let mut a2 = AffineCoefficients::zeros(2, 1, 0);
        a2.drift_matrix = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.2, -1.0]);
        let mut a1 = a2.clone();
        a1.drift_offset = vec![1.0, 1.0];
        let p = pair(a1, a2, MarkMeasure::empty(1));
        assert!(check_condition_c(&p).iter().all(|v| v.status == VerdictStatus::Holds));

        // negative off-diagonal coupling
        let mut a = AffineCoefficients::zeros(2, 1, 0);
        a.drift_matrix = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 0.0]);
        let p = pair(a.clone(), a, MarkMeasure::empty(1));
        let v = check_condition_c(&p);
        assert_eq!(v[0].status, VerdictStatus::Violated);
        assert_eq!(v[1].status, VerdictStatus::Holds);
        // oracle: along delta = (0, s) the margin is -s
        for s in [0.1, 1.0, 3.0] {
            assert_eq!(condition_c_margin(&p, 0, 0.0, &[0.0, s], &[0.0, 0.0]), -s);
        }
    }

    #[test]
    fn condition_c_scalar_is_compensated_drift_order() {
        let mut a1 = AffineCoefficients::zeros(1, 1, 1);
        let mut a2 = AffineCoefficients::zeros(1, 1, 1);
        a1.drift_offset[0] = 1.0;
        a1.jumps[0].offset[0] = 0.5;
        a2.jumps[0].offset[0] = 0.0;
        // d1 = 1 - 0.5 = 0.5 >= d2 = 0
        let p = pair(a1.clone(), a2.clone(), one_atom());
        assert_eq!(check_condition_c(&p)[0].status, VerdictStatus::Holds);
        a1.jumps[0].offset[0] = 1.5;
        let p = pair(a1, a2, one_atom());
        assert_eq!(check_condition_c(&p)[0].status, VerdictStatus::Violated);
    }

    #[test]
    fn ii_prime_single_drift_term() {
        let mut a1 = AffineCoefficients::zeros(1, 1, 0);
        a1.drift_offset[0] = 1.0;
        let p = pair(a1, AffineCoefficients::zeros(1, 1, 0), MarkMeasure::empty(1));
        let (lhs, rhs) = eval_ii_prime(&p, 0.0, &[-1.0], &[0.0]);
        assert_eq!(lhs, -2.0);
        assert_eq!(rhs, p.c_star());
    }

    #[test]
    fn ii_prime_vanishes_on_nonneg_x_with_equal_jumps() {
        let mut a = AffineCoefficients::zeros(2, 1, 1);
        a.jumps[0].offset = vec![0.3, -0.2];
        a.jumps[0].matrix = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, -0.5]);
        a.diffusion_offset[(0, 0)] = 1.0;
        let p = pair(a.clone(), a, one_atom());
        let (lhs, _) = eval_ii_prime(&p, 0.3, &[0.5, 1.0], &[-1.0, 2.0]);
        assert_eq!(lhs, 0.0);
    }

    #[test]
    fn ii_prime_reversed_drift_fails_for_small_eps() {
        let mut a2 = AffineCoefficients::zeros(1, 1, 0);
        a2.drift_offset[0] = 1.0;
        let p = pair(AffineCoefficients::zeros(1, 1, 0), a2, MarkMeasure::empty(1));
        let c = p.c_star();
        for eps in [1e-6, 1e-4, 1e-2, 0.1, 1.0] {
            let (lhs, rhs) = eval_ii_prime(&p, 0.0, &[-eps], &[0.0]);
            assert!((lhs - 2.0 * eps).abs() < 1e-15);
            assert!((rhs - c * eps * eps).abs() < 1e-15);
            assert_eq!(lhs > rhs, eps < 2.0 / c);
        }
        let v = check_ii_prime(&p);
        assert_eq!(v.status, VerdictStatus::Violated);
        assert!(v.witnesses[0].x[0] < 0.0);
    }

    #[test]
    fn ii_prime_catches_sigma_gap() {
        let mut a1 = AffineCoefficients::zeros(1, 1, 0);
        a1.diffusion_offset[(0, 0)] = 0.5;
        let p = pair(a1, AffineCoefficients::zeros(1, 1, 0), MarkMeasure::empty(1));
        assert_eq!(check_ii_prime(&p).status, VerdictStatus::Violated);
    }

    #[test]
    fn combine_rule() {
        use VerdictStatus::*;
        assert_eq!(VerdictStatus::combine([Holds, Holds]), Holds);
        assert_eq!(VerdictStatus::combine([Holds, NoViolationFound]), NoViolationFound);
        assert_eq!(VerdictStatus::combine([NoViolationFound, Violated, Holds]), Violated);
    }

    #[test]
    fn corollary_dimension_and_precondition_errors() {
        let a = AffineCoefficients::zeros(2, 1, 0);
        let p = pair(a.clone(), a, MarkMeasure::empty(1));
        assert_eq!(
            check_corollary_1d(&p, CorollaryVariant::NoJumps),
            Err(ConditionError::DimensionError(2))
        );
        let mut a1 = AffineCoefficients::zeros(1, 1, 1);
        a1.jumps[0].offset[0] = 0.5;
        let p = pair(a1, AffineCoefficients::zeros(1, 1, 1), one_atom());
        assert!(matches!(
            check_corollary_1d(&p, CorollaryVariant::EqualJumps),
            Err(ConditionError::VariantPreconditionError(_))
        ));
        assert!(matches!(
            check_corollary_1d(&p, CorollaryVariant::NoJumps),
            Err(ConditionError::VariantPreconditionError(_))
        ));
        assert!(check_corollary_1d(&p, CorollaryVariant::Jumps).is_ok());
    }

    #[test]
    fn classical_no_jump_case_holds() {
        let mut a2 = AffineCoefficients::zeros(1, 1, 0);
        a2.drift_matrix[(0, 0)] = -0.5;
        a2.diffusion_offset[(0, 0)] = 0.4;
        let mut a1 = a2.clone();
        a1.drift_offset[0] = 1.0;
        let p = pair(a1, a2, MarkMeasure::empty(1));
        let v = check_corollary_1d(&p, CorollaryVariant::NoJumps).unwrap();
        assert_eq!(v.status, VerdictStatus::Holds);
        assert_eq!(check_theorem31(&p).overall, VerdictStatus::Holds);
    }
}
