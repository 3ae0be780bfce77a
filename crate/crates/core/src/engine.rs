//! Jump-adapted Euler–Maruyama simulation with shared drivers.
//!
//! The uniform grid `t0 + i h` is merged with the exact jump times of the
//! compound Poisson driver. Between events the scheme integrates the
//! uncompensated form
//!
//! ```text
//! X <- X + (b(t, X) - sum_j w_j gamma(t, X, e_j)) dt + sigma(t, X) dW
//! ```
//!
//! and at a jump of atom `j` applies `X <- X + gamma(tau, X_{tau-}, e_j)`.
//! Both models of a comparison problem consume the same [`DriverRealization`],
//! which makes the difference `X1 - X2` pathwise meaningful.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::linalg::norm2;
use crate::model::{ComparisonProblem, MarkMeasure, SdeModel};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub atom: usize,
}

/// One realization of the Brownian motion and the Poisson random measure
/// on a merged time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverRealization {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub noise_dim: usize,
    /// Segment end points, `times[0] = t0`, last entry `t_end`.
    pub times: Vec<f64>,
    /// Brownian increments, `noise_dim` per segment.
    pub increments: Vec<f64>,
    /// Jumps sorted by time.
    pub jumps: Vec<JumpEvent>,
    /// Atom of the jump occurring at `times[i]`, if any.
    pub event_atoms: Vec<Option<usize>>,
}

impl DriverRealization {
    pub fn segments(&self) -> usize {
        self.times.len() - 1
    }

    pub fn increment(&self, segment: usize) -> &[f64] {
        let d = self.noise_dim;
        &self.increments[segment * d..(segment + 1) * d]
    }
}

fn uniform_grid(t0: f64, t_end: f64, h: f64) -> Vec<f64> {
    let span = t_end - t0;
    let n = ((span / h) - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 * h).collect();
    grid.push(t_end);
    grid
}

/// Draws the shared noise for one path.
///
/// The stream is selected by `(seed, path_index)`: jump times and marks are
/// drawn first (exponential inter-arrival times at rate `n(E)`, categorical
/// marks with probabilities `w_j / n(E)`), then one Gaussian vector per
/// merged segment.
pub fn sample_drivers(
    marks: &MarkMeasure,
    horizon: (f64, f64),
    h: f64,
    noise_dim: usize,
    seed: u64,
    path_index: u64,
) -> Result<DriverRealization, EngineError> {
    let (t0, t_end) = horizon;
    let span = t_end - t0;
    if !(span > 0.0 && span.is_finite() && t0.is_finite()) {
        return Err(EngineError::InvalidHorizon { t0, t_end });
    }
    if !(h > 0.0 && h <= span) {
        return Err(EngineError::InvalidStep { h, span });
    }
    let mut rng = stream(seed, path_index);

    let active: Vec<usize> = marks.active().collect();
    let rate: f64 = active.iter().map(|&j| marks.weight(j)).sum();
    let mut jumps = Vec::new();
    if rate > 0.0 {
        let mut t = t0;
        loop {
            let gap: f64 = Exp1.sample(&mut rng);
            t += gap / rate;
            if t > t_end {
                break;
            }
            let u: f64 = rng.random::<f64>() * rate;
            let mut acc = 0.0;
            let mut atom = *active.last().unwrap();
            for &j in &active {
                acc += marks.weight(j);
                if u < acc {
                    atom = j;
                    break;
                }
            }
            jumps.push(JumpEvent { time: t, atom });
        }
    }

    let grid = uniform_grid(t0, t_end, h);
    let mut times = Vec::with_capacity(grid.len() + jumps.len());
    let mut event_atoms = Vec::with_capacity(grid.len() + jumps.len());
    times.push(t0);
    event_atoms.push(None);
    let mut next_jump = jumps.iter().peekable();
    for &g in &grid[1..] {
        while let Some(ev) = next_jump.peek() {
            if ev.time < g {
                times.push(ev.time);
                event_atoms.push(Some(ev.atom));
                next_jump.next();
            } else {
                break;
            }
        }
        match next_jump.peek() {
            Some(ev) if ev.time == g => {
                times.push(g);
                event_atoms.push(Some(ev.atom));
                next_jump.next();
            }
            _ => {
                times.push(g);
                event_atoms.push(None);
            }
        }
    }

    let segments = times.len() - 1;
    let mut increments = Vec::with_capacity(segments * noise_dim);
    for w in times.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        for _ in 0..noise_dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            increments.push(sd * z);
        }
    }
    Ok(DriverRealization {
        t0,
        t_end,
        h,
        noise_dim,
        times,
        increments,
        jumps,
        event_atoms,
    })
}

/// Simulated path. `states` holds the post-event value at each time,
/// row-major with `m` entries per time; `left_limits` keeps `X_{tau-}` for
/// every time index carrying a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub m: usize,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub left_limits: Vec<(usize, Vec<f64>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.m..(i + 1) * self.m]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

/// Integrates one model against a driver realization starting at
/// `(drivers.t0, x0)`.
pub fn simulate_path(model: &SdeModel, x0: &[f64], drivers: &DriverRealization) -> Result<Trajectory, EngineError> {
    let c = &model.coefficients;
    let (m, d) = (c.m, c.d);
    if x0.len() != m {
        return Err(EngineError::DriverMismatch(format!(
            "initial state has length {}, model dimension is {m}",
            x0.len()
        )));
    }
    if drivers.noise_dim != d {
        return Err(EngineError::DriverMismatch(format!(
            "drivers carry {}-dimensional noise, model expects {d}",
            drivers.noise_dim
        )));
    }
    if let Some(ev) = drivers.jumps.iter().find(|ev| ev.atom >= model.marks.len()) {
        return Err(EngineError::DriverMismatch(format!("jump atom {} out of range", ev.atom)));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(EngineError::NonFiniteState { time: drivers.t0 });
    }

    let n = drivers.times.len();
    let mut states = Vec::with_capacity(n * m);
    states.extend_from_slice(x0);
    let mut left_limits = Vec::new();

    let mut x = x0.to_vec();
    let mut drift = vec![0.0; m];
    let mut comp = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut sigma = vec![0.0; m * d];
    for seg in 0..n - 1 {
        let t = drivers.times[seg];
        let dt = drivers.times[seg + 1] - t;
        let dw = drivers.increment(seg);
        c.drift_into(t, &x, &mut drift);
        comp.iter_mut().for_each(|v| *v = 0.0);
        model.add_compensator(t, &x, &mut scratch, &mut comp);
        c.diffusion_into(t, &x, &mut sigma);
        for k in 0..m {
            let mut noise = 0.0;
            for a in 0..d {
                noise += sigma[k * d + a] * dw[a];
            }
            x[k] += (drift[k] - comp[k]) * dt + noise;
        }
        let t_next = drivers.times[seg + 1];
        if let Some(atom) = drivers.event_atoms[seg + 1] {
            left_limits.push((seg + 1, x.clone()));
            c.jump_into(t_next, &x, atom, model.marks.mark(atom), &mut scratch);
            for (xk, g) in x.iter_mut().zip(&scratch) {
                *xk += g;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::NonFiniteState { time: t_next });
        }
        states.extend_from_slice(&x);
    }
    Ok(Trajectory {
        m,
        times: drivers.times.clone(),
        states,
        left_limits,
    })
}

/// Both models of `problem` integrated against the same drivers.
pub fn simulate_coupled(
    problem: &ComparisonProblem,
    drivers: &DriverRealization,
) -> Result<(Trajectory, Trajectory), EngineError> {
    let a = simulate_path(&problem.model1, &problem.x1, drivers)?;
    let b = simulate_path(&problem.model2, &problem.x2, drivers)?;
    Ok((a, b))
}

fn gap_violation(upper: &[f64], lower: &[f64]) -> f64 {
    upper
        .iter()
        .zip(lower)
        .map(|(u, l)| (l - u).max(0.0))
        .fold(0.0, f64::max)
}

/// Time-indexed ordering gap `gap(X1, X2)`, including jump left limits; the
/// left limit is reported just before its event.
fn violation_series<G: Fn(&[f64], &[f64]) -> f64>(pair: (&Trajectory, &Trajectory), gap: G) -> Vec<(f64, f64)> {
    let (a, b) = pair;
    assert_eq!(a.times, b.times, "coupled trajectories must share their time list");
    let mut out = Vec::with_capacity(a.len() + a.left_limits.len());
    let mut lefts = a.left_limits.iter().zip(&b.left_limits).peekable();
    for i in 0..a.len() {
        while let Some(((ia, la), (ib, lb))) = lefts.peek() {
            if *ia == i {
                debug_assert_eq!(ia, ib);
                out.push((a.times[i], gap(la, lb)));
                lefts.next();
            } else {
                break;
            }
        }
        out.push((a.times[i], gap(a.state(i), b.state(i))));
    }
    out
}

/// Largest ordering violation `max_{t,k} ((X2 - X1)_k)^+` along a coupled pair.
pub fn violation_stat(pair: (&Trajectory, &Trajectory)) -> f64 {
    violation_series(pair, gap_violation).into_iter().map(|(_, v)| v).fold(0.0, f64::max)
}

/// Maximum violation and first time it exceeds `eps`.
pub fn violation_summary(pair: (&Trajectory, &Trajectory), eps: f64) -> (f64, Option<f64>) {
    violation_summary_by(pair, eps, gap_violation)
}

/// [`violation_summary`] for an arbitrary nonnegative gap `gap(X1, X2)`.
pub fn violation_summary_by<G>(pair: (&Trajectory, &Trajectory), eps: f64, gap: G) -> (f64, Option<f64>)
where
    G: Fn(&[f64], &[f64]) -> f64,
{
    let series = violation_series(pair, gap);
    let max = series.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let first = series.iter().find(|(_, v)| *v > eps).map(|(t, _)| *t);
    (max, first)
}

/// `5 sqrt(h) (1 + |x1| + |x2|)`.
pub fn default_eps_path(h: f64, x1: &[f64], x2: &[f64]) -> f64 {
    5.0 * h.sqrt() * (1.0 + norm2(x1) + norm2(x2))
}

/// Wilson score interval at 95% for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).clamp(0.0, 1.0) };
    let hi = if k == n { 1.0 } else { (center + half).clamp(0.0, 1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub path_id: u64,
    pub violation_max: f64,
    pub first_violation_time: Option<f64>,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub paths: usize,
    pub violating: usize,
    /// Paths aborted on a non-finite state; never counted as violating.
    pub failed: usize,
    pub violation_fraction: f64,
    pub max_violation: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub seed: u64,
    pub h: f64,
    pub eps_path: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub report: McReport,
    pub outcomes: Vec<PathOutcome>,
}

/// Runs `paths` independent coupled simulations. `simulate` maps a path
/// index to `(max violation, first time above eps_path)`; non-finite states
/// mark the path failed, other errors abort the run.
pub fn run_paths<F>(paths: usize, h: f64, seed: u64, eps_path: f64, simulate: F) -> Result<McRun, EngineError>
where
    F: Fn(u64) -> Result<(f64, Option<f64>), EngineError> + Sync,
{
    if paths == 0 {
        return Err(EngineError::NoPaths);
    }
    let results: Vec<Result<PathOutcome, EngineError>> = (0..paths as u64)
        .into_par_iter()
        .map(|i| match simulate(i) {
            Ok((violation_max, first_violation_time)) => Ok(PathOutcome {
                path_id: i,
                violation_max,
                first_violation_time,
                failed: false,
            }),
            Err(EngineError::NonFiniteState { .. }) => Ok(PathOutcome {
                path_id: i,
                violation_max: 0.0,
                first_violation_time: None,
                failed: true,
            }),
            Err(e) => Err(e),
        })
        .collect();
    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let failed = outcomes.iter().filter(|o| o.failed).count();
    let violating = outcomes
        .iter()
        .filter(|o| !o.failed && o.violation_max > eps_path)
        .count();
    let max_violation = outcomes.iter().map(|o| o.violation_max).fold(0.0, f64::max);
    let (wilson_low, wilson_high) = wilson_interval(violating, paths);
    Ok(McRun {
        report: McReport {
            paths,
            violating,
            failed,
            violation_fraction: violating as f64 / paths as f64,
            max_violation,
            wilson_low,
            wilson_high,
            seed,
            h,
            eps_path,
        },
        outcomes,
    })
}

/// Monte Carlo check of the pathwise ordering `X1 >= X2`.
pub fn mc_comparison(problem: &ComparisonProblem, paths: usize, h: f64, seed: u64) -> Result<McRun, EngineError> {
    problem.validate()?;
    let eps_path = problem
        .tolerances
        .eps_path
        .unwrap_or_else(|| default_eps_path(h, &problem.x1, &problem.x2));
    let horizon = (problem.t0, problem.t_end);
    let d = problem.model1.noise_dim();
    // surface a bad step once instead of once per path
    sample_drivers(&MarkMeasure::empty(problem.marks().dim), horizon, h, d, seed, 0)?;
    run_paths(paths, h, seed, eps_path, |i| {
        let drivers = sample_drivers(problem.marks(), horizon, h, d, seed, i)?;
        let (a, b) = simulate_coupled(problem, &drivers)?;
        Ok(violation_summary((&a, &b), eps_path))
    })
}
