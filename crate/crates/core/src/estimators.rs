//! Coordinate-descent estimators.
//!
//! Each sweep visits every activity coordinate in index order and then (for
//! the joint estimators) every interference coordinate. Every coordinate is
//! moved to the exact minimizer of the objective restricted to it, so the
//! objective never increases.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::model::{CoordinateStats, CovarianceState};
use crate::numerics::{solve_cubic_real, ComplexMatrix, HermitianMatrix};
use crate::prior::InterferencePrior;
use crate::scenario::SampleCovariance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Stop when a sweep lowers the objective by less than this fraction.
    pub objective_tol: f64,
    /// Stop when no coordinate moved by more than this in a sweep. Activity
    /// moves count as is; interference moves are measured relative to
    /// `x_ℓ + δ²`.
    pub coordinate_tol: f64,
    /// Record the objective after every sweep.
    pub monitor_objective: bool,
    /// Record the objective after every coordinate update instead.
    pub trace_every_update: bool,
    /// Recompute `log|Σ|` by Cholesky at the end of every sweep.
    pub refresh_log_det: bool,
    /// Visit activity coordinates in a seeded random order each sweep.
    pub shuffle_seed: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_sweeps: 50,
            objective_tol: 1e-7,
            coordinate_tol: 1e-6,
            monitor_objective: false,
            trace_every_update: false,
            refresh_log_det: true,
            shuffle_seed: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps < 1 {
            return Err(Error::config("max_sweeps must be at least 1"));
        }
        if !(self.objective_tol > 0.0 && self.coordinate_tol > 0.0) {
            return Err(Error::config("solver tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EstimateResult {
    /// Relaxed activities in `[0, 1]`.
    pub activity: Vec<f64>,
    /// Interference powers, non-negative.
    pub interference: Vec<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
    pub final_objective: f64,
    /// Starts with the objective at initialization when recorded.
    pub objective_trace: Vec<f64>,
    pub sigma_inv: HermitianMatrix,
    pub log_det: f64,
}

/// Which objective a run minimizes.
#[derive(Clone, Copy, Debug)]
enum Target<'p> {
    Ml,
    Map {
        prior: &'p InterferencePrior,
        p_a: f64,
        n_antennas: usize,
    },
}

impl Target<'_> {
    fn objective(&self, state: &CovarianceState<'_>, cov: &SampleCovariance) -> Result<f64> {
        match *self {
            Target::Ml => Ok(state.objective_ml(cov)),
            Target::Map { prior, p_a, n_antennas } => state.objective_map(cov, prior, p_a, n_antennas),
        }
    }
}

// ---------------------------------------------------------------------------
// closed-form coordinate steps
// ---------------------------------------------------------------------------

/// `q − s`, with differences at rounding level read as exact zero.
fn excess(stats: &CoordinateStats) -> f64 {
    let diff = stats.q - stats.s;
    if diff.abs() <= 16.0 * f64::EPSILON * stats.q.abs().max(stats.s) {
        0.0
    } else {
        diff
    }
}

fn ml_activity_from(stats: &CoordinateStats, gamma: f64, a: f64) -> f64 {
    if !(stats.s > 0.0) {
        return 0.0;
    }
    let d = excess(stats) / (gamma * stats.s * stats.s);
    d.max(-a).min(1.0 - a)
}

fn ml_interference_from(stats: &CoordinateStats, x: f64) -> f64 {
    if !(stats.s > 0.0) {
        return 0.0;
    }
    (excess(stats) / (stats.s * stats.s)).max(-x)
}

/// `f_MAP` along an activity coordinate, up to a constant.
fn map_activity_objective(stats: &CoordinateStats, gamma: f64, log_odds: f64, m: f64, d: f64) -> f64 {
    let u = 1.0 + d * gamma * stats.s;
    u.ln() - d * gamma * stats.q / u - log_odds * d / m
}

fn map_activity_from(stats: &CoordinateStats, gamma: f64, a: f64, p_a: f64, n_antennas: usize) -> f64 {
    let log_odds = (p_a / (1.0 - p_a)).ln();
    if log_odds == 0.0 || !(stats.s > 0.0) {
        return ml_activity_from(stats, gamma, a);
    }
    let m = n_antennas as f64;
    let (s, q) = (stats.s, stats.q);
    let gs2 = gamma * s * s;
    if log_odds < 0.0 {
        // The stationary point M/(2c)·(1 − √(1+t)) − 1/(γs), with
        // t = −4cq/(Mγs²) ≥ 0, rewritten without the cancellation in 1 − √(1+t).
        let t = -4.0 * log_odds * q / (m * gs2);
        debug_assert!(t > -1e-9, "square-root argument below one: {t}");
        let t = t.max(0.0);
        let d = 2.0 * q / (gs2 * (1.0 + (1.0 + t).sqrt())) - 1.0 / (gamma * s);
        return d.max(-a).min(1.0 - a);
    }
    // p_a > 1/2: the smaller stationary point is a local minimum, the
    // objective falls again beyond the larger one.
    let lo = -a;
    let hi = 1.0 - a;
    let mut candidates = vec![lo, hi];
    let disc = 1.0 - 4.0 * log_odds * q / (m * gs2);
    if disc >= 0.0 {
        let d = m / (2.0 * log_odds) * (1.0 - disc.sqrt()) - 1.0 / (gamma * s);
        candidates.push(d.max(lo).min(hi));
    }
    argmin_by(&candidates, |d| map_activity_objective(stats, gamma, log_odds, m, d))
}

/// `f_{x,ℓ}(d)`: `f_MAP` along an interference coordinate, up to a constant.
fn map_interference_objective(stats: &CoordinateStats, offset: f64, k: f64, d: f64) -> f64 {
    let u = 1.0 + d * stats.s;
    0.5 * k * (offset + d).powi(2) - d * stats.q / u + u.ln()
}

fn map_interference_from(stats: &CoordinateStats, x: f64, prior: &InterferencePrior, n_antennas: usize) -> Result<f64> {
    if !(prior.variance > 0.0) {
        return Err(Error::DegeneratePrior);
    }
    let (s, q) = (stats.s, stats.q);
    if !(s > 0.0) {
        return Ok(0.0);
    }
    let k = 1.0 / (n_antennas as f64 * prior.variance);
    let b = x - prior.mean;
    // (d + b)(1 + ds)²·k − q + s(1 + ds) = 0, solved in u = d·s
    let c3 = k / s;
    let c2 = k * (2.0 / s + b);
    let c1 = k * (1.0 / s + 2.0 * b) + s;
    let c0 = k * b - q + s;
    let mut candidates = vec![-x];
    for u in solve_cubic_real(c3, c2, c1, c0)? {
        let d = u / s;
        if d >= -x && 1.0 + u > 0.0 {
            candidates.push(d);
        }
    }
    Ok(argmin_by(&candidates, |d| map_interference_objective(stats, b, k, d)))
}

/// Argmin over candidates; values within 1e-12 count as ties and the
/// smallest `|d|` wins.
fn argmin_by(candidates: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut best = candidates[0];
    let mut best_val = f(best);
    for &d in &candidates[1..] {
        let v = f(d);
        let tie = 1e-12 * best_val.abs().max(1.0);
        if v < best_val - tie || ((v - best_val).abs() <= tie && d.abs() < best.abs()) {
            best = d;
            best_val = v;
        }
    }
    best
}

/// Exact minimizer of `f_ML(a + d·e_i, x)` over `d ∈ [−a_i, 1 − a_i]`.
pub fn ml_activity_step(state: &CovarianceState<'_>, sample_cov: &SampleCovariance, i: usize) -> f64 {
    let stats = state.activity_stats(i, sample_cov);
    ml_activity_from(&stats, state.pathloss()[i], state.activity()[i])
}

/// Exact minimizer of `f_ML(a, x + d·e_ℓ)` over `d ≥ −x_ℓ`.
pub fn ml_interference_step(state: &CovarianceState<'_>, sample_cov: &SampleCovariance, l: usize) -> f64 {
    let stats = state.interference_stats(l, sample_cov);
    ml_interference_from(&stats, state.interference()[l])
}

/// Exact minimizer of `f_MAP(a + d·e_i, x)` over the activity box. At
/// `p_a = 1/2` the activity prior is flat and this equals the ML step.
pub fn map_activity_step(
    state: &CovarianceState<'_>,
    sample_cov: &SampleCovariance,
    i: usize,
    p_a: f64,
    n_antennas: usize,
) -> Result<f64> {
    check_map_args(p_a, n_antennas)?;
    let stats = state.activity_stats(i, sample_cov);
    Ok(map_activity_from(
        &stats,
        state.pathloss()[i],
        state.activity()[i],
        p_a,
        n_antennas,
    ))
}

/// Exact minimizer of `f_MAP(a, x + d·e_ℓ)` over `d ≥ −x_ℓ`: the best of the
/// admissible real roots of the stationarity cubic and the boundary.
pub fn map_interference_step(
    state: &CovarianceState<'_>,
    sample_cov: &SampleCovariance,
    l: usize,
    prior: &InterferencePrior,
    n_antennas: usize,
) -> Result<f64> {
    if n_antennas == 0 {
        return Err(Error::contract("antenna count must be positive"));
    }
    let stats = state.interference_stats(l, sample_cov);
    map_interference_from(&stats, state.interference()[l], prior, n_antennas)
}

fn check_map_args(p_a: f64, n_antennas: usize) -> Result<()> {
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(Error::contract(format!("activity probability {p_a} outside (0, 1)")));
    }
    if n_antennas == 0 {
        return Err(Error::contract("antenna count must be positive"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// drivers
// ---------------------------------------------------------------------------

/// Joint ML estimation of activities and interference powers.
pub fn run_ml(
    sample_cov: &SampleCovariance,
    pilots: &ComplexMatrix,
    pathloss: &[f64],
    noise_var: f64,
    opts: &SolverOptions,
) -> Result<EstimateResult> {
    coordinate_descent(sample_cov, pilots, pathloss, noise_var, Target::Ml, true, opts)
}

/// Joint MAP estimation with the Bernoulli activity prior and the Gaussian
/// interference prior.
#[allow(clippy::too_many_arguments)]
pub fn run_map(
    sample_cov: &SampleCovariance,
    pilots: &ComplexMatrix,
    pathloss: &[f64],
    noise_var: f64,
    prior: &InterferencePrior,
    p_a: f64,
    n_antennas: usize,
    opts: &SolverOptions,
) -> Result<EstimateResult> {
    check_map_args(p_a, n_antennas)?;
    if !(prior.variance > 0.0) {
        return Err(Error::DegeneratePrior);
    }
    let target = Target::Map { prior, p_a, n_antennas };
    coordinate_descent(sample_cov, pilots, pathloss, noise_var, target, true, opts)
}

/// Interference-blind ML: the joint ML iteration with `x` frozen at zero.
pub fn run_baseline_ml(
    sample_cov: &SampleCovariance,
    pilots: &ComplexMatrix,
    pathloss: &[f64],
    noise_var: f64,
    opts: &SolverOptions,
) -> Result<EstimateResult> {
    coordinate_descent(sample_cov, pilots, pathloss, noise_var, Target::Ml, false, opts)
}

fn coordinate_descent(
    sample_cov: &SampleCovariance,
    pilots: &ComplexMatrix,
    pathloss: &[f64],
    noise_var: f64,
    target: Target<'_>,
    update_interference: bool,
    opts: &SolverOptions,
) -> Result<EstimateResult> {
    opts.validate()?;
    if sample_cov.dim() != pilots.rows() {
        return Err(Error::contract(format!(
            "sample covariance is {0}x{0} but pilots have length {1}",
            sample_cov.dim(),
            pilots.rows()
        )));
    }
    let mut state = CovarianceState::new(pilots, pathloss, noise_var)?;
    let record = opts.monitor_objective || opts.trace_every_update;
    let mut trace = Vec::new();
    let mut objective = target.objective(&state, sample_cov)?;
    if record {
        trace.push(objective);
    }

    let mut order: Vec<usize> = (0..state.n_devices()).collect();
    let mut shuffler = opts.shuffle_seed.map(|seed| stream_rng(seed, 0));
    let mut converged = false;
    let mut sweeps_used = 0;

    for _ in 0..opts.max_sweeps {
        sweeps_used += 1;
        let mut max_move = 0.0f64;
        if let Some(rng) = shuffler.as_mut() {
            order.shuffle(rng);
        }

        for &i in &order {
            let stats = state.activity_stats(i, sample_cov);
            let gamma = state.pathloss()[i];
            let a = state.activity()[i];
            let d = match target {
                Target::Ml => ml_activity_from(&stats, gamma, a),
                Target::Map { p_a, n_antennas, .. } => map_activity_from(&stats, gamma, a, p_a, n_antennas),
            };
            if d != 0.0 {
                state.apply_activity_with(i, d, &stats.w, stats.s)?;
                max_move = max_move.max(d.abs());
            }
            if opts.trace_every_update {
                trace.push(target.objective(&state, sample_cov)?);
            }
        }

        if update_interference {
            for l in 0..state.dim() {
                let stats = state.interference_stats(l, sample_cov);
                let x = state.interference()[l];
                let d = match target {
                    Target::Ml => ml_interference_from(&stats, x),
                    Target::Map { prior, n_antennas, .. } => map_interference_from(&stats, x, prior, n_antennas)?,
                };
                if d != 0.0 {
                    state.apply_interference_with(l, d, &stats.w, stats.s)?;
                    let scale = x.max(x + d) + noise_var;
                    max_move = max_move.max(d.abs() / scale);
                }
                if opts.trace_every_update {
                    trace.push(target.objective(&state, sample_cov)?);
                }
            }
        }

        if opts.refresh_log_det {
            state.refresh_log_det()?;
        }
        let next = target.objective(&state, sample_cov)?;
        if opts.monitor_objective && !opts.trace_every_update {
            trace.push(next);
        }
        let decrease = objective - next;
        objective = next;
        if max_move < opts.coordinate_tol || decrease.abs() <= opts.objective_tol * next.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(EstimateResult {
        activity: state.activity().to_vec(),
        interference: state.interference().to_vec(),
        sweeps_used,
        converged,
        final_objective: objective,
        objective_trace: trace,
        sigma_inv: state.sigma_inv().clone(),
        log_det: state.log_det(),
    })
}
