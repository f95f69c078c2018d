//! Thresholding detector, error probabilities and the Monte Carlo sweep
//! runner.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{run_baseline_ml, run_map, run_ml, EstimateResult, SolverOptions};
use crate::exec::{map_indexed, stream_rng, ExecMode};
use crate::prior::{gaussian_prior_moments, InterferencePrior, ShotNoiseParams};
use crate::scenario::{generate, ScenarioConfig, ScenarioDraw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    JointMap,
    JointMl,
    BaselineMl,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::JointMap,
        EstimatorKind::JointMl,
        EstimatorKind::BaselineMl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::JointMap => "joint-map",
            EstimatorKind::JointMl => "joint-ml",
            EstimatorKind::BaselineMl => "baseline-ml",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::config(format!(
                "unknown estimator {s:?} (expected joint-map, joint-ml or baseline-ml)"
            ))
        })
    }
}

/// Scenario parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptParam {
    #[serde(rename = "lambda")]
    Density,
    #[serde(rename = "L")]
    PilotLength,
    #[serde(rename = "M")]
    Antennas,
}

impl SweptParam {
    pub fn name(self) -> &'static str {
        match self {
            SweptParam::Density => "lambda",
            SweptParam::PilotLength => "L",
            SweptParam::Antennas => "M",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::config(format!(
                    "{} must be a positive integer, got {v}",
                    self.name()
                )))
            }
        };
        match self {
            SweptParam::Density => cfg.interferer_density = value,
            SweptParam::PilotLength => cfg.pilot_length = as_count(value)?,
            SweptParam::Antennas => cfg.n_antennas = as_count(value)?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweptParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweptParam::Density),
            "L" => Ok(SweptParam::PilotLength),
            "M" => Ok(SweptParam::Antennas),
            _ => Err(Error::config(format!(
                "unknown swept parameter {s:?} (expected lambda, L or M)"
            ))),
        }
    }
}

/// `â_i = 1[a_hat_i ≥ θ]`.
pub fn threshold_detect(a_hat: &[f64], theta: f64) -> Vec<bool> {
    a_hat.iter().map(|a| *a >= theta).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionOutcome {
    pub decisions: Vec<bool>,
    pub truth: Vec<bool>,
    pub errors: usize,
    pub devices: usize,
}

impl DetectionOutcome {
    pub fn new(decisions: Vec<bool>, truth: Vec<bool>) -> Result<Self> {
        if decisions.len() != truth.len() {
            return Err(Error::contract("decision and truth vectors differ in length"));
        }
        let errors = count_errors(&decisions, &truth);
        let devices = truth.len();
        Ok(DetectionOutcome {
            decisions,
            truth,
            errors,
            devices,
        })
    }
}

fn count_errors(decisions: &[bool], truth: &[bool]) -> usize {
    decisions.iter().zip(truth).filter(|(d, t)| d != t).count()
}

/// Total errors over total device decisions.
pub fn error_probability(outcomes: &[DetectionOutcome]) -> Result<f64> {
    let devices: usize = outcomes.iter().map(|o| o.devices).sum();
    if devices == 0 {
        return Err(Error::contract("error probability needs at least one decision"));
    }
    let errors: usize = outcomes.iter().map(|o| o.errors).sum();
    Ok(errors as f64 / devices as f64)
}

/// Arithmetic grid `start, start + step, …` up to `end` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub start: f64,
    pub step: f64,
    pub end: f64,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid {
            start: 0.01,
            step: 0.01,
            end: 3.0,
        }
    }
}

impl ThetaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.step > 0.0 && self.end >= self.start && self.end.is_finite()) {
            return Err(Error::config(format!(
                "theta grid needs 0 < start <= end and step > 0, got {:?}",
                self
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        // start + k·step rounded to the step's decimal resolution avoids 0.30000000000000004
        (0..n)
            .map(|k| round_to_step(self.start + k as f64 * self.step, self.step))
            .collect()
    }
}

fn round_to_step(v: f64, step: f64) -> f64 {
    let digits = (-step.log10()).ceil().max(0.0) as i32 + 3;
    let scale = 10f64.powi(digits);
    (v * scale).round() / scale
}

/// Scans the grid and returns `(θ*, minimum average error)`; ties go to the
/// smallest θ.
pub fn best_threshold(a_hats: &[Vec<f64>], truths: &[Vec<bool>], grid: &[f64]) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::contract("threshold grid is empty"));
    }
    if a_hats.len() != truths.len() || a_hats.is_empty() {
        return Err(Error::contract("need one truth vector per estimate, at least one"));
    }
    let devices: usize = truths.iter().map(Vec::len).sum();
    if devices == 0 {
        return Err(Error::contract("no device decisions to score"));
    }
    let mut best = (grid[0], usize::MAX);
    for &theta in grid {
        let errors: usize = a_hats
            .iter()
            .zip(truths)
            .map(|(a, t)| a.iter().zip(t).filter(|(a, t)| (**a >= theta) != **t).count())
            .sum();
        if errors < best.1 {
            best = (theta, errors);
        }
    }
    Ok((best.0, best.1 as f64 / devices as f64))
}

/// The Gaussian interference prior implied by a scenario.
pub fn scenario_prior(config: &ScenarioConfig) -> Result<InterferencePrior> {
    gaussian_prior_moments(ShotNoiseParams {
        density: config.interferer_density,
        activity_prob: config.activity_prob,
        cell_radius: config.cell_radius,
        pathloss_exponent: config.pathloss_exponent,
    })
}

/// Runs one estimator on one draw.
pub fn run_estimator(
    kind: EstimatorKind,
    draw: &ScenarioDraw,
    config: &ScenarioConfig,
    opts: &SolverOptions,
) -> Result<EstimateResult> {
    let pilots = &draw.pilots.in_cell;
    let gamma = &draw.realization.pathloss;
    let noise = config.noise_var();
    match kind {
        EstimatorKind::JointMl => run_ml(&draw.sample_cov, pilots, gamma, noise, opts),
        EstimatorKind::BaselineMl => run_baseline_ml(&draw.sample_cov, pilots, gamma, noise, opts),
        EstimatorKind::JointMap => {
            let prior = scenario_prior(config)?;
            run_map(
                &draw.sample_cov,
                pilots,
                gamma,
                noise,
                &prior,
                config.activity_prob,
                config.n_antennas,
                opts,
            )
        }
    }
}

/// What to sweep and how to score it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub param: SweptParam,
    pub values: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub n_realizations: usize,
    pub seed: u64,
    pub grid: ThetaGrid,
}

impl ExperimentPlan {
    pub fn validate(&self, base: &ScenarioConfig) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep needs at least one value"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("sweep needs at least one estimator"));
        }
        if self.n_realizations == 0 {
            return Err(Error::config("n_realizations must be at least 1"));
        }
        self.grid.validate()?;
        for &v in &self.values {
            let cfg = self.param.apply(base, v)?;
            if self.estimators.contains(&EstimatorKind::JointMap) && !(scenario_prior(&cfg)?.variance > 0.0) {
                return Err(Error::config(format!(
                    "joint-map needs a positive interference prior variance; {}={v} gives zero",
                    self.param
                )));
            }
        }
        Ok(())
    }
}

/// One (swept value, estimator) entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub value: f64,
    pub estimator: EstimatorKind,
    pub theta_star: f64,
    pub error_prob: f64,
    /// Standard error of `error_prob` across realizations.
    pub std_error: f64,
    /// Errors per realization at `theta_star`, in realization order.
    pub errors: Vec<u32>,
    pub devices_per_realization: usize,
    pub non_converged: usize,
}

impl SweepCell {
    fn error_rates(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.devices_per_realization as f64;
        self.errors.iter().map(move |e| *e as f64 / n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub swept_param: SweptParam,
    pub values: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub n_realizations: usize,
    pub seed: u64,
    /// Value-major, estimators in plan order.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, value_index: usize, estimator: EstimatorKind) -> Option<&SweepCell> {
        let k = self.estimators.iter().position(|e| *e == estimator)?;
        self.cells.get(value_index * self.estimators.len() + k)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "swept_param",
            "value",
            "estimator",
            "theta_star",
            "error_prob",
            "n_realizations",
            "seed",
        ])?;
        for c in &self.cells {
            w.write_record([
                self.swept_param.name().to_string(),
                c.value.to_string(),
                c.estimator.name().to_string(),
                c.theta_star.to_string(),
                c.error_prob.to_string(),
                self.n_realizations.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.into()))
    }
}

/// Standard error of the mean of `a − b` over realizations, both cells
/// scored on the same draws.
pub fn paired_std_error(a: &SweepCell, b: &SweepCell) -> f64 {
    let diffs: Vec<f64> = a.error_rates().zip(b.error_rates()).map(|(x, y)| x - y).collect();
    std_error(&diffs)
}

fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

struct RealizationOutput {
    truth: Vec<bool>,
    /// One estimate per planned estimator.
    estimates: Vec<Vec<f64>>,
    converged: Vec<bool>,
}

/// Runs every planned estimator on `n_realizations` fresh scenarios per swept
/// value and scores each with its own best threshold.
///
/// Realization `r` draws from stream `r` of the master seed for every swept
/// value, so neighbouring values and all estimators see coupled draws.
pub fn run_experiment(
    base: &ScenarioConfig,
    plan: &ExperimentPlan,
    opts: &SolverOptions,
    mode: ExecMode,
) -> Result<SweepResult> {
    base.validate()?;
    opts.validate()?;
    plan.validate(base)?;
    let grid = plan.grid.points();
    let mut cells = Vec::with_capacity(plan.values.len() * plan.estimators.len());

    for &value in &plan.values {
        let cfg = plan.param.apply(base, value)?;
        let outputs = map_indexed(plan.n_realizations, mode, |r| -> Result<RealizationOutput> {
            let mut rng = stream_rng(plan.seed, r as u64);
            let draw = generate(&cfg, &mut rng)?;
            let mut estimates = Vec::with_capacity(plan.estimators.len());
            let mut converged = Vec::with_capacity(plan.estimators.len());
            for &kind in &plan.estimators {
                let res = run_estimator(kind, &draw, &cfg, opts)?;
                converged.push(res.converged);
                estimates.push(res.activity);
            }
            Ok(RealizationOutput {
                truth: draw.realization.active,
                estimates,
                converged,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let truths: Vec<Vec<bool>> = outputs.iter().map(|o| o.truth.clone()).collect();
        for (k, &kind) in plan.estimators.iter().enumerate() {
            let a_hats: Vec<Vec<f64>> = outputs.iter().map(|o| o.estimates[k].clone()).collect();
            let (theta_star, error_prob) = best_threshold(&a_hats, &truths, &grid)?;
            let errors: Vec<u32> = a_hats
                .iter()
                .zip(&truths)
                .map(|(a, t)| count_errors(&threshold_detect(a, theta_star), t) as u32)
                .collect();
            let n = cfg.n_devices as f64;
            let rates: Vec<f64> = errors.iter().map(|e| *e as f64 / n).collect();
            cells.push(SweepCell {
                value,
                estimator: kind,
                theta_star,
                error_prob,
                std_error: std_error(&rates),
                errors,
                devices_per_realization: cfg.n_devices,
                non_converged: outputs.iter().filter(|o| !o.converged[k]).count(),
            });
        }
    }

    Ok(SweepResult {
        swept_param: plan.param,
        values: plan.values.clone(),
        estimators: plan.estimators.clone(),
        n_realizations: plan.n_realizations,
        seed: plan.seed,
        cells,
    })
}
