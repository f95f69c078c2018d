//! Priors on the unknowns.
//!
//! Activities are i.i.d. Bernoulli(`p_a`). Each per-dimension interference
//! power is modelled as the shot noise `Σ a_i·d_i^-α` of a PPP outside the
//! cell, approximated by a Gaussian whose mean and variance follow from
//! Campbell's theorem. [`shot_noise_oracle`] samples the shot noise
//! directly so the approximation can be checked.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_rng, ExecMode};

/// Parameters of the out-of-cell point process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseParams {
    pub density: f64,
    pub activity_prob: f64,
    pub cell_radius: f64,
    pub pathloss_exponent: f64,
}

impl ShotNoiseParams {
    fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent > 2.0) {
            return Err(Error::DivergentMean {
                alpha: self.pathloss_exponent,
            });
        }
        if !(self.cell_radius > 0.0) {
            return Err(Error::config("cell radius must be positive"));
        }
        if !(self.density >= 0.0) {
            return Err(Error::config("interferer density must be non-negative"));
        }
        if !(self.activity_prob > 0.0 && self.activity_prob < 1.0) {
            return Err(Error::config("activity probability must lie in (0, 1)"));
        }
        Ok(())
    }

    fn active_density(&self) -> f64 {
        self.density * self.activity_prob
    }

    /// Mean and variance of the shot noise generated beyond radius `r`.
    fn moments_beyond(&self, r: f64) -> (f64, f64) {
        let alpha = self.pathloss_exponent;
        let rho = self.active_density();
        let mean = 2.0 * PI * rho * r.powf(2.0 - alpha) / (alpha - 2.0);
        let var = PI * rho * r.powf(2.0 - 2.0 * alpha) / (alpha - 1.0);
        (mean, var)
    }
}

/// Gaussian approximation of a per-dimension interference power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferencePrior {
    pub mean: f64,
    pub variance: f64,
    pub source: ShotNoiseParams,
}

impl InterferencePrior {
    /// A prior with explicit moments, used for limit checks and tests.
    pub fn with_moments(mean: f64, variance: f64) -> Self {
        InterferencePrior {
            mean,
            variance,
            source: ShotNoiseParams {
                density: f64::NAN,
                activity_prob: f64::NAN,
                cell_radius: f64::NAN,
                pathloss_exponent: f64::NAN,
            },
        }
    }

    /// Gaussian density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.variance.sqrt();
        (-0.5 * z * z).exp() / (2.0 * PI * self.variance).sqrt()
    }
}

/// Campbell moments of the untruncated shot noise:
/// `μ = 2πλp_a·R^(2-α)/(α-2)`, `σ² = πλp_a·R^(2-2α)/(α-1)`.
pub fn gaussian_prior_moments(params: ShotNoiseParams) -> Result<InterferencePrior> {
    params.validate()?;
    let (mean, variance) = params.moments_beyond(params.cell_radius);
    Ok(InterferencePrior {
        mean,
        variance,
        source: params,
    })
}

/// Mean and variance contributed by interferers beyond `factor·R`, i.e. the
/// part a truncated simulation misses.
pub fn truncation_tail_moments(params: ShotNoiseParams, factor: f64) -> Result<(f64, f64)> {
    params.validate()?;
    Ok(params.moments_beyond(factor * params.cell_radius))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    /// Count divided by `(total samples · bin width)`.
    pub density: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Equal-width bins over `[lo, hi)`; samples outside are not counted but
    /// still enter the normalization.
    pub fn build(samples: &[f64], lo: f64, hi: f64, n_bins: usize) -> Histogram {
        let n_bins = n_bins.max(1);
        if !(hi > lo) {
            // all samples identical: a single unit-width bin around them
            let density = if samples.is_empty() { 0.0 } else { 1.0 };
            return Histogram {
                bins: vec![HistogramBin {
                    left: lo - 0.5,
                    right: lo + 0.5,
                    density,
                }],
            };
        }
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for &s in samples {
            if s >= lo && s < hi {
                let k = (((s - lo) / width) as usize).min(n_bins - 1);
                counts[k] += 1;
            }
        }
        let norm = samples.len().max(1) as f64 * width;
        let bins = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| HistogramBin {
                left: lo + width * k as f64,
                right: lo + width * (k + 1) as f64,
                density: c as f64 / norm,
            })
            .collect();
        Histogram { bins }
    }

    /// CSV with columns `bin_left,bin_right,density`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "density"])?;
        for b in &self.bins {
            w.write_record([b.left.to_string(), b.right.to_string(), b.density.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseSummary {
    pub n_samples: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub histogram: Histogram,
    /// Kolmogorov–Smirnov distance of the standardized samples from N(0, 1).
    pub ks_statistic: f64,
}

/// One shot-noise sample on the annulus `(R, factor·R]`.
pub fn sample_shot_noise<R: Rng + ?Sized>(params: &ShotNoiseParams, factor: f64, rng: &mut R) -> f64 {
    let r = params.cell_radius;
    let outer = factor * r;
    let span = outer * outer - r * r;
    let mean_count = params.active_density() * PI * span;
    if mean_count <= 0.0 {
        return 0.0;
    }
    let count = Poisson::new(mean_count).map(|p| p.sample(rng)).unwrap_or(0.0) as usize;
    let half_alpha = params.pathloss_exponent / 2.0;
    (0..count)
        .map(|_| {
            let d2 = r * r + span * (1.0 - rng.random::<f64>());
            d2.powf(-half_alpha)
        })
        .sum()
}

/// Monte Carlo draw of the truncated shot noise: `n_samples` independent
/// realizations, each on its own RNG stream of `seed`.
pub fn shot_noise_oracle(
    params: ShotNoiseParams,
    truncation_factor: f64,
    n_samples: usize,
    n_bins: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<ShotNoiseSummary> {
    params.validate()?;
    if n_samples == 0 {
        return Err(Error::config("shot-noise oracle needs at least one sample"));
    }
    if !(truncation_factor > 1.0) {
        return Err(Error::config("truncation factor must exceed 1"));
    }
    let samples = map_indexed(n_samples, mode, |k| {
        sample_shot_noise(&params, truncation_factor, &mut stream_rng(seed, k as u64))
    });
    Ok(summarize(&samples, n_bins))
}

/// Monte Carlo moments set against the Gaussian approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    /// Sample moments plus the analytic tail beyond the truncation radius.
    pub mc_mean: f64,
    pub mc_variance: f64,
    pub analytic_mean: f64,
    pub analytic_variance: f64,
    pub mean_rel_error: f64,
    pub variance_rel_error: f64,
    pub pass: bool,
}

/// Compares an oracle summary with the Campbell moments. Relative errors
/// are zero when both sides vanish, as they do without interferers.
pub fn check_moments(
    params: ShotNoiseParams,
    truncation_factor: f64,
    summary: &ShotNoiseSummary,
    mean_tol: f64,
    variance_tol: f64,
) -> Result<MomentCheck> {
    let prior = gaussian_prior_moments(params)?;
    let (tail_mean, tail_var) = truncation_tail_moments(params, truncation_factor)?;
    let mc_mean = summary.mean + tail_mean;
    let mc_variance = summary.variance + tail_var;
    let rel = |mc: f64, exact: f64| {
        if exact == 0.0 {
            mc.abs()
        } else {
            ((mc - exact) / exact).abs()
        }
    };
    let mean_rel_error = rel(mc_mean, prior.mean);
    let variance_rel_error = rel(mc_variance, prior.variance);
    Ok(MomentCheck {
        mc_mean,
        mc_variance,
        analytic_mean: prior.mean,
        analytic_variance: prior.variance,
        mean_rel_error,
        variance_rel_error,
        pass: mean_rel_error <= mean_tol && variance_rel_error <= variance_tol,
    })
}

fn summarize(samples: &[f64], n_bins: usize) -> ShotNoiseSummary {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sd = variance.sqrt();
    let lo = (mean - 5.0 * sd).max(0.0);
    let hi = mean + 5.0 * sd;
    ShotNoiseSummary {
        n_samples: samples.len(),
        mean,
        variance,
        histogram: Histogram::build(samples, lo, hi, n_bins),
        ks_statistic: ks_against_standard_normal(samples, mean, sd),
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// `sup |F_n(z) − Φ(z)|` for samples standardized by `(mean, sd)`.
pub fn ks_against_standard_normal(samples: &[f64], mean: f64, sd: f64) -> f64 {
    if samples.is_empty() || !(sd > 0.0) {
        return 0.0;
    }
    let mut z: Vec<f64> = samples.iter().map(|s| (s - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(k, &v)| {
            let f = standard_normal_cdf(v);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// `log p(a) = log(p_a/(1-p_a))·Σa_i + N·log(1-p_a)`, extended to relaxed `a`.
pub fn activity_log_prior(a: &[f64], p_a: f64) -> Result<f64> {
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(Error::contract(format!("activity probability {p_a} outside (0, 1)")));
    }
    if a.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::contract("relaxed activities must lie in [0, 1]"));
    }
    let log_odds = (p_a / (1.0 - p_a)).ln();
    Ok(log_odds * a.iter().sum::<f64>() + a.len() as f64 * (1.0 - p_a).ln())
}
