//! Synthetic network realizations and received pilot signals.
//!
//! In-cell devices are dropped uniformly on a disk of radius `R` around the
//! access point. Out-of-cell interferers form a homogeneous PPP outside the
//! disk, truncated at `f·R`; only the active ones are sampled (thinning by
//! the activity probability). Every complex Gaussian here is circularly
//! symmetric: `CN(0, v)` has real and imaginary parts `N(0, v/2)`.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, HermitianMatrix, C64};

/// Physical and simulation parameters of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Devices in the typical cell.
    pub n_devices: usize,
    /// Cell radius in meters.
    pub cell_radius: f64,
    /// Out-of-cell device density per square meter.
    pub interferer_density: f64,
    pub activity_prob: f64,
    pub pathloss_exponent: f64,
    pub pilot_length: usize,
    pub n_antennas: usize,
    /// Noise power per complex entry; `cell_radius^-pathloss_exponent / 10`
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
    /// Interferers are sampled on the annulus `(R, factor·R]`.
    pub ppp_truncation_factor: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_devices: 200,
            cell_radius: 80.0,
            interferer_density: 0.01,
            activity_prob: 0.05,
            pathloss_exponent: 3.0,
            pilot_length: 28,
            n_antennas: 24,
            noise_var: None,
            ppp_truncation_factor: 50.0,
            seed: 2020,
        }
    }
}

impl ScenarioConfig {
    pub fn noise_var(&self) -> f64 {
        self.noise_var
            .unwrap_or_else(|| self.cell_radius.powf(-self.pathloss_exponent) / 10.0)
    }

    /// Expected number of active interferers in the truncated annulus.
    pub fn mean_active_interferers(&self) -> f64 {
        let r = self.cell_radius;
        let outer = self.ppp_truncation_factor * r;
        self.interferer_density * self.activity_prob * PI * (outer * outer - r * r)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if self.n_devices < 1 {
            return fail("n_devices must be at least 1".into());
        }
        if !(self.cell_radius > 0.0 && self.cell_radius.is_finite()) {
            return fail(format!("cell_radius must be positive, got {}", self.cell_radius));
        }
        if !(self.interferer_density >= 0.0 && self.interferer_density.is_finite()) {
            return fail(format!(
                "interferer_density must be non-negative, got {}",
                self.interferer_density
            ));
        }
        if !(self.activity_prob > 0.0 && self.activity_prob < 1.0) {
            return fail(format!("activity_prob must lie in (0, 1), got {}", self.activity_prob));
        }
        if !(self.pathloss_exponent > 2.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::DivergentMean {
                alpha: self.pathloss_exponent,
            });
        }
        if self.pilot_length < 1 || self.n_antennas < 1 {
            return fail("pilot_length and n_antennas must be at least 1".into());
        }
        if !(self.noise_var() > 0.0 && self.noise_var().is_finite()) {
            return fail(format!("noise_var must be positive, got {}", self.noise_var()));
        }
        if !(self.ppp_truncation_factor > 1.0 && self.ppp_truncation_factor.is_finite()) {
            return fail(format!(
                "ppp_truncation_factor must exceed 1, got {}",
                self.ppp_truncation_factor
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    pub distance: f64,
    pub pathloss: f64,
}

/// Device geometry and activity for one coherence block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkRealization {
    pub distances: Vec<f64>,
    /// `γ_i = d_i^-α`.
    pub pathloss: Vec<f64>,
    pub active: Vec<bool>,
    /// Active out-of-cell devices only.
    pub interferers: Vec<Interferer>,
}

impl NetworkRealization {
    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Writes a two-section CSV: one row per in-cell device, then one per
    /// active interferer.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "index", "distance", "pathloss", "active"])?;
        for i in 0..self.pathloss.len() {
            w.write_record([
                "device".to_string(),
                i.to_string(),
                self.distances[i].to_string(),
                self.pathloss[i].to_string(),
                u8::from(self.active[i]).to_string(),
            ])?;
        }
        for (k, intf) in self.interferers.iter().enumerate() {
            w.write_record([
                "interferer".to_string(),
                k.to_string(),
                intf.distance.to_string(),
                intf.pathloss.to_string(),
                "1".to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PilotSet {
    /// `L × N`.
    pub in_cell: ComplexMatrix,
    /// `L × K`, one column per active interferer.
    pub interferers: ComplexMatrix,
}

/// `(1/M)·Y·Yᴴ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCovariance(HermitianMatrix);

impl SampleCovariance {
    pub fn new(matrix: HermitianMatrix) -> Self {
        SampleCovariance(matrix)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// One complete draw: geometry, pilots, received block and its covariance.
#[derive(Clone, Debug)]
pub struct ScenarioDraw {
    pub realization: NetworkRealization,
    pub pilots: PilotSet,
    pub signal: ComplexMatrix,
    pub sample_cov: SampleCovariance,
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std_per_part: f64) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * std_per_part, im * std_per_part)
}

pub fn sample_network<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<NetworkRealization> {
    config.validate()?;
    let r = config.cell_radius;
    let alpha = config.pathloss_exponent;

    // squared distance uniform on (0, R²]; 1 - u keeps d away from zero
    let distances: Vec<f64> = (0..config.n_devices)
        .map(|_| r * (1.0 - rng.random::<f64>()).sqrt())
        .collect();
    let pathloss = distances.iter().map(|d| d.powf(-alpha)).collect();
    let activity = Bernoulli::new(config.activity_prob).map_err(|e| Error::config(e.to_string()))?;
    let active = (0..config.n_devices).map(|_| activity.sample(rng)).collect();

    let mean = config.mean_active_interferers();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::config(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let outer = config.ppp_truncation_factor * r;
    let span = outer * outer - r * r;
    let interferers = (0..count)
        .map(|_| {
            // uniform in area on (R, fR]
            let d = (r * r + span * (1.0 - rng.random::<f64>())).sqrt().min(outer);
            Interferer {
                distance: d,
                pathloss: d.powf(-alpha),
            }
        })
        .collect();

    Ok(NetworkRealization {
        distances,
        pathloss,
        active,
        interferers,
    })
}

/// I.i.d. `CN(0, 1)` pilots for the in-cell devices and the active interferers.
pub fn sample_pilots<R: Rng + ?Sized>(config: &ScenarioConfig, n_interferers: usize, rng: &mut R) -> PilotSet {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let l = config.pilot_length;
    let in_cell = ComplexMatrix::from_fn(l, config.n_devices, |_, _| complex_gaussian(rng, s));
    let interferers = ComplexMatrix::from_fn(l, n_interferers, |_, _| complex_gaussian(rng, s));
    PilotSet { in_cell, interferers }
}

/// `Y = P·A·Γ^½·Hᵀ + Σ_k d_k^(-α/2)·p_k·h_kᵀ + Z` (`L × M`).
pub fn synthesize_received_signal<R: Rng + ?Sized>(
    realization: &NetworkRealization,
    pilots: &PilotSet,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let l = config.pilot_length;
    let m = config.n_antennas;
    let n = config.n_devices;
    if pilots.in_cell.rows() != l
        || pilots.in_cell.cols() != n
        || realization.pathloss.len() != n
        || realization.active.len() != n
        || pilots.interferers.rows() != l
        || pilots.interferers.cols() != realization.interferers.len()
    {
        return Err(Error::contract("realization, pilots and config disagree on dimensions"));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut y = ComplexMatrix::zeros(l, m);

    // channels for every in-cell device (M × N), drawn whether active or not
    let h = ComplexMatrix::from_fn(m, n, |_, _| complex_gaussian(rng, s));
    for i in (0..n).filter(|&i| realization.active[i]) {
        let amp = realization.pathloss[i].sqrt();
        let chan = h.column(i);
        accumulate_outer(&mut y, &pilots.in_cell, i, amp, &chan);
    }

    let mut chan = vec![C64::new(0.0, 0.0); m];
    for (k, intf) in realization.interferers.iter().enumerate() {
        for c in chan.iter_mut() {
            *c = complex_gaussian(rng, s);
        }
        accumulate_outer(&mut y, &pilots.interferers, k, intf.pathloss.sqrt(), &chan);
    }

    let noise_std = (config.noise_var() / 2.0).sqrt();
    for z in y.as_mut_slice() {
        *z += complex_gaussian(rng, noise_std);
    }
    Ok(y)
}

/// `y += amp · pilots[:, col] · chanᵀ`.
fn accumulate_outer(y: &mut ComplexMatrix, pilots: &ComplexMatrix, col: usize, amp: f64, chan: &[C64]) {
    let m = y.cols();
    let data = y.as_mut_slice();
    for r in 0..pilots.rows() {
        let coef = pilots[(r, col)] * amp;
        for (out, h) in data[r * m..(r + 1) * m].iter_mut().zip(chan) {
            *out += coef * h;
        }
    }
}

/// `(1/M)·Y·Yᴴ` where `Y` has `m` columns.
pub fn sample_covariance(y: &ComplexMatrix, m: usize) -> Result<SampleCovariance> {
    if m == 0 {
        return Err(Error::contract("sample covariance needs at least one column"));
    }
    if y.cols() != m {
        return Err(Error::contract(format!(
            "signal has {} columns, expected {m}",
            y.cols()
        )));
    }
    let l = y.rows();
    let inv_m = 1.0 / m as f64;
    let mut out = ComplexMatrix::zeros(l, l);
    for i in 0..l {
        let yi = y.row(i);
        for j in i..l {
            let s = yi
                .iter()
                .zip(y.row(j))
                .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj());
            out[(i, j)] = s * inv_m;
            out[(j, i)] = (s * inv_m).conj();
        }
    }
    Ok(SampleCovariance(HermitianMatrix::from_matrix(out)?))
}

/// Draws network, pilots and signal in that order from one RNG.
pub fn generate<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ScenarioDraw> {
    let realization = sample_network(config, rng)?;
    let pilots = sample_pilots(config, realization.interferers.len(), rng);
    let signal = synthesize_received_signal(&realization, &pilots, config, rng)?;
    let sample_cov = sample_covariance(&signal, config.n_antennas)?;
    Ok(ScenarioDraw {
        realization,
        pilots,
        signal,
        sample_cov,
    })
}
