//! Estimation state and objectives.
//!
//! The covariance model is `Σ = P·diag(a∘γ)·Pᴴ + diag(x) + δ²·I`. The state
//! keeps `Σ⁻¹` and `log|Σ|` current under single-coordinate moves through
//! rank-one updates, so a coordinate step never inverts a matrix.

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, HermitianMatrix, C64};
use crate::prior::InterferencePrior;
use crate::scenario::SampleCovariance;

/// Box-constraint slack tolerated before an increment is rejected.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// Quadratic forms for one coordinate direction `v` (a pilot or a basis
/// vector): `w = Σ⁻¹v`, `s = vᴴΣ⁻¹v`, `q = vᴴΣ⁻¹Σ̂Σ⁻¹v`.
#[derive(Clone, Debug)]
pub struct CoordinateStats {
    pub w: Vec<C64>,
    pub s: f64,
    pub q: f64,
}

#[derive(Clone, Debug)]
pub struct CovarianceState<'a> {
    pilots: &'a ComplexMatrix,
    pilot_cols: Vec<Vec<C64>>,
    pathloss: &'a [f64],
    noise_var: f64,
    activity: Vec<f64>,
    interference: Vec<f64>,
    sigma_inv: HermitianMatrix,
    log_det: f64,
}

impl<'a> CovarianceState<'a> {
    /// `a = 0`, `x = 0`, `Σ⁻¹ = I/δ²`, `log|Σ| = L·log δ²`.
    pub fn new(pilots: &'a ComplexMatrix, pathloss: &'a [f64], noise_var: f64) -> Result<Self> {
        if pilots.cols() != pathloss.len() {
            return Err(Error::contract(format!(
                "{} pilots but {} path losses",
                pilots.cols(),
                pathloss.len()
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::contract(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        if pathloss.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::contract("path losses must be positive and finite"));
        }
        let l = pilots.rows();
        Ok(CovarianceState {
            pilots,
            pilot_cols: (0..pilots.cols()).map(|i| pilots.column(i)).collect(),
            pathloss,
            noise_var,
            activity: vec![0.0; pilots.cols()],
            interference: vec![0.0; l],
            sigma_inv: HermitianMatrix::scaled_identity(l, 1.0 / noise_var),
            log_det: l as f64 * noise_var.ln(),
        })
    }

    /// State at an arbitrary feasible `(a, x)`, built by dense factorization.
    pub fn at(
        pilots: &'a ComplexMatrix,
        pathloss: &'a [f64],
        noise_var: f64,
        activity: &[f64],
        interference: &[f64],
    ) -> Result<Self> {
        let mut state = Self::new(pilots, pathloss, noise_var)?;
        if activity.len() != state.activity.len() || interference.len() != state.interference.len() {
            return Err(Error::contract("activity/interference length mismatch"));
        }
        if activity.iter().any(|a| !(0.0..=1.0).contains(a)) || interference.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::contract("state outside the feasible box"));
        }
        state.activity.copy_from_slice(activity);
        state.interference.copy_from_slice(interference);
        state.refresh()?;
        Ok(state)
    }

    pub fn activity(&self) -> &[f64] {
        &self.activity
    }

    pub fn interference(&self) -> &[f64] {
        &self.interference
    }

    pub fn sigma_inv(&self) -> &HermitianMatrix {
        &self.sigma_inv
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn n_devices(&self) -> usize {
        self.activity.len()
    }

    pub fn dim(&self) -> usize {
        self.interference.len()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn pathloss(&self) -> &[f64] {
        self.pathloss
    }

    pub fn pilots(&self) -> &ComplexMatrix {
        self.pilots
    }

    pub fn pilot(&self, i: usize) -> &[C64] {
        &self.pilot_cols[i]
    }

    fn stats_for(&self, w: Vec<C64>, s: f64, sample_cov: &SampleCovariance) -> CoordinateStats {
        let q = sample_cov.matrix().quad(&w);
        CoordinateStats { w, s, q }
    }

    /// Forms along pilot `p_i`.
    pub fn activity_stats(&self, i: usize, sample_cov: &SampleCovariance) -> CoordinateStats {
        let p = &self.pilot_cols[i];
        let w = self.sigma_inv.matvec(p);
        let s = dot_re(p, &w);
        self.stats_for(w, s, sample_cov)
    }

    /// Forms along basis vector `e_ℓ`; `Σ⁻¹e_ℓ` is just a column.
    pub fn interference_stats(&self, l: usize, sample_cov: &SampleCovariance) -> CoordinateStats {
        let w = self.sigma_inv.column(l);
        let s = self.sigma_inv[(l, l)].re;
        self.stats_for(w, s, sample_cov)
    }

    /// `a_i ← a_i + d` with the matching rank-one update of `Σ⁻¹` and `log|Σ|`.
    pub fn apply_activity_increment(&mut self, i: usize, d: f64) -> Result<()> {
        if d == 0.0 {
            return Ok(());
        }
        let p = &self.pilot_cols[i];
        let w = self.sigma_inv.matvec(p);
        let s = dot_re(p, &w);
        self.apply_activity_with(i, d, &w, s)
    }

    /// `x_ℓ ← x_ℓ + d` with the matching rank-one update.
    pub fn apply_interference_increment(&mut self, l: usize, d: f64) -> Result<()> {
        if d == 0.0 {
            return Ok(());
        }
        let w = self.sigma_inv.column(l);
        let s = self.sigma_inv[(l, l)].re;
        self.apply_interference_with(l, d, &w, s)
    }

    pub(crate) fn apply_activity_with(&mut self, i: usize, d: f64, w: &[C64], s: f64) -> Result<()> {
        let next = self.activity[i] + d;
        if !(-FEASIBILITY_SLACK..=1.0 + FEASIBILITY_SLACK).contains(&next) {
            return Err(Error::contract(format!("activity {i} would move to {next}")));
        }
        let c = d * self.pathloss[i];
        let inc = numerics::log_det_increment_from(c, s)?;
        numerics::apply_rank_one(&mut self.sigma_inv, w, c, s)?;
        self.log_det += inc;
        self.activity[i] = next.clamp(0.0, 1.0);
        Ok(())
    }

    pub(crate) fn apply_interference_with(&mut self, l: usize, d: f64, w: &[C64], s: f64) -> Result<()> {
        let next = self.interference[l] + d;
        if next < -FEASIBILITY_SLACK * (1.0 + self.interference[l].abs()) {
            return Err(Error::contract(format!("interference {l} would move to {next}")));
        }
        let inc = numerics::log_det_increment_from(d, s)?;
        numerics::apply_rank_one(&mut self.sigma_inv, w, d, s)?;
        self.log_det += inc;
        self.interference[l] = next.max(0.0);
        Ok(())
    }

    /// Dense `Σ` for the current `(a, x)`.
    pub fn rebuild_covariance(&self) -> HermitianMatrix {
        let l = self.dim();
        let mut sigma = ComplexMatrix::zeros(l, l);
        for (i, p) in self.pilot_cols.iter().enumerate() {
            let weight = self.activity[i] * self.pathloss[i];
            if weight == 0.0 {
                continue;
            }
            for r in 0..l {
                let pr = p[r] * weight;
                for c in r..l {
                    sigma[(r, c)] += pr * p[c].conj();
                }
            }
        }
        for r in 0..l {
            sigma[(r, r)] += C64::new(self.interference[r] + self.noise_var, 0.0);
            for c in 0..r {
                sigma[(r, c)] = sigma[(c, r)].conj();
            }
        }
        HermitianMatrix::from_matrix(sigma).expect("rebuilt covariance is Hermitian by construction")
    }

    /// Recomputes `log|Σ|` from a Cholesky factorization; returns the drift
    /// of the incrementally maintained value.
    pub fn refresh_log_det(&mut self) -> Result<f64> {
        let fresh = self.rebuild_covariance().cholesky()?.log_det();
        let drift = (fresh - self.log_det).abs();
        self.log_det = fresh;
        Ok(drift)
    }

    /// Recomputes both `Σ⁻¹` and `log|Σ|` from scratch.
    pub fn refresh(&mut self) -> Result<()> {
        let chol = self.rebuild_covariance().cholesky()?;
        self.log_det = chol.log_det();
        self.sigma_inv = chol.inverse();
        Ok(())
    }

    /// `‖Σ⁻¹·Σ − I‖_max` against a freshly rebuilt `Σ`.
    pub fn inverse_residual(&self) -> f64 {
        let sigma = self.rebuild_covariance().to_matrix();
        let prod = self
            .sigma_inv
            .to_matrix()
            .matmul(&sigma)
            .expect("square matrices of equal size");
        prod.max_abs_diff(&ComplexMatrix::identity(self.dim()))
    }

    /// `f_ML = log|Σ| + tr(Σ⁻¹·Σ̂)`.
    pub fn objective_ml(&self, sample_cov: &SampleCovariance) -> f64 {
        self.log_det + self.sigma_inv.trace_product(sample_cov.matrix())
    }

    /// `f_MAP = f_ML + Σ(x_ℓ−μ)²/(2Mσ²) − log(p_a/(1−p_a))·Σa_i/M`.
    pub fn objective_map(
        &self,
        sample_cov: &SampleCovariance,
        prior: &InterferencePrior,
        p_a: f64,
        n_antennas: usize,
    ) -> Result<f64> {
        Ok(self.objective_ml(sample_cov) + map_penalty(&self.activity, &self.interference, prior, p_a, n_antennas)?)
    }
}

/// `f_MAP − f_ML` at `(a, x)`.
pub fn map_penalty(
    activity: &[f64],
    interference: &[f64],
    prior: &InterferencePrior,
    p_a: f64,
    n_antennas: usize,
) -> Result<f64> {
    if !(prior.variance > 0.0) {
        return Err(Error::DegeneratePrior);
    }
    if !(p_a > 0.0 && p_a < 1.0) {
        return Err(Error::contract(format!("activity probability {p_a} outside (0, 1)")));
    }
    if n_antennas == 0 {
        return Err(Error::contract("antenna count must be positive"));
    }
    let m = n_antennas as f64;
    let spread: f64 = interference.iter().map(|x| (x - prior.mean).powi(2)).sum();
    let log_odds = (p_a / (1.0 - p_a)).ln();
    Ok(spread / (2.0 * m * prior.variance) - log_odds * activity.iter().sum::<f64>() / m)
}

#[inline]
fn dot_re(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::oracle;
    use rand::Rng;

    struct Fixture {
        pilots: ComplexMatrix,
        gamma: Vec<f64>,
        cov: SampleCovariance,
    }

    fn fixture(seed: u64, l: usize, n: usize) -> Fixture {
        let mut rng = stream_rng(seed, 0);
        let pilots = oracle::random_matrix(&mut rng, l, n);
        let gamma = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let cov = SampleCovariance::new(oracle::random_psd(&mut rng, l, 3 * l, 2.0));
        Fixture { pilots, gamma, cov }
    }

    #[test]
    fn init_examples() {
        let p = ComplexMatrix::zeros(3, 2);
        let g = [1.0, 1.0];
        let s = CovarianceState::new(&p, &g, 1.0).unwrap();
        assert_eq!(s.sigma_inv(), &HermitianMatrix::identity(3));
        assert_eq!(s.log_det(), 0.0);

        let p = ComplexMatrix::zeros(2, 2);
        let s = CovarianceState::new(&p, &g, 0.5).unwrap();
        assert_eq!(s.sigma_inv(), &HermitianMatrix::scaled_identity(2, 2.0));
        assert!((s.log_det() - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!(s.activity().iter().all(|a| *a == 0.0));

        let noise = 80f64.powi(-3) / 10.0;
        let p = ComplexMatrix::zeros(28, 2);
        let s = CovarianceState::new(&p, &g, noise).unwrap();
        assert!((noise - 1.953125e-7).abs() < 1e-20);
        assert!((s.log_det() - 28.0 * 1.953125e-7f64.ln()).abs() < 1e-12);

        assert!(CovarianceState::new(&p, &g, 0.0).is_err());
        assert!(CovarianceState::new(&p, &[1.0], 1.0).is_err());
    }

    #[test]
    fn zero_increment_is_noop() {
        let f = fixture(1, 4, 6);
        let mut s = CovarianceState::new(&f.pilots, &f.gamma, 0.7).unwrap();
        let before = s.clone();
        s.apply_activity_increment(2, 0.0).unwrap();
        s.apply_interference_increment(1, 0.0).unwrap();
        assert_eq!(s.sigma_inv(), before.sigma_inv());
        assert_eq!(s.log_det(), before.log_det());
    }

    #[test]
    fn increment_then_negation_round_trips() {
        let f = fixture(2, 5, 7);
        let mut s = CovarianceState::new(&f.pilots, &f.gamma, 0.4).unwrap();
        let start = s.sigma_inv().clone();
        s.apply_activity_increment(3, 0.6).unwrap();
        s.apply_activity_increment(3, -0.6).unwrap();
        s.apply_interference_increment(2, 1.3).unwrap();
        s.apply_interference_increment(2, -1.3).unwrap();
        assert!(s.sigma_inv().max_abs_diff(&start) < 1e-9);
        assert_eq!(s.activity()[3], 0.0);
    }

    #[test]
    fn random_increments_track_dense_inverse() {
        let f = fixture(3, 6, 9);
        let noise = 0.3;
        let mut s = CovarianceState::new(&f.pilots, &f.gamma, noise).unwrap();
        let mut rng = stream_rng(3, 1);
        for _ in 0..200 {
            if rng.random_bool(0.6) {
                let i = rng.random_range(0..9);
                let target: f64 = rng.random();
                s.apply_activity_increment(i, target - s.activity()[i]).unwrap();
            } else {
                let l = rng.random_range(0..6);
                let target: f64 = rng.random_range(0.0..2.0);
                s.apply_interference_increment(l, target - s.interference()[l]).unwrap();
            }
        }
        let sigma = oracle::dense_sigma(&f.pilots, &f.gamma, s.activity(), s.interference(), noise);
        let inv = oracle::lu_inverse(&sigma);
        assert!(s.sigma_inv().to_matrix().max_abs_diff(&inv) < 1e-7);
        assert!((s.log_det() - oracle::lu_log_det(&sigma)).abs() < 1e-6);
        assert!(s.inverse_residual() < 1e-6);
        let drift = s.refresh_log_det().unwrap();
        assert!(drift < 1e-6);
    }

    #[test]
    fn infeasible_increments_rejected() {
        let f = fixture(4, 3, 3);
        let mut s = CovarianceState::new(&f.pilots, &f.gamma, 1.0).unwrap();
        assert!(matches!(s.apply_activity_increment(0, 1.5), Err(Error::Contract(_))));
        assert!(matches!(s.apply_activity_increment(0, -0.1), Err(Error::Contract(_))));
        assert!(matches!(
            s.apply_interference_increment(0, -0.1),
            Err(Error::Contract(_))
        ));
        assert!(s.activity().iter().all(|a| *a == 0.0));
    }

    #[test]
    fn objective_ml_examples() {
        let f = fixture(5, 4, 5);
        let a = [0.2, 0.0, 0.9, 0.5, 1.0];
        let x = [0.1, 0.0, 0.4, 0.3];
        let s = CovarianceState::at(&f.pilots, &f.gamma, 0.5, &a, &x).unwrap();

        // perfect fit: Σ̂ = Σ gives log|Σ| + L
        let fit = SampleCovariance::new(s.rebuild_covariance());
        assert!((s.objective_ml(&fit) - (s.log_det() + 4.0)).abs() < 1e-10);

        // noise only
        let s0 = CovarianceState::new(&f.pilots, &f.gamma, 0.5).unwrap();
        let noise = SampleCovariance::new(HermitianMatrix::scaled_identity(4, 0.5));
        assert!((s0.objective_ml(&noise) - (4.0 * 0.5f64.ln() + 4.0)).abs() < 1e-12);

        // dense recomputation
        let sigma = oracle::dense_sigma(&f.pilots, &f.gamma, &a, &x, 0.5);
        let want = oracle::dense_f_ml(&sigma, &f.cov.matrix().to_matrix());
        assert!((s.objective_ml(&f.cov) - want).abs() < 1e-8 * want.abs().max(1.0));
    }

    #[test]
    fn objective_map_examples() {
        let f = fixture(6, 4, 5);
        let prior = InterferencePrior::with_moments(0.3, 0.05);
        let a0 = [0.0; 5];
        let x_mu = [0.3; 4];
        let s = CovarianceState::at(&f.pilots, &f.gamma, 0.5, &a0, &x_mu).unwrap();
        assert_eq!(
            s.objective_map(&f.cov, &prior, 0.05, 8).unwrap(),
            s.objective_ml(&f.cov)
        );

        let a = [0.2, 0.0, 0.9, 0.5, 1.0];
        let x = [0.1, 0.0, 0.4, 0.3];
        let s = CovarianceState::at(&f.pilots, &f.gamma, 0.5, &a, &x).unwrap();
        let gap_m = s.objective_map(&f.cov, &prior, 0.05, 8).unwrap() - s.objective_ml(&f.cov);
        let gap_2m = s.objective_map(&f.cov, &prior, 0.05, 16).unwrap() - s.objective_ml(&f.cov);
        assert!((gap_2m - gap_m / 2.0).abs() < 1e-14 * gap_m.abs());

        // term-by-term
        let m = 8.0;
        let spread: f64 = x.iter().map(|v| (v - 0.3f64).powi(2)).sum();
        let want =
            s.objective_ml(&f.cov) + spread / (2.0 * m * 0.05) - (0.05f64 / 0.95).ln() * a.iter().sum::<f64>() / m;
        assert!((s.objective_map(&f.cov, &prior, 0.05, 8).unwrap() - want).abs() < 1e-10);
        assert!(gap_m >= 0.0);

        let flat = InterferencePrior::with_moments(0.3, 0.0);
        assert!(matches!(
            s.objective_map(&f.cov, &flat, 0.05, 8),
            Err(Error::DegeneratePrior)
        ));
    }

    #[test]
    fn objective_ml_is_permutation_equivariant() {
        let f = fixture(7, 4, 6);
        let a = [0.1, 0.7, 0.0, 1.0, 0.3, 0.5];
        let x = [0.2, 0.0, 0.1, 0.4];
        let s = CovarianceState::at(&f.pilots, &f.gamma, 0.5, &a, &x).unwrap();
        let perm = [3, 0, 5, 1, 4, 2];
        let pilots = ComplexMatrix::from_fn(4, 6, |r, c| f.pilots[(r, perm[c])]);
        let gamma: Vec<f64> = perm.iter().map(|&k| f.gamma[k]).collect();
        let ap: Vec<f64> = perm.iter().map(|&k| a[k]).collect();
        let sp = CovarianceState::at(&pilots, &gamma, 0.5, &ap, &x).unwrap();
        assert!((s.objective_ml(&f.cov) - sp.objective_ml(&f.cov)).abs() < 1e-10);
    }
}
