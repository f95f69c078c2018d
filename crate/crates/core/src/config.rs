//! Run configuration: a TOML file with `[scenario]`, `[solver]`,
//! `[experiment]` and `[output]` tables, overridable from the command line.
//! Every table and field is optional; absent values take the defaults below.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::SolverOptions;
use crate::eval::{EstimatorKind, ExperimentPlan, SweptParam, ThetaGrid};
use crate::scenario::ScenarioConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub swept_param: SweptParam,
    pub values: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub n_realizations: usize,
    pub theta_start: f64,
    pub theta_step: f64,
    pub theta_end: f64,
    /// Samples drawn by `validate-prior`.
    pub oracle_samples: usize,
    /// Truncation radius of the prior check, in cell radii. The tail beyond
    /// it is added back analytically.
    pub oracle_truncation_factor: f64,
    pub histogram_bins: usize,
    /// Worker threads; all available cores when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid = ThetaGrid::default();
        ExperimentConfig {
            swept_param: SweptParam::Density,
            values: vec![0.002, 0.006, 0.01],
            estimators: EstimatorKind::ALL.to_vec(),
            n_realizations: 200,
            theta_start: grid.start,
            theta_step: grid.step,
            theta_end: grid.end,
            oracle_samples: 100_000,
            oracle_truncation_factor: 5.0,
            histogram_bins: 60,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> ThetaGrid {
        ThetaGrid {
            start: self.theta_start,
            step: self.theta_step,
            end: self.theta_end,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    /// CSV at `path` plus a JSON mirror next to it.
    Both,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Main output file; standard output when absent. Secondary files are
    /// named after its stem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl OutputConfig {
    /// `<dir>/<stem><suffix>` next to the main output.
    pub fn sibling(&self, suffix: &str) -> Option<PathBuf> {
        let path = self.path.as_ref()?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Some(path.with_file_name(format!("{stem}{suffix}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub solver: SolverOptions,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub estimators: Option<Vec<EstimatorKind>>,
    pub swept_param: Option<SweptParam>,
    pub values: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.scenario.seed = seed;
        }
        if let Some(n) = o.realizations {
            self.experiment.n_realizations = n;
        }
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(t) = o.threads {
            self.experiment.threads = Some(t);
        }
        if let Some(e) = &o.estimators {
            self.experiment.estimators = e.clone();
        }
        if let Some(p) = o.swept_param {
            self.experiment.swept_param = p;
        }
        if let Some(v) = &o.values {
            self.experiment.values = v.clone();
        }
    }

    /// Checks every block. Sweep-specific checks happen in [`ExperimentPlan::validate`].
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.solver.validate()?;
        self.experiment.grid().validate()?;
        let e = &self.experiment;
        if e.threads == Some(0) {
            return Err(Error::config("threads must be at least 1"));
        }
        if e.oracle_samples == 0 || e.histogram_bins == 0 {
            return Err(Error::config("oracle_samples and histogram_bins must be positive"));
        }
        if !(e.oracle_truncation_factor > 1.0) {
            return Err(Error::config("oracle_truncation_factor must exceed 1"));
        }
        Ok(())
    }

    pub fn plan(&self) -> ExperimentPlan {
        let e = &self.experiment;
        ExperimentPlan {
            param: e.swept_param,
            values: e.values.clone(),
            estimators: e.estimators.clone(),
            n_realizations: e.n_realizations,
            seed: self.scenario.seed,
            grid: e.grid(),
        }
    }
}
