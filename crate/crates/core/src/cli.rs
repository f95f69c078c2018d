//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure or failed prior check, 2 invalid
//! configuration, 3 numerical failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{OutputFormat, Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::estimators::SolverOptions;
use crate::eval::{run_estimator, run_experiment, EstimatorKind, SweptParam};
use crate::exec::{stream_rng, with_threads, ExecMode};
use crate::prior::{check_moments, shot_noise_oracle, ShotNoiseParams};
use crate::scenario::generate;

const MEAN_TOL: f64 = 0.01;
const VARIANCE_TOL: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "grantfree",
    version,
    about = "Device activity detection under out-of-cell interference"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    /// Main output file (standard output when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Comma-separated subset of joint-map, joint-ml, baseline-ml.
    #[arg(long, global = true, value_delimiter = ',')]
    pub estimators: Option<Vec<EstimatorKind>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare Monte Carlo shot noise with the Gaussian prior moments.
    ValidatePrior,
    /// Run every estimator on one realization and dump the estimates.
    DetectSingle {
        /// Also write device and interferer geometry here.
        #[arg(long)]
        dump_scenario: Option<PathBuf>,
    },
    /// Monte Carlo error probabilities over a parameter sweep.
    Sweep {
        /// lambda, L or M.
        #[arg(long)]
        param: Option<SweptParam>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let (swept_param, values) = match &self.command {
            Command::Sweep { param, values } => (*param, values.clone()),
            _ => (None, None),
        };
        Overrides {
            seed: self.seed,
            realizations: self.realizations,
            out: self.out.clone(),
            threads: self.threads,
            estimators: self.estimators.clone(),
            swept_param,
            values,
        }
    }

    /// File values with flags applied on top, validated.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let cfg = cli.resolve_config()?;
    with_threads(cfg.experiment.threads, || match &cli.command {
        Command::ValidatePrior => cmd_validate_prior(&cfg),
        Command::DetectSingle { dump_scenario } => cmd_detect_single(&cfg, dump_scenario.as_deref()),
        Command::Sweep { .. } => cmd_sweep(&cfg),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Ok(Box::new(BufWriter::new(File::create(p)?)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// Writes the histogram CSV and a moment report; returns 1 if the moments
/// miss their tolerances.
pub fn cmd_validate_prior(cfg: &RunConfig) -> Result<i32> {
    let s = &cfg.scenario;
    let e = &cfg.experiment;
    let params = ShotNoiseParams {
        density: s.interferer_density,
        activity_prob: s.activity_prob,
        cell_radius: s.cell_radius,
        pathloss_exponent: s.pathloss_exponent,
    };
    let summary = shot_noise_oracle(
        params,
        e.oracle_truncation_factor,
        e.oracle_samples,
        e.histogram_bins,
        s.seed,
        ExecMode::default(),
    )?;
    let check = check_moments(params, e.oracle_truncation_factor, &summary, MEAN_TOL, VARIANCE_TOL)?;

    summary.histogram.write_csv(open_output(cfg.output.path.as_deref())?)?;
    if let Some(path) = cfg.output.sibling("_moments.csv") {
        let mut w = csv::Writer::from_writer(open_output(Some(&path))?);
        w.write_record(["quantity", "monte_carlo", "analytic", "rel_error", "tolerance", "pass"])?;
        for (name, mc, exact, err, tol) in [
            (
                "mean",
                check.mc_mean,
                check.analytic_mean,
                check.mean_rel_error,
                MEAN_TOL,
            ),
            (
                "variance",
                check.mc_variance,
                check.analytic_variance,
                check.variance_rel_error,
                VARIANCE_TOL,
            ),
        ] {
            w.write_record([
                name.to_string(),
                mc.to_string(),
                exact.to_string(),
                err.to_string(),
                tol.to_string(),
                (err <= tol).to_string(),
            ])?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} samples: mean {:.6e} vs {:.6e} (rel {:.2e}), variance {:.6e} vs {:.6e} (rel {:.2e}), KS {:.4}: {}",
        summary.n_samples,
        check.mc_mean,
        check.analytic_mean,
        check.mean_rel_error,
        check.mc_variance,
        check.analytic_variance,
        check.variance_rel_error,
        summary.ks_statistic,
        if check.pass { "PASS" } else { "FAIL" }
    );
    Ok(if check.pass { 0 } else { 1 })
}

fn column_name(prefix: &str, kind: EstimatorKind) -> String {
    format!("{prefix}_{}", kind.name().replace('-', "_"))
}

/// One realization through every requested estimator.
pub fn cmd_detect_single(cfg: &RunConfig, dump_scenario: Option<&Path>) -> Result<i32> {
    let scenario = &cfg.scenario;
    let kinds = &cfg.experiment.estimators;
    if kinds.contains(&EstimatorKind::JointMap) && !(crate::eval::scenario_prior(scenario)?.variance > 0.0) {
        return Err(Error::config(
            "joint-map needs a positive interference prior variance (interferer_density > 0)",
        ));
    }
    let draw = generate(scenario, &mut stream_rng(scenario.seed, 0))?;
    let opts = SolverOptions {
        monitor_objective: true,
        ..cfg.solver.clone()
    };
    let results = kinds
        .iter()
        .map(|&k| run_estimator(k, &draw, scenario, &opts))
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(open_output(cfg.output.path.as_deref())?);
    let mut header = vec!["device".to_string(), "pathloss".to_string(), "a_true".to_string()];
    header.extend(kinds.iter().map(|&k| column_name("a_hat", k)));
    w.write_record(&header)?;
    for i in 0..scenario.n_devices {
        let mut row = vec![
            i.to_string(),
            draw.realization.pathloss[i].to_string(),
            u8::from(draw.realization.active[i]).to_string(),
        ];
        row.extend(results.iter().map(|r| r.activity[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    if let Some(path) = cfg.output.sibling("_interference.csv") {
        let mut w = csv::Writer::from_writer(open_output(Some(&path))?);
        let mut header = vec!["dimension".to_string()];
        header.extend(kinds.iter().map(|&k| column_name("x_hat", k)));
        w.write_record(&header)?;
        for l in 0..scenario.pilot_length {
            let mut row = vec![l.to_string()];
            row.extend(results.iter().map(|r| r.interference[l].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    if let Some(path) = cfg.output.sibling("_trace.csv") {
        let mut w = csv::Writer::from_writer(open_output(Some(&path))?);
        w.write_record(["estimator", "sweep", "objective"])?;
        for (&k, r) in kinds.iter().zip(&results) {
            for (sweep, f) in r.objective_trace.iter().enumerate() {
                w.write_record([k.name().to_string(), sweep.to_string(), f.to_string()])?;
            }
        }
        w.flush()?;
    }
    if let Some(path) = dump_scenario {
        draw.realization.write_csv(open_output(Some(path))?)?;
    }

    for (&k, r) in kinds.iter().zip(&results) {
        eprintln!(
            "{k}: {} sweeps, converged {}, objective {:.6}",
            r.sweeps_used, r.converged, r.final_objective
        );
    }
    Ok(0)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<i32> {
    let plan = cfg.plan();
    let result = run_experiment(&cfg.scenario, &plan, &cfg.solver, ExecMode::default())?;
    let path = cfg.output.path.as_deref();
    match cfg.output.format {
        OutputFormat::Csv => result.write_csv(open_output(path)?)?,
        OutputFormat::Json => result.write_json(open_output(path)?)?,
        OutputFormat::Both => {
            result.write_csv(open_output(path)?)?;
            match cfg.output.sibling(".json") {
                Some(json) => result.write_json(open_output(Some(&json))?)?,
                None => eprintln!("no output path set; JSON mirror skipped"),
            }
        }
    }
    for c in &result.cells {
        if c.non_converged > 0 {
            eprintln!(
                "{}={} {}: {} of {} runs hit max_sweeps",
                result.swept_param, c.value, c.estimator, c.non_converged, result.n_realizations
            );
        }
    }
    Ok(0)
}
