//! Configuration and subcommands of the `proxthresh` binary.
//!
//! Every command parses and validates its whole configuration before any
//! computation, and writes its CSV outputs only after the computation has
//! succeeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb::{RateReport, Schedule};
use crate::glm::{fit, Dataset, Design, Dictionary, ErrorSchedule, FitOptions, Injection, PrecomputedFeatures, TrigDictionary};
use crate::harness::{
    consistency_experiment, default_family, rate_experiment, ConsistencyOptions, RateOptions, SyntheticSpec,
};
use crate::prox::{prox_scalar_exact, validate_family, FamilyConfig, SeparableRegularizer};

/// Largest number of points tabulated by `prox-curve`.
const MAX_CURVE_POINTS: usize = 10_000_000;

#[derive(Debug, Parser)]
#[command(name = "proxthresh", version, about = "Composite proximal thresholding for dictionary regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for experiments.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate the exact prox of one regularizer coordinate.
    ProxCurve,
    /// Fit a model to a CSV dataset.
    Fit,
    /// Monte-Carlo consistency experiment on synthetic data.
    ExperimentConsistency,
    /// Objective-rate experiment with injected errors.
    ExperimentRate,
    /// Check a configuration without running anything.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionKind {
    #[default]
    None,
    Uniform,
    Signs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Regularization parameter for `fit`.
    pub lambda: Option<f64>,
    pub gamma_fraction: f64,
    pub tau: f64,
    pub p: f64,
    pub zeta: f64,
    pub xi_decay: f64,
    pub max_iters: usize,
    /// Accuracy target in objective units (`fit` only).
    pub tolerance: f64,
    pub fast_rate: bool,
    pub injection: InjectionKind,
    pub injection_scale: f64,
    pub injection_seed: u64,
    /// `||b_m|| = grad_error_scale (m+1)^(-grad_error_power)`
    pub grad_error_scale: f64,
    pub grad_error_power: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let e = ErrorSchedule::default();
        SolverConfig {
            lambda: None,
            gamma_fraction: 0.9,
            tau: 1.0,
            p: e.p,
            zeta: e.zeta,
            xi_decay: e.xi_decay,
            max_iters: 5000,
            tolerance: 1e-10,
            fast_rate: false,
            injection: InjectionKind::None,
            injection_scale: 1.0,
            injection_seed: 0,
            grad_error_scale: 0.0,
            grad_error_power: 3.0,
        }
    }
}

impl SolverConfig {
    pub fn fit_options(&self, seed_override: Option<u64>) -> Result<FitOptions> {
        let seed = seed_override.unwrap_or(self.injection_seed);
        let injection = match self.injection {
            InjectionKind::None => Injection::None,
            InjectionKind::Uniform => Injection::Uniform { scale: self.injection_scale, seed },
            InjectionKind::Signs => Injection::Signs { scale: self.injection_scale, seed },
        };
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config(format!("tau = {} outside (0, 1]", self.tau)));
        }
        let opts = FitOptions {
            gamma_fraction: self.gamma_fraction,
            tau: Schedule::Constant(self.tau),
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            errors: ErrorSchedule { zeta: self.zeta, p: self.p, xi_decay: self.xi_decay },
            injection,
            grad_error: if self.grad_error_scale == 0.0 {
                Schedule::ZERO
            } else {
                Schedule::Decay { scale: self.grad_error_scale, power: self.grad_error_power }
            },
            fast_rate: self.fast_rate,
            keep_gradients: false,
        };
        opts.validate()?;
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if !(self.grad_error_scale >= 0.0 && self.grad_error_scale.is_finite()) {
            return Err(Error::config("grad_error_scale must be finite and nonnegative"));
        }
        if self.grad_error_scale > 0.0 {
            let needed = if self.fast_rate { 2.0 } else { 1.0 };
            if self.grad_error_power <= needed {
                return Err(Error::config(format!(
                    "gradient errors (m+1)^(-{}) are not summable{}",
                    self.grad_error_power,
                    if self.fast_rate { " with weight m, as the o(1/m) rate requires" } else { "" }
                )));
            }
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Input columns are the features.
    #[default]
    Precomputed,
    /// One input column `x in [0, 1]` mapped through the trigonometric dictionary.
    Trig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV with a header row, last column `y`; relative to the config file.
    pub path: PathBuf,
    #[serde(default)]
    pub features: FeatureKind,
    /// Required when `features = "trig"`.
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub spec: SyntheticSpec,
    #[serde(flatten)]
    pub options: ConsistencyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    #[serde(flatten)]
    pub spec: SyntheticSpec,
    #[serde(flatten)]
    pub options: RateOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxCurveConfig {
    #[serde(default = "one")]
    pub gamma: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub step: f64,
    /// Coordinate of the regularizer family to tabulate.
    #[serde(default)]
    pub coordinate: usize,
}

fn one() -> f64 {
    1.0
}

impl ProxCurveConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        let ok = self.x_min.is_finite() && self.x_max.is_finite() && self.step.is_finite();
        if !ok || self.x_min > self.x_max || self.step <= 0.0 {
            return Err(Error::config(format!(
                "invalid range [{}, {}] with step {}",
                self.x_min, self.x_max, self.step
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma must be positive"));
        }
        let count = ((self.x_max - self.x_min) / self.step * (1.0 + 1e-12)).floor() as usize + 1;
        if count > MAX_CURVE_POINTS {
            return Err(Error::config(format!("range has {count} points, more than {MAX_CURVE_POINTS}")));
        }
        Ok((0..count).map(|i| self.x_min + i as f64 * self.step).collect())
    }
}

/// Whole configuration file; each command reads the sections it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub regularizer: Option<FamilyConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub rate: Option<RateConfig>,
    #[serde(default)]
    pub prox_curve: Option<ProxCurveConfig>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| Error::config(format!("configuration lacks a [{name}] section")))
    }

    /// Builds the regularizer family; `fallback_dim` selects the default
    /// elastic net when the section is absent.
    pub fn family(&self, fallback_dim: Option<usize>) -> Result<SeparableRegularizer> {
        let reg = match (&self.regularizer, fallback_dim) {
            (Some(f), _) => f.build()?,
            (None, Some(d)) => default_family(d)?,
            (None, None) => return Err(Error::config("configuration lacks a [regularizer] section")),
        };
        validate_family(&reg).map_err(Error::InvalidFamily)?;
        Ok(reg)
    }

    fn load_data(&self) -> Result<(Box<dyn Dictionary>, Dataset)> {
        let data = self.section(&self.data, "data")?;
        let path = if data.path.is_absolute() { data.path.clone() } else { self.base_dir.join(&data.path) };
        if !path.is_file() {
            return Err(Error::config(format!("data file {} does not exist", path.display())));
        }
        let dataset = Dataset::from_csv(&path, data.bound)?;
        let dict: Box<dyn Dictionary> = match data.features {
            FeatureKind::Precomputed => Box::new(PrecomputedFeatures { dimension: dataset.inputs.ncols() }),
            FeatureKind::Trig => {
                let k = data.dimension.ok_or_else(|| Error::config("trig features need data.dimension"))?;
                Box::new(TrigDictionary::new(k))
            }
        };
        Ok((dict, dataset))
    }
}

fn write_file(dir: &Path, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf)?;
    Ok(path)
}

fn write_rate_summary<W: Write>(w: W, report: &RateReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["metric", "total", "last_decade_increase", "plateaued"])?;
    let mut sums = vec![
        ("sum_sq_v_gap", report.sum_sq_v_gap),
        ("sum_step_sq", report.sum_step_sq),
        ("sum_u_gap", report.sum_u_gap),
    ];
    if let Some(p) = report.sum_grad_dist_sq {
        sums.push(("sum_grad_dist_sq", p));
    }
    for (name, p) in sums {
        out.write_record([
            name.to_string(),
            p.total.to_string(),
            p.last_decade_increase.to_string(),
            p.plateaued.to_string(),
        ])?;
    }
    out.write_record(["tail_ratio".to_string(), report.tail_ratio.to_string(), String::new(), String::new()])?;
    out.write_record(["j_ref".to_string(), report.j_ref.to_string(), String::new(), String::new()])?;
    out.flush()?;
    Ok(())
}

/// Runs a parsed command line. Messages for the user go to stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => return Err(Error::config("--config is required")),
    };
    match cli.command {
        Command::ProxCurve => prox_curve(cli, &cfg),
        Command::Fit => fit_cmd(cli, &cfg),
        Command::ExperimentConsistency => with_threads(cli.threads, || consistency_cmd(cli, &cfg)),
        Command::ExperimentRate => rate_cmd(cli, &cfg),
        Command::Validate => validate_cmd(cli, &cfg),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::config("--threads must be positive")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot start thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out)?;
    Ok(&cli.out)
}

fn prox_curve(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let curve = cfg.section(&cfg.prox_curve, "prox_curve")?;
    let reg = cfg.family(None)?;
    let coord = reg.coords().get(curve.coordinate).ok_or_else(|| {
        Error::config(format!("coordinate {} out of range 0..{}", curve.coordinate, reg.dim()))
    })?;
    let xs = curve.grid()?;
    let values = xs.iter().map(|&x| prox_scalar_exact(coord, curve.gamma, x)).collect::<Result<Vec<_>>>()?;
    let path = write_file(out_dir(cli)?, "prox_curve.csv", |buf| {
        let mut out = csv::Writer::from_writer(buf);
        out.write_record(["x", "prox"])?;
        for (x, v) in xs.iter().zip(&values) {
            out.write_record([x.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    println!("wrote {} points to {}", xs.len(), path.display());
    Ok(())
}

fn fit_cmd(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let lambda = cfg.solver.lambda.ok_or_else(|| Error::config("solver.lambda is required for fit"))?;
    let options = cfg.solver.fit_options(cli.seed)?;
    let (dict, data) = cfg.load_data()?;
    let reg = cfg.family(None)?;
    let design = Design::new(dict.as_ref(), &data)?;
    if reg.dim() != design.dim() {
        return Err(Error::DimensionMismatch { expected: design.dim(), found: reg.dim() });
    }
    let j0 = design.objective(lambda, &reg, &Array1::zeros(design.dim()))?;
    let res = fit(&design, lambda, &reg, &options, None)?;
    let dir = out_dir(cli)?;
    write_file(dir, "coefficients.csv", |buf| res.write_coefficients(buf))?;
    write_file(dir, "trace.csv", |buf| res.trace.write_csv(buf, None))?;
    println!(
        "J(0) = {j0}, J(u_hat) = {}, iterations = {}, converged = {}",
        res.objective,
        res.trace.len(),
        res.converged
    );
    Ok(())
}

fn consistency_cmd(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let exp = cfg.section(&cfg.experiment, "experiment")?;
    let mut options = exp.options.clone();
    if let Some(s) = cli.seed {
        options.master_seed = s;
    }
    let reg = cfg.family(Some(exp.spec.dimension))?;
    let fit_options = cfg.solver.fit_options(cli.seed)?;
    let report = consistency_experiment(&exp.spec, &reg, &options, &fit_options)?;
    let dir = out_dir(cli)?;
    write_file(dir, "consistency_trials.csv", |buf| report.write_trials(buf))?;
    write_file(dir, "consistency_summary.csv", |buf| report.write_summary(buf))?;
    for s in &report.summary {
        println!(
            "n = {:>6}  lambda = {:.4}  median err_r = {:.5}  median err_L2 = {:.5}  flagged = {}/{}",
            s.n, s.lambda, s.median_err_r, s.median_err_l2, s.flagged, s.trials
        );
    }
    Ok(())
}

fn rate_cmd(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let rate = cfg.section(&cfg.rate, "rate")?;
    let mut options = rate.options.clone();
    if let Some(s) = cli.seed {
        options.data_seed = s;
    }
    let reg = cfg.family(Some(rate.spec.dimension))?;
    let fit_options = cfg.solver.fit_options(cli.seed)?;
    let exp = rate_experiment(&rate.spec, &reg, &options, &fit_options)?;
    let dir = out_dir(cli)?;
    write_file(dir, "rate_trace.csv", |buf| exp.fit.trace.write_csv(buf, Some(exp.j_ref)))?;
    write_file(dir, "rate_summary.csv", |buf| write_rate_summary(buf, &exp.report))?;
    println!("J_ref = {}, tail ratio = {}, all sums plateau: {}", exp.j_ref, exp.report.tail_ratio, exp.report.all_plateaued());
    Ok(())
}

fn validate_cmd(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    let mut checked = Vec::new();
    if let Some(fam) = &cfg.regularizer {
        let reg = fam.build()?;
        let cert = validate_family(&reg).map_err(Error::InvalidFamily)?;
        checked.push(format!(
            "regularizer: dimension {}, r = {}, r* = {}, eta = {}, M = {}",
            cert.dimension, cert.r, cert.r_conjugate, cert.eta, cert.m_constant
        ));
    }
    cfg.solver.fit_options(cli.seed)?;
    checked.push("solver".into());
    if let Some(curve) = &cfg.prox_curve {
        curve.grid()?;
        checked.push("prox_curve".into());
    }
    if cfg.data.is_some() {
        let (dict, data) = cfg.load_data()?;
        let design = Design::new(dict.as_ref(), &data)?;
        checked.push(format!("data: n = {}, K = {}", design.n(), design.dim()));
    }
    if let Some(exp) = &cfg.experiment {
        exp.spec.validate()?;
        exp.options.validate()?;
        cfg.family(Some(exp.spec.dimension))?;
        checked.push("experiment".into());
    }
    if let Some(rate) = &cfg.rate {
        rate.spec.validate()?;
        cfg.family(Some(rate.spec.dimension))?;
        checked.push("rate".into());
    }
    for line in checked {
        println!("ok: {line}");
    }
    Ok(())
}
