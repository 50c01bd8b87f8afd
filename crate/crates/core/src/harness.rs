//! Synthetic-data experiments: consistency along a sample-size grid,
//! regularization paths, and the risk/projection inequality.

use std::io::Write;

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb::{rate_report, RateReport, Schedule};
use crate::glm::{fit, Dataset, Design, Dictionary, ErrorSchedule, FitOptions, FitResult, Injection, TrigDictionary};
use crate::prox::{lr_norm, validate_family, ScalarRegularizer, SeparableRegularizer};
use crate::seed;

/// Noise is Gaussian truncated at this many standard deviations.
const NOISE_TRUNCATION: f64 = 4.0;

/// Ground truth and sampling model over `X = [0, 1]` with the trigonometric
/// dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub dimension: usize,
    /// Support size of the true coefficients.
    pub sparsity: usize,
    /// Standard deviation of the (truncated) output noise.
    pub noise: f64,
    /// Output clipping bound; defaults to `sup |f_true| + 4 noise`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default)]
    pub truth_seed: u64,
    /// Explicit true coefficients, overriding the random draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
}

impl SyntheticSpec {
    pub fn new(dimension: usize, sparsity: usize, noise: f64) -> Self {
        SyntheticSpec { dimension, sparsity, noise, bound: None, truth_seed: 0, truth: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::config("synthetic dimension must be positive"));
        }
        if self.truth.is_none() && self.sparsity > self.dimension {
            return Err(Error::config(format!("sparsity {} exceeds dimension {}", self.sparsity, self.dimension)));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.dimension {
                return Err(Error::DimensionMismatch { expected: self.dimension, found: t.len() });
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("true coefficients must be finite"));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::config("noise level must be finite and nonnegative"));
        }
        if let Some(b) = self.bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::config("output bound must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn dictionary(&self) -> TrigDictionary {
        TrigDictionary::new(self.dimension)
    }

    /// True coefficients: `sparsity` random indices with magnitudes in
    /// `[0.5, 1.5]` and random signs, unless given explicitly.
    pub fn truth(&self) -> Array1<f64> {
        if let Some(t) = &self.truth {
            return Array1::from(t.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(self.truth_seed, u64::MAX, 0));
        let mut u = Array1::zeros(self.dimension);
        for k in sample(&mut rng, self.dimension, self.sparsity).into_iter() {
            let mag = rng.gen_range(0.5..=1.5);
            u[k] = if rng.gen_bool(0.5) { mag } else { -mag };
        }
        u
    }

    /// `sum_k |u_k| sqrt(2) / k`, an upper bound on `sup_x |f_u(x)|`.
    pub fn sup_bound(u: &Array1<f64>) -> f64 {
        u.iter().enumerate().map(|(j, v)| v.abs() * std::f64::consts::SQRT_2 / (j + 1) as f64).sum()
    }

    pub fn output_bound(&self, truth: &Array1<f64>) -> f64 {
        self.bound.unwrap_or_else(|| Self::sup_bound(truth) + NOISE_TRUNCATION * self.noise)
    }
}

fn truncated_noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    loop {
        let e: f64 = normal.sample(rng);
        if e.abs() <= NOISE_TRUNCATION * sigma {
            return e;
        }
    }
}

/// Draws `n` samples `y_i = f_true(x_i) + noise`, clipped to `[-b, b]`.
pub fn generate(spec: &SyntheticSpec, n: usize, seed: u64) -> Result<(Dataset, Array1<f64>)> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::config("sample size must be positive"));
    }
    let truth = spec.truth();
    let dict = spec.dictionary();
    let b = spec.output_bound(&truth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Array2::zeros((n, 1));
    let mut outputs = Array1::zeros(n);
    for i in 0..n {
        let x: f64 = rng.gen();
        inputs[[i, 0]] = x;
        let y = dict.features(&[x]).dot(&truth) + truncated_noise(&mut rng, spec.noise);
        outputs[i] = y.clamp(-b, b);
    }
    Ok((Dataset::new(inputs, outputs, Some(b))?, truth))
}

/// Elastic-net family used by default in the experiments.
pub fn default_family(dimension: usize) -> Result<SeparableRegularizer> {
    SeparableRegularizer::uniform(ScalarRegularizer::elastic_net(0.05, 0.1, 2.0)?, dimension)
}

/// Monte-Carlo `||f_d||_{L2(P_X)}` for `P_X` uniform on `[0, 1]`, with `d`
/// a coefficient vector.
pub fn l2_norm_mc(dict: &dyn Dictionary, d: &Array1<f64>, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..points {
        let x: f64 = rng.gen();
        let f = dict.features(&[x]).dot(d);
        acc += f * f;
    }
    (acc / points as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyOptions {
    pub n_grid: Vec<usize>,
    /// `lambda_n = lambda0 * n^(-1/4)`
    pub lambda0: f64,
    pub trials: usize,
    pub master_seed: u64,
    /// Fresh inputs per Monte-Carlo L2 estimate.
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
}

fn default_mc_points() -> usize {
    10_000
}

impl ConsistencyOptions {
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda0 * (n as f64).powf(-0.25)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::config("n grid must be nonempty with positive sizes"));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::config("lambda0 must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::config("at least one trial is required"));
        }
        if self.mc_points == 0 {
            return Err(Error::config("mc_points must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub n: usize,
    pub trial: usize,
    /// `||u_hat - u_true||_r`
    pub err_r: f64,
    /// Monte-Carlo `||f_hat - f_true||_{L2}`
    pub err_l2: f64,
    pub lambda: f64,
    /// The fit missed its accuracy target within the iteration budget.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub lambda: f64,
    pub trials: usize,
    pub flagged: usize,
    pub median_err_r: f64,
    pub iqr_err_r: f64,
    pub median_err_l2: f64,
    pub iqr_err_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl ConsistencyReport {
    pub fn write_trials<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "trial", "err_r", "err_L2", "lambda", "flagged"])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                r.trial.to_string(),
                r.err_r.to_string(),
                r.err_l2.to_string(),
                r.lambda.to_string(),
                r.flagged.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "n",
            "lambda",
            "trials",
            "flagged",
            "median_err_r",
            "iqr_err_r",
            "median_err_L2",
            "iqr_err_L2",
        ])?;
        for s in &self.summary {
            out.write_record([
                s.n.to_string(),
                s.lambda.to_string(),
                s.trials.to_string(),
                s.flagged.to_string(),
                s.median_err_r.to_string(),
                s.iqr_err_r.to_string(),
                s.median_err_l2.to_string(),
                s.iqr_err_l2.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Fraction of flagged trials.
    pub fn flagged_rate(&self) -> f64 {
        self.rows.iter().filter(|r| r.flagged).count() as f64 / self.rows.len().max(1) as f64
    }
}

fn summarize(n: usize, lambda: f64, rows: &[TrialRow]) -> SummaryRow {
    let kept: Vec<&TrialRow> = rows.iter().filter(|r| !r.flagged).collect();
    let stats = |pick: fn(&TrialRow) -> f64| {
        let mut v: Vec<f64> = kept.iter().map(|r| pick(r)).collect();
        v.sort_by(f64::total_cmp);
        (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
    };
    let (median_err_r, iqr_err_r) = stats(|r| r.err_r);
    let (median_err_l2, iqr_err_l2) = stats(|r| r.err_l2);
    SummaryRow {
        n,
        lambda,
        trials: rows.len(),
        flagged: rows.len() - kept.len(),
        median_err_r,
        iqr_err_r,
        median_err_l2,
        iqr_err_l2,
    }
}

/// Fits `u_hat_{n, lambda_n}` on independent synthetic datasets for every
/// `n` in the grid, each to accuracy `epsilon = lambda_n^4`.
///
/// Trial `t` at grid position `i` uses seed `derive(master_seed, i, t)`;
/// results are independent of thread count and scheduling.
pub fn consistency_experiment(
    spec: &SyntheticSpec,
    reg: &SeparableRegularizer,
    options: &ConsistencyOptions,
    fit_options: &FitOptions,
) -> Result<ConsistencyReport> {
    spec.validate()?;
    options.validate()?;
    fit_options.validate()?;
    validate_family(reg).map_err(Error::InvalidFamily)?;
    if reg.dim() != spec.dimension {
        return Err(Error::DimensionMismatch { expected: spec.dimension, found: reg.dim() });
    }
    let truth = spec.truth();
    if !reg.is_feasible(&truth) {
        return Err(Error::config("true coefficients violate the hard constraints"));
    }
    let r = reg.r();
    let dict = spec.dictionary();
    let jobs: Vec<(usize, usize)> =
        (0..options.n_grid.len()).flat_map(|i| (0..options.trials).map(move |t| (i, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, t)| {
            let n = options.n_grid[i];
            let lambda = options.lambda(n);
            let trial_seed = seed::derive(options.master_seed, i as u64, t as u64);
            let (data, _) = generate(spec, n, trial_seed)?;
            let design = Design::new(&dict, &data)?;
            let opts = FitOptions { tolerance: lambda.powi(4), ..fit_options.clone() };
            let res = fit(&design, lambda, reg, &opts, None)?;
            let d = &res.coefficients - &truth;
            Ok(TrialRow {
                n,
                trial: t,
                err_r: lr_norm(&d, r),
                err_l2: l2_norm_mc(&dict, &d, options.mc_points, seed::mix(trial_seed)),
                lambda,
                flagged: !res.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = options
        .n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let block = &rows[i * options.trials..(i + 1) * options.trials];
            summarize(n, options.lambda(n), block)
        })
        .collect();
    Ok(ConsistencyReport { rows, summary })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    /// `||u_lambda||_r`
    pub norm_r: f64,
    /// `max{0, (2 (F(0) + eps) / (eta M lambda))^(1/r)}`
    pub bound: f64,
    /// `J(u_lambda)`
    pub objective: f64,
    pub epsilon: f64,
    /// `||u_lambda - u_true||_r` when the truth is known.
    pub err_r: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub points: Vec<PathPoint>,
    pub coefficients: Vec<Array1<f64>>,
}

impl PathReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda", "norm_r", "bound", "objective", "epsilon", "err_r", "converged"])?;
        for p in &self.points {
            out.write_record([
                p.lambda.to_string(),
                p.norm_r.to_string(),
                p.bound.to_string(),
                p.objective.to_string(),
                p.epsilon.to_string(),
                p.err_r.map(|e| e.to_string()).unwrap_or_default(),
                p.converged.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Warm-started fits along a decreasing `lambda` grid with accuracy
/// `epsilon(lambda) = lambda^4`. The norm bound is enforced at every point.
pub fn regularization_path(
    design: &Design,
    lambda_grid: &[f64],
    reg: &SeparableRegularizer,
    fit_options: &FitOptions,
    truth: Option<&Array1<f64>>,
) -> Result<PathReport> {
    if lambda_grid.is_empty() {
        return Err(Error::config("lambda grid is empty"));
    }
    if lambda_grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::config("lambda grid must be positive and finite"));
    }
    if lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("lambda grid must be strictly decreasing"));
    }
    if !reg.is_centered() {
        return Err(Error::config("regularization path requires a family minimized at 0"));
    }
    let cert = validate_family(reg).map_err(Error::InvalidFamily)?;
    let r = reg.r();
    let f0 = design.empirical_risk(&Array1::zeros(design.dim()))?;
    let mut warm: Option<Array1<f64>> = None;
    let mut points = Vec::with_capacity(lambda_grid.len());
    let mut coefficients = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let epsilon = lambda.powi(4);
        let opts = FitOptions { tolerance: epsilon, ..fit_options.clone() };
        let res = fit(design, lambda, reg, &opts, warm.as_ref())?;
        let norm_r = lr_norm(&res.coefficients, r);
        let bound = (2.0 * (f0 + epsilon) / (cert.eta * cert.m_constant * lambda)).powf(1.0 / r).max(0.0);
        if norm_r > bound {
            return Err(Error::Invariant { what: format!("path radius bound at lambda = {lambda}"), lhs: norm_r, rhs: bound });
        }
        points.push(PathPoint {
            lambda,
            norm_r,
            bound,
            objective: res.objective,
            epsilon,
            err_r: truth.map(|t| lr_norm(&(&res.coefficients - t), r)),
            converged: res.converged,
        });
        warm = Some(res.coefficients.clone());
        coefficients.push(res.coefficients);
    }
    Ok(PathReport { points, coefficients })
}

/// Setup of the objective-rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOptions {
    pub n: usize,
    pub lambda: f64,
    pub iterations: usize,
    /// The reference run uses this many times more iterations.
    #[serde(default = "default_reference_factor")]
    pub reference_factor: usize,
    #[serde(default)]
    pub data_seed: u64,
}

fn default_reference_factor() -> usize {
    10
}

#[derive(Debug, Clone)]
pub struct RateExperiment {
    pub fit: FitResult,
    pub j_ref: f64,
    pub report: RateReport,
}

/// Runs a fit for exactly `iterations` steps under `fit_options` (errors and
/// injections included) and measures it against an error-free reference run
/// with `gamma = 1/beta`.
pub fn rate_experiment(
    spec: &SyntheticSpec,
    reg: &SeparableRegularizer,
    options: &RateOptions,
    fit_options: &FitOptions,
) -> Result<RateExperiment> {
    if options.iterations < 20 || options.reference_factor == 0 {
        return Err(Error::config("rate experiment needs at least 20 iterations and a positive reference factor"));
    }
    let (data, _) = generate(spec, options.n, options.data_seed)?;
    let design = Design::new(&spec.dictionary(), &data)?;
    let opts = FitOptions { max_iters: options.iterations, tolerance: 0.0, ..fit_options.clone() };
    let run = fit(&design, options.lambda, reg, &opts, None)?;
    let reference = FitOptions {
        gamma_fraction: 0.5,
        tau: Schedule::Constant(1.0),
        max_iters: options.iterations * options.reference_factor,
        tolerance: 0.0,
        errors: ErrorSchedule { zeta: 0.0, ..opts.errors },
        injection: Injection::None,
        grad_error: Schedule::ZERO,
        fast_rate: false,
        keep_gradients: false,
    };
    let j_ref = fit(&design, options.lambda, reg, &reference, None)?.trace.min_objective();
    let report = rate_report(&run.trace, j_ref)?;
    Ok(RateExperiment { fit: run, j_ref, report })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionRow {
    /// Monte-Carlo `||f_u - f_true||^2_{L2}`
    pub distance_sq: f64,
    /// Monte-Carlo risk `E (f_u(x) - y)^2`
    pub risk: f64,
    /// Combined standard error of both estimates.
    pub std_error: f64,
}

impl ProjectionRow {
    /// `distance_sq <= risk + 3 SE`
    pub fn holds(&self) -> bool {
        self.distance_sq <= self.risk + 3.0 * self.std_error
    }
}

fn mean_and_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// For each candidate `u`, compares `||f_u - f_true||^2` against the risk of
/// `f_u`, both estimated on independent samples of `points` draws.
pub fn projection_identity_check(
    spec: &SyntheticSpec,
    candidates: &[Array1<f64>],
    points: usize,
    seed: u64,
) -> Result<Vec<ProjectionRow>> {
    spec.validate()?;
    if points < 2 {
        return Err(Error::config("need at least two Monte-Carlo points"));
    }
    let truth = spec.truth();
    let dict = spec.dictionary();
    let (data, _) = generate(spec, points, seed::derive(seed, 0, 0))?;
    let design = Design::new(&dict, &data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, 1, 0));
    let fresh: Vec<Array1<f64>> = (0..points).map(|_| dict.features(&[rng.gen::<f64>()])).collect();
    candidates
        .iter()
        .map(|u| {
            if u.len() != spec.dimension {
                return Err(Error::DimensionMismatch { expected: spec.dimension, found: u.len() });
            }
            let d = u - &truth;
            let dist: Vec<f64> = fresh.iter().map(|phi| phi.dot(&d).powi(2)).collect();
            let risk: Vec<f64> = design.residuals(u).mapv(|r| r * r).to_vec();
            let (dm, dv) = mean_and_var(&dist);
            let (rm, rv) = mean_and_var(&risk);
            Ok(ProjectionRow { distance_sq: dm, risk: rm, std_error: (dv / points as f64 + rv / points as f64).sqrt() })
        })
        .collect()
}
