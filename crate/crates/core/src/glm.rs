//! Dictionary models `f_u = sum_k u_k phi_k` fitted by regularized least
//! squares with the componentwise inexact forward-backward loop.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::fb::{run_fb, FBConfig, IterateTrace, ProxTerm, Schedule, SmoothTerm};
use crate::prox::{lr_norm, prox_separable, Perturbation, ProxCertificate, SeparableRegularizer};
use crate::seed;

/// A finite feature family `Phi(x) = (phi_1(x), ..., phi_K(x))`.
pub trait Dictionary: Send + Sync {
    fn dimension(&self) -> usize;

    /// Writes `Phi(x)` into `out` (of length [`Dictionary::dimension`]).
    fn features_into(&self, x: &[f64], out: &mut [f64]);

    /// Analytic `kappa` with `sup_x ||Phi(x)||^2 <= kappa^2`, when known.
    fn kappa(&self) -> Option<f64> {
        None
    }

    /// Number of input columns required, when fixed.
    fn input_width(&self) -> Option<usize> {
        None
    }

    fn features(&self, x: &[f64]) -> Array1<f64> {
        let mut out = Array1::zeros(self.dimension());
        self.features_into(x, out.as_slice_mut().expect("contiguous"));
        out
    }
}

/// `phi_k(x) = sqrt(2) cos(2 pi k x) / k` for `k = 1..=K` on `x in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigDictionary {
    pub dimension: usize,
}

impl TrigDictionary {
    pub fn new(dimension: usize) -> Self {
        TrigDictionary { dimension }
    }
}

impl Dictionary for TrigDictionary {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        let t = 2.0 * std::f64::consts::PI * x[0];
        for (j, o) in out.iter_mut().enumerate() {
            let k = (j + 1) as f64;
            *o = std::f64::consts::SQRT_2 * (k * t).cos() / k;
        }
    }

    fn kappa(&self) -> Option<f64> {
        let s: f64 = (1..=self.dimension).map(|k| 1.0 / (k * k) as f64).sum();
        Some((2.0 * s).sqrt())
    }

    fn input_width(&self) -> Option<usize> {
        Some(1)
    }
}

/// Inputs are already feature vectors: `Phi(x) = x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecomputedFeatures {
    pub dimension: usize,
}

impl Dictionary for PrecomputedFeatures {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&x[..self.dimension]);
    }

    fn input_width(&self) -> Option<usize> {
        Some(self.dimension)
    }
}

/// Dictionary from a closure.
pub struct FnDictionary<F> {
    pub dimension: usize,
    pub kappa: Option<f64>,
    pub map: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> Dictionary for FnDictionary<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn features_into(&self, x: &[f64], out: &mut [f64]) {
        (self.map)(x, out)
    }

    fn kappa(&self) -> Option<f64> {
        self.kappa
    }
}

/// Samples `(x_i, y_i)` with outputs bounded by `bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// One row per sample.
    pub inputs: Array2<f64>,
    pub outputs: Array1<f64>,
    pub bound: f64,
}

impl Dataset {
    /// `bound` defaults to `max |y_i|`.
    pub fn new(inputs: Array2<f64>, outputs: Array1<f64>, bound: Option<f64>) -> Result<Self> {
        let n = outputs.len();
        if n == 0 {
            return Err(Error::config("dataset is empty"));
        }
        if inputs.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: inputs.nrows() });
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("dataset contains non-finite values"));
        }
        let max_abs = outputs.iter().fold(0.0f64, |a, y| a.max(y.abs()));
        let bound = bound.unwrap_or(max_abs);
        if max_abs > bound {
            return Err(Error::config(format!("output magnitude {max_abs} exceeds declared bound {bound}")));
        }
        Ok(Dataset { inputs, outputs, bound })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Reads a CSV with a header row; the last column is `y`.
    pub fn from_csv(path: &Path, bound: Option<f64>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(format!("{}: row {}: cannot parse '{s}'", path.display(), line + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() < 2 {
                return Err(Error::config(format!("{}: need at least one input column and y", path.display())));
            }
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::DimensionMismatch { expected: first.len(), found: row.len() });
                }
            }
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::config(format!("{}: no samples", path.display())));
        }
        let width = rows[0].len() - 1;
        let mut inputs = Array2::zeros((n, width));
        let mut outputs = Array1::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for j in 0..width {
                inputs[[i, j]] = row[j];
            }
            outputs[i] = row[width];
        }
        Dataset::new(inputs, outputs, bound)
    }
}

/// Feature matrix of a dataset under a dictionary, with its `kappa` bounds.
#[derive(Debug, Clone)]
pub struct Design {
    /// `n x K`, row `i` is `Phi(x_i)`.
    pub features: Array2<f64>,
    pub outputs: Array1<f64>,
    pub bound: f64,
    /// `max_i ||Phi(x_i)||^2`
    pub kappa_hat_sq: f64,
    /// Analytic bound when the dictionary supplies one.
    pub kappa_sq: Option<f64>,
}

impl Design {
    pub fn new(dict: &dyn Dictionary, data: &Dataset) -> Result<Self> {
        let k = dict.dimension();
        if k == 0 {
            return Err(Error::config("dictionary dimension must be positive"));
        }
        if let Some(w) = dict.input_width() {
            if data.inputs.ncols() != w {
                return Err(Error::DimensionMismatch { expected: w, found: data.inputs.ncols() });
            }
        }
        let n = data.len();
        let mut features = Array2::zeros((n, k));
        for (i, mut row) in features.axis_iter_mut(Axis(0)).enumerate() {
            let x = data.inputs.row(i).to_vec();
            dict.features_into(&x, row.as_slice_mut().expect("contiguous"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("dictionary produced non-finite features"));
        }
        let kappa_hat_sq = features.axis_iter(Axis(0)).map(|r| r.dot(&r)).fold(0.0, f64::max);
        let kappa_sq = dict.kappa().map(|c| c * c);
        if let Some(c2) = kappa_sq {
            if kappa_hat_sq > c2 * (1.0 + 1e-12) {
                return Err(Error::config(format!(
                    "sampled ||Phi(x)||^2 = {kappa_hat_sq} exceeds the dictionary's kappa^2 = {c2}"
                )));
            }
        }
        Ok(Design { features, outputs: data.outputs.clone(), bound: data.bound, kappa_hat_sq, kappa_sq })
    }

    pub fn n(&self) -> usize {
        self.outputs.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// `kappa^2` used in step bounds: analytic if available, else sampled.
    pub fn kappa_sq_for_steps(&self) -> f64 {
        self.kappa_sq.unwrap_or(self.kappa_hat_sq)
    }

    fn check(&self, u: &Array1<f64>) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.len() });
        }
        Ok(())
    }

    /// `f_u(x_i) - y_i`
    pub fn residuals(&self, u: &Array1<f64>) -> Array1<f64> {
        self.features.dot(u) - &self.outputs
    }

    /// `(1/n) sum_i (<u, Phi(x_i)> - y_i)^2`
    pub fn empirical_risk(&self, u: &Array1<f64>) -> Result<f64> {
        self.check(u)?;
        Ok(self.risk_unchecked(u))
    }

    /// Gradient of the empirical risk and its Lipschitz constant `2 kappa_hat^2`.
    pub fn empirical_risk_gradient(&self, u: &Array1<f64>) -> Result<(Array1<f64>, f64)> {
        self.check(u)?;
        let r = self.residuals(u);
        Ok((self.features.t().dot(&r) * (2.0 / self.n() as f64), 2.0 * self.kappa_hat_sq))
    }

    fn risk_unchecked(&self, u: &Array1<f64>) -> f64 {
        let r = self.residuals(u);
        r.dot(&r) / self.n() as f64
    }

    /// `F_hat(u) + lambda G(u)`
    pub fn objective(&self, lambda: f64, reg: &SeparableRegularizer, u: &Array1<f64>) -> Result<f64> {
        Ok(self.empirical_risk(u)? + lambda * reg.value(u))
    }
}

pub fn empirical_risk(dict: &dyn Dictionary, data: &Dataset, u: &Array1<f64>) -> Result<f64> {
    Design::new(dict, data)?.empirical_risk(u)
}

pub fn empirical_risk_gradient(dict: &dyn Dictionary, data: &Dataset, u: &Array1<f64>) -> Result<(Array1<f64>, f64)> {
    Design::new(dict, data)?.empirical_risk_gradient(u)
}

/// `f_u(x) = sum_k u_k phi_k(x)`
pub fn predict(dict: &dyn Dictionary, u: &Array1<f64>, x: &[f64]) -> f64 {
    dict.features(x).dot(u)
}

/// Perturbations injected after `prox_{gamma h_k}` during a fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Injection {
    #[default]
    None,
    /// `alpha_{m,k} = scale * U * bound_{m,k}` with `U` uniform on `[-1, 1]`.
    Uniform { scale: f64, seed: u64 },
    /// `alpha_{m,k} = +-scale * bound_{m,k}` with random signs.
    Signs { scale: f64, seed: u64 },
}

impl Injection {
    fn fraction(&self, m: usize, k: usize) -> f64 {
        match *self {
            Injection::None => 0.0,
            Injection::Uniform { scale, seed } => scale * seed::signed_unit(seed, m as u64, k as u64),
            Injection::Signs { scale, seed } => {
                if seed::signed_unit(seed, m as u64, k as u64) >= 0.0 {
                    scale
                } else {
                    -scale
                }
            }
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Injection::None => 0.0,
            Injection::Uniform { scale, .. } | Injection::Signs { scale, .. } => scale,
        }
    }
}

/// Per-coordinate error budgets `xi_{m,k} = zeta (m+1)^(-2p) xi_k` with
/// `xi_k = decay^k` for `k = 1..=K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSchedule {
    pub zeta: f64,
    pub p: f64,
    pub xi_decay: f64,
}

impl Default for ErrorSchedule {
    fn default() -> Self {
        ErrorSchedule { zeta: 1.0, p: 3.0, xi_decay: 0.5 }
    }
}

impl ErrorSchedule {
    fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::config("zeta must be finite and nonnegative"));
        }
        if !(self.p > 0.5 && self.p.is_finite()) {
            return Err(Error::config(format!("error exponent p = {} must exceed 1/2", self.p)));
        }
        if !(self.xi_decay > 0.0 && self.xi_decay < 1.0) {
            return Err(Error::config("xi decay must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn xi(&self, dim: usize) -> Vec<f64> {
        (1..=dim).map(|k| self.xi_decay.powi(k as i32)).collect()
    }

    /// `delta_m = sqrt(zeta sum_k xi_k) (m+1)^(-p)`
    pub fn delta_schedule(&self, dim: usize) -> Schedule {
        let total: f64 = self.xi(dim).iter().sum();
        Schedule::Decay { scale: (self.zeta * total).sqrt(), power: self.p }
    }
}

/// Solver settings of [`fit`]. Tolerances are in units of `J = F_hat + lambda G`.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// `gamma = gamma_fraction * lambda / kappa^2`, in `(0, 1)`.
    pub gamma_fraction: f64,
    pub tau: Schedule,
    pub max_iters: usize,
    /// Target accuracy `epsilon` on `J`; 0 disables early stopping.
    pub tolerance: f64,
    pub errors: ErrorSchedule,
    pub injection: Injection,
    /// Norm of the gradient error `b_m`, entering as `(gamma/lambda)(grad F_hat + b_m)`.
    pub grad_error: Schedule,
    pub fast_rate: bool,
    pub keep_gradients: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            gamma_fraction: 0.9,
            tau: Schedule::Constant(1.0),
            max_iters: 5000,
            tolerance: 0.0,
            errors: ErrorSchedule::default(),
            injection: Injection::None,
            grad_error: Schedule::ZERO,
            fast_rate: false,
            keep_gradients: false,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_fraction > 0.0 && self.gamma_fraction < 1.0) {
            return Err(Error::config(format!(
                "gamma fraction {} must lie in (0, 1) so that sup gamma_m < lambda/kappa^2",
                self.gamma_fraction
            )));
        }
        self.errors.validate()?;
        if self.fast_rate && self.errors.p <= 2.0 {
            return Err(Error::config(format!(
                "o(1/m) rate requires p > 2 in the error schedule (got p = {})",
                self.errors.p
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("tolerance must be nonnegative"));
        }
        let s = self.injection.scale();
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::config(format!("injection scale {s} outside [0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Array1<f64>,
    pub lambda: f64,
    /// Objective values in `J = F_hat + lambda G` units.
    pub trace: IterateTrace,
    /// `J(u_hat)`
    pub objective: f64,
    pub converged: bool,
}

impl FitResult {
    /// CSV with columns `k, mu_k` (`k` counted from 1).
    pub fn write_coefficients<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "mu_k"])?;
        for (k, v) in self.coefficients.iter().enumerate() {
            out.write_record([(k + 1).to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `F_hat / lambda`
struct ScaledRisk<'a> {
    design: &'a Design,
    inv_lambda: f64,
    lipschitz: f64,
}

impl SmoothTerm for ScaledRisk<'_> {
    fn value(&self, u: &Array1<f64>) -> f64 {
        self.design.risk_unchecked(u) * self.inv_lambda
    }

    fn gradient(&self, u: &Array1<f64>) -> Array1<f64> {
        self.value_and_gradient(u).1
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value_and_gradient(&self, u: &Array1<f64>) -> (f64, Array1<f64>) {
        let r = self.design.residuals(u);
        let n = self.design.n() as f64;
        let value = r.dot(&r) / n * self.inv_lambda;
        let grad = self.design.features.t().dot(&r) * (2.0 / n * self.inv_lambda);
        (value, grad)
    }
}

struct ComponentwiseProx<'a> {
    reg: &'a SeparableRegularizer,
    xi: Vec<f64>,
    errors: ErrorSchedule,
    injection: Injection,
}

impl ProxTerm for ComponentwiseProx<'_> {
    fn value(&self, u: &Array1<f64>) -> f64 {
        self.reg.value(u)
    }

    fn prox(&self, gamma: f64, w: &Array1<f64>, m: usize, delta_budget: f64) -> Result<ProxCertificate<Array1<f64>>> {
        let dim = w.len();
        if delta_budget == 0.0 || self.errors.zeta == 0.0 {
            return prox_separable(self.reg, gamma, w, &vec![0.0; dim], Perturbation::None);
        }
        let factor = self.errors.zeta * ((m + 1) as f64).powf(-2.0 * self.errors.p);
        let budget: Vec<f64> = self.xi.iter().map(|x| factor * x).collect();
        match self.injection {
            Injection::None => prox_separable(self.reg, gamma, w, &budget, Perturbation::None),
            inj => {
                let fractions: Vec<f64> = (0..dim).map(|k| inj.fraction(m, k)).collect();
                prox_separable(self.reg, gamma, w, &budget, Perturbation::FractionOfBound(&fractions))
            }
        }
    }
}

fn scale_schedule(s: &Schedule, factor: f64) -> Schedule {
    match s {
        Schedule::Constant(c) => Schedule::Constant(c * factor),
        Schedule::Decay { scale, power } => Schedule::Decay { scale: scale * factor, power: *power },
        other => {
            let inner = other.clone();
            Schedule::Custom(std::sync::Arc::new(move |m| inner.at(m) * factor))
        }
    }
}

/// Minimizes `F_hat(u) + lambda G(u)` by running the forward-backward
/// solver on `F_hat / lambda + G` from `u0` (zero when `None`).
pub fn fit(
    design: &Design,
    lambda: f64,
    reg: &SeparableRegularizer,
    options: &FitOptions,
    u0: Option<&Array1<f64>>,
) -> Result<FitResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!("lambda must be positive and finite, got {lambda}")));
    }
    options.validate()?;
    let dim = design.dim();
    if reg.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: reg.dim() });
    }
    let zero = Array1::zeros(dim);
    let u0 = u0.unwrap_or(&zero);
    if u0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: u0.len() });
    }
    let kappa_sq = design.kappa_sq_for_steps();
    if !(kappa_sq > 0.0) {
        return Err(Error::config("all feature vectors vanish on the dataset"));
    }
    let smooth = ScaledRisk { design, inv_lambda: 1.0 / lambda, lipschitz: 2.0 * kappa_sq / lambda };
    let prox = ComponentwiseProx { reg, xi: options.errors.xi(dim), errors: options.errors, injection: options.injection };
    let config = FBConfig {
        gamma: Schedule::Constant(options.gamma_fraction * lambda / kappa_sq),
        tau: options.tau.clone(),
        grad_error: scale_schedule(&options.grad_error, 1.0 / lambda),
        prox_budget: if options.errors.zeta == 0.0 { Schedule::ZERO } else { options.errors.delta_schedule(dim) },
        max_iters: options.max_iters,
        stop_tolerance: options.tolerance / lambda,
        fast_rate: options.fast_rate,
        keep_gradients: options.keep_gradients,
    };
    let (u, mut trace) = run_fb(&smooth, &prox, &config, u0)?;
    trace.scale_objective(lambda);
    let objective = design.objective(lambda, reg, &u)?;
    Ok(FitResult { coefficients: u, lambda, converged: trace.converged, trace, objective })
}

/// Checks of the influence-function bounds for `Psi(x, y) = 2 (f_u(x) - y) Phi(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub max_psi_norm: f64,
    /// `2 kappa_hat (kappa_hat ||u||_2 + b)`
    pub sup_bound: f64,
    pub mean_psi_sq: f64,
    /// `4 kappa_hat^2 R_hat(f_u)`
    pub mean_bound: f64,
}

impl StabilityReport {
    pub fn sup_slack(&self) -> f64 {
        self.sup_bound - self.max_psi_norm
    }

    pub fn mean_slack(&self) -> f64 {
        self.mean_bound - self.mean_psi_sq
    }

    /// Fails with an invariant error if either slack is below `-tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if self.sup_slack() < -tol {
            return Err(Error::Invariant {
                what: "max ||Psi|| <= 2 kappa (kappa ||u|| + b)".into(),
                lhs: self.max_psi_norm,
                rhs: self.sup_bound,
            });
        }
        if self.mean_slack() < -tol {
            return Err(Error::Invariant {
                what: "mean ||Psi||^2 <= 4 kappa^2 R(u)".into(),
                lhs: self.mean_psi_sq,
                rhs: self.mean_bound,
            });
        }
        Ok(())
    }
}

pub fn stability_diagnostic(design: &Design, u: &Array1<f64>, b: f64) -> Result<StabilityReport> {
    design.check(u)?;
    let r = design.residuals(u);
    let mut max_norm: f64 = 0.0;
    let mut mean_sq = 0.0;
    for (ri, row) in r.iter().zip(design.features.axis_iter(Axis(0))) {
        let psi_sq = 4.0 * ri * ri * row.dot(&row);
        max_norm = max_norm.max(psi_sq.sqrt());
        mean_sq += psi_sq;
    }
    let n = design.n() as f64;
    mean_sq /= n;
    let kappa = design.kappa_hat_sq.sqrt();
    let unorm = u.dot(u).sqrt();
    Ok(StabilityReport {
        max_psi_norm: max_norm,
        sup_bound: 2.0 * kappa * (kappa * unorm + b),
        mean_psi_sq: mean_sq,
        mean_bound: 4.0 * design.kappa_hat_sq * r.dot(&r) / n,
    })
}

/// Slack of the total-convexity lower bound
/// `J(u) - J(u_hat) >= lambda eta M ||d||_r^2 / (||u_hat||_r + ||d||_r)^(2-r)`
/// with `d = u - u_hat`.
pub fn total_convexity_slack(
    design: &Design,
    lambda: f64,
    reg: &SeparableRegularizer,
    m_constant: f64,
    u_hat: &Array1<f64>,
    u: &Array1<f64>,
) -> Result<f64> {
    let r = reg.r();
    let d = u - u_hat;
    let dn = lr_norm(&d, r);
    let lhs = design.objective(lambda, reg, u)? - design.objective(lambda, reg, u_hat)?;
    if dn == 0.0 {
        return Ok(lhs);
    }
    let denom = (lr_norm(u_hat, r) + dn).powf(2.0 - r);
    Ok(lhs - lambda * reg.eta() * m_constant * dn * dn / denom)
}

/// `Cst` with `||u - u_hat||_r <= Cst sqrt(J(u) - J(u_hat))` whenever
/// `||u - u_hat||_r <= radius`.
pub fn distance_constant(lambda: f64, eta: f64, m_constant: f64, r: f64, u_hat_norm: f64, radius: f64) -> f64 {
    ((u_hat_norm + radius).powf(2.0 - r) / (lambda * eta * m_constant)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{validate_family, ScalarRegularizer};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn unit_design() -> (PrecomputedFeatures, Dataset) {
        let data = Dataset::new(array![[1.0, 0.0]], array![1.0], None).unwrap();
        (PrecomputedFeatures { dimension: 2 }, data)
    }

    #[test]
    fn risk_of_zero_and_exact_fit() {
        let (dict, data) = unit_design();
        assert_eq!(empirical_risk(&dict, &data, &array![0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(empirical_risk(&dict, &data, &array![1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_at_zero() {
        let (dict, data) = unit_design();
        let (g, lip) = empirical_risk_gradient(&dict, &data, &array![0.0, 0.0]).unwrap();
        assert_eq!(g, array![-2.0, 0.0]);
        assert_eq!(lip, 2.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (dict, data) = unit_design();
        assert!(matches!(
            empirical_risk(&dict, &data, &array![0.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn trig_kappa_bounds_samples() {
        let dict = TrigDictionary::new(30);
        let kappa = dict.kappa().unwrap();
        assert!(kappa * kappa < std::f64::consts::PI.powi(2) / 3.0);
        for i in 0..200 {
            let phi = dict.features(&[i as f64 / 199.0]);
            assert!(phi.dot(&phi) <= kappa * kappa * (1.0 + 1e-12));
        }
        // x = 0 attains the bound
        let phi = dict.features(&[0.0]);
        assert_relative_eq!(phi.dot(&phi), kappa * kappa, max_relative = 1e-12);
    }

    #[test]
    fn predict_basis_vector() {
        let dict = TrigDictionary::new(4);
        let x = [0.3];
        assert_eq!(predict(&dict, &Array1::zeros(4), &x), 0.0);
        let e3 = array![0.0, 0.0, 1.0, 0.0];
        assert_relative_eq!(predict(&dict, &e3, &x), dict.features(&x)[2], epsilon = 1e-15);
    }

    #[test]
    fn huge_lambda_gives_zero() {
        let dict = TrigDictionary::new(5);
        let inputs = Array2::from_shape_fn((40, 1), |(i, _)| i as f64 / 40.0);
        let outputs = inputs.column(0).mapv(|x| (2.0 * std::f64::consts::PI * x).cos());
        let data = Dataset::new(inputs, outputs, None).unwrap();
        let design = Design::new(&dict, &data).unwrap();
        let reg = SeparableRegularizer::uniform(ScalarRegularizer::elastic_net(0.1, 1.0, 2.0).unwrap(), 5).unwrap();
        let j0 = design.objective(1.0, &reg, &Array1::zeros(5)).unwrap();
        let res = fit(&design, 1e6 * j0, &reg, &FitOptions { max_iters: 200, ..Default::default() }, None).unwrap();
        assert!(res.coefficients.dot(&res.coefficients).sqrt() <= 1e-3);
    }

    #[test]
    fn gamma_fraction_must_respect_step_bound() {
        let (dict, data) = unit_design();
        let design = Design::new(&dict, &data).unwrap();
        let reg = SeparableRegularizer::uniform(ScalarRegularizer::elastic_net(0.1, 1.0, 2.0).unwrap(), 2).unwrap();
        let opts = FitOptions { gamma_fraction: 1.0, ..Default::default() };
        assert!(fit(&design, 1.0, &reg, &opts, None).unwrap_err().is_config_error());
    }

    #[test]
    fn fast_rate_needs_p_above_two() {
        let opts = FitOptions {
            fast_rate: true,
            errors: ErrorSchedule { p: 2.0, ..Default::default() },
            ..Default::default()
        };
        let msg = opts.validate().unwrap_err().to_string();
        assert!(msg.contains("requires p > 2"), "{msg}");
    }

    #[test]
    fn stability_trivial_case() {
        // u = 0, y = b, Phi = e_1: ||Psi|| = 2b
        let data = Dataset::new(array![[1.0, 0.0], [1.0, 0.0]], array![0.7, 0.7], None).unwrap();
        let design = Design::new(&PrecomputedFeatures { dimension: 2 }, &data).unwrap();
        let rep = stability_diagnostic(&design, &Array1::zeros(2), 0.7).unwrap();
        assert_relative_eq!(rep.max_psi_norm, 1.4, epsilon = 1e-15);
        assert!(rep.sup_slack() >= 0.0);
        rep.check(1e-10).unwrap();
    }

    #[test]
    fn total_convexity_on_fitted_ridge() {
        let dict = TrigDictionary::new(6);
        let inputs = Array2::from_shape_fn((60, 1), |(i, _)| (i as f64 + 0.5) / 60.0);
        let outputs = inputs.column(0).mapv(|x| 0.8 * (2.0 * std::f64::consts::PI * x).cos());
        let data = Dataset::new(inputs, outputs, Some(1.0)).unwrap();
        let design = Design::new(&dict, &data).unwrap();
        let reg = SeparableRegularizer::uniform(ScalarRegularizer::elastic_net(0.05, 1.0, 2.0).unwrap(), 6).unwrap();
        let cert = validate_family(&reg).unwrap();
        let res = fit(&design, 0.1, &reg, &FitOptions { max_iters: 3000, ..Default::default() }, None).unwrap();
        for j in 0..6 {
            let mut u = res.coefficients.clone();
            u[j] += 0.3;
            let slack = total_convexity_slack(&design, 0.1, &reg, cert.m_constant, &res.coefficients, &u).unwrap();
            assert!(slack >= -1e-8, "slack {slack}");
        }
    }
}
