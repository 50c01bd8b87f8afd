//! Relaxed forward-backward splitting with summable errors.
//!
//! Iterates
//!
//! ```text
//! v_m  ~_{delta_m} prox_{gamma_m G}(u_m - gamma_m (grad F(u_m) + b_m))
//! u_{m+1} = u_m + tau_m (v_m - u_m)
//! ```
//!
//! where `~_delta` is certified by the [`ProxTerm`] implementation, and
//! records per-iteration diagnostics for the objective `J = F + G`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::prox::ProxCertificate;

/// Iterations over which schedule summability is checked, at minimum.
pub const SCHEDULE_HORIZON: usize = 10_000;

/// Size of the sliding windows in the objective-gap estimate.
pub const GAP_WINDOW: usize = 10;

/// Differentiable convex term with Lipschitz gradient.
pub trait SmoothTerm: Sync {
    fn value(&self, u: &Array1<f64>) -> f64;
    fn gradient(&self, u: &Array1<f64>) -> Array1<f64>;
    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    fn value_and_gradient(&self, u: &Array1<f64>) -> (f64, Array1<f64>) {
        (self.value(u), self.gradient(u))
    }
}

/// Nonsmooth term with a certified inexact prox.
pub trait ProxTerm: Sync {
    fn value(&self, u: &Array1<f64>) -> f64;

    /// Approximates `prox_{gamma G}(w)` at iteration `iteration` spending at
    /// most `delta_budget` of inexactness.
    fn prox(
        &self,
        gamma: f64,
        w: &Array1<f64>,
        iteration: usize,
        delta_budget: f64,
    ) -> Result<ProxCertificate<Array1<f64>>>;
}

/// A real sequence indexed by the iteration counter `m >= 0`.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    /// `scale * (m + 1)^(-power)`
    Decay { scale: f64, power: f64 },
    /// `1 - scale * (m + 1)^(-power)`
    Complement { scale: f64, power: f64 },
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(c) => write!(f, "Constant({c})"),
            Schedule::Decay { scale, power } => write!(f, "Decay {{ scale: {scale}, power: {power} }}"),
            Schedule::Complement { scale, power } => write!(f, "Complement {{ scale: {scale}, power: {power} }}"),
            Schedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Schedule {
    pub const ZERO: Schedule = Schedule::Constant(0.0);

    pub fn at(&self, m: usize) -> f64 {
        let k = (m + 1) as f64;
        match self {
            Schedule::Constant(c) => *c,
            Schedule::Decay { scale, power } => scale * k.powf(-power),
            Schedule::Complement { scale, power } => 1.0 - scale * k.powf(-power),
            Schedule::Custom(f) => f(m),
        }
    }

    /// Limit as `m -> inf` when known in closed form.
    fn limit(&self) -> Option<f64> {
        match self {
            Schedule::Constant(c) => Some(*c),
            Schedule::Decay { scale, power } if *power > 0.0 => Some(0.0 * scale),
            Schedule::Complement { power, .. } if *power > 0.0 => Some(1.0),
            _ => None,
        }
    }
}

/// Outcome of a partial-sum plateau test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub total: f64,
    /// Increase of the partial sum over the last decade `[N/10, N)`.
    pub last_decade_increase: f64,
    pub plateaued: bool,
}

/// Declares a series summable when the last decade of terms adds less than
/// 1% to the total.
pub fn partial_sum_plateau(terms: &[f64]) -> Plateau {
    let total: f64 = terms.iter().sum();
    let start = terms.len() / 10;
    let tail: f64 = terms[start..].iter().sum();
    let plateaued = total == 0.0 || (total.is_finite() && tail < 0.01 * total);
    Plateau { total, last_decade_increase: tail, plateaued }
}

/// Schedules and stopping rule of [`run_fb`].
#[derive(Debug, Clone)]
pub struct FBConfig {
    pub gamma: Schedule,
    pub tau: Schedule,
    /// Norm of the gradient error `b_m`; the error points along `(1, ..., 1)`.
    pub grad_error: Schedule,
    /// Prox inexactness budget `delta_m`.
    pub prox_budget: Schedule,
    pub max_iters: usize,
    /// Stop once the gap estimate and `||v_m - u_m||` are both below this;
    /// 0 runs all `max_iters` iterations.
    pub stop_tolerance: f64,
    /// Require the strengthened schedules behind the `o(1/m)` objective rate.
    pub fast_rate: bool,
    /// Keep `grad F(u_m)` in the trace.
    pub keep_gradients: bool,
}

impl FBConfig {
    pub fn new(gamma: f64, max_iters: usize) -> Self {
        FBConfig {
            gamma: Schedule::Constant(gamma),
            tau: Schedule::Constant(1.0),
            grad_error: Schedule::ZERO,
            prox_budget: Schedule::ZERO,
            max_iters,
            stop_tolerance: 0.0,
            fast_rate: false,
            keep_gradients: false,
        }
    }

    /// Checks the step, relaxation, and error schedules against the
    /// Lipschitz constant `beta` of the smooth term.
    pub fn validate(&self, beta: f64) -> Result<()> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config(format!("Lipschitz constant must be positive and finite, got {beta}")));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if !(self.stop_tolerance >= 0.0) {
            return Err(Error::config("stop tolerance must be nonnegative"));
        }
        let horizon = self.max_iters.max(SCHEDULE_HORIZON);
        let gammas: Vec<f64> = (0..horizon).map(|m| self.gamma.at(m)).collect();
        let g_inf = gammas.iter().copied().fold(f64::INFINITY, f64::min).min(self.gamma.limit().unwrap_or(f64::INFINITY));
        let g_sup = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(g_inf > 0.0) {
            return Err(Error::config(format!("step sizes must satisfy inf gamma_m > 0 (found {g_inf})")));
        }
        if !(g_sup < 2.0 / beta) {
            return Err(Error::config(format!("step sizes must satisfy sup gamma_m < 2/beta = {} (found {g_sup})", 2.0 / beta)));
        }
        let taus: Vec<f64> = (0..horizon).map(|m| self.tau.at(m)).collect();
        if taus.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::config("relaxation parameters must lie in (0, 1]"));
        }
        let t_inf = taus.iter().copied().fold(f64::INFINITY, f64::min).min(self.tau.limit().unwrap_or(f64::INFINITY));
        if !(t_inf > 0.0) {
            return Err(Error::config("relaxation parameters must satisfy inf tau_m > 0"));
        }
        let deltas: Vec<f64> = (0..horizon).map(|m| self.prox_budget.at(m)).collect();
        let grads: Vec<f64> = (0..horizon).map(|m| self.grad_error.at(m)).collect();
        for (name, seq) in [("prox budget", &deltas), ("gradient error", &grads)] {
            if seq.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::config(format!("{name} schedule must be finite and nonnegative")));
            }
            if !partial_sum_plateau(seq).plateaued {
                return Err(Error::config(format!("{name} schedule is not summable")));
            }
        }
        if self.fast_rate {
            let weighted = |seq: &[f64]| seq.iter().enumerate().map(|(m, x)| m as f64 * x).collect::<Vec<_>>();
            let one_minus_tau: Vec<f64> = taus.iter().map(|t| 1.0 - t).collect();
            if !partial_sum_plateau(&one_minus_tau).plateaued {
                return Err(Error::config("o(1/m) rate requires sum (1 - tau_m) < inf"));
            }
            if !partial_sum_plateau(&weighted(&deltas)).plateaued {
                return Err(Error::config("o(1/m) rate requires sum m * delta_m < inf"));
            }
            if !partial_sum_plateau(&weighted(&grads)).plateaued {
                return Err(Error::config("o(1/m) rate requires sum m * ||b_m|| < inf"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub m: usize,
    pub j_u: f64,
    pub j_v: f64,
    /// `||v_m - u_m||^2`
    pub step_sq: f64,
    /// Certified prox inexactness.
    pub delta: f64,
}

#[derive(Debug, Clone, Default)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
    /// `grad F(u_m)` per iteration when requested.
    pub gradients: Option<Vec<Array1<f64>>>,
    pub converged: bool,
    /// Last value of the sliding-window gap estimate.
    pub gap_estimate: f64,
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn min_objective(&self) -> f64 {
        self.records.iter().flat_map(|r| [r.j_u, r.j_v]).fold(f64::INFINITY, f64::min)
    }

    /// Multiplies all objective values by `factor`.
    pub fn scale_objective(&mut self, factor: f64) {
        for r in &mut self.records {
            r.j_u *= factor;
            r.j_v *= factor;
        }
        self.gap_estimate *= factor;
    }

    /// CSV with columns `m, J_u, J_v, step_sq, delta, m_times_gap`. The gap is
    /// taken against `j_ref`, or against the smallest observed objective.
    pub fn write_csv<W: Write>(&self, w: W, j_ref: Option<f64>) -> Result<()> {
        let j_ref = j_ref.unwrap_or_else(|| self.min_objective());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["m", "J_u", "J_v", "step_sq", "delta", "m_times_gap"])?;
        for r in &self.records {
            let gap = (r.j_u - j_ref).max(0.0);
            out.write_record([
                r.m.to_string(),
                r.j_u.to_string(),
                r.j_v.to_string(),
                r.step_sq.to_string(),
                r.delta.to_string(),
                (r.m as f64 * gap).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Sliding-window estimate of the remaining objective decrease: the drop of
/// the windowed minimum of `J(u_m)` between the two most recent windows.
fn gap_estimate(j_u: &[f64]) -> Option<f64> {
    let n = j_u.len();
    if n < 2 * GAP_WINDOW {
        return None;
    }
    let min = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
    let prev = min(&j_u[n - 2 * GAP_WINDOW..n - GAP_WINDOW]);
    let recent = min(&j_u[n - GAP_WINDOW..]);
    Some((prev - recent).max(0.0))
}

/// Runs the relaxed inexact forward-backward iteration from `u0`.
pub fn run_fb<F: SmoothTerm + ?Sized, G: ProxTerm + ?Sized>(
    f: &F,
    g: &G,
    config: &FBConfig,
    u0: &Array1<f64>,
) -> Result<(Array1<f64>, IterateTrace)> {
    config.validate(f.lipschitz())?;
    let dim = u0.len();
    let direction = if dim > 0 { 1.0 / (dim as f64).sqrt() } else { 0.0 };
    let mut u = u0.clone();
    let (mut fu, mut grad) = f.value_and_gradient(&u);
    let mut gu = g.value(&u);
    let mut trace = IterateTrace {
        records: Vec::with_capacity(config.max_iters.min(1 << 20)),
        gradients: config.keep_gradients.then(Vec::new),
        ..Default::default()
    };
    let mut j_history = Vec::with_capacity(config.max_iters.min(1 << 20));

    for m in 0..config.max_iters {
        let gamma = config.gamma.at(m);
        let tau = config.tau.at(m);
        let b = config.grad_error.at(m) * direction;
        let budget = config.prox_budget.at(m);

        let w = &u - &((&grad + b) * gamma);
        let cert = g.prox(gamma, &w, m, budget)?;
        if cert.delta > budget * (1.0 + 1e-9) {
            return Err(Error::BudgetExceeded { iteration: m, delta: cert.delta, budget });
        }
        let v = cert.value;
        let (fv, grad_v) = f.value_and_gradient(&v);
        let gv = g.value(&v);
        let j_u = fu + gu;
        let j_v = fv + gv;
        if !j_u.is_finite() || !j_v.is_finite() {
            return Err(Error::NonFinite(m));
        }
        let diff = &v - &u;
        let step_sq = diff.dot(&diff);
        trace.records.push(IterateRecord { m, j_u, j_v, step_sq, delta: cert.delta });
        if let Some(gs) = trace.gradients.as_mut() {
            gs.push(grad.clone());
        }
        j_history.push(j_u);

        if tau == 1.0 {
            u = v;
            fu = fv;
            grad = grad_v;
            gu = gv;
        } else {
            u = &u + &(diff * tau);
            let (a, b) = f.value_and_gradient(&u);
            fu = a;
            grad = b;
            gu = g.value(&u);
        }

        if let Some(est) = gap_estimate(&j_history) {
            trace.gap_estimate = est;
            let stop = config.stop_tolerance > 0.0 && est <= config.stop_tolerance && step_sq.sqrt() <= config.stop_tolerance;
            if stop {
                trace.converged = true;
                break;
            }
        }
    }
    Ok((u, trace))
}

/// High-accuracy reference value of `inf J`: the smallest objective observed
/// over an error-free run with `gamma = 1/beta` and no relaxation.
pub fn reference_optimum<F: SmoothTerm + ?Sized, G: ProxTerm + ?Sized>(
    f: &F,
    g: &G,
    u0: &Array1<f64>,
    iterations: usize,
) -> Result<f64> {
    let config = FBConfig::new(1.0 / f.lipschitz(), iterations);
    let (_, trace) = run_fb(f, g, &config, u0)?;
    Ok(trace.min_objective())
}

/// Partial sums and rate diagnostics of a trace against a reference optimum.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub j_ref: f64,
    /// `sum (J(v_m) - J_ref)^2`
    pub sum_sq_v_gap: Plateau,
    /// `sum ||v_m - u_m||^2`
    pub sum_step_sq: Plateau,
    /// `sum (J(u_m) - J_ref)`
    pub sum_u_gap: Plateau,
    /// `sum ||grad F(u_m) - grad F(u_last)||^2` when gradients were kept.
    pub sum_grad_dist_sq: Option<Plateau>,
    /// `m * (J(u_m) - J_ref)`
    pub m_times_gap: Vec<f64>,
    /// `max over tail window / max over mid window` of `m_times_gap`.
    pub tail_ratio: f64,
    pub mid_window: (usize, usize),
    pub tail_window: (usize, usize),
}

impl RateReport {
    /// Ratio of window maxima of `m (J(u_m) - J_ref)` for inclusive windows.
    pub fn window_ratio(&self, mid: (usize, usize), tail: (usize, usize)) -> f64 {
        window_ratio(&self.m_times_gap, mid, tail)
    }

    pub fn all_plateaued(&self) -> bool {
        self.sum_sq_v_gap.plateaued
            && self.sum_step_sq.plateaued
            && self.sum_u_gap.plateaued
            && self.sum_grad_dist_sq.is_none_or(|p| p.plateaued)
    }
}

fn window_ratio(seq: &[f64], mid: (usize, usize), tail: (usize, usize)) -> f64 {
    let max_in = |(a, b): (usize, usize)| {
        let b = b.min(seq.len().saturating_sub(1));
        if a > b {
            return 0.0;
        }
        seq[a..=b].iter().copied().fold(0.0, f64::max)
    };
    let mid_max = max_in(mid);
    let tail_max = max_in(tail);
    if mid_max == 0.0 {
        if tail_max == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        tail_max / mid_max
    }
}

/// Builds the rate summary. Windows default to `[N/20, N/10]` (mid) and
/// `[N/2, N]` (tail) where `N` is the last iteration index.
pub fn rate_report(trace: &IterateTrace, j_ref: f64) -> Result<RateReport> {
    if trace.is_empty() {
        return Err(Error::config("empty trace"));
    }
    let observed = trace.min_objective();
    if j_ref > observed + 1e-12 * (1.0 + observed.abs()) {
        return Err(Error::InconsistentReference { reference: j_ref, observed });
    }
    let gap = |j: f64| (j - j_ref).max(0.0);
    let v_sq: Vec<f64> = trace.records.iter().map(|r| gap(r.j_v).powi(2)).collect();
    let steps: Vec<f64> = trace.records.iter().map(|r| r.step_sq).collect();
    let u_gap: Vec<f64> = trace.records.iter().map(|r| gap(r.j_u)).collect();
    let m_times_gap: Vec<f64> = trace.records.iter().map(|r| r.m as f64 * gap(r.j_u)).collect();
    let sum_grad_dist_sq = trace.gradients.as_ref().and_then(|gs| {
        let last = gs.last()?;
        let d: Vec<f64> = gs.iter().map(|g| (g - last).mapv(|x| x * x).sum()).collect();
        Some(partial_sum_plateau(&d))
    });
    let n = trace.records.last().map(|r| r.m).unwrap_or(0);
    let mid_window = (n / 20, n / 10);
    let tail_window = (n / 2, n);
    Ok(RateReport {
        j_ref,
        sum_sq_v_gap: partial_sum_plateau(&v_sq),
        sum_step_sq: partial_sum_plateau(&steps),
        sum_u_gap: partial_sum_plateau(&u_gap),
        sum_grad_dist_sq,
        tail_ratio: window_ratio(&m_times_gap, mid_window, tail_window),
        m_times_gap,
        mid_window,
        tail_window,
    })
}
