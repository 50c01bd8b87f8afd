use std::fmt;
use std::sync::Arc;

use super::interval::Interval;
use super::power::{check_power_params, prox_power};
use crate::error::{Error, Result};

/// A convex, nonnegative scalar function with `f(0) = 0`, finite on all of R.
/// Only evaluation is required; its contribution to the prox is obtained by
/// a bracketed search.
pub trait ConvexPenalty: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> f64;
}

/// Adapter turning a closure into a [`ConvexPenalty`].
pub struct FnPenalty<F>(pub F);

impl<F> fmt::Debug for FnPenalty<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnPenalty(..)")
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> ConvexPenalty for FnPenalty<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// `h(t) = eta |t|^r + extra(t)`.
#[derive(Clone)]
pub struct PowerPenalty {
    pub eta: f64,
    pub r: f64,
    pub extra: Option<Arc<dyn ConvexPenalty>>,
}

impl fmt::Debug for PowerPenalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PowerPenalty")
            .field("eta", &self.eta)
            .field("r", &self.r)
            .field("extra", &self.extra.is_some())
            .finish()
    }
}

impl PartialEq for PowerPenalty {
    fn eq(&self, other: &Self) -> bool {
        let same_extra = match (&self.extra, &other.extra) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        };
        self.eta == other.eta && self.r == other.r && same_extra
    }
}

impl PowerPenalty {
    pub fn new(eta: f64, r: f64) -> Result<Self> {
        check_power_params(1.0, eta, r)?;
        Ok(PowerPenalty { eta, r, extra: None })
    }

    pub fn with_extra(mut self, extra: Arc<dyn ConvexPenalty>) -> Result<Self> {
        if extra.value(0.0) != 0.0 {
            return Err(Error::config("extra penalty must vanish at 0"));
        }
        self.extra = Some(extra);
        Ok(self)
    }

    pub fn value(&self, t: f64) -> f64 {
        let base = self.eta * t.abs().powf(self.r);
        match &self.extra {
            Some(e) => base + e.value(t),
            None => base,
        }
    }

    /// `prox_{gamma h}(mu)` together with a bound on its absolute error
    /// (zero on the closed-form/Newton path).
    pub fn prox(&self, gamma: f64, mu: f64) -> Result<(f64, f64)> {
        match &self.extra {
            None => Ok((prox_power(gamma, self.eta, self.r, mu)?, 0.0)),
            Some(_) => Ok(self.prox_by_search(gamma, mu, 1e-13 * (1.0 + mu.abs()))),
        }
    }

    /// Golden-section search of `gamma h(v) + (v - mu)^2 / 2` on the segment
    /// between 0 and `mu`, which contains the prox because `h` is minimized at 0.
    pub(crate) fn prox_by_search(&self, gamma: f64, mu: f64, tol: f64) -> (f64, f64) {
        if mu == 0.0 {
            return (0.0, 0.0);
        }
        let obj = |v: f64| gamma * self.value(v) + 0.5 * (v - mu) * (v - mu);
        let (mut a, mut b) = if mu > 0.0 { (0.0, mu) } else { (mu, 0.0) };
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = obj(c);
        let mut fd = obj(d);
        while b - a > tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = obj(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = obj(d);
            }
            if c >= d {
                break;
            }
        }
        let x = 0.5 * (a + b);
        // comparisons below the rounding floor of the objective can misplace
        // the bracket by at most sqrt(8 eps |f|) since the objective is 1-strongly convex
        let noise = (8.0 * f64::EPSILON * obj(x).abs().max(1.0)).sqrt();
        (x, (b - a) + noise)
    }
}

/// One coordinate's regularizer `g = iota_C + sigma_D + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRegularizer {
    pub c: Interval,
    pub d: Interval,
    pub h: PowerPenalty,
}

impl ScalarRegularizer {
    pub fn new(c: Interval, d: Interval, h: PowerPenalty) -> Self {
        ScalarRegularizer { c, d, h }
    }

    /// `omega |.| + eta |.|^r` on the whole line.
    pub fn elastic_net(omega: f64, eta: f64, r: f64) -> Result<Self> {
        Ok(ScalarRegularizer {
            c: Interval::real_line(),
            d: Interval::symmetric(omega)?,
            h: PowerPenalty::new(eta, r)?,
        })
    }

    /// Returns a configuration error unless `0 in C` and `D` is bounded.
    pub fn check(&self) -> Result<()> {
        if !self.c.contains(0.0) {
            return Err(Error::config(format!("constraint interval {} must contain 0", self.c)));
        }
        if !self.d.is_bounded() {
            return Err(Error::config(format!("sparsity interval {} must be bounded", self.d)));
        }
        Ok(())
    }

    pub fn value(&self, v: f64) -> f64 {
        if !self.c.contains(v) {
            return f64::INFINITY;
        }
        self.d.support(v) + self.h.value(v)
    }

    /// `4 gamma max{h(|mu|+2), h(-|mu|-2)} + 2|mu| + 1`: the factor turning
    /// an additive prox error into a squared certified inexactness.
    pub fn error_coefficient(&self, gamma: f64, mu: f64) -> f64 {
        let m = mu.abs() + 2.0;
        4.0 * gamma * self.h.value(m).max(self.h.value(-m)) + 2.0 * mu.abs() + 1.0
    }
}

/// Soft thresholder with respect to `gamma * D`.
pub fn soft_threshold(d: &Interval, gamma: f64, x: f64) -> Result<f64> {
    if !d.is_bounded() {
        return Err(Error::config(format!("soft thresholding needs a bounded interval, got {d}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma must be positive, got {gamma}")));
    }
    let lo = gamma * d.lower;
    let hi = gamma * d.upper;
    Ok(if x > hi {
        x - hi
    } else if x < lo {
        x - lo
    } else {
        0.0
    })
}

/// Zeroes `p` unless it has the sign of `mu`.
pub(crate) fn clamp_sign(mu: f64, p: f64) -> f64 {
    if mu > 0.0 {
        p.max(0.0)
    } else if mu < 0.0 {
        p.min(0.0)
    } else {
        0.0
    }
}

/// A prox value with its certified inexactness.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxCertificate<T> {
    pub value: T,
    /// Certified `delta`: the prox objective at `value` exceeds its minimum by
    /// at most `delta^2 / 2`.
    pub delta: f64,
    /// `sqrt` of the error budget the computation was allowed to spend.
    pub delta_budget: f64,
}

/// Exact `prox_{gamma g}(x)` as `proj_C(prox_{gamma h}(soft_{gamma D}(x)))`.
pub fn prox_scalar_exact(reg: &ScalarRegularizer, gamma: f64, x: f64) -> Result<f64> {
    reg.check()?;
    let mu = soft_threshold(&reg.d, gamma, x)?;
    let (p, _) = reg.h.prox(gamma, mu)?;
    Ok(reg.c.project(clamp_sign(mu, p)))
}

/// Largest `|alpha|` that keeps the certified `delta^2` within `budget_xi`.
pub fn admissible_alpha(reg: &ScalarRegularizer, gamma: f64, x: f64, budget_xi: f64) -> Result<f64> {
    reg.check()?;
    let mu = soft_threshold(&reg.d, gamma, x)?;
    Ok(alpha_bound(reg, gamma, mu, budget_xi))
}

fn alpha_bound(reg: &ScalarRegularizer, gamma: f64, mu: f64, budget_xi: f64) -> f64 {
    (budget_xi / reg.error_coefficient(gamma, mu)).min(1.0)
}

/// Prox with an additive perturbation `alpha` injected after `prox_{gamma h}`.
pub fn prox_scalar_inexact(
    reg: &ScalarRegularizer,
    gamma: f64,
    x: f64,
    alpha: f64,
    budget_xi: f64,
) -> Result<ProxCertificate<f64>> {
    let (value, delta_sq) = inexact_coordinate(reg, gamma, x, alpha, budget_xi, 0)?;
    Ok(ProxCertificate { value, delta: delta_sq.sqrt(), delta_budget: budget_xi.sqrt() })
}

/// Shared per-coordinate recipe. Returns the value and the certified `delta^2`.
pub(crate) fn inexact_coordinate(
    reg: &ScalarRegularizer,
    gamma: f64,
    x: f64,
    alpha: f64,
    budget_xi: f64,
    index: usize,
) -> Result<(f64, f64)> {
    reg.check()?;
    if !(budget_xi >= 0.0 && budget_xi.is_finite()) {
        return Err(Error::config(format!("error budget must be finite and nonnegative, got {budget_xi}")));
    }
    let mu = soft_threshold(&reg.d, gamma, x)?;
    let bound = alpha_bound(reg, gamma, mu, budget_xi);
    let coef = reg.error_coefficient(gamma, mu);
    let (p, solve_err) = match &reg.h.extra {
        None => reg.h.prox(gamma, mu)?,
        Some(_) => {
            // spend at most half of the admissible error on the search
            let tol = if budget_xi > 0.0 { 0.5 * (bound - alpha.abs()).max(0.0) } else { 0.0 };
            reg.h.prox_by_search(gamma, mu, tol.max(1e-13 * (1.0 + mu.abs())))
        }
    };
    let total = alpha.abs() + solve_err;
    if alpha.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::InadmissiblePerturbation { index, alpha, bound });
    }
    let value = reg.c.project(clamp_sign(mu, p + alpha));
    Ok((value, coef * total))
}
