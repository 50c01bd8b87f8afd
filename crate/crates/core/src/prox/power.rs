//! Proximity operator of the power function `t -> gamma * eta * |t|^r`.
//!
//! For `mu != 0` the prox is `sign(mu) * xi` where `xi >= 0` is the unique root
//! of `xi + r * a * xi^(r-1) = |mu|` with `a = gamma * eta`. Closed forms are
//! used for `r = 2`, `r = 3/2` (quadratic in `sqrt(xi)`) and `r = 4/3` (cubic
//! in `xi^(1/3)`); every other exponent goes through a safeguarded Newton
//! iteration inside the bracket returned by [`power_bracket`].

use crate::error::{Error, Result};

const FOUR_THIRDS: f64 = 4.0 / 3.0;

/// Absolute tolerance of the bracketed solve.
pub const BRACKET_TOLERANCE: f64 = 1e-12;

/// Relative size of the Cardano root below which cancellation makes the
/// closed form unreliable and the bracketed solve is used instead.
const CARDANO_CANCELLATION: f64 = 1e-4;

pub(crate) fn check_power_params(gamma: f64, eta: f64, r: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("step gamma must be positive and finite, got {gamma}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::config(format!("strength eta must be positive and finite, got {eta}")));
    }
    if !(r > 1.0 && r <= 2.0) {
        return Err(Error::config(format!("exponent r must lie in (1, 2], got {r}")));
    }
    Ok(())
}

/// Lower and upper bounds on `|prox_{gamma eta |.|^r}(mu)|`:
/// `min/max { q, q^(1/(r-1)) }` with `q = |mu| / (1 + r gamma eta)`.
pub fn power_bracket(gamma: f64, eta: f64, r: f64, mu: f64) -> (f64, f64) {
    let q = mu.abs() / (1.0 + r * gamma * eta);
    let alt = q.powf(1.0 / (r - 1.0));
    (q.min(alt), q.max(alt))
}

/// `sign(mu) * xi` with `xi + r gamma eta xi^(r-1) = |mu|`.
pub fn prox_power(gamma: f64, eta: f64, r: f64, mu: f64) -> Result<f64> {
    check_power_params(gamma, eta, r)?;
    if !mu.is_finite() {
        return Err(Error::config(format!("prox argument must be finite, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let a = gamma * eta;
    let m = mu.abs();
    let xi = if r == 2.0 {
        m / (1.0 + 2.0 * a)
    } else if r == 1.5 {
        // s = sqrt(xi) solves s^2 + 1.5 a s - m = 0; rationalized root.
        let s = 2.0 * m / (1.5 * a + (2.25 * a * a + 4.0 * m).sqrt());
        s * s
    } else if (r - FOUR_THIRDS).abs() < 1e-14 {
        match cardano_four_thirds(a, m) {
            Some(xi) => xi,
            None => solve_bracketed(a, r, m)?,
        }
    } else {
        solve_bracketed(a, r, m)?
    };
    Ok(xi.copysign(mu))
}

/// Derivative of `mu -> prox_{gamma eta |.|^r}(mu)`:
/// `(1 + r (r-1) gamma eta / xi^(2-r))^(-1)`. At `mu = 0` the limit is 0 for
/// `r < 2` and `1/(1 + 2 gamma eta)` for `r = 2`.
pub fn prox_power_derivative(gamma: f64, eta: f64, r: f64, mu: f64) -> Result<f64> {
    check_power_params(gamma, eta, r)?;
    let a = gamma * eta;
    if r == 2.0 {
        return Ok(1.0 / (1.0 + 2.0 * a));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let xi = prox_power(gamma, eta, r, mu)?.abs();
    if xi == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 + r * (r - 1.0) * a * xi.powf(r - 2.0)))
}

/// Root of `t^3 + p t - m = 0` with `p = 4a/3`, returned as `xi = t^3`.
/// `None` when cancellation in `u - p/(3u)` is too severe.
fn cardano_four_thirds(a: f64, m: f64) -> Option<f64> {
    let p = 4.0 * a / 3.0;
    let disc = 0.25 * m * m + p * p * p / 27.0;
    let u = (0.5 * m + disc.sqrt()).cbrt();
    let mut t = u - p / (3.0 * u);
    if !(t > CARDANO_CANCELLATION * u) {
        return None;
    }
    // one Newton polish on the cubic
    t -= (t * t * t + p * t - m) / (3.0 * t * t + p);
    Some(t * t * t)
}

/// Safeguarded Newton on `psi(xi) = xi + r a xi^(r-1) - m`, which is increasing
/// and concave on `xi > 0`. Bisection steps are geometric while the bracket
/// spans orders of magnitude, so tiny roots are resolved to full relative
/// precision.
fn solve_bracketed(a: f64, r: f64, m: f64) -> Result<f64> {
    let psi = |x: f64| x + r * a * x.powf(r - 1.0) - m;
    let (lo0, hi0) = power_bracket(1.0, a, r, m);
    let mut lo = lo0.max(0.0);
    let mut hi = hi0.min(m);
    if !(lo <= hi) {
        lo = 0.0;
        hi = m;
    }
    if psi(lo) >= 0.0 {
        return Ok(lo);
    }
    if psi(hi) <= 0.0 {
        return Ok(hi);
    }
    let split = |lo: f64, hi: f64| if lo > 0.0 && hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
    let mut x = split(lo, hi);
    for _ in 0..2000 {
        let f = psi(x);
        if f.abs() <= 2.0 * f64::EPSILON * m {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(0.5 * (lo + hi));
        }
        let slope = 1.0 + r * (r - 1.0) * a * x.powf(r - 2.0);
        let newton = x - f / slope;
        x = if newton > lo && newton < hi { newton } else { split(lo, hi) };
    }
    let residual = psi(x);
    if residual.abs() <= 1e-9 * m.max(BRACKET_TOLERANCE) {
        Ok(x)
    } else {
        Err(Error::Numerical { message: format!("prox power solve did not converge (r = {r})"), residual })
    }
}
