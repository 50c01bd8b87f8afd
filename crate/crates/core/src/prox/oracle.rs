//! Brute-force reference for the scalar prox, used to check the closed-form
//! and certified paths. It evaluates `gamma g(v) + (v - x)^2 / 2` directly and
//! never goes through soft thresholding or the power-prox solver.

use super::scalar::ScalarRegularizer;

/// Objective `gamma g(v) + (v - x)^2 / 2`, evaluated from the raw fields.
pub fn prox_objective(reg: &ScalarRegularizer, gamma: f64, x: f64, v: f64) -> f64 {
    if v < reg.c.lower || v > reg.c.upper {
        return f64::INFINITY;
    }
    let sigma = if v >= 0.0 { v * reg.d.upper } else { v * reg.d.lower };
    let h = reg.h.eta * v.abs().powf(reg.h.r) + reg.h.extra.as_ref().map_or(0.0, |e| e.value(v));
    gamma * (sigma + h) + 0.5 * (v - x) * (v - x)
}

/// Golden-section minimization of [`prox_objective`] to bracket width `tol`.
///
/// Search range: for `|v| > |x| + gamma max|D|` the objective's slope has the
/// sign of `v` (the support-function slope is at most `max|D|` in magnitude,
/// `h` is increasing away from 0, and the quadratic contributes `v - x`), so
/// the minimizer lies in `[-R, R]` with `R = |x| + gamma max|D| + 1`,
/// intersected with `C`.
pub fn prox_oracle(reg: &ScalarRegularizer, gamma: f64, x: f64, tol: f64) -> f64 {
    let radius = x.abs() + gamma * reg.d.lower.abs().max(reg.d.upper.abs()) + 1.0;
    let mut a = (-radius).max(reg.c.lower);
    let mut b = radius.min(reg.c.upper);
    if a >= b {
        return a;
    }
    let f = |v: f64| prox_objective(reg, gamma, x, v);
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let mut c = a + golden * (b - a);
    let mut d = b - golden * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + golden * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = b - golden * (b - a);
            fd = f(d);
        }
        if !(c < d) {
            break;
        }
    }
    // endpoints can be the minimizer when the constraint is active
    let mid = 0.5 * (a + b);
    [a, mid, b]
        .into_iter()
        .min_by(|p, q| f(*p).total_cmp(&f(*q)))
        .unwrap_or(mid)
}

/// Minimum value of the prox objective found by the oracle.
pub fn oracle_minimum(reg: &ScalarRegularizer, gamma: f64, x: f64, tol: f64) -> f64 {
    prox_objective(reg, gamma, x, prox_oracle(reg, gamma, x, tol))
}
