use std::fmt;

use ndarray::Array1;

use super::scalar::{inexact_coordinate, prox_scalar_exact, ProxCertificate, ScalarRegularizer};
use crate::error::{Error, Result};

/// `G(u) = sum_k g_k(u_k)` over a finite truncation of the index set.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableRegularizer {
    coords: Vec<ScalarRegularizer>,
    r: f64,
    eta: f64,
    /// User-declared bound on the truncated tails of the summability series.
    pub tail_bound: f64,
}

impl SeparableRegularizer {
    /// Builds the family. All coordinates must share the exponent `r`; the
    /// shared strength is the smallest `eta_k`.
    pub fn new(coords: Vec<ScalarRegularizer>) -> Result<Self> {
        let first = coords.first().ok_or_else(|| Error::config("regularizer family is empty"))?;
        let r = first.h.r;
        if let Some((k, c)) = coords.iter().enumerate().find(|(_, c)| c.h.r != r) {
            return Err(Error::config(format!("coordinate {k} has exponent {} but the family uses {r}", c.h.r)));
        }
        let eta = coords.iter().map(|c| c.h.eta).fold(f64::INFINITY, f64::min);
        Ok(SeparableRegularizer { coords, r, eta, tail_bound: 0.0 })
    }

    pub fn uniform(reg: ScalarRegularizer, dim: usize) -> Result<Self> {
        Self::new(vec![reg; dim])
    }

    pub fn with_tail_bound(mut self, tail_bound: f64) -> Self {
        self.tail_bound = tail_bound;
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[ScalarRegularizer] {
        &self.coords
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn value(&self, u: &Array1<f64>) -> f64 {
        self.coords.iter().zip(u.iter()).map(|(g, &x)| g.value(x)).sum()
    }

    /// True when `0` minimizes every `g_k`, i.e. `0 in D_k` and `0 in C_k`.
    pub fn is_centered(&self) -> bool {
        self.coords.iter().all(|g| g.d.contains(0.0) && g.c.contains(0.0))
    }

    pub fn is_feasible(&self, u: &Array1<f64>) -> bool {
        self.coords.iter().zip(u.iter()).all(|(g, &x)| g.c.contains(x))
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }
}

/// Error injected after `prox_{gamma h_k}` in [`prox_separable`].
#[derive(Debug, Clone, Copy, Default)]
pub enum Perturbation<'a> {
    #[default]
    None,
    /// `alpha_k` given directly.
    Absolute(&'a [f64]),
    /// `alpha_k = f_k * bound_k` with `f_k in [-1, 1]`.
    FractionOfBound(&'a [f64]),
}

/// Componentwise inexact prox of `gamma G` at `w`.
///
/// Each coordinate is soft thresholded, passed through `prox_{gamma h_k}`,
/// perturbed, sign clamped, and projected on `C_k`. The certified `delta` is
/// `sqrt(sum_k delta_k^2)`; `delta_budget = sqrt(sum_k xi_k)`.
pub fn prox_separable(
    reg: &SeparableRegularizer,
    gamma: f64,
    w: &Array1<f64>,
    budget: &[f64],
    perturbation: Perturbation<'_>,
) -> Result<ProxCertificate<Array1<f64>>> {
    reg.check_dim(w.len())?;
    reg.check_dim(budget.len())?;
    match perturbation {
        Perturbation::Absolute(a) | Perturbation::FractionOfBound(a) => reg.check_dim(a.len())?,
        Perturbation::None => {}
    }
    let mut value = Array1::zeros(w.len());
    let mut delta_sq = 0.0;
    for (k, (g, &x)) in reg.coords.iter().zip(w.iter()).enumerate() {
        let xi = budget[k];
        let alpha = match perturbation {
            Perturbation::None => 0.0,
            Perturbation::Absolute(a) => a[k],
            Perturbation::FractionOfBound(f) => {
                let frac = f[k];
                if !(-1.0..=1.0).contains(&frac) {
                    return Err(Error::config(format!("perturbation fraction {frac} at {k} outside [-1, 1]")));
                }
                frac * super::scalar::admissible_alpha(g, gamma, x, xi)?
            }
        };
        let (v, d2) = inexact_coordinate(g, gamma, x, alpha, xi, k)?;
        value[k] = v;
        delta_sq += d2;
    }
    let budget_sum: f64 = budget.iter().sum();
    Ok(ProxCertificate { value, delta: delta_sq.sqrt(), delta_budget: budget_sum.sqrt() })
}

/// Exact componentwise prox of `gamma G`.
pub fn prox_separable_exact(reg: &SeparableRegularizer, gamma: f64, w: &Array1<f64>) -> Result<Array1<f64>> {
    reg.check_dim(w.len())?;
    reg.coords
        .iter()
        .zip(w.iter())
        .map(|(g, &x)| prox_scalar_exact(g, gamma, x))
        .collect::<Result<Vec<_>>>()
        .map(Array1::from)
}

/// `M = (7/32) r (r - 1) (1 - (2/3)^(r-1))`, the total-convexity constant of
/// `|.|^r` on bounded sets.
pub fn total_convexity_constant(r: f64) -> f64 {
    7.0 / 32.0 * r * (r - 1.0) * (1.0 - (2.0f64 / 3.0).powf(r - 1.0))
}

/// `l^r` norm.
pub fn lr_norm(u: &Array1<f64>, r: f64) -> f64 {
    if r == 2.0 {
        return u.dot(u).sqrt();
    }
    u.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    ConstraintExcludesZero,
    UnboundedSparsityInterval,
    ExponentOutOfRange,
    NonpositiveStrength,
    NonnegativityOfExtra,
    DivergentTail,
    InvalidTailBound,
}

/// One failed well-posedness condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(k) => write!(f, "coordinate {k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Constants recorded by a successful [`validate_family`].
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCertificate {
    pub dimension: usize,
    pub r: f64,
    /// Conjugate exponent `r / (r - 1)`.
    pub r_conjugate: f64,
    pub eta: f64,
    /// Total-convexity constant.
    pub m_constant: f64,
    /// `sum_k ((inf D_k)_+)^{r*}` over the truncation.
    pub lower_tail_sum: f64,
    /// `sum_k ((sup D_k)_-)^{r*}` over the truncation.
    pub upper_tail_sum: f64,
    pub tail_bound: f64,
}

/// Checks the coercivity/well-posedness conditions of the family.
pub fn validate_family(reg: &SeparableRegularizer) -> std::result::Result<FamilyCertificate, Vec<Violation>> {
    let mut out = Vec::new();
    let r = reg.r;
    if !(r > 1.0 && r <= 2.0) {
        out.push(Violation {
            index: None,
            kind: ViolationKind::ExponentOutOfRange,
            message: format!("exponent r = {r} outside (1, 2]"),
        });
    }
    let r_conj = r / (r - 1.0);
    let mut lower_tail = 0.0;
    let mut upper_tail = 0.0;
    for (k, g) in reg.coords.iter().enumerate() {
        if !g.c.contains(0.0) {
            out.push(Violation {
                index: Some(k),
                kind: ViolationKind::ConstraintExcludesZero,
                message: format!("constraint interval {} does not contain 0", g.c),
            });
        }
        if !g.d.is_bounded() {
            out.push(Violation {
                index: Some(k),
                kind: ViolationKind::UnboundedSparsityInterval,
                message: format!("sparsity interval {} is unbounded", g.d),
            });
        } else {
            lower_tail += g.d.lower.max(0.0).powf(r_conj);
            upper_tail += (-g.d.upper).max(0.0).powf(r_conj);
        }
        if !(g.h.eta > 0.0 && g.h.eta.is_finite()) {
            out.push(Violation {
                index: Some(k),
                kind: ViolationKind::NonpositiveStrength,
                message: format!("strength eta = {} must be positive", g.h.eta),
            });
        }
        if let Some(extra) = &g.h.extra {
            // sampled check: extra >= 0 and finite
            let bad = [-10.0, -1.0, -0.1, 0.1, 1.0, 10.0]
                .iter()
                .any(|&t| !(extra.value(t) >= 0.0 && extra.value(t).is_finite()));
            if bad || extra.value(0.0) != 0.0 {
                out.push(Violation {
                    index: Some(k),
                    kind: ViolationKind::NonnegativityOfExtra,
                    message: "extra penalty must be finite, nonnegative, and vanish at 0".into(),
                });
            }
        }
    }
    if !(reg.tail_bound >= 0.0 && reg.tail_bound.is_finite()) {
        out.push(Violation {
            index: None,
            kind: ViolationKind::InvalidTailBound,
            message: format!("tail bound {} must be finite and nonnegative", reg.tail_bound),
        });
    }
    if !lower_tail.is_finite() || !upper_tail.is_finite() {
        out.push(Violation {
            index: None,
            kind: ViolationKind::DivergentTail,
            message: "summability series overflow".into(),
        });
    }
    if !out.is_empty() {
        return Err(out);
    }
    Ok(FamilyCertificate {
        dimension: reg.dim(),
        r,
        r_conjugate: r_conj,
        eta: reg.eta,
        m_constant: total_convexity_constant(r),
        lower_tail_sum: lower_tail,
        upper_tail_sum: upper_tail,
        tail_bound: reg.tail_bound,
    })
}
