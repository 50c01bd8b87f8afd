//! Proximity operators for `g = iota_C + sigma_D + h` on the line and their
//! separable sums.

mod config;
mod interval;
pub mod oracle;
mod power;
mod scalar;
mod separable;

pub use config::{CoordOverride, CoordSpec, FamilyConfig};
pub use interval::Interval;
pub use oracle::{oracle_minimum, prox_objective, prox_oracle};
pub use power::{power_bracket, prox_power, prox_power_derivative, BRACKET_TOLERANCE};
pub use scalar::{
    admissible_alpha, prox_scalar_exact, prox_scalar_inexact, soft_threshold, ConvexPenalty, FnPenalty,
    PowerPenalty, ProxCertificate, ScalarRegularizer,
};
pub use separable::{
    lr_norm, prox_separable, prox_separable_exact, total_convexity_constant, validate_family, FamilyCertificate,
    Perturbation, SeparableRegularizer, Violation, ViolationKind,
};
