//! Text form of a regularizer family.
//!
//! ```toml
//! dimension = 3
//! tail_bound = 0.0
//!
//! [default]
//! c_lower = -inf
//! c_upper = inf
//! d_lower = -1.0
//! d_upper = 1.0
//! eta = 0.9
//! r = 2.0
//!
//! [[coord]]
//! index = 2
//! c_upper = 1.2
//! ```

use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::scalar::{PowerPenalty, ScalarRegularizer};
use super::separable::SeparableRegularizer;
use crate::error::{Error, Result};

/// Full parameter set of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordSpec {
    pub c_lower: f64,
    pub c_upper: f64,
    pub d_lower: f64,
    pub d_upper: f64,
    pub eta: f64,
    pub r: f64,
}

impl CoordSpec {
    pub fn build(&self) -> Result<ScalarRegularizer> {
        Ok(ScalarRegularizer::new(
            Interval::new(self.c_lower, self.c_upper)?,
            Interval::new(self.d_lower, self.d_upper)?,
            PowerPenalty::new(self.eta, self.r)?,
        ))
    }

    pub fn of(reg: &ScalarRegularizer) -> Self {
        CoordSpec {
            c_lower: reg.c.lower,
            c_upper: reg.c.upper,
            d_lower: reg.d.lower,
            d_upper: reg.d.upper,
            eta: reg.h.eta,
            r: reg.h.r,
        }
    }
}

/// Per-coordinate override; missing fields fall back to the default block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordOverride {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

impl CoordOverride {
    fn apply(&self, base: CoordSpec) -> CoordSpec {
        CoordSpec {
            c_lower: self.c_lower.unwrap_or(base.c_lower),
            c_upper: self.c_upper.unwrap_or(base.c_upper),
            d_lower: self.d_lower.unwrap_or(base.d_lower),
            d_upper: self.d_upper.unwrap_or(base.d_upper),
            eta: self.eta.unwrap_or(base.eta),
            r: self.r.unwrap_or(base.r),
        }
    }

    fn diff(index: usize, base: &CoordSpec, spec: &CoordSpec) -> Option<Self> {
        let pick = |a: f64, b: f64| if a.to_bits() == b.to_bits() { None } else { Some(b) };
        let o = CoordOverride {
            index,
            c_lower: pick(base.c_lower, spec.c_lower),
            c_upper: pick(base.c_upper, spec.c_upper),
            d_lower: pick(base.d_lower, spec.d_lower),
            d_upper: pick(base.d_upper, spec.d_upper),
            eta: pick(base.eta, spec.eta),
            r: pick(base.r, spec.r),
        };
        let untouched = CoordOverride { index, ..Default::default() };
        (o != untouched).then_some(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub dimension: usize,
    #[serde(default)]
    pub tail_bound: f64,
    pub default: CoordSpec,
    #[serde(default, rename = "coord", skip_serializing_if = "Vec::is_empty")]
    pub coords: Vec<CoordOverride>,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<SeparableRegularizer> {
        if self.dimension == 0 {
            return Err(Error::config("family dimension must be positive"));
        }
        let mut specs = vec![self.default; self.dimension];
        for o in &self.coords {
            let slot = specs.get_mut(o.index).ok_or_else(|| {
                Error::config(format!("coordinate override index {} out of range 0..{}", o.index, self.dimension))
            })?;
            *slot = o.apply(*slot);
        }
        let coords = specs.iter().map(CoordSpec::build).collect::<Result<Vec<_>>>()?;
        Ok(SeparableRegularizer::new(coords)?.with_tail_bound(self.tail_bound))
    }

    /// Describes `reg` using its first coordinate as the default block.
    pub fn from_regularizer(reg: &SeparableRegularizer) -> Self {
        let specs: Vec<CoordSpec> = reg.coords().iter().map(CoordSpec::of).collect();
        let default = specs[0];
        let coords = specs.iter().enumerate().filter_map(|(k, s)| CoordOverride::diff(k, &default, s)).collect();
        FamilyConfig { dimension: specs.len(), tail_bound: reg.tail_bound, default, coords }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
dimension = 3
tail_bound = 0.0

[default]
c_lower = -inf
c_upper = inf
d_lower = -1.0
d_upper = 1.0
eta = 0.9
r = 2.0

[[coord]]
index = 2
c_upper = 1.2
d_lower = 0.0
d_upper = 2.0
"#;

    #[test]
    fn parses_defaults_and_overrides() {
        let fam = FamilyConfig::from_toml(SAMPLE).unwrap().build().unwrap();
        assert_eq!(fam.dim(), 3);
        assert_eq!(fam.coords()[0].c, Interval::real_line());
        assert_eq!(fam.coords()[2].c.upper, 1.2);
        assert_eq!(fam.coords()[2].d, Interval::new(0.0, 2.0).unwrap());
        assert_eq!(fam.coords()[1].h.eta, 0.9);
    }

    #[test]
    fn out_of_range_override_is_config_error() {
        let text = SAMPLE.replace("index = 2", "index = 7");
        let err = FamilyConfig::from_toml(&text).unwrap().build().unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = SAMPLE.replace("c_upper = 1.2", "c_top = 1.2");
        assert!(FamilyConfig::from_toml(&text).is_err());
    }
}
