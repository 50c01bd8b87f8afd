use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval of the extended real line. Either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::config("interval endpoints must not be NaN"));
        }
        if lower > upper {
            return Err(Error::config(format!("empty interval [{lower}, {upper}]")));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::config(format!("empty interval [{lower}, {upper}]")));
        }
        Ok(Interval { lower, upper })
    }

    /// The whole real line.
    pub const fn real_line() -> Self {
        Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    /// Symmetric interval `[-w, w]`.
    pub fn symmetric(w: f64) -> Result<Self> {
        Self::new(-w, w)
    }

    pub const fn point(c: f64) -> Self {
        Interval { lower: c, upper: c }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn project(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }

    /// Support function `v -> sup_{d in D} d v`.
    pub fn support(&self, v: f64) -> f64 {
        if v > 0.0 {
            v * self.upper
        } else if v < 0.0 {
            v * self.lower
        } else {
            0.0
        }
    }

    pub fn scaled(&self, gamma: f64) -> Interval {
        Interval { lower: gamma * self.lower, upper: gamma * self.upper }
    }

    /// Largest absolute value attained on the interval.
    pub fn max_abs(&self) -> f64 {
        self.lower.abs().max(self.upper.abs())
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_reversed_and_nan() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
        assert!(Interval::new(f64::INFINITY, f64::INFINITY).is_err());
    }

    #[test]
    fn support_function_is_piecewise_linear() {
        let d = Interval::new(-1.0, 2.0).unwrap();
        assert_eq!(d.support(3.0), 6.0);
        assert_eq!(d.support(-3.0), 3.0);
        assert_eq!(d.support(0.0), 0.0);
    }

    #[test]
    fn projection_clamps() {
        let c = Interval::new(f64::NEG_INFINITY, 1.2).unwrap();
        assert_eq!(c.project(5.5), 1.2);
        assert_eq!(c.project(-7.0), -7.0);
    }
}
