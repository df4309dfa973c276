//! Problem data: the BVP instance and the state of a shot trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prescribed limit of `f'` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetLimit {
    #[serde(rename = "ZERO")]
    Zero,
    #[serde(rename = "ONE")]
    One,
}

impl TargetLimit {
    pub fn as_f64(self) -> f64 {
        match self {
            TargetLimit::Zero => 0.0,
            TargetLimit::One => 1.0,
        }
    }
}

/// Instance of the boundary-value problem
///
///   f''' + f f'' + beta f'(f' - 1) = 0,   f(0) = a,  f'(0) = b,  f'(inf) = lambda
///
/// with `beta > 0`, `a >= 0`, `b >= 0` and `lambda` either 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: TargetLimit,
}

impl ProblemParams {
    pub fn new(beta: f64, a: f64, b: f64, lambda: TargetLimit) -> Result<Self> {
        let p = ProblemParams { beta, a, b, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::InvalidParams(format!("beta must be positive, got {}", self.beta)));
        }
        if !self.a.is_finite() || self.a < 0.0 {
            return Err(Error::InvalidParams(format!("a must be nonnegative, got {}", self.a)));
        }
        if !self.b.is_finite() || self.b < 0.0 {
            return Err(Error::InvalidParams(format!("b must be nonnegative, got {}", self.b)));
        }
        Ok(())
    }
}

/// One point of a trajectory of the first-order system (f, f', f'').
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootState {
    pub t: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

impl ShootState {
    pub fn new(t: f64, f: f64, fp: f64, fpp: f64) -> Self {
        ShootState { t, f, fp, fpp }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.f.is_finite() && self.fp.is_finite() && self.fpp.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(1.0, 0.0, 2.0, TargetLimit::One).is_ok());
        assert!(ProblemParams::new(0.0, 0.0, 2.0, TargetLimit::One).is_err());
        assert!(ProblemParams::new(-1.0, 0.0, 2.0, TargetLimit::One).is_err());
        assert!(ProblemParams::new(1.0, -0.1, 2.0, TargetLimit::Zero).is_err());
        assert!(ProblemParams::new(1.0, 0.0, -2.0, TargetLimit::Zero).is_err());
        assert!(ProblemParams::new(f64::NAN, 0.0, 2.0, TargetLimit::One).is_err());
    }

    #[test]
    fn state_finiteness() {
        assert!(ShootState::new(0.0, 1.0, 2.0, -3.0).is_finite());
        assert!(!ShootState::new(0.0, f64::INFINITY, 2.0, -3.0).is_finite());
        assert!(!ShootState::new(0.0, 1.0, f64::NAN, -3.0).is_finite());
    }
}
