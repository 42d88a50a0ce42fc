//! Separable convex regularizers and their proximal operators.
//!
//! Each block carries one [`Regularizer`]. The proximal operator solves
//! `argmin_y r(y) + |y - x|^2 / (2 alpha)` in closed form for every
//! supported kind.

use crate::error::{Error, Result};

/// Value reported for points outside the domain of an indicator.
pub const INFEASIBLE: f64 = f64::INFINITY;

/// Tolerance used when testing box membership.
pub const BOX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Zero,
    L1 { weight: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Regularizer {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidRegularizer(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(Self::L1 { weight })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if let Some(j) = lower.iter().zip(&upper).position(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidRegularizer(format!("box bounds violate lower <= upper at coordinate {j}")));
        }
        Ok(Self::Box { lower, upper })
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match self {
            Self::Box { lower, .. } if lower.len() != len => Err(Error::DimensionMismatch { expected: lower.len(), got: len }),
            _ => Ok(()),
        }
    }

    /// Writes `prox_{alpha r}(x)` into `out`.
    pub fn prox_into(&self, x: &[f64], alpha: f64, out: &mut [f64]) -> Result<()> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidStep(alpha));
        }
        self.check_dim(x.len())?;
        if out.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: out.len() });
        }
        match self {
            Self::Zero => out.copy_from_slice(x),
            Self::L1 { weight } => {
                let t = alpha * weight;
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = soft_threshold(v, t);
                }
            }
            Self::Box { lower, upper } => {
                for (j, (o, &v)) in out.iter_mut().zip(x).enumerate() {
                    *o = v.clamp(lower[j], upper[j]);
                }
            }
        }
        Ok(())
    }

    pub fn prox(&self, x: &[f64], alpha: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.prox_into(x, alpha, &mut out)?;
        Ok(out)
    }

    /// `r(x)`, with [`INFEASIBLE`] outside an indicator's box.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(match self {
            Self::Zero => 0.0,
            Self::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Self::Box { lower, upper } => {
                let inside = x.iter().enumerate().all(|(j, &v)| v >= lower[j] - BOX_TOLERANCE && v <= upper[j] + BOX_TOLERANCE);
                if inside {
                    0.0
                } else {
                    INFEASIBLE
                }
            }
        })
    }
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
