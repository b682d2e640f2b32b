//! The shared nonsmooth term `g` and its proximal operator.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::scalar::Scalar;

/// Residual tolerance for deciding set membership of an indicator.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Nonsmooth convex term shared by every objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NonsmoothSpec<T> {
    Zero,
    /// `weight * ||x||_1`
    WeightedL1 { weight: T },
    /// Indicator of `{ lower <= x <= upper }`; bounds may be infinite.
    BoxIndicator { lower: Vec<T>, upper: Vec<T> },
    /// Indicator of `{ x_j = value_j for (j, value_j) in fixed, x_j >= 0 for j in nonnegative }`.
    FixedAndHalfspace {
        fixed: Vec<(usize, T)>,
        nonnegative: Vec<usize>,
    },
}

impl<T: Scalar> NonsmoothSpec<T> {
    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            Self::BoxIndicator { .. } | Self::FixedAndHalfspace { .. }
        )
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// Checks the variant's own invariants against the ambient dimension `n`.
    pub fn validate(&self, n: usize) -> Result<(), Error<T>> {
        match self {
            Self::Zero => Ok(()),
            Self::WeightedL1 { weight } => {
                if !(weight.is_finite() && *weight >= T::zero()) {
                    return Err(Error::invalid(format!("l1 weight must be finite and >= 0, got {weight}")));
                }
                Ok(())
            }
            Self::BoxIndicator { lower, upper } => {
                if lower.len() != n || upper.len() != n {
                    return Err(Error::invalid(format!(
                        "box bounds have lengths {}/{} but n = {n}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if lower.iter().zip(upper).any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
                    return Err(Error::invalid("box requires lower <= upper componentwise"));
                }
                Ok(())
            }
            Self::FixedAndHalfspace { fixed, nonnegative } => {
                if fixed.iter().any(|&(j, v)| j >= n || !v.is_finite())
                    || nonnegative.iter().any(|&j| j >= n)
                {
                    return Err(Error::invalid("fixed/nonnegative coordinate out of range"));
                }
                if fixed.iter().any(|(j, _)| nonnegative.contains(j)) {
                    return Err(Error::invalid("a coordinate cannot be both fixed and sign-constrained"));
                }
                Ok(())
            }
        }
    }

    /// Membership test for indicators; always true for finite-valued terms.
    pub fn contains(&self, x: &[T]) -> bool {
        let tol = T::lit(FEASIBILITY_TOL);
        match self {
            Self::Zero | Self::WeightedL1 { .. } => true,
            Self::BoxIndicator { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&xi, (&l, &u))| xi >= l - tol && xi <= u + tol),
            Self::FixedAndHalfspace { fixed, nonnegative } => {
                fixed.iter().all(|&(j, v)| (x[j] - v).abs() <= tol)
                    && nonnegative.iter().all(|&j| x[j] >= -tol)
            }
        }
    }

    /// `g(x)`, with `+inf` outside the set for indicators.
    pub fn value(&self, x: &[T]) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::WeightedL1 { weight } => *weight * linalg::norm1(x),
            _ => {
                if self.contains(x) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
        }
    }

    /// `argmin_y beta * g(y) + 0.5 * ||y - v||^2`.
    pub fn prox(&self, beta: T, v: &[T]) -> Result<Vec<T>, Error<T>> {
        if !(beta > T::zero()) {
            return Err(Error::invalid(format!("prox parameter must be positive, got {beta}")));
        }
        Ok(self.prox_unchecked(beta, v))
    }

    pub(crate) fn prox_unchecked(&self, beta: T, v: &[T]) -> Vec<T> {
        match self {
            Self::Zero => v.to_vec(),
            Self::WeightedL1 { weight } => {
                let thr = beta * *weight;
                v.iter()
                    .map(|&vi| vi.signum() * (vi.abs() - thr).max(T::zero()))
                    .collect()
            }
            Self::BoxIndicator { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&vi, (&l, &u))| vi.max(l).min(u))
                .collect(),
            Self::FixedAndHalfspace { fixed, nonnegative } => {
                let mut y = v.to_vec();
                for &(j, val) in fixed {
                    y[j] = val;
                }
                for &j in nonnegative {
                    y[j] = y[j].max(T::zero());
                }
                y
            }
        }
    }
}
