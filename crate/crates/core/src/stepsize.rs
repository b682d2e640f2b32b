//! Armijo line search, smoothness backtracking and per-objective scaling rules.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::problems::ProblemInstance;
use crate::scalar::Scalar;
use crate::subproblem::{solve_direction, DirectionSolution, SubproblemSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams<T> {
    pub sigma: T,
    pub max_halvings: usize,
}

impl<T: Scalar> Default for LineSearchParams<T> {
    fn default() -> Self {
        Self {
            sigma: T::lit(1e-4),
            max_halvings: 60,
        }
    }
}

impl<T: Scalar> LineSearchParams<T> {
    pub fn validate(&self) -> Result<(), Error<T>> {
        if !(self.sigma > T::zero() && self.sigma < T::one()) {
            return Err(Error::config(format!("Armijo sigma must lie in (0, 1), got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Outcome of [`armijo`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoStep<T> {
    pub t: T,
    pub x_next: Vec<T>,
    pub f_next: Vec<T>,
    /// Number of full `F` evaluations spent.
    pub trials: usize,
}

/// Largest `t` in `{1, 1/2, 1/4, ...}` with
/// `F_i(x + t d) - F_i(x) <= t * sigma * decrease_i` for every objective.
///
/// `fx` is `F(x)`, already known to the caller.
pub fn armijo<T: Scalar>(
    p: &ProblemInstance<T>,
    x: &[T],
    fx: &[T],
    d: &[T],
    decrease: &[T],
    params: &LineSearchParams<T>,
) -> Result<ArmijoStep<T>, Error<T>> {
    params.validate()?;
    if decrease.len() != p.m() || fx.len() != p.m() {
        return Err(Error::invalid("decrease and F(x) need one entry per objective"));
    }
    let mut t = T::one();
    let mut trials = 0;
    for _ in 0..=params.max_halvings {
        let x_next = linalg::add_scaled(x, t, d);
        let f_next = p.evaluate(&x_next)?;
        trials += 1;
        let ok = f_next
            .iter()
            .zip(fx)
            .zip(decrease)
            .all(|((&fn_, &f0), &dec)| fn_ - f0 <= t * params.sigma * dec);
        if ok {
            return Ok(ArmijoStep {
                t,
                x_next,
                f_next,
                trials,
            });
        }
        t *= T::lit(0.5);
    }
    Err(Error::LineSearchFailure {
        halvings: params.max_halvings,
    })
}

/// Outcome of [`backtrack_smoothness`].
#[derive(Debug, Clone)]
pub struct Backtracked<T> {
    pub solution: DirectionSolution<T>,
    pub alpha: Vec<T>,
    pub rounds: usize,
    /// Smooth-part evaluations at trial points.
    pub fevals: usize,
    /// Subproblem inner iterations summed over rounds.
    pub inner_iters: usize,
}

pub const MAX_BACKTRACK_ROUNDS: usize = 200;

/// Estimates per-objective smoothness constants at `x`.
///
/// Solves the scaled subproblem (`ell = 1`) at the current `alpha` and
/// multiplies `alpha_i` by `tau` for every objective whose quadratic upper bound
/// fails at the resulting point, until all hold. Each violating
/// objective gets one factor of `tau` per round.
pub fn backtrack_smoothness<T: Scalar>(
    p: &ProblemInstance<T>,
    x: &[T],
    jac: &Matrix<T>,
    alpha0: &[T],
    tau: T,
    settings: &SubproblemSettings<T>,
) -> Result<Backtracked<T>, Error<T>> {
    if !(tau > T::one()) {
        return Err(Error::config(format!("backtracking factor must exceed 1, got {tau}")));
    }
    if alpha0.len() != p.m() || alpha0.iter().any(|&a| !(a > T::zero())) {
        return Err(Error::invalid("initial scaling must be positive, one per objective"));
    }
    let fx = p.eval_smooth(x)?;
    let mut alpha = alpha0.to_vec();
    let mut fevals = 0;
    let mut inner = 0;
    for round in 1..=MAX_BACKTRACK_ROUNDS {
        let sol = solve_direction(x, jac, p.g(), &alpha, T::one(), settings)?;
        inner += sol.inner_iters;
        let dn = linalg::norm_sq(&sol.d);
        if dn == T::zero() {
            return Ok(Backtracked {
                solution: sol,
                alpha,
                rounds: round,
                fevals,
                inner_iters: inner,
            });
        }
        let f_next = p.eval_smooth(&sol.x_next)?;
        fevals += 1;
        let mut violated = false;
        for i in 0..p.m() {
            let lhs = f_next[i] - fx[i];
            let rhs = linalg::dot(jac.row(i), &sol.d) + T::lit(0.5) * alpha[i] * dn;
            let slack = T::lit(64.0) * T::epsilon() * (fx[i].abs() + f_next[i].abs());
            if lhs > rhs + slack {
                alpha[i] *= tau;
                violated = true;
            }
        }
        if !violated {
            return Ok(Backtracked {
                solution: sol,
                alpha,
                rounds: round,
                fevals,
                inner_iters: inner,
            });
        }
    }
    Err(Error::BacktrackingFailure {
        rounds: MAX_BACKTRACK_ROUNDS,
    })
}

/// Per-objective BB1 quotient `<s, y_i> / <s, s>`, clamped to `[lo, hi]`.
/// Objectives with `<s, y_i> <= 0` take `fallback_i`.
pub fn bb_scaling<T: Scalar>(
    x_prev: &[T],
    jac_prev: &Matrix<T>,
    x: &[T],
    jac: &Matrix<T>,
    lo: T,
    hi: T,
    fallback: &[T],
) -> Result<Vec<T>, Error<T>> {
    let s = linalg::sub(x, x_prev);
    let ss = linalg::norm_sq(&s);
    if ss == T::zero() {
        return Err(Error::invalid("BB scaling needs x != x_prev"));
    }
    let m = jac.nrows();
    if jac_prev.nrows() != m || fallback.len() != m {
        return Err(Error::invalid("jacobian and fallback sizes differ"));
    }
    Ok((0..m)
        .map(|i| {
            let y = linalg::sub(jac.row(i), jac_prev.row(i));
            let sy = linalg::dot(&s, &y);
            if sy > T::zero() {
                (sy / ss).max(lo).min(hi)
            } else {
                fallback[i]
            }
        })
        .collect())
}

/// How the scaling vector `alpha^k` is chosen each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalingStrategy<T> {
    Constant { ell: T },
    KnownL,
    KnownMu,
    /// `(L_max, ..., L_max)`.
    MaxL,
    BarzilaiBorwein { lo: T, hi: T, init: T },
    /// Linear objectives get `linear_alpha`, the rest follow `base`.
    PerClass { linear_alpha: T, base: Box<ScalingStrategy<T>> },
}

impl<T: Scalar> ScalingStrategy<T> {
    pub fn bb_default() -> Self {
        Self::BarzilaiBorwein {
            lo: T::lit(1e-8),
            hi: T::lit(1e12),
            init: T::one(),
        }
    }

    pub fn validate(&self) -> Result<(), Error<T>> {
        match self {
            Self::Constant { ell } if !(*ell > T::zero() && ell.is_finite()) => {
                Err(Error::config("constant scaling must be positive"))
            }
            Self::BarzilaiBorwein { lo, hi, init } if !(*lo > T::zero() && lo <= init && init <= hi) => {
                Err(Error::config("BB bounds need 0 < lo <= init <= hi"))
            }
            Self::PerClass { linear_alpha, base } => {
                if !(*linear_alpha > T::zero()) {
                    return Err(Error::config("linear_alpha must be positive"));
                }
                if matches!(**base, Self::PerClass { .. }) {
                    return Err(Error::config("nested per-class scaling"));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn uses_history(&self) -> bool {
        match self {
            Self::BarzilaiBorwein { .. } => true,
            Self::PerClass { base, .. } => base.uses_history(),
            _ => false,
        }
    }
}

/// Inputs for [`resolve_scaling`] at one iteration.
#[derive(Debug, Clone, Copy)]
pub struct ScalingState<'a, T> {
    pub x: &'a [T],
    pub jac: &'a Matrix<T>,
    pub prev: Option<(&'a [T], &'a Matrix<T>)>,
    pub prev_alpha: Option<&'a [T]>,
}

pub fn resolve_scaling<T: Scalar>(
    strategy: &ScalingStrategy<T>,
    p: &ProblemInstance<T>,
    k: usize,
    state: &ScalingState<'_, T>,
) -> Result<Vec<T>, Error<T>> {
    strategy.validate()?;
    let m = p.m();
    let recorded = |what: &str| Error::config(format!("{what} scaling requested but the instance has no recorded smoothness"));
    match strategy {
        ScalingStrategy::Constant { ell } => Ok(vec![*ell; m]),
        ScalingStrategy::KnownL => p.lipschitz().ok_or_else(|| recorded("known-L")),
        ScalingStrategy::MaxL => Ok(vec![p.l_max().ok_or_else(|| recorded("max-L"))?; m]),
        ScalingStrategy::KnownMu => {
            let mu = p.convexity().ok_or_else(|| recorded("known-mu"))?;
            check_positive(&mu, &vec![false; m])?;
            Ok(mu)
        }
        ScalingStrategy::BarzilaiBorwein { lo, hi, init } => match (k, state.prev) {
            (0, _) | (_, None) => Ok(vec![*init; m]),
            (_, Some((xp, jp))) => {
                let fallback = state.prev_alpha.map_or_else(|| vec![*init; m], <[T]>::to_vec);
                bb_scaling(xp, jp, state.x, state.jac, *lo, *hi, &fallback)
            }
        },
        ScalingStrategy::PerClass { linear_alpha, base } => {
            let linear = p.linear_mask();
            let mut alpha = match &**base {
                ScalingStrategy::KnownMu => p.convexity().ok_or_else(|| recorded("known-mu"))?,
                other => resolve_scaling(other, p, k, state)?,
            };
            for (a, &lin) in alpha.iter_mut().zip(&linear) {
                if lin {
                    *a = *linear_alpha;
                }
            }
            check_positive(&alpha, &linear)?;
            Ok(alpha)
        }
    }
}

fn check_positive<T: Scalar>(alpha: &[T], skip: &[bool]) -> Result<(), Error<T>> {
    match alpha.iter().zip(skip).position(|(&a, &s)| !s && !(a > T::zero())) {
        Some(i) => Err(Error::config(format!("scaling for objective {i} is not positive"))),
        None => Ok(()),
    }
}
