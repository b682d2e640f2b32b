//! Direction-finding subproblems solved through their dual over the unit simplex.
//!
//! Both the plain subproblem
//!
//! ```text
//! min_d  max_i [<grad f_i(x), d> + g(x + d) - g(x)] / alpha_i + (ell / 2) ||d||^2
//! ```
//!
//! and the accelerated one (base point `y`, constants `c_i`, `ell = 1`)
//!
//! ```text
//! min_x  max_i [<grad f_i(y), x - y> + g(x) + c_i] / alpha_i + (1 / 2) ||x - y||^2
//! ```
//!
//! share the form `min_d max_i s_i(d) + (ell / 2) ||d||^2` with
//! `s_i(d) = <u_i, d> + (g(base + d) + o_i) / alpha_i` and `u_i = grad f_i / alpha_i`.
//! For fixed weights `lambda` the inner minimizer is a single prox step
//!
//! ```text
//! d(lambda) = prox_{(beta / ell) g}(base - v / ell) - base,
//! v = sum_i lambda_i u_i,  beta = sum_i lambda_i / alpha_i,
//! ```
//!
//! and the dual `q(lambda)` is concave and differentiable with gradient
//! `s(d(lambda))`. Frank–Wolfe over the simplex then certifies its own
//! duality gap: `max_i s_i - <lambda, s>` is exactly primal minus dual.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::problems::NonsmoothSpec;
use crate::scalar::Scalar;

/// Line-search rule for the Frank–Wolfe step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `2 / (t + 2)`, forward steps only.
    Classic,
    /// Exact maximization of the dual along the step direction: closed form
    /// when `g = 0` (the dual is quadratic), bisection on the directional
    /// derivative otherwise. Away steps are enabled with this rule.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSettings<T> {
    /// Relative gap tolerance. The absolute limit is `gap_tol * scale` with
    /// `scale = max_i ||grad f_i / alpha_i||^2 / ell + max_i |o_i| / alpha_i`.
    pub gap_tol: T,
    pub max_inner: usize,
    pub step_rule: StepRule,
}

impl<T: Scalar> Default for SubproblemSettings<T> {
    fn default() -> Self {
        Self {
            gap_tol: T::lit(1e-10),
            max_inner: 10_000,
            step_rule: StepRule::Exact,
        }
    }
}

impl<T: Scalar> SubproblemSettings<T> {
    fn validate(&self) -> Result<(), Error<T>> {
        if !(self.gap_tol > T::zero()) || self.max_inner == 0 {
            return Err(Error::config("subproblem settings need gap_tol > 0 and max_inner >= 1"));
        }
        Ok(())
    }
}

/// Result of a subproblem solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSolution<T> {
    /// Step from the base point. For the accelerated form `d = x_next - y`.
    pub d: Vec<T>,
    /// `base + d`, computed by the prox itself (feasible for indicators).
    pub x_next: Vec<T>,
    /// Dual weights on the unit simplex.
    pub lambda: Vec<T>,
    /// Per-objective model values `s_i(d)`, without the quadratic term.
    pub brackets: Vec<T>,
    pub primal_value: T,
    pub dual_value: T,
    /// `primal_value - dual_value`
    pub gap: T,
    /// Absolute gap limit the solve was certified against.
    pub gap_limit: T,
    pub inner_iters: usize,
}

impl<T: Scalar> DirectionSolution<T> {
    pub fn norm_d(&self) -> T {
        linalg::norm(&self.d)
    }

    /// Unscaled model decrease `alpha_i * s_i(d)`. For the plain form this is
    /// `<grad f_i(x), d> + g(x + d) - g(x)`.
    pub fn decrease(&self, alpha: &[T]) -> Vec<T> {
        self.brackets.iter().zip(alpha).map(|(&s, &a)| s * a).collect()
    }
}

/// Value, gradient and inner minimizer of the dual at one weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DualProbe<T> {
    pub q: T,
    /// `s_i(d(lambda))`, the gradient of `q`.
    pub supgradient: Vec<T>,
    pub d: Vec<T>,
    pub point: Vec<T>,
}

/// The dual of one subproblem instance.
#[derive(Debug, Clone)]
pub struct DualProblem<'a, T> {
    base: &'a [T],
    g: &'a NonsmoothSpec<T>,
    alpha: Vec<T>,
    ell: T,
    offsets: Vec<T>,
    scaled_grads: Vec<Vec<T>>,
}

impl<'a, T: Scalar> DualProblem<'a, T> {
    /// Plain subproblem at `x` with scaling `alpha` and regularization `ell`.
    pub fn direction(
        x: &'a [T],
        jac: &Matrix<T>,
        g: &'a NonsmoothSpec<T>,
        alpha: &[T],
        ell: T,
    ) -> Result<Self, Error<T>> {
        let gx = g.value(x);
        if !gx.is_finite() {
            return Err(Error::invalid("base point violates the indicator constraint"));
        }
        Self::build(x, jac, g, alpha, ell, vec![-gx; jac.nrows()])
    }

    /// Accelerated subproblem at `y` with constants `c_i = f_i(y) - F_i(x^k)`
    /// and scaling `l`.
    pub fn accelerated(
        y: &'a [T],
        jac: &Matrix<T>,
        offsets: &[T],
        g: &'a NonsmoothSpec<T>,
        l: &[T],
    ) -> Result<Self, Error<T>> {
        if offsets.len() != jac.nrows() || !linalg::is_finite(offsets) {
            return Err(Error::invalid("offsets must be finite, one per objective"));
        }
        Self::build(y, jac, g, l, T::one(), offsets.to_vec())
    }

    fn build(
        base: &'a [T],
        jac: &Matrix<T>,
        g: &'a NonsmoothSpec<T>,
        alpha: &[T],
        ell: T,
        offsets: Vec<T>,
    ) -> Result<Self, Error<T>> {
        let m = jac.nrows();
        if m == 0 || jac.ncols() != base.len() || alpha.len() != m {
            return Err(Error::invalid(format!(
                "shape mismatch: jacobian {}x{}, point {}, alpha {}",
                m,
                jac.ncols(),
                base.len(),
                alpha.len()
            )));
        }
        if alpha.iter().any(|&a| !(a > T::zero() && a.is_finite())) {
            return Err(Error::invalid("scaling parameters must be positive and finite"));
        }
        if !(ell > T::zero() && ell.is_finite()) {
            return Err(Error::invalid("ell must be positive"));
        }
        if !linalg::is_finite(base) {
            return Err(Error::invalid("base point must be finite"));
        }
        let scaled_grads = (0..m)
            .map(|i| linalg::scale(T::one() / alpha[i], jac.row(i)))
            .collect();
        Ok(Self {
            base,
            g,
            alpha: alpha.to_vec(),
            ell,
            offsets,
            scaled_grads,
        })
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    /// Magnitude of the dual objective, used to make tolerances relative.
    pub fn scale(&self) -> T {
        let grad = self
            .scaled_grads
            .iter()
            .fold(T::zero(), |acc, u| acc.max(linalg::norm_sq(u)))
            / self.ell;
        let off = self
            .offsets
            .iter()
            .zip(&self.alpha)
            .fold(T::zero(), |acc, (&o, &a)| acc.max((o / a).abs()));
        grad + off
    }

    /// Inner minimizer for fixed weights, its model values and the dual value.
    pub fn dual_probe(&self, lambda: &[T]) -> DualProbe<T> {
        let n = self.base.len();
        let mut v = vec![T::zero(); n];
        let mut beta = T::zero();
        for ((&l, u), &a) in lambda.iter().zip(&self.scaled_grads).zip(&self.alpha) {
            if l != T::zero() {
                linalg::axpy(l, u, &mut v);
                beta += l / a;
            }
        }
        let shifted = linalg::add_scaled(self.base, -T::one() / self.ell, &v);
        let point = if self.g.is_zero() {
            shifted
        } else {
            self.g.prox_unchecked(beta / self.ell, &shifted)
        };
        let d = linalg::sub(&point, self.base);
        let gy = self.g.value(&point);
        let supgradient: Vec<T> = self
            .scaled_grads
            .iter()
            .zip(&self.offsets)
            .zip(&self.alpha)
            .map(|((u, &o), &a)| linalg::dot(u, &d) + (gy + o) / a)
            .collect();
        let q = linalg::dot(lambda, &supgradient) + T::lit(0.5) * self.ell * linalg::norm_sq(&d);
        DualProbe {
            q,
            supgradient,
            d,
            point,
        }
    }

    /// Objective of the primal subproblem at step `d`.
    pub fn primal_value(&self, d: &[T]) -> T {
        let point = linalg::add(self.base, d);
        let gy = self.g.value(&point);
        let worst = self
            .scaled_grads
            .iter()
            .zip(&self.offsets)
            .zip(&self.alpha)
            .map(|((u, &o), &a)| linalg::dot(u, d) + (gy + o) / a)
            .fold(T::neg_infinity(), T::max);
        worst + T::lit(0.5) * self.ell * linalg::norm_sq(d)
    }

    /// Runs Frank–Wolfe on the dual.
    pub fn solve(&self, settings: &SubproblemSettings<T>) -> Result<DirectionSolution<T>, Error<T>> {
        settings.validate()?;
        let m = self.m();
        let gap_limit = settings.gap_tol * self.scale().max(T::min_positive_value());

        let mut lambda = vec![T::one() / T::count(m); m];
        let mut probe = self.dual_probe(&lambda);
        let mut best: Option<(T, Vec<T>, DualProbe<T>)> = None;
        let mut iters = 0;
        loop {
            let s = &probe.supgradient;
            let lin = linalg::dot(&lambda, s);
            let (j, s_max) = argmax(s);
            let gap = (s_max - lin).max(T::zero());
            let primal = s_max + T::lit(0.5) * self.ell * linalg::norm_sq(&probe.d);
            if best.as_ref().is_none_or(|(p, _, _)| primal < *p) {
                best = Some((primal, lambda.clone(), probe.clone()));
            }
            if gap <= gap_limit {
                return Ok(self.finish(lambda, probe, gap_limit, iters));
            }
            if iters >= settings.max_inner {
                let (_, bl, bp) = best.expect("at least one probe");
                let sol = self.finish(bl, bp, gap_limit, iters);
                if sol.gap > T::lit(1e3) * gap_limit {
                    return Err(Error::NonCertified {
                        gap: sol.gap,
                        limit: gap_limit,
                        best: Box::new(sol),
                    });
                }
                return Ok(sol);
            }
            iters += 1;

            // pick a forward (toward vertex j) or away (from the worst active vertex) step
            let mut dir: Vec<T> = lambda.iter().map(|&l| -l).collect();
            dir[j] += T::one();
            let mut gamma_max = T::one();
            let mut away = None;
            if settings.step_rule == StepRule::Exact {
                let (a, s_min) = argmin_active(s, &lambda);
                let away_gap = lin - s_min;
                if away_gap > gap && lambda[a] < T::one() {
                    dir = lambda.clone();
                    dir[a] -= T::one();
                    gamma_max = lambda[a] / (T::one() - lambda[a]);
                    away = Some(a);
                }
            }
            let gamma = match settings.step_rule {
                StepRule::Classic => T::lit(2.0) / T::count(iters + 1),
                StepRule::Exact => self.exact_step(&lambda, &probe, &dir, gamma_max),
            };
            for (l, &dl) in lambda.iter_mut().zip(&dir) {
                *l = (*l + gamma * dl).max(T::zero());
            }
            if let Some(a) = away {
                if gamma >= gamma_max {
                    lambda[a] = T::zero();
                }
            }
            let total: T = lambda.iter().copied().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            probe = self.dual_probe(&lambda);
        }
    }

    fn exact_step(&self, lambda: &[T], probe: &DualProbe<T>, dir: &[T], gamma_max: T) -> T {
        let slope0 = linalg::dot(&probe.supgradient, dir);
        if !(slope0 > T::zero()) {
            return T::zero();
        }
        if self.g.is_zero() {
            // q is quadratic along dir with curvature -||sum_i dir_i u_i||^2 / ell
            let mut w = vec![T::zero(); self.base.len()];
            for (&di, u) in dir.iter().zip(&self.scaled_grads) {
                linalg::axpy(di, u, &mut w);
            }
            let curv = linalg::norm_sq(&w);
            if curv <= T::zero() {
                return gamma_max;
            }
            return (self.ell * slope0 / curv).min(gamma_max);
        }
        let slope = |gamma: T| {
            let l: Vec<T> = lambda
                .iter()
                .zip(dir)
                .map(|(&li, &di)| (li + gamma * di).max(T::zero()))
                .collect();
            linalg::dot(&self.dual_probe(&l).supgradient, dir)
        };
        if slope(gamma_max) >= T::zero() {
            return gamma_max;
        }
        let (mut lo, mut hi) = (T::zero(), gamma_max);
        for _ in 0..64 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        T::lit(0.5) * (lo + hi)
    }

    fn finish(&self, lambda: Vec<T>, probe: DualProbe<T>, gap_limit: T, iters: usize) -> DirectionSolution<T> {
        let DualProbe {
            q,
            supgradient,
            d,
            point,
        } = probe;
        let (_, s_max) = argmax(&supgradient);
        let primal = s_max + T::lit(0.5) * self.ell * linalg::norm_sq(&d);
        let dual = q.min(primal);
        // For the plain form d = 0 is feasible with value 0.
        let plain = self.offsets.iter().zip(&self.alpha).all(|(&o, _)| o == self.offsets[0])
            && self.offsets[0] == -self.g.value(self.base);
        if plain && primal > T::zero() {
            return DirectionSolution {
                d: vec![T::zero(); d.len()],
                x_next: self.base.to_vec(),
                lambda,
                brackets: vec![T::zero(); self.m()],
                primal_value: T::zero(),
                dual_value: dual,
                gap: -dual,
                gap_limit,
                inner_iters: iters,
            };
        }
        DirectionSolution {
            d,
            x_next: point,
            lambda,
            brackets: supgradient,
            primal_value: primal,
            dual_value: dual,
            gap: primal - dual,
            gap_limit,
            inner_iters: iters,
        }
    }
}

fn argmax<T: Scalar>(s: &[T]) -> (usize, T) {
    let mut best = (0, s[0]);
    for (i, &v) in s.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

fn argmin_active<T: Scalar>(s: &[T], lambda: &[T]) -> (usize, T) {
    let mut best: Option<(usize, T)> = None;
    for (i, (&v, &l)) in s.iter().zip(lambda).enumerate() {
        if l > T::zero() && best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.expect("simplex point has an active vertex")
}

/// Solves the plain (scaled) direction subproblem at `x`.
///
/// `alpha = (ell, ..., ell)` with `ell = 1` in the regularizer gives the
/// unscaled proximal gradient subproblem; `alpha = L` the scaled one.
pub fn solve_direction<T: Scalar>(
    x: &[T],
    jac: &Matrix<T>,
    g: &NonsmoothSpec<T>,
    alpha: &[T],
    ell: T,
    settings: &SubproblemSettings<T>,
) -> Result<DirectionSolution<T>, Error<T>> {
    DualProblem::direction(x, jac, g, alpha, ell)?.solve(settings)
}

/// Solves the accelerated subproblem at the extrapolated point `y`.
pub fn solve_accelerated<T: Scalar>(
    y: &[T],
    jac_at_y: &Matrix<T>,
    offsets: &[T],
    g: &NonsmoothSpec<T>,
    l: &[T],
    settings: &SubproblemSettings<T>,
) -> Result<DirectionSolution<T>, Error<T>> {
    DualProblem::accelerated(y, jac_at_y, offsets, g, l)?.solve(settings)
}
