//! Merit functions, scaled gaps, Lyapunov monitors and rate diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg;
use crate::problems::{ProblemInstance, Smoothness};
use crate::scalar::Scalar;
use crate::solvers::IterationRecord;
use crate::subproblem::{solve_direction, SubproblemSettings};

/// `w_ell^alpha(x)`: the negated optimal value of the direction subproblem.
pub fn merit_w<T: Scalar>(
    p: &ProblemInstance<T>,
    x: &[T],
    alpha: &[T],
    ell: T,
    settings: &SubproblemSettings<T>,
) -> Result<T, Error<T>> {
    let jac = p.jacobian(x)?;
    let sol = solve_direction(x, &jac, p.g(), alpha, ell, settings)?;
    Ok(-sol.primal_value)
}

/// `min_i (F_i(x) - F_i(z)) / L_i` from precomputed objective values.
pub fn scaled_gap_values<T: Scalar>(fx: &[T], fz: &[T], l: &[T]) -> T {
    fx.iter()
        .zip(fz)
        .zip(l)
        .map(|((&a, &b), &li)| (a - b) / li)
        .fold(T::infinity(), T::min)
}

pub fn scaled_gap<T: Scalar>(p: &ProblemInstance<T>, x: &[T], z: &[T], l: &[T]) -> Result<T, Error<T>> {
    if l.len() != p.m() || l.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::invalid("L must be positive, one per objective"));
    }
    Ok(scaled_gap_values(&p.evaluate(x)?, &p.evaluate(z)?, l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LyapunovMode<T> {
    Convex,
    StronglyConvex { mu_hat: T },
}

/// `rho_k(z) = ||x^{k+1} / theta_k - (1 - theta_k) / theta_k * x^k - z||^2`.
pub fn rho<T: Scalar>(x: &[T], x_next: &[T], theta: T, z: &[T]) -> T {
    let c = (T::one() - theta) / theta;
    x_next
        .iter()
        .zip(x)
        .zip(z)
        .map(|((&xn, &xk), &zi)| {
            let v = xn / theta - c * xk - zi;
            v * v
        })
        .sum()
}

/// Lyapunov value `E_{k+1}(z)` for one accelerated trace entry.
///
/// `f_z = F(z)`. Convex: `sigma_{k+1} / theta_k^2 + rho_k / 2`.
/// Strongly convex: `(1 - sqrt(mu_hat))^{-(k+1)} (sigma_{k+1} + mu_hat / 2 * rho_k)`.
pub fn lyapunov<T: Scalar>(
    rec: &IterationRecord<T>,
    z: &[T],
    f_z: &[T],
    l: &[T],
    mode: LyapunovMode<T>,
) -> Result<T, Error<T>> {
    let (Some(x), Some(x_next), Some(theta)) = (&rec.x, &rec.x_next, rec.theta) else {
        return Err(Error::invalid("trace entry lacks points or theta"));
    };
    if !(theta > T::zero()) {
        return Err(Error::invalid("theta must be positive"));
    }
    let sigma = scaled_gap_values(&rec.f_next, f_z, l);
    let r = rho(x, x_next, theta, z);
    Ok(match mode {
        LyapunovMode::Convex => sigma / (theta * theta) + T::lit(0.5) * r,
        LyapunovMode::StronglyConvex { mu_hat } => {
            let decay = T::one() - mu_hat.sqrt();
            (sigma + T::lit(0.5) * mu_hat * r) / decay.powi(rec.k as i32 + 1)
        }
    })
}

/// `E_0(z)`: `||x^0 - z||^2 / 2` for the convex schedule (with `1/theta_{-1}^2 = 0`),
/// `sigma_0 + mu_hat / 2 * ||x^0 - z||^2` for the strongly convex one.
pub fn lyapunov_initial<T: Scalar>(x0: &[T], f_x0: &[T], z: &[T], f_z: &[T], l: &[T], mode: LyapunovMode<T>) -> T {
    let d = linalg::norm_sq(&linalg::sub(x0, z));
    match mode {
        LyapunovMode::Convex => T::lit(0.5) * d,
        LyapunovMode::StronglyConvex { mu_hat } => scaled_gap_values(f_x0, f_z, l) + T::lit(0.5) * mu_hat * d,
    }
}

/// Over-estimate of the diameter of the level set `{x : F(x) <= F(x^0)}`:
/// `2 max_i sqrt(2 (F_i(x^0) - f_i_min) / mu_i)`.
///
/// Valid for `g >= 0`. `f_i_min` comes from the recorded minimizer when
/// available and otherwise from the lower bound `f(x^0) - ||grad f(x^0)||^2 / (2 mu)`.
pub fn level_set_radius<T: Scalar>(p: &ProblemInstance<T>, x0: &[T]) -> Result<T, Error<T>> {
    let mu = p
        .convexity()
        .ok_or_else(|| Error::invalid("level-set estimate needs recorded convexity moduli"))?;
    if mu.iter().any(|&m| !(m > T::zero())) {
        return Err(Error::invalid("level-set estimate needs strongly convex objectives"));
    }
    let f0 = p.evaluate(x0)?;
    let jac = p.jacobian(x0)?;
    let mut r = T::zero();
    for (i, f) in p.objectives().iter().enumerate() {
        let fmin = f.known_minimum().unwrap_or_else(|| {
            f.value(x0) - linalg::norm_sq(jac.row(i)) / (T::lit(2.0) * mu[i])
        });
        let excess = (f0[i] - fmin).max(T::zero());
        r = r.max((T::lit(2.0) * excess / mu[i]).sqrt());
    }
    Ok(T::lit(2.0) * r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDiagnostics<T> {
    /// `||x^{k+1} - x*|| / ||x^k - x*||` for every `k` with a usable denominator.
    pub ratios: Vec<T>,
    /// Step index `k` of each ratio.
    pub steps: Vec<usize>,
    /// Least-squares slope of `ln ||x^k - x*||` against `k` over nonzero distances.
    pub slope: Option<T>,
    /// `sqrt(1 - min_i mu_i / L_i)`
    pub scaled_bound: Option<T>,
    /// `sqrt(1 - mu_min / L_max)`
    pub unscaled_bound: Option<T>,
}

impl<T: Scalar> RateDiagnostics<T> {
    pub fn fitted_rate(&self) -> Option<T> {
        self.slope.map(T::exp)
    }

    pub fn max_ratio(&self) -> Option<T> {
        self.ratios.iter().copied().reduce(T::max)
    }
}

/// Denominators below this are dropped from the ratio series.
pub const RATIO_CUTOFF: f64 = 1e-14;

pub fn contraction_ratios<T: Scalar>(
    points: &[Vec<T>],
    x_star: &[T],
    smoothness: Option<&[Smoothness<T>]>,
) -> Result<RateDiagnostics<T>, Error<T>> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 iterates, got {}",
            points.len()
        )));
    }
    let cutoff = T::lit(RATIO_CUTOFF);
    let dist: Vec<T> = points.iter().map(|x| linalg::dist(x, x_star)).collect();
    let (mut ratios, mut steps) = (Vec::new(), Vec::new());
    for k in 0..dist.len() - 1 {
        if dist[k] >= cutoff {
            ratios.push(dist[k + 1] / dist[k]);
            steps.push(k);
        }
    }
    let logs: Vec<(T, T)> = dist
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= cutoff)
        .map(|(k, d)| (T::count(k), d.ln()))
        .collect();
    let slope = (logs.len() >= 2).then(|| {
        let nk = T::count(logs.len());
        let mx = logs.iter().map(|p| p.0).sum::<T>() / nk;
        let my = logs.iter().map(|p| p.1).sum::<T>() / nk;
        let sxy: T = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
        let sxx: T = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    });
    let (scaled_bound, unscaled_bound) = match smoothness {
        Some(s) if !s.is_empty() => {
            let worst = s.iter().map(|v| v.mu / v.l).fold(T::infinity(), T::min);
            let mu_min = s.iter().map(|v| v.mu).fold(T::infinity(), T::min);
            let l_max = s.iter().map(|v| v.l).fold(T::zero(), T::max);
            (
                Some((T::one() - worst).max(T::zero()).sqrt()),
                Some((T::one() - mu_min / l_max).max(T::zero()).sqrt()),
            )
        }
        _ => (None, None),
    };
    Ok(RateDiagnostics {
        ratios,
        steps,
        slope,
        scaled_bound,
        unscaled_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problems::{example_3_1, gen_quadratic_family, NonsmoothSpec, SampleBox, SmoothObjective};
    use crate::solvers::{run, Algorithm, SolverConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn settings() -> SubproblemSettings<f64> {
        SubproblemSettings::default()
    }

    #[test]
    fn merit_examples() {
        let p = example_3_1(1e3f64).unwrap();
        assert_eq!(merit_w(&p, &[0.0, 0.0], &[1.0, 1e3], 1.0, &settings()).unwrap(), 0.0);

        let q = ProblemInstance::new(
            "single",
            2,
            vec![SmoothObjective::quadratic(
                Matrix::from_rows(vec![vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
                vec![1.0, -1.0],
            )],
            NonsmoothSpec::Zero,
            SampleBox::symmetric(2, 1.0),
        )
        .unwrap();
        let x = [0.3, -0.8];
        let g = q.jacobian(&x).unwrap();
        let w = merit_w(&q, &x, &[1.0], 1.0, &settings()).unwrap();
        assert_abs_diff_eq!(w, 0.5 * linalg::norm_sq(g.row(0)), epsilon = 1e-14);
    }

    #[test]
    fn scaled_gap_examples() {
        let p = example_3_1(1e3f64).unwrap();
        let l = [1.0, 1e3];
        assert_eq!(scaled_gap(&p, &[1.0, 0.0], &[0.0, 0.0], &l).unwrap(), 0.5);
        assert_eq!(scaled_gap(&p, &[0.4, 0.2], &[0.4, 0.2], &l).unwrap(), 0.0);
        assert!(scaled_gap(&p, &[1.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rho_collapses_at_unit_theta() {
        assert_eq!(rho(&[9.0, 9.0], &[1.0, 2.0], 1.0, &[0.0, 1.0]), 2.0);
    }

    #[test]
    fn lyapunov_needs_points_and_positive_theta() {
        let p = example_3_1(4.0f64).unwrap();
        let r = run(&p, &SolverConfig::new(Algorithm::Aspgmo).with_max_iter(3), &[1.0, 1.0]).unwrap();
        let mut rec = r.trace[0].clone();
        let fz = p.evaluate(&[0.0, 0.0]).unwrap();
        let l = [1.0, 4.0];
        assert!(lyapunov(&rec, &[0.0, 0.0], &fz, &l, LyapunovMode::Convex).is_ok());
        rec.theta = Some(0.0);
        assert!(matches!(
            lyapunov(&rec, &[0.0, 0.0], &fz, &l, LyapunovMode::Convex),
            Err(Error::InvalidInput(_))
        ));
        rec.x = None;
        assert!(lyapunov(&rec, &[0.0, 0.0], &fz, &l, LyapunovMode::Convex).is_err());
    }

    #[test]
    fn contraction_examples() {
        let pts = vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]];
        let d = contraction_ratios(&pts, &[0.0, 0.0], None).unwrap();
        assert_eq!(d.ratios, vec![0.0]);
        assert_eq!(d.steps, vec![0]);
        assert!(d.slope.is_none());

        let geo: Vec<Vec<f64>> = (0..20).map(|k| vec![0.5f64.powi(k), 0.0]).collect();
        let d = contraction_ratios(&geo, &[0.0, 0.0], None).unwrap();
        assert!(d.ratios.iter().all(|&r| (r - 0.5).abs() < 1e-15));
        assert_abs_diff_eq!(d.fitted_rate().unwrap(), 0.5, epsilon = 1e-12);

        assert!(matches!(
            contraction_ratios(&geo[..2], &[0.0, 0.0], None),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn theoretical_bounds_attached() {
        let p = example_3_1(100.0f64).unwrap();
        let pts = vec![vec![1.0, 0.0], vec![0.5, 0.0], vec![0.25, 0.0]];
        let d = contraction_ratios(&pts, &[0.0, 0.0], p.smoothness()).unwrap();
        assert_eq!(d.scaled_bound, Some(0.0));
        assert_abs_diff_eq!(d.unscaled_bound.unwrap(), (0.99f64).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn level_set_radius_covers_sublevel_samples() {
        let p = gen_quadratic_family::<f64>(3, 2, 5.0, 2.0, true, 11).unwrap();
        let x0 = [2.0, -1.0, 0.5];
        let r = level_set_radius(&p, &x0).unwrap();
        let f0 = p.evaluate(&x0).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let inside: Vec<Vec<f64>> = (0..20000)
            .map(|_| p.sample_box().sample(&mut rng))
            .filter(|x| p.evaluate(x).unwrap().iter().zip(&f0).all(|(a, b)| a <= b))
            .collect();
        assert!(!inside.is_empty());
        for a in &inside {
            assert!(linalg::dist(a, &x0) <= r);
        }
    }

    proptest! {
        #[test]
        fn merit_ordering_in_ell(seed in 0u64..500, ell in 0.05f64..1.0, factor in 1.0f64..20.0) {
            let p = gen_quadratic_family::<f64>(4, 3, 20.0, 3.0, seed % 2 == 0, seed).unwrap();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let x = p.sample_box().sample(&mut rng);
            let alpha = p.lipschitz().unwrap();
            let r = ell * factor;
            let wl = merit_w(&p, &x, &alpha, ell, &settings()).unwrap();
            let wr = merit_w(&p, &x, &alpha, r, &settings()).unwrap();
            let scale = 1e-8 * wl.abs().max(1.0);
            prop_assert!(wr <= wl + scale);
            prop_assert!(wl <= r / ell * wr + scale);
        }

        #[test]
        fn scaled_gap_monotone_under_dominance(a in prop::collection::vec(-5.0f64..5.0, 3), shift in prop::collection::vec(0.0f64..2.0, 3), fz in prop::collection::vec(-5.0f64..5.0, 3)) {
            let l = [1.0, 10.0, 0.5];
            let lower: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x - s).collect();
            prop_assert!(scaled_gap_values(&lower, &fz, &l) <= scaled_gap_values(&a, &fz, &l));
        }
    }
}
