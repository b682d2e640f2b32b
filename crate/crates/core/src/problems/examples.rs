use super::{NonsmoothSpec, ProblemInstance, SampleBox, SmoothObjective, Smoothness};
use crate::error::Error;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Two perfectly conditioned but imbalanced quadratics on R^2:
/// `f_1 = 0.5 ||x||^2`, `f_2 = (L/2) ||x||^2`, `g = 0`.
///
/// The unique Pareto solution is the origin.
pub fn example_3_1<T: Scalar>(l: T) -> Result<ProblemInstance<T>, Error<T>> {
    if !(l > T::one() && l.is_finite()) {
        return Err(Error::invalid(format!("imbalanced pair needs L > 1, got {l}")));
    }
    let origin = vec![T::zero(); 2];
    let quad = |s: T| SmoothObjective::Quadratic {
        a: Matrix::identity(2).map(|v: T| v * s),
        b: origin.clone(),
        minimizer: Some(origin.clone()),
    };
    ProblemInstance::new(
        "example_3_1",
        2,
        vec![quad(T::one()), quad(l)],
        NonsmoothSpec::Zero,
        SampleBox::symmetric(2, T::lit(5.0)),
    )?
    .with_smoothness(vec![
        Smoothness {
            mu: T::one(),
            l: T::one(),
        },
        Smoothness { mu: l, l },
    ])
}

/// A strongly convex quadratic paired with a linear objective on the ray
/// `{x_1 >= 0, x_2 = 0}`: `f_1 = 0.5 ||x||^2`, `f_2 = c x_1`.
///
/// Objective 2 is tagged linear. Its recorded smoothness is `(0, 1)` so that
/// `L_max = 1`; any positive `L` bounds a linear function.
pub fn example_4_4<T: Scalar>(c: T) -> Result<ProblemInstance<T>, Error<T>> {
    if !(c > T::zero() && c.is_finite()) {
        return Err(Error::invalid(format!("linear objective slope needs c > 0, got {c}")));
    }
    let origin = vec![T::zero(); 2];
    ProblemInstance::new(
        "example_4_4",
        2,
        vec![
            SmoothObjective::Quadratic {
                a: Matrix::identity(2),
                b: origin.clone(),
                minimizer: Some(origin),
            },
            SmoothObjective::Linear {
                c: vec![c, T::zero()],
            },
        ],
        NonsmoothSpec::FixedAndHalfspace {
            fixed: vec![(1, T::zero())],
            nonnegative: vec![0],
        },
        SampleBox {
            lower: vec![T::zero(), T::zero()],
            upper: vec![T::one(), T::zero()],
        },
    )?
    .with_smoothness(vec![
        Smoothness {
            mu: T::one(),
            l: T::one(),
        },
        Smoothness {
            mu: T::zero(),
            l: T::one(),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preconditions() {
        assert!(example_3_1(1.0).is_err());
        assert!(example_3_1(f64::NAN).is_err());
        assert!(example_4_4(0.0).is_err());
        assert!(example_4_4(-1.0).is_err());
    }

    #[test]
    fn recorded_moduli() {
        let p = example_3_1(1e3).unwrap();
        assert_eq!(p.lipschitz().unwrap(), vec![1.0, 1e3]);
        assert_eq!(p.convexity().unwrap(), vec![1.0, 1e3]);
        assert_eq!(p.kappa(), Some(1.0));
        assert_eq!(p.kappa_tilde(), Some(1e3));

        let q = example_4_4(1e-2).unwrap();
        assert_eq!(q.linear_mask(), vec![false, true]);
        assert_eq!(q.l_max(), Some(1.0));
    }

    #[test]
    fn origin_is_feasible_and_optimal_for_example_4_4() {
        let q = example_4_4(1e-2).unwrap();
        assert_eq!(q.evaluate(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // every feasible point other than the origin is dominated by it
        for x1 in [1e-3, 0.5, 3.0] {
            let f = q.evaluate(&[x1, 0.0]).unwrap();
            assert!(f.iter().all(|&v| v > 0.0));
        }
    }
}
