//! Problem model: smooth objectives, the shared nonsmooth term and instance constructors.

mod examples;
mod generator;
mod nonsmooth;
mod spec;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

pub use examples::{example_3_1, example_4_4};
pub use generator::{gen_quadratic_family, QuadraticFamily};
pub use nonsmooth::{NonsmoothSpec, FEASIBILITY_TOL};
pub use spec::{ObjectiveDump, ProblemDump, ProblemSpec, TablePreset};

type ValueFn<T> = dyn Fn(&[T]) -> T + Send + Sync;
type GradientFn<T> = dyn Fn(&[T]) -> Vec<T> + Send + Sync;

/// User-supplied value/gradient oracle pair.
#[derive(Clone)]
pub struct GenericObjective<T> {
    value: Arc<ValueFn<T>>,
    gradient: Arc<GradientFn<T>>,
}

impl<T> GenericObjective<T> {
    pub fn new(
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        gradient: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl<T> fmt::Debug for GenericObjective<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GenericObjective")
    }
}

/// A differentiable convex objective `f_i`.
#[derive(Debug, Clone)]
pub enum SmoothObjective<T> {
    /// `0.5 <x, A x> + <b, x>` with `A` symmetric positive semidefinite.
    /// `minimizer` is recorded when known in closed form.
    Quadratic {
        a: Matrix<T>,
        b: Vec<T>,
        minimizer: Option<Vec<T>>,
    },
    /// `<c, x>`
    Linear { c: Vec<T> },
    Generic(GenericObjective<T>),
}

impl<T: Scalar> SmoothObjective<T> {
    pub fn quadratic(a: Matrix<T>, b: Vec<T>) -> Self {
        Self::Quadratic {
            a,
            b,
            minimizer: None,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            Self::Quadratic { a, b, .. } => {
                let ax = a.matvec(x);
                T::lit(0.5) * linalg::dot(x, &ax) + linalg::dot(b, x)
            }
            Self::Linear { c } => linalg::dot(c, x),
            Self::Generic(g) => (g.value)(x),
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Quadratic { a, b, .. } => linalg::add(&a.matvec(x), b),
            Self::Linear { c } => c.clone(),
            Self::Generic(g) => (g.gradient)(x),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear { .. })
    }

    /// Smallest value of the objective, when it is known in closed form.
    pub fn known_minimum(&self) -> Option<T> {
        match self {
            Self::Quadratic {
                minimizer: Some(x), ..
            } => Some(self.value(x)),
            _ => None,
        }
    }

    /// `s * f`
    pub fn scaled(&self, s: T) -> Self {
        match self {
            Self::Quadratic { a, b, minimizer } => Self::Quadratic {
                a: a.map(|v| v * s),
                b: linalg::scale(s, b),
                minimizer: minimizer.clone(),
            },
            Self::Linear { c } => Self::Linear {
                c: linalg::scale(s, c),
            },
            Self::Generic(g) => {
                let (v, gr) = (g.value.clone(), g.gradient.clone());
                Self::Generic(GenericObjective::new(
                    move |x| s * v(x),
                    move |x| linalg::scale(s, &gr(x)),
                ))
            }
        }
    }

    fn dimension(&self) -> Option<usize> {
        match self {
            Self::Quadratic { a, .. } => Some(a.ncols()),
            Self::Linear { c } => Some(c.len()),
            Self::Generic(_) => None,
        }
    }
}

/// Strong convexity and smoothness moduli of one objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness<T> {
    pub mu: T,
    pub l: T,
}

/// Axis-aligned box used to draw random starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> SampleBox<T> {
    pub fn symmetric(n: usize, half_width: T) -> Self {
        Self {
            lower: vec![-half_width; n],
            upper: vec![half_width; n],
        }
    }

    pub fn width(&self) -> T {
        self.lower
            .iter()
            .zip(&self.upper)
            .fold(T::zero(), |m, (&l, &u)| m.max(u - l))
    }

    /// Uniform draw; degenerate coordinates (`lower == upper`) are copied.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| {
                if u > l {
                    let t: f64 = rng.random();
                    l + (u - l) * T::lit(t)
                } else {
                    l
                }
            })
            .collect()
    }
}

/// A multiobjective composite problem `min (f_1 + g, ..., f_m + g)`.
#[derive(Debug, Clone)]
pub struct ProblemInstance<T> {
    name: String,
    n: usize,
    smooth: Vec<SmoothObjective<T>>,
    g: NonsmoothSpec<T>,
    smoothness: Option<Vec<Smoothness<T>>>,
    sample_box: SampleBox<T>,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        smooth: Vec<SmoothObjective<T>>,
        g: NonsmoothSpec<T>,
        sample_box: SampleBox<T>,
    ) -> Result<Self, Error<T>> {
        if n == 0 || smooth.is_empty() {
            return Err(Error::invalid("need n >= 1 and at least one objective"));
        }
        for (i, f) in smooth.iter().enumerate() {
            if let Some(dim) = f.dimension() {
                if dim != n {
                    return Err(Error::invalid(format!("objective {i} has dimension {dim}, expected {n}")));
                }
            }
            if let SmoothObjective::Quadratic { a, b, .. } = f {
                if a.nrows() != n || b.len() != n {
                    return Err(Error::invalid(format!("objective {i} has malformed quadratic data")));
                }
                let tol = T::lit(1e-12) * (T::one() + a.norm());
                if !a.is_symmetric(tol) {
                    return Err(Error::invalid(format!("objective {i}: A is not symmetric")));
                }
            }
        }
        g.validate(n)?;
        if sample_box.lower.len() != n || sample_box.upper.len() != n {
            return Err(Error::invalid("sample box dimension mismatch"));
        }
        if sample_box.lower.iter().zip(&sample_box.upper).any(|(l, u)| l > u) {
            return Err(Error::invalid("sample box requires lower <= upper"));
        }
        Ok(Self {
            name: name.into(),
            n,
            smooth,
            g,
            smoothness: None,
            sample_box,
        })
    }

    /// Attaches known `(mu_i, L_i)` pairs.
    pub fn with_smoothness(mut self, smoothness: Vec<Smoothness<T>>) -> Result<Self, Error<T>> {
        if smoothness.len() != self.m() {
            return Err(Error::invalid("one (mu, L) pair per objective required"));
        }
        if smoothness
            .iter()
            .any(|s| !(s.mu >= T::zero() && s.l > T::zero() && s.mu <= s.l && s.l.is_finite()))
        {
            return Err(Error::invalid("smoothness pairs must satisfy 0 <= mu <= L, L > 0"));
        }
        self.smoothness = Some(smoothness);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> usize {
        self.smooth.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objectives(&self) -> &[SmoothObjective<T>] {
        &self.smooth
    }

    pub fn g(&self) -> &NonsmoothSpec<T> {
        &self.g
    }

    pub fn smoothness(&self) -> Option<&[Smoothness<T>]> {
        self.smoothness.as_deref()
    }

    pub fn sample_box(&self) -> &SampleBox<T> {
        &self.sample_box
    }

    pub fn lipschitz(&self) -> Option<Vec<T>> {
        self.smoothness().map(|s| s.iter().map(|p| p.l).collect())
    }

    pub fn convexity(&self) -> Option<Vec<T>> {
        self.smoothness().map(|s| s.iter().map(|p| p.mu).collect())
    }

    pub fn l_max(&self) -> Option<T> {
        self.smoothness()
            .map(|s| s.iter().fold(T::zero(), |m, p| m.max(p.l)))
    }

    pub fn mu_min(&self) -> Option<T> {
        self.smoothness()
            .map(|s| s.iter().fold(T::infinity(), |m, p| m.min(p.mu)))
    }

    /// `max_i L_i / mu_i`, the worst per-objective condition number.
    pub fn kappa(&self) -> Option<T> {
        self.smoothness()
            .map(|s| s.iter().fold(T::zero(), |m, p| m.max(p.l / p.mu)))
    }

    /// `L_max / mu_min`.
    pub fn kappa_tilde(&self) -> Option<T> {
        Some(self.l_max()? / self.mu_min()?)
    }

    /// Objective imbalance `kappa_tilde / kappa`.
    pub fn imbalance(&self) -> Option<T> {
        Some(self.kappa_tilde()? / self.kappa()?)
    }

    pub fn linear_mask(&self) -> Vec<bool> {
        self.smooth.iter().map(SmoothObjective::is_linear).collect()
    }

    fn check_dim(&self, x: &[T]) -> Result<(), Error<T>> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "point has dimension {}, problem has n = {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// Smooth parts `f_i(x)`.
    pub fn eval_smooth(&self, x: &[T]) -> Result<Vec<T>, Error<T>> {
        self.check_dim(x)?;
        Ok(self.smooth.iter().map(|f| f.value(x)).collect())
    }

    /// `F_i(x) = f_i(x) + g(x)`; `+inf` everywhere when an indicator is violated.
    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>, Error<T>> {
        self.check_dim(x)?;
        let gx = self.g.value(x);
        if gx.is_infinite() {
            return Ok(vec![T::infinity(); self.m()]);
        }
        Ok(self.smooth.iter().map(|f| f.value(x) + gx).collect())
    }

    /// `m x n` Jacobian of the smooth parts.
    pub fn jacobian(&self, x: &[T]) -> Result<Matrix<T>, Error<T>> {
        self.check_dim(x)?;
        let rows = self.smooth.iter().map(|f| f.gradient(x)).collect();
        Matrix::from_rows(rows).ok_or_else(|| Error::invalid("gradient oracle returned wrong length"))
    }

    /// The instance `(f_i / L_i, g)`. Only defined when scaling leaves `g` shared,
    /// i.e. for `Zero` and indicator terms.
    pub fn scaled_by_lipschitz(&self) -> Result<Self, Error<T>> {
        let ls = self
            .lipschitz()
            .ok_or_else(|| Error::config("scaling needs recorded L values"))?;
        if matches!(self.g, NonsmoothSpec::WeightedL1 { .. }) {
            return Err(Error::config(
                "g / L_i differs per objective for a weighted l1 term; only shared g is supported",
            ));
        }
        let smooth = self
            .smooth
            .iter()
            .zip(&ls)
            .map(|(f, &l)| f.scaled(T::one() / l))
            .collect();
        let smoothness = self
            .smoothness()
            .unwrap()
            .iter()
            .map(|p| Smoothness {
                mu: p.mu / p.l,
                l: T::one(),
            })
            .collect();
        Self::new(
            format!("{}/L", self.name),
            self.n,
            smooth,
            self.g.clone(),
            self.sample_box.clone(),
        )?
        .with_smoothness(smoothness)
    }

    /// Largest relative error between analytic gradients and central
    /// differences with step `1e-6 * (1 + ||x||)`.
    pub fn gradient_fd_error(&self, x: &[T]) -> Result<T, Error<T>> {
        let jac = self.jacobian(x)?;
        let h = T::lit(1e-6) * (T::one() + linalg::norm(x));
        let mut worst = T::zero();
        for (i, f) in self.smooth.iter().enumerate() {
            let grad = jac.row(i);
            let mut fd = vec![T::zero(); self.n];
            let mut xp = x.to_vec();
            for j in 0..self.n {
                let orig = xp[j];
                xp[j] = orig + h;
                let up = f.value(&xp);
                xp[j] = orig - h;
                let down = f.value(&xp);
                xp[j] = orig;
                fd[j] = (up - down) / (T::lit(2.0) * h);
            }
            let err = linalg::dist(grad, &fd) / (T::one()).max(linalg::norm(grad));
            worst = worst.max(err);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evaluate_examples() {
        let p = example_3_1(7.0f64).unwrap();
        assert_eq!(p.evaluate(&[1.0, 1.0]).unwrap(), vec![1.0, 7.0]);

        let zero = ProblemInstance::new(
            "zero",
            2,
            vec![SmoothObjective::quadratic(Matrix::identity(2), vec![0.0, 0.0])],
            NonsmoothSpec::Zero,
            SampleBox::symmetric(2, 1.0),
        )
        .unwrap();
        assert_eq!(zero.evaluate(&[0.0, 0.0]).unwrap(), vec![0.0]);

        let l1 = ProblemInstance::new(
            "l1",
            2,
            vec![
                SmoothObjective::Linear { c: vec![0.0, 0.0] },
                SmoothObjective::Linear { c: vec![0.0, 0.0] },
            ],
            NonsmoothSpec::WeightedL1 { weight: 0.5 },
            SampleBox::symmetric(2, 1.0),
        )
        .unwrap();
        assert_eq!(l1.evaluate(&[1.0, -1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let p = example_3_1(10.0f64).unwrap();
        assert!(matches!(p.evaluate(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(p.jacobian(&[1.0, 2.0, 3.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn indicator_violation_gives_infinite_values() {
        let p = example_4_4(0.5f64).unwrap();
        let f = p.evaluate(&[1.0, 0.1]).unwrap();
        assert!(f.iter().all(|v| v.is_infinite()));
        let f = p.evaluate(&[1.0, 0.0]).unwrap();
        assert_eq!(f, vec![0.5, 0.5]);
    }

    #[test]
    fn jacobian_examples() {
        let p = example_3_1(10.0f64).unwrap();
        let j = p.jacobian(&[2.0, -3.0]).unwrap();
        assert_eq!(j.row(0), &[2.0, -3.0]);
        assert_eq!(j.row(1), &[20.0, -30.0]);

        let q = example_4_4(0.3f64).unwrap();
        for x in [[0.0, 0.0], [5.0, 0.0], [1.0, 2.0]] {
            assert_eq!(q.jacobian(&x).unwrap().row(1), &[0.3, 0.0]);
        }

        let id = ProblemInstance::new(
            "id",
            2,
            vec![SmoothObjective::quadratic(Matrix::identity(2), vec![0.0, 0.0])],
            NonsmoothSpec::Zero,
            SampleBox::symmetric(2, 1.0),
        )
        .unwrap();
        assert_eq!(id.jacobian(&[0.0, 0.0]).unwrap().row(0), &[0.0, 0.0]);
    }

    #[test]
    fn smoothness_invariant_enforced() {
        let p = example_3_1(10.0f64).unwrap();
        let bad = p.clone().with_smoothness(vec![
            Smoothness { mu: 2.0, l: 1.0 },
            Smoothness { mu: 1.0, l: 1.0 },
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn finite_difference_gradients_for_all_constructors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let instances = vec![
            example_3_1(1e3f64).unwrap(),
            example_4_4(1e-2f64).unwrap(),
            gen_quadratic_family(10, 2, 10.0, 100.0, true, 5).unwrap(),
            gen_quadratic_family(10, 3, 100.0, 1.0, false, 6).unwrap(),
        ];
        for p in &instances {
            for _ in 0..20 {
                let x = p.sample_box().sample(&mut rng);
                let err = p.gradient_fd_error(&x).unwrap();
                assert!(err <= 1e-5, "{}: fd error {err}", p.name());
            }
        }
    }

    #[test]
    fn scaled_instance_rejects_l1() {
        let p = gen_quadratic_family::<f64>(4, 2, 10.0, 10.0, true, 1).unwrap();
        assert!(p.scaled_by_lipschitz().is_err());
        let q = gen_quadratic_family::<f64>(4, 2, 10.0, 10.0, false, 1).unwrap();
        let s = q.scaled_by_lipschitz().unwrap();
        assert_eq!(s.l_max(), Some(1.0));
        let x = [0.5, -1.0, 2.0, 0.0];
        let (fq, fs) = (q.evaluate(&x).unwrap(), s.evaluate(&x).unwrap());
        let ls = q.lipschitz().unwrap();
        for i in 0..2 {
            assert!((fq[i] / ls[i] - fs[i]).abs() <= 1e-12 * fq[i].abs().max(1.0));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let p = example_3_1(4.0f32).unwrap();
        assert_eq!(p.evaluate(&[1.0, 1.0]).unwrap(), vec![1.0f32, 4.0]);
    }
}
