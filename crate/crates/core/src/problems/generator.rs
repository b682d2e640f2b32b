//! Seeded random quadratic families with prescribed conditioning and imbalance.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{NonsmoothSpec, ProblemInstance, SampleBox, SmoothObjective, Smoothness};
use crate::error::Error;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Parameters of a generated quadratic family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFamily {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub zeta: f64,
    #[serde(default)]
    pub with_l1: bool,
    #[serde(default)]
    pub seed: u64,
}

impl QuadraticFamily {
    pub fn build<T: Scalar>(&self) -> Result<ProblemInstance<T>, Error<T>> {
        gen_quadratic_family(self.n, self.m, T::lit(self.kappa), T::lit(self.zeta), self.with_l1, self.seed)
    }
}

/// Builds `f_i(x) = 0.5 <x, A_i x> + <b_i, x>` with `A_i = H_i D_i H_i^T`.
///
/// `H_i` is Haar-orthogonal (QR of a seeded Gaussian matrix with the sign of
/// `diag(R)` folded in). Objective 1 and any objective beyond the second have
/// spectrum `[1, kappa]`; objective 2 has `[zeta, zeta * kappa]`. Both ends of
/// each spectrum are eigenvalues, interior ones are log-uniform. Minimizers are
/// placed at distinct seeded anchors on the sphere of radius `n / 2`
/// (a quarter of the sampling box width), via `b_i = -A_i t_i`.
///
/// The sampling box is `[-n, n]^n`, and `g = ||x||_1 / n` when `with_l1` is set.
pub fn gen_quadratic_family<T: Scalar>(
    n: usize,
    m: usize,
    kappa: T,
    zeta: T,
    with_l1: bool,
    seed: u64,
) -> Result<ProblemInstance<T>, Error<T>> {
    if n < 2 || m < 2 {
        return Err(Error::invalid(format!("quadratic family needs n >= 2 and m >= 2, got n = {n}, m = {m}")));
    }
    if !(kappa >= T::one() && kappa.is_finite()) || !(zeta >= T::one() && zeta.is_finite()) {
        return Err(Error::invalid(format!("need kappa >= 1 and zeta >= 1, got ({kappa}, {zeta})")));
    }
    let (kappa, zeta) = (kappa.as_f64(), zeta.as_f64());
    let half_width = n as f64;
    let radius = 0.25 * (2.0 * half_width);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut smooth = Vec::with_capacity(m);
    let mut smoothness = Vec::with_capacity(m);
    for i in 0..m {
        let lo = if i == 1 { zeta } else { 1.0 };
        let hi = lo * kappa;

        let h = random_orthogonal(n, &mut rng);
        let mut eig = vec![lo; n];
        eig[n - 1] = hi;
        let log_span = kappa.ln();
        for e in eig.iter_mut().take(n - 1).skip(1) {
            let u: f64 = rng.random();
            *e = lo * (u * log_span).exp();
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig));
        let a = &h * d * h.transpose();
        let a = (&a + a.transpose()) * 0.5;

        let mut t: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let tn = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        t.iter_mut().for_each(|v| *v *= radius / tn);
        let at = &a * nalgebra::DVector::from_column_slice(&t);

        let a_t = Matrix::from_row_major(n, n, (0..n * n).map(|k| T::lit(a[(k / n, k % n)])).collect())
            .expect("square matrix");
        smooth.push(SmoothObjective::Quadratic {
            a: a_t,
            b: at.iter().map(|&v| T::lit(-v)).collect(),
            minimizer: Some(t.iter().map(|&v| T::lit(v)).collect()),
        });
        smoothness.push(Smoothness {
            mu: T::lit(lo),
            l: T::lit(hi),
        });
    }

    let g = if with_l1 {
        NonsmoothSpec::WeightedL1 {
            weight: T::one() / T::count(n),
        }
    } else {
        NonsmoothSpec::Zero
    };
    ProblemInstance::new(
        format!("quadratic_family(n={n},m={m},kappa={kappa},zeta={zeta},l1={with_l1},seed={seed})"),
        n,
        smooth,
        g,
        SampleBox::symmetric(n, T::lit(half_width)),
    )?
    .with_smoothness(smoothness)
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn spectrum(a: &Matrix<f64>) -> Vec<f64> {
        let n = a.nrows();
        let dm = DMatrix::from_row_slice(n, n, a.as_slice());
        let mut e: Vec<f64> = SymmetricEigen::new(dm).eigenvalues.iter().copied().collect();
        e.sort_by(|x, y| x.partial_cmp(y).unwrap());
        e
    }

    #[test]
    fn table_parameters_are_exact() {
        let p = gen_quadratic_family(10, 2, 10.0, 100.0, false, 1).unwrap();
        let s = p.smoothness().unwrap();
        assert_eq!((s[0].mu, s[0].l), (1.0, 10.0));
        assert_eq!((s[1].mu, s[1].l), (100.0, 1000.0));
        assert_eq!(p.kappa_tilde(), Some(1000.0));
        assert_eq!(p.kappa(), Some(10.0));
        assert_eq!(p.imbalance(), Some(100.0));

        let q = gen_quadratic_family(10, 2, 10.0, 1.0, false, 1).unwrap();
        assert_eq!(q.kappa_tilde(), Some(10.0));
        assert_eq!(q.imbalance(), Some(1.0));
    }

    #[test]
    fn spectra_lie_in_declared_interval_with_attained_endpoints() {
        for seed in 0..5 {
            let p = gen_quadratic_family(10, 3, 100.0, 10.0, false, seed).unwrap();
            for (f, s) in p.objectives().iter().zip(p.smoothness().unwrap()) {
                let SmoothObjective::Quadratic { a, .. } = f else {
                    panic!("expected quadratic")
                };
                let e = spectrum(a);
                let (lo, hi) = (e[0], e[e.len() - 1]);
                assert!((lo - s.mu).abs() <= 1e-9 * s.mu, "{lo} vs {}", s.mu);
                assert!((hi - s.l).abs() <= 1e-9 * s.l, "{hi} vs {}", s.l);
                assert!(e.iter().all(|&v| v >= s.mu * (1.0 - 1e-9) && v <= s.l * (1.0 + 1e-9)));
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let dump = |seed| {
            let p = gen_quadratic_family::<f64>(6, 2, 10.0, 10.0, true, seed).unwrap();
            p.objectives()
                .iter()
                .map(|f| match f {
                    SmoothObjective::Quadratic { a, b, .. } => (a.clone(), b.clone()),
                    _ => unreachable!(),
                })
                .collect::<Vec<_>>()
        };
        let (a, b) = (dump(9), dump(9));
        for ((a1, b1), (a2, b2)) in a.iter().zip(&b) {
            assert!(a1.as_slice().iter().zip(a2.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(b1.iter().zip(b2).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_ne!(dump(9)[0].1, dump(10)[0].1);
    }

    #[test]
    fn minimizers_are_anchors() {
        let p = gen_quadratic_family::<f64>(5, 2, 10.0, 3.0, false, 4).unwrap();
        for f in p.objectives() {
            let SmoothObjective::Quadratic {
                minimizer: Some(t), ..
            } = f
            else {
                panic!()
            };
            let g = f.gradient(t);
            assert!(crate::linalg::norm(&g) < 1e-10);
            assert!((crate::linalg::norm(t) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditions() {
        assert!(gen_quadratic_family::<f64>(1, 2, 10.0, 1.0, false, 0).is_err());
        assert!(gen_quadratic_family::<f64>(4, 1, 10.0, 1.0, false, 0).is_err());
        assert!(matches!(
            gen_quadratic_family::<f64>(4, 2, 0.5, 1.0, false, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(gen_quadratic_family::<f64>(4, 2, 10.0, 0.9, false, 0).is_err());
    }

    #[test]
    fn l1_weight_is_one_over_n() {
        let p = gen_quadratic_family::<f64>(10, 2, 10.0, 1.0, true, 0).unwrap();
        assert_eq!(p.g(), &NonsmoothSpec::WeightedL1 { weight: 0.1 });
        assert_eq!(p.sample_box().upper, vec![10.0; 10]);
    }
}
