//! Scaled and accelerated proximal gradient methods for multiobjective
//! composite optimization.
//!
//! Every objective has the form `F_i = f_i + g` with smooth convex `f_i` and a
//! shared proper closed convex `g`. The crate provides the problem models,
//! the dual direction subproblem, step-size and scaling rules, the solvers
//! (plain, scaled, line-search and accelerated variants) and convergence
//! diagnostics. Everything is generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below fix `f64` unless suffixed with `32`.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod scalar;
pub mod solvers;
pub mod stepsize;
pub mod subproblem;

pub use error::Error;
pub use linalg::Matrix;
pub use problems::{
    example_3_1, example_4_4, gen_quadratic_family, NonsmoothSpec, ProblemInstance, ProblemSpec,
    QuadraticFamily, SampleBox, SmoothObjective, Smoothness, TablePreset,
};
pub use scalar::Scalar;
pub use solvers::{run, Algorithm, IterationRecord, SolveReport, SolveStatus, SolverConfig};
pub use stepsize::{LineSearchParams, ScalingStrategy};
pub use subproblem::{solve_accelerated, solve_direction, DirectionSolution, StepRule, SubproblemSettings};

pub type Problem = ProblemInstance<f64>;
pub type Problem32 = ProblemInstance<f32>;
pub type Config = SolverConfig<f64>;
pub type Config32 = SolverConfig<f32>;
pub type Report = SolveReport<f64>;
pub type Report32 = SolveReport<f32>;
pub type Direction = DirectionSolution<f64>;
