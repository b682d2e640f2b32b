//! Benchmark harness for the spgmo solvers: configuration files, a parallel
//! runner with deterministic seeding, and tabular reports.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{
    named_problem, AlgorithmEntry, AlgorithmOverrides, BenchConfig, Defaults, NamedProblem, NamedSolver,
    ProblemEntry, ProblemParams,
};
pub use report::{aggregate, to_json, to_markdown, write_csv, write_front_csv, BenchRow, NO_SUCCESS};
pub use runner::{dominates, point_hash, stream_seed, BenchPlan, FrontPlan, FrontPoint, RunOutcome};
