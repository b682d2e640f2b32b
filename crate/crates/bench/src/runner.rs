//! Parallel execution of (problem, algorithm, run) jobs with order-stable results.

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use spgmo::{run, Problem, ProblemSpec};

use crate::config::{BenchConfig, NamedProblem, NamedSolver};

/// Mixes seed components into one stream seed.
pub fn stream_seed(parts: &[u64]) -> u64 {
    // splitmix64 finalizer chained over the parts
    parts.iter().fold(0x9E37_79B9_7F4A_7C15, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Stable fingerprint of a start point, used to audit shared starts.
pub fn point_hash(x: &[f64]) -> u64 {
    let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
    stream_seed(&bits)
}

/// Everything about a single solve that the reports need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub problem: String,
    pub algorithm: String,
    pub run: usize,
    pub converged: bool,
    pub status: String,
    pub iterations: usize,
    pub fevals: usize,
    pub time_ms: f64,
    pub x0_hash: u64,
    pub final_f: Vec<f64>,
}

/// A resolved benchmark: problems and solvers with seeding rules.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub problems: Vec<NamedProblem>,
    pub solvers: Vec<NamedSolver>,
    pub runs: usize,
    pub seed: u64,
    pub shared_starts: bool,
    pub instance_per_run: bool,
}

impl BenchPlan {
    pub fn from_config(cfg: &BenchConfig) -> Result<Self> {
        cfg.validate()?;
        let defaults = cfg.defaults();
        let problems = cfg.problems.iter().map(|p| p.resolve()).collect::<Result<Vec<_>>>()?;
        let solvers = cfg.algorithms.iter().map(|a| a.resolve(&defaults)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            problems,
            solvers,
            runs: cfg.runs,
            seed: cfg.seed,
            shared_starts: cfg.shared_starts,
            instance_per_run: cfg.instance_per_run,
        })
    }

    fn instance_spec(&self, problem: &NamedProblem, run: usize) -> ProblemSpec {
        match (&problem.spec, self.instance_per_run) {
            (ProblemSpec::QuadraticFamily(q), true) => {
                let mut q = *q;
                q.seed = self.seed.wrapping_add(run as u64);
                ProblemSpec::QuadraticFamily(q)
            }
            (spec, _) => spec.clone(),
        }
    }

    /// Builds the instances, one per problem or one per (problem, run).
    fn instances(&self) -> Result<Vec<Vec<Problem>>> {
        self.problems
            .par_iter()
            .map(|np| {
                let count = if self.instance_per_run && np.is_random() { self.runs } else { 1 };
                (0..count)
                    .map(|r| {
                        self.instance_spec(np, r)
                            .build()
                            .map_err(|e| anyhow::anyhow!("{}: {e}", np.name))
                    })
                    .collect()
            })
            .collect()
    }

    fn start(&self, p: &Problem, problem: usize, solver: usize, run: usize) -> Vec<f64> {
        let solver_part = if self.shared_starts { u64::MAX } else { solver as u64 };
        let seed = stream_seed(&[self.seed, problem as u64, run as u64, solver_part]);
        p.sample_box().sample(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Runs every job on the current rayon pool. Output order is problem, then
    /// algorithm, then run, regardless of scheduling.
    pub fn execute(&self) -> Result<Vec<RunOutcome>> {
        let instances = self.instances()?;
        let jobs: Vec<(usize, usize, usize)> = (0..self.problems.len())
            .flat_map(|p| (0..self.solvers.len()).flat_map(move |a| (0..self.runs).map(move |r| (p, a, r))))
            .collect();
        jobs.par_iter()
            .map(|&(pi, ai, r)| {
                let insts = &instances[pi];
                let inst = &insts[r.min(insts.len() - 1)];
                let solver = &self.solvers[ai];
                let x0 = self.start(inst, pi, ai, r);
                let report = run(inst, &solver.config, &x0)
                    .with_context(|| format!("{} on {} (run {r})", solver.label, self.problems[pi].name))?;
                let status = match serde_json::to_value(&report.status)? {
                    serde_json::Value::Object(o) => o.get("status").and_then(|s| s.as_str()).unwrap_or("unknown").to_string(),
                    _ => "unknown".to_string(),
                };
                Ok(RunOutcome {
                    problem: self.problems[pi].name.clone(),
                    algorithm: solver.label.clone(),
                    run: r,
                    converged: report.converged(),
                    status,
                    iterations: report.iterations,
                    fevals: report.fevals,
                    time_ms: report.wall_time_ms,
                    x0_hash: point_hash(&x0),
                    final_f: report.final_f,
                })
            })
            .collect()
    }

    /// Runs on a dedicated pool of `threads` workers, or the global pool when `None`.
    pub fn execute_with_threads(&self, threads: Option<usize>) -> Result<Vec<RunOutcome>> {
        match threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .context("building thread pool")?
                .install(|| self.execute()),
            None => self.execute(),
        }
    }
}

/// Pareto-front sweep: every solver from the same starts at several iteration caps.
#[derive(Debug, Clone)]
pub struct FrontPlan {
    pub problem: NamedProblem,
    pub solvers: Vec<NamedSolver>,
    pub runs: usize,
    pub seed: u64,
    pub kmax: Vec<usize>,
}

/// Objective values reached by one solver from one start within `kmax` iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontPoint {
    pub algorithm: String,
    pub kmax: usize,
    pub run: usize,
    pub f: Vec<f64>,
}

impl FrontPlan {
    /// Rows ordered by algorithm, then kmax, then run.
    pub fn execute(&self) -> Result<Vec<FrontPoint>> {
        let inst: Problem = self.problem.spec.build().map_err(|e| anyhow::anyhow!("{}: {e}", self.problem.name))?;
        let starts: Vec<Vec<f64>> = (0..self.runs)
            .map(|r| {
                let seed = stream_seed(&[self.seed, 0, r as u64, u64::MAX]);
                inst.sample_box().sample(&mut ChaCha8Rng::seed_from_u64(seed))
            })
            .collect();
        let jobs: Vec<(usize, usize, usize)> = (0..self.solvers.len())
            .flat_map(|a| (0..self.kmax.len()).flat_map(move |k| (0..self.runs).map(move |r| (a, k, r))))
            .collect();
        jobs.par_iter()
            .map(|&(ai, ki, r)| {
                let solver = &self.solvers[ai];
                let cfg = solver.config.clone().with_max_iter(self.kmax[ki]);
                let report = run(&inst, &cfg, &starts[r]).with_context(|| format!("{} (run {r})", solver.label))?;
                Ok(FrontPoint {
                    algorithm: solver.label.clone(),
                    kmax: self.kmax[ki],
                    run: r,
                    f: report.final_f,
                })
            })
            .collect()
    }
}

/// `a` is no worse than `b` in every objective and better in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}
