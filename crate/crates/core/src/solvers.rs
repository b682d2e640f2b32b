//! Outer iteration drivers: proximal gradient (plain and scaled), scaled with
//! Armijo line search, and the accelerated variants with convex or strongly
//! convex momentum schedules.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, Matrix};
use crate::problems::ProblemInstance;
use crate::scalar::Scalar;
use crate::stepsize::{
    armijo, backtrack_smoothness, resolve_scaling, LineSearchParams, ScalingState, ScalingStrategy,
};
use crate::subproblem::{solve_accelerated, solve_direction, DirectionSolution, SubproblemSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pgmo,
    Spgmo,
    SpgmoLs,
    Apgmo,
    Aspgmo,
    ApgmoSc,
    AspgmoSc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Self::Pgmo,
        Self::Spgmo,
        Self::SpgmoLs,
        Self::Apgmo,
        Self::Aspgmo,
        Self::ApgmoSc,
        Self::AspgmoSc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pgmo => "pgmo",
            Self::Spgmo => "spgmo",
            Self::SpgmoLs => "spgmo-ls",
            Self::Apgmo => "apgmo",
            Self::Aspgmo => "aspgmo",
            Self::ApgmoSc => "apgmo-sc",
            Self::AspgmoSc => "aspgmo-sc",
        }
    }

    pub fn is_accelerated(self) -> bool {
        matches!(self, Self::Apgmo | Self::Aspgmo | Self::ApgmoSc | Self::AspgmoSc)
    }

    pub fn is_strongly_convex(self) -> bool {
        matches!(self, Self::ApgmoSc | Self::AspgmoSc)
    }

    /// Scaling used when the config does not override it.
    pub fn default_scaling<T: Scalar>(self) -> ScalingStrategy<T> {
        match self {
            Self::Pgmo | Self::Apgmo | Self::ApgmoSc => ScalingStrategy::MaxL,
            Self::Spgmo | Self::Aspgmo | Self::AspgmoSc => ScalingStrategy::KnownL,
            Self::SpgmoLs => ScalingStrategy::bb_default(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SolverConfig<T> {
    pub algorithm: Algorithm,
    /// `None` picks [`Algorithm::default_scaling`].
    #[serde(default)]
    pub scaling: Option<ScalingStrategy<T>>,
    /// Armijo parameters for `spgmo-ls`; defaults apply when absent.
    #[serde(default)]
    pub line_search: Option<LineSearchParams<T>>,
    /// Backtracking factor `tau > 1`. When set, the unit-step methods
    /// estimate `alpha` by backtracking instead of using the strategy value
    /// directly (the strategy only seeds the first iteration).
    #[serde(default)]
    pub backtracking: Option<T>,
    pub tol: T,
    pub max_iter: usize,
    /// Overrides `mu_hat = min_i mu_i / alpha_i` for the strongly convex schedule.
    #[serde(default)]
    pub mu_hat: Option<T>,
    #[serde(default)]
    pub subproblem: SubproblemSettings<T>,
    /// Store iterates in the trace.
    pub record_points: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            scaling: None,
            line_search: None,
            backtracking: None,
            tol: T::lit(1e-4),
            max_iter: 500,
            mu_hat: None,
            subproblem: SubproblemSettings::default(),
            record_points: true,
        }
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_scaling(mut self, scaling: ScalingStrategy<T>) -> Self {
        self.scaling = Some(scaling);
        self
    }

    pub fn scaling(&self) -> ScalingStrategy<T> {
        self.scaling.clone().unwrap_or_else(|| self.algorithm.default_scaling())
    }

    pub fn validate(&self) -> Result<(), Error<T>> {
        if !(self.tol > T::zero()) {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        let scaling = self.scaling();
        scaling.validate()?;
        if let Some(ls) = &self.line_search {
            ls.validate()?;
        }
        if let Some(tau) = self.backtracking {
            if !(tau > T::one()) {
                return Err(Error::config("backtracking factor must exceed 1"));
            }
            if self.algorithm.is_accelerated() || self.algorithm == Algorithm::SpgmoLs {
                return Err(Error::config("backtracking applies to the unit-step methods only"));
            }
        }
        let unit_step = self.algorithm != Algorithm::SpgmoLs && self.backtracking.is_none();
        if unit_step && scaling.uses_history() {
            return Err(Error::config(format!(
                "{} takes unit steps and needs known smoothness scaling, not BB",
                self.algorithm
            )));
        }
        if let Some(mu) = self.mu_hat {
            if !(mu > T::zero() && mu <= T::one()) {
                return Err(Error::config(format!("mu_hat must lie in (0, 1], got {mu}")));
            }
        }
        Ok(())
    }
}

/// One outer iteration (or the final certifying subproblem).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<T>>,
    /// Extrapolated point of accelerated methods.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_next: Option<Vec<T>>,
    /// `F(x^k)`
    pub f: Vec<T>,
    /// `F(x^{k+1})`; equals `f` when no step was taken.
    pub f_next: Vec<T>,
    /// `||d||` for plain methods, `||x^{k+1} - y^k||` for accelerated ones.
    pub residual: T,
    pub t: T,
    pub alpha: Vec<T>,
    pub lambda: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<T>,
    /// `-primal_value` of the subproblem, i.e. the merit at `x^k`.
    pub merit: T,
    pub gap: T,
    pub inner_iters: usize,
    pub fevals: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Failed { kind: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub algorithm: Algorithm,
    pub status: SolveStatus,
    /// Number of updates, equal to `trace.len()`.
    pub iterations: usize,
    pub fevals: usize,
    pub gevals: usize,
    pub wall_time_ms: f64,
    pub final_x: Vec<T>,
    pub final_f: Vec<T>,
    pub trace: Vec<IterationRecord<T>>,
    /// The subproblem that stopped the run. For plain methods this is the
    /// solve at `final_x` and is not an update; for accelerated methods it
    /// repeats the last trace entry.
    pub certificate: Option<IterationRecord<T>>,
    /// `mu_hat` used by the strongly convex schedule.
    pub mu_hat: Option<T>,
    pub notes: Vec<String>,
}

impl<T: Scalar> SolveReport<T> {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// `x^0, x^1, ..., x^K` from a trace recorded with points.
    pub fn iterates(&self) -> Option<Vec<Vec<T>>> {
        let mut pts = Vec::with_capacity(self.trace.len() + 1);
        for r in &self.trace {
            pts.push(r.x.clone()?);
        }
        match self.trace.last() {
            Some(r) => pts.push(r.x_next.clone()?),
            None => pts.push(self.final_x.clone()),
        }
        Some(pts)
    }

    pub fn final_residual(&self) -> Option<T> {
        self.certificate.as_ref().map(|c| c.residual)
    }
}

impl<T: Scalar + Serialize> SolveReport<T> {
    /// One JSON object per trace entry.
    pub fn write_trace_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.trace {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Status and counters without the trace.
    pub fn summary_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "algorithm": self.algorithm,
            "iterations": self.iterations,
            "fevals": self.fevals,
            "gevals": self.gevals,
            "wall_time_ms": self.wall_time_ms,
            "final_x": self.final_x,
            "final_f": self.final_f,
            "final_residual": self.final_residual(),
            "mu_hat": self.mu_hat,
            "notes": self.notes,
        });
        if let (Some(obj), Ok(serde_json::Value::Object(st))) = (v.as_object_mut(), serde_json::to_value(&self.status)) {
            obj.extend(st);
        }
        v
    }
}

/// `gamma_k = (theta_k - mu_hat)(1 - theta_{k-1}) / ((1 - mu_hat) theta_{k-1})`.
pub fn momentum_gamma<T: Scalar>(theta: T, theta_prev: T, mu_hat: T) -> T {
    if mu_hat >= T::one() {
        return T::zero();
    }
    (theta - mu_hat) * (T::one() - theta_prev) / ((T::one() - mu_hat) * theta_prev)
}

/// Momentum schedule of the accelerated methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Schedule<T> {
    /// `theta_k = 2 / (k + 2)`, `theta_{-1} = 2`.
    Convex,
    /// `theta_k = sqrt(mu_hat)`.
    StronglyConvex { mu_hat: T },
}

impl<T: Scalar> Schedule<T> {
    pub fn theta(&self, k: usize) -> T {
        match self {
            Self::Convex => T::lit(2.0) / T::count(k + 2),
            Self::StronglyConvex { mu_hat } => mu_hat.sqrt(),
        }
    }

    /// `theta_{k-1}`, defined at `k = 0` as well.
    pub fn theta_prev(&self, k: usize) -> T {
        match self {
            Self::Convex => T::lit(2.0) / T::count(k + 1),
            Self::StronglyConvex { mu_hat } => mu_hat.sqrt(),
        }
    }

    pub fn mu_hat(&self) -> T {
        match self {
            Self::Convex => T::zero(),
            Self::StronglyConvex { mu_hat } => *mu_hat,
        }
    }

    pub fn gamma(&self, k: usize) -> T {
        momentum_gamma(self.theta(k), self.theta_prev(k), self.mu_hat())
    }
}

/// Iterate pair carried by the accelerated loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelState<T> {
    pub k: usize,
    pub x: Vec<T>,
    pub x_prev: Vec<T>,
    /// `F(x^k)`
    pub f_x: Vec<T>,
}

impl<T: Scalar> AccelState<T> {
    /// `x^{-1} = x^0`.
    pub fn start(x0: Vec<T>, f0: Vec<T>) -> Self {
        Self {
            k: 0,
            x_prev: x0.clone(),
            x: x0,
            f_x: f0,
        }
    }
}

/// What one accelerated step computed.
#[derive(Debug, Clone)]
pub struct AccelStep<T> {
    pub state: AccelState<T>,
    pub y: Vec<T>,
    pub gamma: T,
    pub theta: T,
    pub residual: T,
    pub solution: DirectionSolution<T>,
    pub fevals: usize,
    pub gevals: usize,
}

/// One iteration of the accelerated method with scaling `alpha`.
pub fn accelerated_step<T: Scalar>(
    state: &AccelState<T>,
    p: &ProblemInstance<T>,
    alpha: &[T],
    schedule: &Schedule<T>,
    settings: &SubproblemSettings<T>,
) -> Result<AccelStep<T>, Error<T>> {
    let k = state.k;
    let theta = schedule.theta(k);
    let gamma = schedule.gamma(k);
    let mom = linalg::sub(&state.x, &state.x_prev);
    let y = linalg::add_scaled(&state.x, gamma, &mom);
    let f_y = p.eval_smooth(&y)?;
    let jac = p.jacobian(&y)?;
    let offsets = linalg::sub(&f_y, &state.f_x);
    let solution = solve_accelerated(&y, &jac, &offsets, p.g(), alpha, settings)?;
    let x_next = solution.x_next.clone();
    let f_next = p.evaluate(&x_next)?;
    let residual = linalg::dist(&x_next, &y);
    Ok(AccelStep {
        state: AccelState {
            k: k + 1,
            x_prev: state.x.clone(),
            x: x_next,
            f_x: f_next,
        },
        y,
        gamma,
        theta,
        residual,
        solution,
        fevals: 2,
        gevals: 1,
    })
}

struct Counters {
    fevals: usize,
    gevals: usize,
}

/// Runs `cfg.algorithm` from `x0`.
///
/// Invalid configurations and starting points are returned as `Err`.
/// Failures during the iteration end the run with [`SolveStatus::Failed`]
/// and the partial trace.
pub fn run<T: Scalar>(
    p: &ProblemInstance<T>,
    cfg: &SolverConfig<T>,
    x0: &[T],
) -> Result<SolveReport<T>, Error<T>> {
    cfg.validate()?;
    if x0.len() != p.n() || !linalg::is_finite(x0) {
        return Err(Error::invalid(format!("x0 must be a finite vector of length {}", p.n())));
    }
    if !p.g().contains(x0) {
        return Err(Error::invalid("x0 violates the constraint set of g"));
    }
    let start = Instant::now();
    let f0 = p.evaluate(x0)?;
    let mut counters = Counters { fevals: 1, gevals: 0 };
    let mut report = SolveReport {
        algorithm: cfg.algorithm,
        status: SolveStatus::MaxIterations,
        iterations: 0,
        fevals: 0,
        gevals: 0,
        wall_time_ms: 0.0,
        final_x: x0.to_vec(),
        final_f: f0.clone(),
        trace: Vec::new(),
        certificate: None,
        mu_hat: None,
        notes: Vec::new(),
    };
    let outcome = if cfg.algorithm.is_accelerated() {
        run_accelerated(p, cfg, x0, f0, &mut counters, &mut report)
    } else {
        run_plain(p, cfg, x0, f0, &mut counters, &mut report)
    };
    match outcome {
        Ok(()) => {}
        Err(e @ (Error::Configuration(_) | Error::InvalidInput(_))) if report.trace.is_empty() => return Err(e),
        Err(e) => {
            report.status = SolveStatus::Failed {
                kind: e.kind().to_string(),
                message: e.to_string(),
            };
        }
    }
    report.iterations = report.trace.len();
    report.fevals = counters.fevals;
    report.gevals = counters.gevals;
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

fn run_plain<T: Scalar>(
    p: &ProblemInstance<T>,
    cfg: &SolverConfig<T>,
    x0: &[T],
    f0: Vec<T>,
    counters: &mut Counters,
    report: &mut SolveReport<T>,
) -> Result<(), Error<T>> {
    let scaling = cfg.scaling();
    let ls = cfg.line_search.unwrap_or_default();
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut prev: Option<(Vec<T>, Matrix<T>)> = None;
    let mut prev_alpha: Option<Vec<T>> = None;
    for k in 0..=cfg.max_iter {
        let jac = p.jacobian(&x)?;
        counters.gevals += 1;
        let (sol, alpha) = match (cfg.backtracking, &prev_alpha) {
            (Some(tau), Some(a0)) => backtracked(p, &x, &jac, a0, tau, cfg, counters)?,
            _ => {
                let state = ScalingState {
                    x: &x,
                    jac: &jac,
                    prev: prev.as_ref().map(|(xp, jp)| (xp.as_slice(), jp)),
                    prev_alpha: prev_alpha.as_deref(),
                };
                let alpha = resolve_scaling(&scaling, p, k, &state)?;
                match cfg.backtracking {
                    Some(tau) => backtracked(p, &x, &jac, &alpha, tau, cfg, counters)?,
                    None => (solve_direction(&x, &jac, p.g(), &alpha, T::one(), &cfg.subproblem)?, alpha),
                }
            }
        };
        let residual = sol.norm_d();
        let mut rec = IterationRecord {
            k,
            x: cfg.record_points.then(|| x.clone()),
            y: None,
            x_next: None,
            f: fx.clone(),
            f_next: fx.clone(),
            residual,
            t: T::zero(),
            alpha: alpha.clone(),
            lambda: sol.lambda.clone(),
            gamma: None,
            theta: None,
            merit: -sol.primal_value,
            gap: sol.gap,
            inner_iters: sol.inner_iters,
            fevals: counters.fevals,
        };
        if residual <= cfg.tol || k == cfg.max_iter {
            report.status = if residual <= cfg.tol {
                SolveStatus::Converged
            } else {
                SolveStatus::MaxIterations
            };
            report.certificate = Some(rec);
            break;
        }

        let (t, x_next, f_next) = if cfg.algorithm == Algorithm::SpgmoLs {
            let step = armijo(p, &x, &fx, &sol.d, &sol.decrease(&alpha), &ls)?;
            counters.fevals += step.trials;
            (step.t, step.x_next, step.f_next)
        } else {
            let f_next = p.evaluate(&sol.x_next)?;
            counters.fevals += 1;
            (T::one(), sol.x_next.clone(), f_next)
        };
        rec.t = t;
        rec.x_next = cfg.record_points.then(|| x_next.clone());
        rec.f_next = f_next.clone();
        rec.fevals = counters.fevals;
        report.trace.push(rec);

        prev = Some((std::mem::replace(&mut x, x_next), jac));
        prev_alpha = Some(alpha);
        fx = f_next;
        report.final_x = x.clone();
        report.final_f = fx.clone();
    }
    Ok(())
}

fn backtracked<T: Scalar>(
    p: &ProblemInstance<T>,
    x: &[T],
    jac: &Matrix<T>,
    alpha0: &[T],
    tau: T,
    cfg: &SolverConfig<T>,
    counters: &mut Counters,
) -> Result<(DirectionSolution<T>, Vec<T>), Error<T>> {
    let b = backtrack_smoothness(p, x, jac, alpha0, tau, &cfg.subproblem)?;
    counters.fevals += b.fevals;
    Ok((b.solution, b.alpha))
}

fn run_accelerated<T: Scalar>(
    p: &ProblemInstance<T>,
    cfg: &SolverConfig<T>,
    x0: &[T],
    f0: Vec<T>,
    counters: &mut Counters,
    report: &mut SolveReport<T>,
) -> Result<(), Error<T>> {
    let jac0 = p.jacobian(x0)?;
    let state0 = ScalingState {
        x: x0,
        jac: &jac0,
        prev: None,
        prev_alpha: None,
    };
    let alpha = resolve_scaling(&cfg.scaling(), p, 0, &state0)?;
    let schedule = if cfg.algorithm.is_strongly_convex() {
        let mu_hat = match cfg.mu_hat {
            Some(m) => {
                report.notes.push(format!("mu_hat overridden to {m:e}"));
                m
            }
            None => {
                let mu = p.convexity().ok_or_else(|| {
                    Error::config("strongly convex schedule needs recorded convexity moduli or a mu_hat override")
                })?;
                mu.iter()
                    .zip(&alpha)
                    .map(|(&m, &a)| m / a)
                    .fold(T::infinity(), T::min)
            }
        };
        if !(mu_hat > T::zero() && mu_hat <= T::one()) {
            return Err(Error::config(format!("mu_hat = {mu_hat:e} is outside (0, 1]")));
        }
        report.mu_hat = Some(mu_hat);
        Schedule::StronglyConvex { mu_hat }
    } else {
        Schedule::Convex
    };

    let mut state = AccelState::start(x0.to_vec(), f0);
    for k in 0..cfg.max_iter {
        let step = accelerated_step(&state, p, &alpha, &schedule, &cfg.subproblem)?;
        counters.fevals += step.fevals;
        counters.gevals += step.gevals;
        let rec = IterationRecord {
            k,
            x: cfg.record_points.then(|| state.x.clone()),
            y: cfg.record_points.then(|| step.y.clone()),
            x_next: cfg.record_points.then(|| step.state.x.clone()),
            f: state.f_x.clone(),
            f_next: step.state.f_x.clone(),
            residual: step.residual,
            t: T::one(),
            alpha: alpha.clone(),
            lambda: step.solution.lambda.clone(),
            gamma: Some(step.gamma),
            theta: Some(step.theta),
            merit: -step.solution.primal_value,
            gap: step.solution.gap,
            inner_iters: step.solution.inner_iters,
            fevals: counters.fevals,
        };
        let done = step.residual <= cfg.tol;
        report.final_x = step.state.x.clone();
        report.final_f = step.state.f_x.clone();
        if done {
            report.certificate = Some(rec.clone());
        }
        report.trace.push(rec);
        state = step.state;
        if done {
            report.status = SolveStatus::Converged;
            return Ok(());
        }
    }
    report.status = SolveStatus::MaxIterations;
    report.certificate = report.trace.last().cloned();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example_3_1, example_4_4, gen_quadratic_family, NonsmoothSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("ASPGMO_SC".parse::<Algorithm>().unwrap(), Algorithm::AspgmoSc);
        assert!("fista".parse::<Algorithm>().is_err());
        let s = serde_json::to_string(&Algorithm::SpgmoLs).unwrap();
        assert_eq!(s, "\"spgmo-ls\"");
    }

    #[test]
    fn momentum_closed_forms() {
        assert_abs_diff_eq!(momentum_gamma(0.5, 0.5, 0.25), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(momentum_gamma(2.0 / 3.0, 1.0, 0.0), 0.0, epsilon = 1e-15);
        assert_eq!(momentum_gamma(1.0, 1.0, 1.0), 0.0);
        let c = Schedule::<f64>::Convex;
        for k in 0..50 {
            let expect = (k as f64 - 1.0) / (k as f64 + 2.0);
            assert_abs_diff_eq!(c.gamma(k), expect, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(c.gamma(3), 0.4, epsilon = 1e-15);
        let sc = Schedule::StronglyConvex { mu_hat: 0.09 };
        assert_abs_diff_eq!(sc.gamma(7), 0.7 / 1.3, epsilon = 1e-15);
    }

    #[test]
    fn first_extrapolation_is_the_start() {
        let p = example_3_1(10.0f64).unwrap();
        let x0 = vec![1.0, -2.0];
        let st = AccelState::start(x0.clone(), p.evaluate(&x0).unwrap());
        let step = accelerated_step(&st, &p, &[1.0, 10.0], &Schedule::Convex, &SubproblemSettings::default()).unwrap();
        assert_eq!(step.y, x0);
        assert_eq!(step.gamma, -0.5);
    }

    #[test]
    fn pgmo_geometric_decay() {
        let p = example_3_1(1e3f64).unwrap();
        let cfg = SolverConfig::new(Algorithm::Pgmo).with_max_iter(50);
        let r = run(&p, &cfg, &[5.0, 5.0]).unwrap();
        assert_eq!(r.status, SolveStatus::MaxIterations);
        assert_eq!(r.iterations, 50);
        for rec in &r.trace {
            let (x, xn) = (rec.x.as_ref().unwrap(), rec.x_next.as_ref().unwrap());
            for (a, b) in x.iter().zip(xn) {
                assert!((b / a - (1.0 - 1e-3)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn spgmo_one_step_exact() {
        let p = example_3_1(1e3f64).unwrap();
        let r = run(&p, &SolverConfig::new(Algorithm::Spgmo), &[5.0, 5.0]).unwrap();
        assert!(r.converged());
        assert!(r.iterations <= 2);
        assert!(linalg::norm(&r.final_x) <= 1e-12);
    }

    #[test]
    fn critical_start_returns_immediately() {
        let p = example_3_1(3.0f64).unwrap();
        for a in [Algorithm::Pgmo, Algorithm::Spgmo, Algorithm::SpgmoLs] {
            let r = run(&p, &SolverConfig::new(a), &[0.0, 0.0]).unwrap();
            assert!(r.converged());
            assert_eq!(r.iterations, 0);
            assert_eq!(r.final_x, vec![0.0, 0.0]);
            assert_eq!(r.certificate.unwrap().residual, 0.0);
        }
    }

    #[test]
    fn config_and_start_validation() {
        let p = example_4_4(0.5f64).unwrap();
        assert!(matches!(
            run(&p, &SolverConfig::new(Algorithm::Spgmo), &[-1.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(run(&p, &SolverConfig::new(Algorithm::Spgmo), &[1.0]).is_err());
        let bad = SolverConfig::new(Algorithm::Spgmo).with_tol(0.0);
        assert!(matches!(run(&p, &bad, &[1.0, 0.0]), Err(Error::Configuration(_))));
        let bb = SolverConfig::new(Algorithm::Pgmo).with_scaling(ScalingStrategy::bb_default());
        assert!(matches!(run(&p, &bb, &[1.0, 0.0]), Err(Error::Configuration(_))));
        // linear objective has mu = 0 so mu_hat = 0
        assert!(matches!(
            run(&p, &SolverConfig::new(Algorithm::AspgmoSc), &[1.0, 0.0]),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn counters_and_trace_consistency() {
        let p = gen_quadratic_family::<f64>(5, 2, 10.0, 10.0, true, 3).unwrap();
        let x0 = vec![1.0, -2.0, 3.0, 0.5, -0.5];
        for a in Algorithm::ALL {
            let r = run(&p, &SolverConfig::new(a), &x0).unwrap();
            assert!(r.converged(), "{a}: {:?}", r.status);
            assert_eq!(r.iterations, r.trace.len());
            assert!(r.final_residual().unwrap() <= 1e-4);
            let mut last = 0;
            for (k, rec) in r.trace.iter().enumerate() {
                assert_eq!(rec.k, k);
                assert!(rec.fevals > last);
                last = rec.fevals;
                assert!((rec.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(rec.residual >= 0.0);
                assert_eq!(rec.gamma.is_some(), a.is_accelerated());
            }
            assert_eq!(r.fevals, if a.is_accelerated() { 1 + 2 * r.iterations } else { r.trace.last().map_or(1, |l| l.fevals) });
            let pts = r.iterates().unwrap();
            assert_eq!(pts.len(), r.iterations + 1);
            assert_eq!(pts.last().unwrap(), &r.final_x);
        }
    }

    #[test]
    fn non_accelerated_runs_descend_monotonically() {
        for seed in 0..5 {
            let p = gen_quadratic_family::<f64>(6, 3, 30.0, 5.0, true, seed).unwrap();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let x0 = p.sample_box().sample(&mut rng);
            for a in [Algorithm::Pgmo, Algorithm::Spgmo, Algorithm::SpgmoLs] {
                let r = run(&p, &SolverConfig::new(a), &x0).unwrap();
                for rec in &r.trace {
                    for (fn_, f) in rec.f_next.iter().zip(&rec.f) {
                        assert!(fn_ - f <= 1e-9 * f.abs().max(1.0), "{a}: {fn_} > {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn backtracking_recovers_smoothness_bound() {
        let p = gen_quadratic_family::<f64>(5, 2, 10.0, 10.0, false, 1).unwrap();
        let mut cfg = SolverConfig::new(Algorithm::Spgmo).with_scaling(ScalingStrategy::Constant { ell: 0.01 });
        cfg.backtracking = Some(2.0);
        let r = run(&p, &cfg, &[4.0, -3.0, 2.0, 1.0, 0.0]).unwrap();
        assert!(r.converged());
        let l = p.lipschitz().unwrap();
        for rec in &r.trace {
            for (a, li) in rec.alpha.iter().zip(&l) {
                assert!(*a < 2.0 * li + 1e-9);
            }
        }
    }

    #[test]
    fn indicator_constraint_respected() {
        let p = example_4_4(1e-2f64).unwrap();
        for a in [Algorithm::Pgmo, Algorithm::SpgmoLs, Algorithm::Apgmo] {
            let cfg = SolverConfig::new(a).with_scaling(ScalingStrategy::PerClass {
                linear_alpha: 1e-3,
                base: Box::new(ScalingStrategy::MaxL),
            });
            let r = run(&p, &cfg, &[0.8, 0.0]).unwrap();
            for pt in r.iterates().unwrap() {
                assert!(NonsmoothSpec::contains(p.g(), &pt));
            }
        }
    }

    #[test]
    fn trace_serializes_as_json_lines() {
        let p = example_3_1(5.0f64).unwrap();
        let r = run(&p, &SolverConfig::new(Algorithm::Aspgmo).with_max_iter(5), &[1.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        r.write_trace_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.trace.len());
        let first: IterationRecord<f64> = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, r.trace[0]);
        let s = r.summary_json();
        assert_eq!(s["algorithm"], "aspgmo");
        assert!(s["status"].is_string());
    }

    #[test]
    fn runs_in_single_precision() {
        let p = example_3_1(100.0f32).unwrap();
        let r = run(&p, &SolverConfig::new(Algorithm::Spgmo), &[2.0f32, -1.0]).unwrap();
        assert!(r.converged());
        assert!(linalg::norm(&r.final_x) < 1e-5);
    }
}
