//! Benchmark configuration files and problem/algorithm name resolution.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use spgmo::stepsize::{LineSearchParams, ScalingStrategy};
use spgmo::{Algorithm, ProblemSpec, QuadraticFamily, SolverConfig, TablePreset};

/// A problem given by short name (`"qpb"`, `"example31"`) or by full description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemEntry {
    Name(String),
    Spec {
        #[serde(default)]
        name: Option<String>,
        #[serde(flatten)]
        spec: ProblemSpec,
    },
}

impl ProblemEntry {
    pub fn resolve(&self) -> Result<NamedProblem> {
        match self {
            Self::Name(n) => named_problem(n, &ProblemParams::default()),
            Self::Spec { name, spec } => Ok(NamedProblem {
                name: name.clone().unwrap_or_else(|| spec.label()),
                spec: spec.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedProblem {
    pub name: String,
    pub spec: ProblemSpec,
}

impl NamedProblem {
    pub fn is_random(&self) -> bool {
        matches!(self.spec, ProblemSpec::QuadraticFamily(_))
    }
}

/// Parameters for the short problem names.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub l: f64,
    pub c: f64,
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub zeta: f64,
    pub l1: bool,
    pub seed: u64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            l: 1e3,
            c: 1e-2,
            n: 10,
            m: 2,
            kappa: 10.0,
            zeta: 1e2,
            l1: true,
            seed: 0,
        }
    }
}

/// Resolves `example31`, `example44`, `quadratic`, `qpa`..`qpf`, or a path to a JSON description.
pub fn named_problem(name: &str, params: &ProblemParams) -> Result<NamedProblem> {
    let key = name.to_ascii_lowercase().replace(['_', '-', '.'], "");
    let spec = match key.as_str() {
        "example31" => ProblemSpec::Example31 { l: params.l },
        "example44" => ProblemSpec::Example44 { c: params.c },
        "quadratic" => ProblemSpec::QuadraticFamily(QuadraticFamily {
            n: params.n,
            m: params.m,
            kappa: params.kappa,
            zeta: params.zeta,
            with_l1: params.l1,
            seed: params.seed,
        }),
        _ => {
            if let Ok(preset) = name.parse::<TablePreset>() {
                return Ok(NamedProblem {
                    name: preset.name().to_string(),
                    spec: ProblemSpec::QuadraticFamily(preset.family(params.seed)),
                });
            }
            let path = Path::new(name);
            if !path.exists() {
                bail!("unknown problem {name:?}: expected example31, example44, quadratic, qpa..qpf or a JSON file");
            }
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let entry: ProblemEntry =
                serde_json::from_str(&text).with_context(|| format!("parsing problem file {}", path.display()))?;
            return entry.resolve();
        }
    };
    Ok(NamedProblem {
        name: key,
        spec,
    })
}

/// An algorithm by name, optionally with per-algorithm overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    Name(String),
    Full(AlgorithmOverrides),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmOverrides {
    pub algorithm: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub scaling: Option<ScalingStrategy<f64>>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub backtracking: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub mu_hat: Option<f64>,
}

/// Settings shared by every algorithm unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub tol: f64,
    pub max_iter: usize,
    pub sigma: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 500,
            sigma: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NamedSolver {
    pub label: String,
    pub config: SolverConfig<f64>,
}

impl AlgorithmEntry {
    pub fn resolve(&self, defaults: &Defaults) -> Result<NamedSolver> {
        let o = match self {
            Self::Name(n) => AlgorithmOverrides {
                algorithm: n.clone(),
                label: None,
                scaling: None,
                sigma: None,
                backtracking: None,
                tol: None,
                max_iter: None,
                mu_hat: None,
            },
            Self::Full(o) => o.clone(),
        };
        let algorithm: Algorithm = o.algorithm.parse().map_err(anyhow::Error::msg)?;
        let mut config = SolverConfig::new(algorithm)
            .with_tol(o.tol.unwrap_or(defaults.tol))
            .with_max_iter(o.max_iter.unwrap_or(defaults.max_iter));
        config.scaling = o.scaling;
        config.backtracking = o.backtracking;
        config.mu_hat = o.mu_hat;
        config.line_search = Some(LineSearchParams {
            sigma: o.sigma.unwrap_or(defaults.sigma),
            ..LineSearchParams::default()
        });
        config.record_points = false;
        config.validate().map_err(|e| anyhow::anyhow!("{}: {e}", o.algorithm))?;
        Ok(NamedSolver {
            label: o.label.unwrap_or_else(|| algorithm.name().to_string()),
            config,
        })
    }
}

fn default_true() -> bool {
    true
}

fn default_runs() -> usize {
    200
}

/// Contents of a `bench` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub problems: Vec<ProblemEntry>,
    pub algorithms: Vec<AlgorithmEntry>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Every algorithm sees the same start for a given run index.
    #[serde(default = "default_true")]
    pub shared_starts: bool,
    /// Regenerate random problem families for every run (instance seed = `seed + run`).
    #[serde(default)]
    pub instance_per_run: bool,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl BenchConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.problems.is_empty() || self.algorithms.is_empty() {
            bail!("need at least one problem and one algorithm");
        }
        Ok(())
    }

    pub fn defaults(&self) -> Defaults {
        let d = Defaults::default();
        Defaults {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            sigma: self.sigma.unwrap_or(d.sigma),
        }
    }
}
