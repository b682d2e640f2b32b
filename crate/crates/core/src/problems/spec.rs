//! JSON problem descriptions and dense dumps for reproducibility audits.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    example_3_1, example_4_4, NonsmoothSpec, ProblemInstance, QuadraticFamily, SampleBox,
    SmoothObjective, Smoothness,
};
use crate::error::Error;
use crate::scalar::Scalar;

/// A buildable problem description, e.g.
/// `{"kind": "quadratic_family", "n": 10, "m": 2, "kappa": 10, "zeta": 100, "with_l1": true, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    QuadraticFamily(QuadraticFamily),
    #[serde(rename = "example_3_1")]
    Example31 {
        #[serde(rename = "L", alias = "l")]
        l: f64,
    },
    #[serde(rename = "example_4_4")]
    Example44 { c: f64 },
}

impl ProblemSpec {
    pub fn build<T: Scalar>(&self) -> Result<ProblemInstance<T>, Error<T>> {
        match self {
            Self::QuadraticFamily(q) => q.build(),
            Self::Example31 { l } => example_3_1(T::lit(*l)),
            Self::Example44 { c } => example_4_4(T::lit(*c)),
        }
    }

    /// Same description with the generator seed replaced; non-random problems are unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            Self::QuadraticFamily(q) => Self::QuadraticFamily(QuadraticFamily { seed, ..*q }),
            other => other.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::QuadraticFamily(q) => format!("QP(n={},kappa={},zeta={})", q.n, q.kappa, q.zeta),
            Self::Example31 { l } => format!("example_3_1(L={l})"),
            Self::Example44 { c } => format!("example_4_4(c={c})"),
        }
    }
}

/// The six quadratic test families QPa–QPf (two objectives, `g = ||x||_1 / n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TablePreset {
    Qpa,
    Qpb,
    Qpc,
    Qpd,
    Qpe,
    Qpf,
}

impl TablePreset {
    pub const ALL: [TablePreset; 6] = [Self::Qpa, Self::Qpb, Self::Qpc, Self::Qpd, Self::Qpe, Self::Qpf];

    /// `(n, kappa, zeta)`
    pub fn parameters(self) -> (usize, f64, f64) {
        match self {
            Self::Qpa => (10, 10.0, 1.0),
            Self::Qpb => (10, 10.0, 1e2),
            Self::Qpc => (10, 1e2, 1e2),
            Self::Qpd => (10, 1e4, 1e2),
            Self::Qpe => (100, 1e2, 1e2),
            Self::Qpf => (100, 1e3, 1e2),
        }
    }

    pub fn family(self, seed: u64) -> QuadraticFamily {
        let (n, kappa, zeta) = self.parameters();
        QuadraticFamily {
            n,
            m: 2,
            kappa,
            zeta,
            with_l1: true,
            seed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Qpa => "QPa",
            Self::Qpb => "QPb",
            Self::Qpc => "QPc",
            Self::Qpd => "QPd",
            Self::Qpe => "QPe",
            Self::Qpf => "QPf",
        }
    }
}

impl FromStr for TablePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

/// One objective in a [`ProblemDump`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveDump<T> {
    /// `a` is dense row-major.
    Quadratic { a: Vec<T>, b: Vec<T> },
    Linear { c: Vec<T> },
    Generic,
}

/// Serializable snapshot of an instance's data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDump<T> {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub g: NonsmoothSpec<T>,
    pub smoothness: Option<Vec<Smoothness<T>>>,
    pub sample_box: SampleBox<T>,
    pub objectives: Vec<ObjectiveDump<T>>,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn dump(&self) -> ProblemDump<T> {
        ProblemDump {
            name: self.name().to_string(),
            n: self.n(),
            m: self.m(),
            g: self.g().clone(),
            smoothness: self.smoothness().map(<[_]>::to_vec),
            sample_box: self.sample_box().clone(),
            objectives: self
                .objectives()
                .iter()
                .map(|f| match f {
                    SmoothObjective::Quadratic { a, b, .. } => ObjectiveDump::Quadratic {
                        a: a.as_slice().to_vec(),
                        b: b.clone(),
                    },
                    SmoothObjective::Linear { c } => ObjectiveDump::Linear { c: c.clone() },
                    SmoothObjective::Generic(_) => ObjectiveDump::Generic,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_kind() {
        let q: ProblemSpec = serde_json::from_str(
            r#"{"kind":"quadratic_family","n":10,"m":2,"kappa":10,"zeta":100,"with_l1":true,"seed":3}"#,
        )
        .unwrap();
        let p = q.build::<f64>().unwrap();
        assert_eq!((p.n(), p.m()), (10, 2));
        assert_eq!(p.imbalance(), Some(100.0));

        let e: ProblemSpec = serde_json::from_str(r#"{"kind":"example_3_1","L":1000}"#).unwrap();
        assert_eq!(e, ProblemSpec::Example31 { l: 1000.0 });
        let e: ProblemSpec = serde_json::from_str(r#"{"kind":"example_4_4","c":0.01}"#).unwrap();
        assert_eq!(e.build::<f64>().unwrap().linear_mask(), vec![false, true]);

        assert!(serde_json::from_str::<ProblemSpec>(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn dump_is_row_major_and_round_trips() {
        let p = ProblemSpec::Example31 { l: 4.0 }.build::<f64>().unwrap();
        let d = p.dump();
        assert_eq!(
            d.objectives[1],
            ObjectiveDump::Quadratic {
                a: vec![4.0, 0.0, 0.0, 4.0],
                b: vec![0.0, 0.0]
            }
        );
        let s = serde_json::to_string(&d).unwrap();
        let back: ProblemDump<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn presets() {
        assert_eq!("qpb".parse::<TablePreset>().unwrap(), TablePreset::Qpb);
        assert_eq!(TablePreset::Qpf.parameters(), (100, 1e3, 1e2));
        let fam = TablePreset::Qpc.family(1);
        let p = fam.build::<f64>().unwrap();
        assert_eq!(p.kappa(), Some(100.0));
        assert_eq!(p.imbalance(), Some(100.0));
        assert_eq!(p.sample_box().lower[0], -10.0);
    }
}
