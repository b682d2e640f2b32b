//! Aggregated rows and their CSV, markdown and JSON renderings.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use crate::runner::{FrontPoint, RunOutcome};

/// Marker for a mean over zero converged runs.
pub const NO_SUCCESS: &str = "--";

/// Per (problem, algorithm) averages over converged runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub algorithm: String,
    pub runs: usize,
    pub converged: usize,
    pub mean_iter: Option<f64>,
    pub mean_feval: Option<f64>,
    pub mean_time_ms: Option<f64>,
    pub success_rate: f64,
}

/// Groups outcomes in first-appearance order of (problem, algorithm).
pub fn aggregate(outcomes: &[RunOutcome]) -> Vec<BenchRow> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for o in outcomes {
        let k = (o.problem.as_str(), o.algorithm.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(p, a)| {
            let group: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.problem == p && o.algorithm == a).collect();
            let ok: Vec<&&RunOutcome> = group.iter().filter(|o| o.converged).collect();
            let mean = |f: &dyn Fn(&RunOutcome) -> f64| {
                (!ok.is_empty()).then(|| ok.iter().map(|o| f(o)).sum::<f64>() / ok.len() as f64)
            };
            BenchRow {
                problem: p.to_string(),
                algorithm: a.to_string(),
                runs: group.len(),
                converged: ok.len(),
                mean_iter: mean(&|o| o.iterations as f64),
                mean_feval: mean(&|o| o.fevals as f64),
                mean_time_ms: mean(&|o| o.time_ms),
                success_rate: ok.len() as f64 / group.len() as f64,
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NO_SUCCESS.to_string(), |x| format!("{x:.2}"))
}

/// `problem,algorithm,runs,mean_iter,mean_feval,mean_time_ms,success_rate`.
pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["problem", "algorithm", "runs", "mean_iter", "mean_feval", "mean_time_ms", "success_rate"])?;
    for r in rows {
        out.write_record([
            r.problem.clone(),
            r.algorithm.clone(),
            r.runs.to_string(),
            cell(r.mean_iter),
            cell(r.mean_feval),
            cell(r.mean_time_ms),
            format!("{:.4}", r.success_rate),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One line per problem with `iter` and `time` columns per algorithm.
pub fn to_markdown(rows: &[BenchRow]) -> String {
    let mut problems: Vec<&str> = Vec::new();
    let mut algos: Vec<&str> = Vec::new();
    for r in rows {
        if !problems.contains(&r.problem.as_str()) {
            problems.push(&r.problem);
        }
        if !algos.contains(&r.algorithm.as_str()) {
            algos.push(&r.algorithm);
        }
    }
    let mut s = String::from("| problem |");
    for a in &algos {
        s.push_str(&format!(" {a} iter | {a} time (ms) |"));
    }
    s.push_str("\n|---|");
    s.push_str(&"---:|---:|".repeat(algos.len()));
    s.push('\n');
    for p in &problems {
        s.push_str(&format!("| {p} |"));
        for a in &algos {
            let row = rows.iter().find(|r| r.problem == *p && r.algorithm == *a);
            let (it, tm) = row.map_or((None, None), |r| (r.mean_iter, r.mean_time_ms));
            s.push_str(&format!(" {} | {} |", cell(it), cell(tm)));
        }
        s.push('\n');
    }
    s
}

pub fn to_json(rows: &[BenchRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

/// `algo,kmax,run,F1..Fm`.
pub fn write_front_csv<W: Write>(points: &[FrontPoint], w: W) -> Result<()> {
    let m = points.first().map_or(0, |p| p.f.len());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["algo".to_string(), "kmax".to_string(), "run".to_string()];
    header.extend((1..=m).map(|i| format!("F{i}")));
    out.write_record(&header)?;
    for p in points {
        let mut rec = vec![p.algorithm.clone(), p.kmax.to_string(), p.run.to_string()];
        rec.extend(p.f.iter().map(|v| format!("{v:e}")));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
