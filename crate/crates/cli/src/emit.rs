//! CSV records and JSON summaries.

use std::collections::BTreeMap;
use std::io::Write;

use d3c_core::RunRecord;
use serde::Serialize;

use crate::experiments::{mean, median, std_dev, ExperimentOutput};

pub const CSV_HEADER: [&str; 9] =
    ["run", "step", "agent", "loss_or_return", "rho", "rho_max", "ratio_to_optimal", "attention", "mixing_row"];

/// Budget-balance gate applied to every run.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (run, step, agent). Floats use the shortest representation
/// that parses back to the same value; mixing rows are `;`-separated.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rec in records {
        for r in &rec.rows {
            let mix: Vec<String> = r.mixing_row.iter().map(f64::to_string).collect();
            w.write_record([
                r.run.to_string(),
                r.step.to_string(),
                r.agent.to_string(),
                r.loss_or_return.to_string(),
                r.rho.to_string(),
                opt(r.rho_max),
                opt(r.ratio_to_optimal),
                r.attention.to_string(),
                mix.join(";"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Stats {
    pub fn of(v: &[f64]) -> Option<Self> {
        (!v.is_empty()).then(|| Stats { mean: mean(v), median: median(v), std: std_dev(v) })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub metrics: BTreeMap<&'static str, Stats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: BTreeMap<&'static str, String>,
    pub git_describe: String,
    pub runs: usize,
    pub max_budget_violation: f64,
    pub gates_passed: bool,
    /// Statistics across runs at the last logged step.
    pub final_metrics: BTreeMap<&'static str, Stats>,
    pub per_step: Vec<StepStats>,
    pub extras: BTreeMap<String, f64>,
    pub labels: Vec<String>,
}

/// Per-run values of each metric at one step: total loss or return, the
/// ratio to optimal, the bound on the local price of anarchy, and mean
/// attention.
fn metrics_at(records: &[RunRecord], step: usize) -> BTreeMap<&'static str, Stats> {
    let mut total = Vec::new();
    let mut ratio = Vec::new();
    let mut rho_max = Vec::new();
    let mut rho = Vec::new();
    let mut attention = Vec::new();
    for rec in records {
        let rows: Vec<_> = rec.rows_at(step).collect();
        if rows.is_empty() {
            continue;
        }
        total.push(rows.iter().map(|r| r.loss_or_return).sum());
        rho.push(rows.iter().map(|r| r.rho).sum::<f64>() / rows.len() as f64);
        attention.push(rows.iter().map(|r| r.attention).sum::<f64>() / rows.len() as f64);
        if let Some(v) = rows[0].ratio_to_optimal {
            ratio.push(v);
        }
        if let Some(v) = rows[0].rho_max {
            rho_max.push(v);
        }
    }
    let mut out = BTreeMap::new();
    for (name, v) in
        [("total", total), ("ratio_to_optimal", ratio), ("rho_max", rho_max), ("rho", rho), ("attention", attention)]
    {
        if let Some(s) = Stats::of(&v) {
            out.insert(name, s);
        }
    }
    out
}

/// `git describe` of the working tree, or `unknown` outside a repository.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

pub fn summarize(output: &ExperimentOutput, git: String) -> Summary {
    let records = &output.records;
    let steps = records.first().map(RunRecord::steps).unwrap_or_default();
    let per_step: Vec<StepStats> =
        steps.iter().map(|&step| StepStats { step, metrics: metrics_at(records, step) }).collect();
    let final_metrics = per_step.last().map(|s| s.metrics.clone()).unwrap_or_default();
    let max_budget_violation = output.max_budget_violation();
    Summary {
        config: output.config.pairs().into_iter().collect(),
        git_describe: git,
        runs: records.len(),
        max_budget_violation,
        gates_passed: max_budget_violation <= BUDGET_TOLERANCE,
        final_metrics,
        per_step,
        extras: output.extras.clone(),
        labels: records.iter().filter_map(|r| r.label.clone()).collect(),
    }
}

pub fn write_summary<W: Write>(summary: &Summary, out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, summary)
}
