//! Row types for the CSV and JSON outputs. Field order is the column order.

use std::path::Path;

use asmd_core::solver::{Solution, SolverConfig, StepKind};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

/// One `solve` run. Timing columns are `wall_time_s` (iteration loop only)
/// and `total_time_s` (load, oracle construction, solve and output).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    pub instance_id: String,
    pub algorithm: String,
    pub epsilon: f64,
    pub seed: u64,
    pub iterations: u64,
    pub productive: u64,
    pub nonproductive: u64,
    pub wall_time_s: f64,
    pub objective_at_xbar: f64,
    pub constraint_at_xbar: f64,
    pub constraint_value_evals: u64,
    pub constraint_subgrad_calls: u64,
    pub objective_subgrad_calls: u64,
    pub theoretical_bound: u64,
    pub stopped_by: String,
    pub total_time_s: f64,
}

pub const SOLVE_TIME_COLUMNS: [&str; 2] = ["wall_time_s", "total_time_s"];

impl SolveRow {
    pub fn new(instance_id: &str, sol: &Solution, total_time_s: f64) -> Self {
        Self {
            instance_id: instance_id.to_string(),
            algorithm: sol.algorithm.as_str().to_string(),
            epsilon: sol.epsilon,
            seed: sol.seed,
            iterations: sol.iterations,
            productive: sol.productive_count,
            nonproductive: sol.nonproductive_count,
            wall_time_s: sol.wall_time_s,
            objective_at_xbar: sol.objective_value_at_xbar,
            constraint_at_xbar: sol.constraint_value_at_xbar,
            constraint_value_evals: sol.totals.constraint_values,
            constraint_subgrad_calls: sol.totals.constraint_subgrad,
            objective_subgrad_calls: sol.totals.objective_subgrad,
            theoretical_bound: sol.theoretical_bound,
            stopped_by: sol.stopped_by.as_str().to_string(),
            total_time_s,
        }
    }
}

/// One bench cell. Result columns are empty when `status` is `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub algorithm: String,
    pub epsilon: f64,
    pub seed: u64,
    pub repeat: u32,
    /// `ok`, `cap` or `error`.
    pub status: String,
    pub iterations: Option<u64>,
    pub productive: Option<u64>,
    pub nonproductive: Option<u64>,
    pub wall_time_s: Option<f64>,
    pub objective_at_xbar: Option<f64>,
    pub constraint_at_xbar: Option<f64>,
    pub constraint_value_evals: Option<u64>,
    pub constraint_subgrad_calls: Option<u64>,
    pub objective_subgrad_calls: Option<u64>,
    pub theoretical_bound: Option<u64>,
    pub total_time_s: f64,
    pub error: String,
}

/// One trace line per recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub kind: String,
    pub violated_index: Option<usize>,
    pub subgrad_norm: f64,
    pub step_size: Option<f64>,
    pub objective_value: Option<f64>,
    pub constraint_value: f64,
    pub objective_subgrad_calls: u64,
    pub constraint_value_evals: u64,
    pub constraint_subgrad_calls: u64,
}

pub fn write_trace(path: &Path, sol: &Solution) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in &sol.trace {
        w.serialize(TraceRow {
            step: r.index,
            kind: match r.kind {
                StepKind::Productive => "productive".into(),
                StepKind::NonProductive => "nonproductive".into(),
            },
            violated_index: r.violated_index,
            subgrad_norm: r.subgrad_norm,
            step_size: r.step_size,
            objective_value: r.objective_value,
            constraint_value: r.constraint_value,
            objective_subgrad_calls: r.calls.objective_subgrad,
            constraint_value_evals: r.calls.constraint_values,
            constraint_subgrad_calls: r.calls.constraint_subgrad,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The JSON document written by `solve --result` and read by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format: String,
    pub version: u32,
    pub instance_id: String,
    pub config: SolverConfig,
    pub solution: Solution,
    pub total_time_s: f64,
}

impl ResultFile {
    pub const FORMAT: &'static str = "asmd-result";
    pub const VERSION: u32 = 1;

    pub fn new(instance_id: &str, config: SolverConfig, solution: Solution, total_time_s: f64) -> Self {
        Self { format: Self::FORMAT.into(), version: Self::VERSION, instance_id: instance_id.into(), config, solution, total_time_s }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let r: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        if r.format != Self::FORMAT || r.version != Self::VERSION {
            return Err(crate::error::usage(format!("{} is not an {} v{} file", path.display(), Self::FORMAT, Self::VERSION)));
        }
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}
