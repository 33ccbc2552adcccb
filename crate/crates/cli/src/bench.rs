//! Cross-product benchmarks: algorithm × ε × seed × repeat.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use asmd_core::problems::ProblemInstance;
use asmd_core::solver::{solve, Algorithm, SolverConfig, StopReason};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};
use crate::records::{write_trace, BenchRow};

fn one() -> u32 {
    1
}

/// Everything a bench run needs. Every output row is keyed by
/// (instance, algorithm, ε, seed, repeat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub instance: PathBuf,
    pub algorithms: Vec<Algorithm>,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    #[serde(default = "one")]
    pub repeat: u32,
    #[serde(default)]
    pub emit_trace: bool,
    #[serde(default)]
    pub exact: bool,
    /// Named start point; `None` uses the instance default.
    #[serde(default)]
    pub x0: Option<String>,
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default)]
    pub theta0: Option<f64>,
}

impl RunManifest {
    pub fn validate(&self) -> CliResult<()> {
        if self.seeds.is_empty() {
            return Err(usage("bench needs at least one seed"));
        }
        if self.algorithms.is_empty() {
            return Err(usage("bench needs at least one algorithm"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(usage("bench needs a non-empty list of positive epsilons"));
        }
        if self.repeat == 0 {
            return Err(usage("repeat must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub epsilon: f64,
    pub runs: usize,
    pub ok: usize,
    pub cap: usize,
    pub errors: usize,
    pub median_iterations: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub median_wall_time_s: Option<f64>,
    pub mean_wall_time_s: Option<f64>,
    pub median_constraint_value_evals: Option<f64>,
    pub mean_constraint_value_evals: Option<f64>,
    pub mean_nonproductive_fraction: Option<f64>,
    pub theoretical_bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub algorithm: String,
    pub epsilon: f64,
    pub inv_epsilon: f64,
    pub median_iterations: Option<f64>,
    pub median_wall_time_s: Option<f64>,
    /// Least-squares slope of ln(median iterations) on ln(1/ε), per algorithm.
    pub iterations_slope: Option<f64>,
    pub time_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub instance_id: String,
    pub manifest: RunManifest,
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
    pub scaling: Vec<ScalingRow>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Least-squares slope of `ln y` on `ln x`; `None` with fewer than two
/// distinct positive `x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn eps_label(eps: f64) -> String {
    format!("{eps}").replace('.', "p")
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    algorithm: Algorithm,
    epsilon: f64,
    seed: u64,
    repeat: u32,
}

fn run_cell(inst: &ProblemInstance, id: &str, m: &RunManifest, cell: Cell, start: &[f64]) -> BenchRow {
    let t0 = Instant::now();
    let mut row = BenchRow {
        instance_id: id.to_string(),
        algorithm: cell.algorithm.as_str().into(),
        epsilon: cell.epsilon,
        seed: cell.seed,
        repeat: cell.repeat,
        status: "error".into(),
        iterations: None,
        productive: None,
        nonproductive: None,
        wall_time_s: None,
        objective_at_xbar: None,
        constraint_at_xbar: None,
        constraint_value_evals: None,
        constraint_subgrad_calls: None,
        objective_subgrad_calls: None,
        theoretical_bound: None,
        total_time_s: 0.0,
        error: String::new(),
    };
    let result = (|| -> CliResult<()> {
        let (f, g) = inst.oracles()?;
        let mut cfg = SolverConfig::new(cell.epsilon, cell.algorithm, start.to_vec(), cell.seed);
        cfg.theta0 = m.theta0;
        cfg.max_iterations = m.cap;
        cfg.exact_subgradients = m.exact;
        let sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg)?;
        if m.emit_trace {
            let name = format!("{}-eps{}-seed{}-r{}.csv", cell.algorithm, eps_label(cell.epsilon), cell.seed, cell.repeat);
            write_trace(&m.out_dir.join("traces").join(name), &sol)?;
        }
        row.status = match sol.stopped_by {
            StopReason::Criterion => "ok".into(),
            StopReason::Cap => "cap".into(),
        };
        row.iterations = Some(sol.iterations);
        row.productive = Some(sol.productive_count);
        row.nonproductive = Some(sol.nonproductive_count);
        row.wall_time_s = Some(sol.wall_time_s);
        row.objective_at_xbar = Some(sol.objective_value_at_xbar);
        row.constraint_at_xbar = Some(sol.constraint_value_at_xbar);
        row.constraint_value_evals = Some(sol.totals.constraint_values);
        row.constraint_subgrad_calls = Some(sol.totals.constraint_subgrad);
        row.objective_subgrad_calls = Some(sol.totals.objective_subgrad);
        row.theoretical_bound = Some(sol.theoretical_bound);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = e.to_string();
    }
    row.total_time_s = t0.elapsed().as_secs_f64();
    row
}

fn summarize(rows: &[BenchRow], m: &RunManifest) -> (Vec<SummaryRow>, Vec<ScalingRow>) {
    let mut summary = Vec::new();
    let mut scaling = Vec::new();
    for alg in &m.algorithms {
        let mut per_eps = Vec::new();
        for &eps in &m.epsilons {
            let cell: Vec<&BenchRow> = rows.iter().filter(|r| r.algorithm == alg.as_str() && r.epsilon == eps).collect();
            let ok: Vec<&BenchRow> = cell.iter().copied().filter(|r| r.status == "ok").collect();
            let iters: Vec<f64> = ok.iter().filter_map(|r| r.iterations).map(|v| v as f64).collect();
            let times: Vec<f64> = ok.iter().filter_map(|r| r.wall_time_s).collect();
            let evals: Vec<f64> = ok.iter().filter_map(|r| r.constraint_value_evals).map(|v| v as f64).collect();
            let fracs: Vec<f64> = ok
                .iter()
                .filter_map(|r| Some(r.nonproductive? as f64 / r.iterations?.max(1) as f64))
                .collect();
            summary.push(SummaryRow {
                algorithm: alg.as_str().into(),
                epsilon: eps,
                runs: cell.len(),
                ok: ok.len(),
                cap: cell.iter().filter(|r| r.status == "cap").count(),
                errors: cell.iter().filter(|r| r.status == "error").count(),
                median_iterations: median(&iters),
                mean_iterations: mean(&iters),
                median_wall_time_s: median(&times),
                mean_wall_time_s: mean(&times),
                median_constraint_value_evals: median(&evals),
                mean_constraint_value_evals: mean(&evals),
                mean_nonproductive_fraction: mean(&fracs),
                theoretical_bound: cell.iter().find_map(|r| r.theoretical_bound),
            });
            per_eps.push((eps, median(&iters), median(&times)));
        }
        let fit = |pick: fn(&(f64, Option<f64>, Option<f64>)) -> Option<f64>| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = per_eps.iter().filter_map(|p| Some((1.0 / p.0, pick(p)?))).unzip();
            loglog_slope(&xs, &ys)
        };
        let (it_slope, t_slope) = (fit(|p| p.1), fit(|p| p.2));
        for (eps, it, t) in per_eps {
            scaling.push(ScalingRow {
                algorithm: alg.as_str().into(),
                epsilon: eps,
                inv_epsilon: 1.0 / eps,
                median_iterations: it,
                median_wall_time_s: t,
                iterations_slope: it_slope,
                time_slope: t_slope,
            });
        }
    }
    (summary, scaling)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every cell (up to `jobs` at a time), then writes `results.csv`,
/// `summary.csv`, `scaling.csv` and `summary.json` into `out_dir`. Failed
/// cells are recorded with `status = error` and do not stop the bench.
pub fn run_bench(m: &RunManifest, jobs: usize) -> CliResult<BenchOutcome> {
    m.validate()?;
    let inst = ProblemInstance::load(&m.instance)?;
    let id = inst.id();
    let start = match &m.x0 {
        Some(name) => inst.named_start(name)?,
        None => inst.default_start(),
    };
    std::fs::create_dir_all(&m.out_dir)?;

    let mut cells = Vec::new();
    for &algorithm in &m.algorithms {
        for &epsilon in &m.epsilons {
            for &seed in &m.seeds {
                for repeat in 0..m.repeat {
                    cells.push(Cell { algorithm, epsilon, seed, repeat });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| usage(format!("cannot start worker pool: {e}")))?;
    // Cells run concurrently; rows are collected in cell order and written
    // by this thread alone.
    let rows: Vec<BenchRow> = pool.install(|| cells.par_iter().map(|&c| run_cell(&inst, &id, m, c, &start)).collect());

    let (summary, scaling) = summarize(&rows, m);
    write_csv(&m.out_dir.join("results.csv"), &rows)?;
    write_csv(&m.out_dir.join("summary.csv"), &summary)?;
    write_csv(&m.out_dir.join("scaling.csv"), &scaling)?;

    let slopes: BTreeMap<String, (Option<f64>, Option<f64>)> = scaling
        .iter()
        .map(|s| (s.algorithm.clone(), (s.iterations_slope, s.time_slope)))
        .collect();
    let json = serde_json::json!({
        "instance_id": id,
        "manifest": m,
        "summary": summary,
        "scaling": scaling,
        "slopes": slopes.iter().map(|(k, (i, t))| (k.clone(), serde_json::json!({"iterations": i, "time": t}))).collect::<serde_json::Map<_, _>>(),
    });
    std::fs::write(m.out_dir.join("summary.json"), serde_json::to_vec_pretty(&json)?)?;
    Ok(BenchOutcome { instance_id: id, manifest: m.clone(), rows, summary, scaling })
}
