//! The adaptive stochastic mirror descent loop, in its standard form and in
//! the modification that looks at a single violated constraint on
//! non-productive steps.
//!
//! Both variants share step sizes `h_k = Θ₀ / sqrt(Σ_{t≤k} M_t²)`, the stopping
//! rule `N ≥ (2Θ₀/ε) sqrt(Σ_{t<N} M_t²)` and the output
//! `x̄ = (1/N_I) Σ_{k∈I} x^k` over productive steps. They differ only in how a
//! non-productive step is detected and which subgradient it uses:
//!
//! * [`Algorithm::Standard`] evaluates all `m` components, and on violation
//!   steps along the subgradient of the max-attaining component (smallest
//!   index on ties);
//! * [`Algorithm::Modified`] scans components in index order, stops at the
//!   first `g_j(x) > ε`, and steps along that component's subgradient.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::oracle::{ConstraintOracle, ObjectiveOracle};
use crate::{Error, ProxSetup, Result, RngStream};

/// Full trace records are kept up to this many steps before thinning.
pub const TRACE_LIMIT: usize = 100_000;

/// Relative slack on the stopping rule and the bound ceiling, absorbing the
/// rounding in `Θ₀ = √2` and friends so integer boundaries land where exact
/// arithmetic puts them.
pub const STOP_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Standard,
    Modified,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Standard => "standard",
            Algorithm::Modified => "modified",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Algorithm::Standard),
            "modified" => Ok(Algorithm::Modified),
            other => Err(Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    /// `None` uses the setup's `Θ₀`.
    pub theta0: Option<f64>,
    pub start: Vec<f64>,
    /// `None` applies the default cap, `max(10 · theoretical_bound, 10)`.
    pub max_iterations: Option<u64>,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Use exact subgradients instead of stochastic draws.
    pub exact_subgradients: bool,
    /// Keep every iterate `x^0 … x^N` (dropped if the trace gets thinned).
    pub record_iterates: bool,
    /// Evaluate `f(x^k)` on every step for the trace.
    pub record_objective: bool,
}

impl SolverConfig {
    pub fn new(epsilon: f64, algorithm: Algorithm, start: Vec<f64>, seed: u64) -> Self {
        Self {
            epsilon,
            theta0: None,
            start,
            max_iterations: None,
            seed,
            algorithm,
            exact_subgradients: false,
            record_iterates: false,
            record_objective: false,
        }
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = Some(theta0);
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.max_iterations = Some(cap);
        self
    }

    pub fn exact(mut self) -> Self {
        self.exact_subgradients = true;
        self
    }

    pub fn recording_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }

    pub fn recording_objective(mut self) -> Self {
        self.record_objective = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Productive,
    NonProductive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCalls {
    pub objective_subgrad: u64,
    pub constraint_values: u64,
    pub constraint_subgrad: u64,
}

impl std::ops::AddAssign for OracleCalls {
    fn add_assign(&mut self, o: Self) {
        self.objective_subgrad += o.objective_subgrad;
        self.constraint_values += o.constraint_values;
        self.constraint_subgrad += o.constraint_subgrad;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: u64,
    pub kind: StepKind,
    /// Component whose subgradient drove a non-productive step.
    pub violated_index: Option<usize>,
    /// `M_k`, the norm of the drawn subgradient.
    pub subgrad_norm: f64,
    /// `h_k`; `None` while `Σ M_t² = 0` (the step is the identity).
    pub step_size: Option<f64>,
    pub objective_value: Option<f64>,
    /// Largest constraint component evaluated at `x^k`.
    pub constraint_value: f64,
    pub calls: OracleCalls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Criterion,
    Cap,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Criterion => "criterion",
            StopReason::Cap => "cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub theta0: f64,
    pub seed: u64,
    pub exact_subgradients: bool,
    /// `x̄^N`.
    pub x_bar: Vec<f64>,
    pub iterations: u64,
    pub productive_count: u64,
    pub nonproductive_count: u64,
    pub constraint_value_at_xbar: f64,
    pub objective_value_at_xbar: f64,
    pub stopped_by: StopReason,
    /// `Σ_{t<N} M_t²`.
    pub sum_sq_norms: f64,
    /// `Σ_{t<N-1} M_t²`.
    pub sum_sq_norms_prev: f64,
    /// Largest `M_t` drawn.
    pub max_subgrad_norm: f64,
    pub declared_objective_bound: f64,
    pub declared_constraint_bound: f64,
    pub theoretical_bound: u64,
    pub trace: Vec<StepRecord>,
    /// Every `trace_stride`-th step is kept; 1 means the trace is complete.
    pub trace_stride: u64,
    /// `x^0 … x^N` when requested and the trace was never thinned.
    pub iterates: Option<Vec<Vec<f64>>>,
    pub totals: OracleCalls,
    /// Seconds spent inside the iteration loop.
    pub wall_time_s: f64,
}

impl Solution {
    /// Canonical bytes of everything except timing, for reproducibility checks.
    pub fn deterministic_bytes(&self) -> Vec<u8> {
        let mut copy = self.clone();
        copy.wall_time_s = 0.0;
        serde_json::to_vec(&copy).expect("solution serializes")
    }
}

/// `⌈4 · max{M_f², M_g²} · Θ₀² / ε²⌉`, saturating at `u64::MAX`.
pub fn theoretical_bound(m_f: f64, m_g: f64, theta0: f64, epsilon: f64) -> u64 {
    debug_assert!(m_f >= 0.0 && m_g >= 0.0 && theta0 > 0.0 && epsilon > 0.0);
    let m = m_f.max(m_g);
    let v = 4.0 * m * m * theta0 * theta0 / (epsilon * epsilon);
    let c = (v * (1.0 - STOP_RTOL)).ceil();
    if !c.is_finite() || c >= u64::MAX as f64 {
        u64::MAX
    } else {
        c.max(0.0) as u64
    }
}

/// `N ≥ (2Θ₀/ε) · sqrt(sum_sq)`, up to [`STOP_RTOL`].
pub fn stopping_criterion_met(iterations: u64, theta0: f64, epsilon: f64, sum_sq: f64) -> bool {
    iterations as f64 >= 2.0 * theta0 / epsilon * sum_sq.sqrt() * (1.0 - STOP_RTOL)
}

/// The default iteration cap for the given bounds.
pub fn default_cap(m_f: f64, m_g: f64, theta0: f64, epsilon: f64) -> u64 {
    if !(m_f.is_finite() && m_g.is_finite()) {
        return 10_000_000;
    }
    theoretical_bound(m_f, m_g, theta0, epsilon).saturating_mul(10).max(10)
}

/// Runs Algorithm 1 (standard); `cfg.algorithm` must be `Standard`.
pub fn run_standard(setup: &ProxSetup, f: &dyn ObjectiveOracle, g: &dyn ConstraintOracle, cfg: &SolverConfig) -> Result<Solution> {
    if cfg.algorithm != Algorithm::Standard {
        return Err(Error::InvalidParameter("run_standard called with a modified config".into()));
    }
    solve(setup, f, g, cfg)
}

/// Runs Algorithm 2 (modified); `cfg.algorithm` must be `Modified`.
pub fn run_modified(setup: &ProxSetup, f: &dyn ObjectiveOracle, g: &dyn ConstraintOracle, cfg: &SolverConfig) -> Result<Solution> {
    if cfg.algorithm != Algorithm::Modified {
        return Err(Error::InvalidParameter("run_modified called with a standard config".into()));
    }
    solve(setup, f, g, cfg)
}

/// Runs whichever algorithm `cfg.algorithm` names.
///
/// A cap-exhausted run still returns a [`Solution`] (with
/// [`StopReason::Cap`]) as long as at least one step was productive.
pub fn solve(setup: &ProxSetup, f: &dyn ObjectiveOracle, g: &dyn ConstraintOracle, cfg: &SolverConfig) -> Result<Solution> {
    let n = setup.dim();
    for got in [f.dim(), g.dim(), cfg.start.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", cfg.epsilon)));
    }
    let theta0 = match cfg.theta0 {
        None => setup.theta0(),
        Some(t) if t.is_finite() && t >= setup.theta0() * (1.0 - 1e-12) => t,
        Some(t) => {
            return Err(Error::InvalidParameter(format!(
                "theta0 {t} is below the setup's declared {}",
                setup.theta0()
            )))
        }
    };
    if cfg.exact_subgradients && !f.has_exact_subgrad() {
        return Err(Error::InvalidParameter(format!("{} has no exact subgradient", f.name())));
    }
    let m = g.count();
    if m == 0 {
        return Err(Error::InvalidParameter("at least one constraint is required".into()));
    }
    let eps = cfg.epsilon;
    let (m_f, m_g) = (f.lipschitz_bound(), g.lipschitz_bound());
    let bound = theoretical_bound(m_f, m_g, theta0, eps);
    let cap = cfg.max_iterations.unwrap_or_else(|| default_cap(m_f, m_g, theta0, eps));

    let mut x = cfg.start.clone();
    setup.ensure_feasible(&mut x)?;
    let mut next = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut x_sum = vec![0.0; n];

    let root = RngStream::new(cfg.seed);
    let mut rng_f = root.split("objective");
    let mut rng_g = root.split("constraint");

    let mut trace = Vec::new();
    let mut stride: u64 = 1;
    let mut iterates = cfg.record_iterates.then(|| vec![x.clone()]);
    let mut totals = OracleCalls::default();
    let (mut n_iter, mut n_prod, mut n_nonprod) = (0u64, 0u64, 0u64);
    let (mut sum_sq, mut sum_sq_prev) = (0.0f64, 0.0f64);
    let mut max_norm = 0.0f64;
    let stopped_by;

    let t0 = Instant::now();
    loop {
        if n_iter >= cap {
            stopped_by = StopReason::Cap;
            break;
        }
        let mut calls = OracleCalls::default();

        let (violated, cval) = match cfg.algorithm {
            Algorithm::Standard => {
                let (j, v) = g.argmax(&x)?;
                calls.constraint_values += m as u64;
                ((v > eps).then_some(j), v)
            }
            Algorithm::Modified => {
                let mut seen = f64::NEG_INFINITY;
                let mut hit = None;
                for j in 0..m {
                    let v = g.value(j, &x)?;
                    calls.constraint_values += 1;
                    seen = seen.max(v);
                    if v > eps {
                        hit = Some(j);
                        break;
                    }
                }
                (hit, seen)
            }
        };
        let objective_value = cfg.record_objective.then(|| f.value(&x));

        let kind = match violated {
            None => {
                if cfg.exact_subgradients {
                    f.exact_subgrad(&x, &mut grad)?;
                } else {
                    f.stochastic_subgrad(&x, &mut rng_f, &mut grad)?;
                }
                calls.objective_subgrad += 1;
                x_sum.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
                n_prod += 1;
                StepKind::Productive
            }
            Some(j) => {
                if cfg.exact_subgradients {
                    g.exact_subgrad(j, &x, &mut grad)?;
                } else {
                    g.stochastic_subgrad(j, &x, &mut rng_g, &mut grad)?;
                }
                calls.constraint_subgrad += 1;
                n_nonprod += 1;
                StepKind::NonProductive
            }
        };

        let norm = setup.dual_norm(&grad);
        max_norm = max_norm.max(norm);
        sum_sq_prev = sum_sq;
        sum_sq += norm * norm;
        let step_size = if sum_sq > 0.0 {
            let h = theta0 / sum_sq.sqrt();
            grad.iter_mut().for_each(|v| *v *= h);
            setup.mirr_into(&x, &grad, &mut next)?;
            std::mem::swap(&mut x, &mut next);
            Some(h)
        } else {
            None
        };

        totals += calls;
        if n_iter % stride == 0 {
            trace.push(StepRecord {
                index: n_iter,
                kind,
                violated_index: violated,
                subgrad_norm: norm,
                step_size,
                objective_value,
                constraint_value: cval,
                calls,
            });
            if trace.len() > TRACE_LIMIT {
                stride *= 2;
                trace.retain(|r: &StepRecord| r.index.is_multiple_of(stride));
                iterates = None;
            }
        }
        if let Some(its) = iterates.as_mut() {
            its.push(x.clone());
        }
        n_iter += 1;

        if stopping_criterion_met(n_iter, theta0, eps, sum_sq) {
            stopped_by = StopReason::Criterion;
            break;
        }
    }
    let wall_time_s = t0.elapsed().as_secs_f64();

    if n_prod == 0 {
        return Err(Error::NoProductiveSteps { iterations: n_iter });
    }
    let x_bar: Vec<f64> = x_sum.iter().map(|s| s / n_prod as f64).collect();
    let constraint_value_at_xbar = g.max_value(&x_bar)?;
    let objective_value_at_xbar = f.value(&x_bar);

    Ok(Solution {
        algorithm: cfg.algorithm,
        epsilon: eps,
        theta0,
        seed: cfg.seed,
        exact_subgradients: cfg.exact_subgradients,
        x_bar,
        iterations: n_iter,
        productive_count: n_prod,
        nonproductive_count: n_nonprod,
        constraint_value_at_xbar,
        objective_value_at_xbar,
        stopped_by,
        sum_sq_norms: sum_sq,
        sum_sq_norms_prev: sum_sq_prev,
        max_subgrad_norm: max_norm,
        declared_objective_bound: m_f,
        declared_constraint_bound: m_g,
        theoretical_bound: bound,
        trace,
        trace_stride: stride,
        iterates,
        totals,
        wall_time_s,
    })
}

/// Recomputes `x̄` from recorded iterates and the trace's productive tags.
/// Requires a complete trace with iterates.
pub fn replay_average(sol: &Solution) -> Option<Vec<f64>> {
    let its = sol.iterates.as_ref()?;
    if sol.trace_stride != 1 {
        return None;
    }
    let n = sol.x_bar.len();
    let mut acc = vec![0.0; n];
    let mut count = 0u64;
    for rec in &sol.trace {
        if rec.kind == StepKind::Productive {
            acc.iter_mut().zip(&its[rec.index as usize]).for_each(|(a, v)| *a += v);
            count += 1;
        }
    }
    Some(acc.into_iter().map(|a| a / count as f64).collect())
}
