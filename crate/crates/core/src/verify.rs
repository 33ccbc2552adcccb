//! Independent checks on solver output.
//!
//! Nothing here reuses the solver loop. References come from brute force
//! (grids), certificates are recomputed from the instance, and per-step
//! inequalities are re-evaluated from recorded iterates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm2};
use crate::oracle::{ConstraintOracle, ObjectiveOracle};
use crate::problems::ProblemInstance;
use crate::solver::{solve, stopping_criterion_met, theoretical_bound, Solution, SolverConfig, StepKind, StopReason};
use crate::{Error, ProxKind, ProxSetup, Result, RngStream, FEASIBILITY_TOL};

/// Largest dimension accepted by the grid search.
pub const GRID_MAX_DIM: usize = 3;
/// Per-step tolerance of the descent-inequality audit.
pub const LEMMA_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Outside the nominal threshold but within sampling noise.
    Warn,
    /// Recorded for aggregation; not a verdict.
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: f64,
    pub threshold: f64,
}

impl Check {
    /// `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        let status = if measured <= threshold { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, measured, threshold }
    }

    pub fn info(name: impl Into<String>, measured: f64) -> Self {
        Self { name: name.into(), status: Status::Info, measured, threshold: f64::NAN }
    }

    pub fn line(&self) -> String {
        format!("{:<24} {} measured={} threshold={}", self.name, self.status.as_str(), self.measured, self.threshold)
    }
}

/// A brute-force reference optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReference {
    pub f_star: f64,
    pub x_star: Vec<f64>,
    /// Grid intervals per axis.
    pub resolution: usize,
    pub spacing: f64,
    /// `M_f · spacing`, the reported accuracy of `f_star`.
    pub slack: f64,
    pub feasible_points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub reference_optimum: Option<GridReference>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        if self.reference_optimum.is_none() {
            self.reference_optimum = other.reference_optimum;
        }
    }

    /// One check per line, then the reference optimum if present.
    pub fn to_text(&self) -> String {
        let mut s: String = self.checks.iter().map(|c| c.line() + "\n").collect();
        if let Some(r) = &self.reference_optimum {
            s.push_str(&format!(
                "reference f*={} x*={:?} resolution={} spacing={} slack={}\n",
                r.f_star, r.x_star, r.resolution, r.spacing, r.slack
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Best feasible grid point of `f` subject to `g(x) ≤ 0` on `setup`'s set.
///
/// Ball: the cube `[-r, r]ⁿ` with `resolution` intervals per axis, points
/// outside the ball dropped. Simplex: the points `k / resolution` with
/// integer `k ≥ 0` summing to `resolution`. Ties go to the earliest point in
/// lexicographic grid order.
pub fn grid_search(setup: &ProxSetup, f: &dyn ObjectiveOracle, g: &dyn ConstraintOracle, resolution: usize) -> Result<GridReference> {
    let n = setup.dim();
    if n > GRID_MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    let (spacing, lows): (f64, Vec<f64>) = match setup.kind() {
        ProxKind::EuclideanBall { radius } => (2.0 * radius / resolution as f64, vec![-radius; n]),
        ProxKind::EntropySimplex => (1.0 / resolution as f64, vec![0.0; n]),
        ProxKind::EuclideanBox { .. } => {
            return Err(Error::InvalidParameter("grid search supports the ball and the simplex".into()))
        }
    };
    let simplex = matches!(setup.kind(), ProxKind::EntropySimplex);
    // On the simplex the last coordinate is implied by the others.
    let free = if simplex { n - 1 } else { n };
    let per_axis = resolution + 1;
    let slabs = if free == 0 { 1 } else { per_axis };
    let inner_count = per_axis.pow(free.saturating_sub(1) as u32);

    // Parallel over the first coordinate, sequential inside, then a
    // deterministic reduction in grid order.
    let best_per_slab: Vec<Option<(f64, Vec<f64>, usize)>> = (0..slabs)
        .into_par_iter()
        .map(|i0| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            let mut count = 0usize;
            let mut x = vec![0.0; n];
            let mut idx = vec![0usize; free];
            for rest in 0..inner_count {
                let mut r = rest;
                for k in (1..free).rev() {
                    idx[k] = r % per_axis;
                    r /= per_axis;
                }
                if free > 0 {
                    idx[0] = i0;
                }
                if simplex {
                    let used: usize = idx.iter().sum();
                    if used > resolution {
                        continue;
                    }
                    for k in 0..free {
                        x[k] = idx[k] as f64 * spacing;
                    }
                    x[n - 1] = (resolution - used) as f64 * spacing;
                } else {
                    for k in 0..n {
                        x[k] = lows[k] + idx[k] as f64 * spacing;
                    }
                    if setup.violation(&x) > FEASIBILITY_TOL {
                        continue;
                    }
                }
                let Ok(gv) = g.max_value(&x) else { continue };
                if gv > 0.0 {
                    continue;
                }
                count += 1;
                let fv = f.value(&x);
                if best.as_ref().is_none_or(|(b, _)| fv < *b) {
                    best = Some((fv, x.clone()));
                }
            }
            best.map(|(v, x)| (v, x, count))
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_points = 0usize;
    for (v, x, c) in best_per_slab.into_iter().flatten() {
        feasible_points += c;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    let (f_star, x_star) = best.ok_or(Error::EmptyFeasibleGrid(resolution))?;
    Ok(GridReference { f_star, x_star, resolution, spacing, slack: f.lipschitz_bound() * spacing, feasible_points })
}

/// [`grid_search`] on an instance's own oracles.
pub fn grid_search_reference(instance: &ProblemInstance, resolution: usize) -> Result<GridReference> {
    let (f, g) = instance.oracles()?;
    grid_search(&instance.setup, f.as_ref(), g.as_ref(), resolution)
}

/// Smallest grid resolution whose slack is at most `target`.
pub fn resolution_for_slack(instance: &ProblemInstance, target: f64) -> Result<usize> {
    let m_f = instance.objective_oracle()?.lipschitz_bound();
    let width = match instance.setup.kind() {
        ProxKind::EuclideanBall { radius } => 2.0 * radius,
        _ => 1.0,
    };
    Ok(((m_f * width / target).ceil() as usize).max(1))
}

fn mismatch(msg: impl Into<String>) -> Error {
    Error::InstanceMismatch(msg.into())
}

/// Certificate checks for one run.
///
/// Recomputes everything from the instance: `g(x̄)`, `f(x̄)`, the iteration
/// bound from the oracles' declared `M_f`, `M_g`, and the stopping-rule
/// arithmetic from the recorded sums.
pub fn audit_solution(sol: &Solution, instance: &ProblemInstance, reference: Option<&GridReference>) -> Result<VerificationReport> {
    let n = instance.dim();
    if sol.x_bar.len() != n {
        return Err(mismatch(format!("solution has dimension {}, instance has {n}", sol.x_bar.len())));
    }
    if sol.theta0 < instance.setup.theta0() * (1.0 - 1e-12) {
        return Err(mismatch(format!("solution theta0 {} is below the instance's {}", sol.theta0, instance.setup.theta0())));
    }
    let (f, g) = instance.oracles()?;
    let mut report = VerificationReport { checks: Vec::new(), reference_optimum: reference.cloned() };
    let eps = sol.epsilon;

    // (a) ε-feasibility of the averaged point and membership in Q.
    let g_bar = g.max_value(&sol.x_bar)?;
    report.push(Check::at_most("constraint-at-xbar", g_bar, eps));
    report.push(Check::at_most("xbar-in-set", instance.setup.violation(&sol.x_bar), FEASIBILITY_TOL));

    // (b) iteration bound with the instance's declared constants.
    let bound = theoretical_bound(f.lipschitz_bound(), g.lipschitz_bound(), sol.theta0, eps);
    report.push(Check::at_most("iterations-within-bound", sol.iterations as f64, bound as f64));

    // (c) stopping rule: met at N, not met at N - 1.
    let scale = 2.0 * sol.theta0 / eps;
    match sol.stopped_by {
        StopReason::Criterion => {
            let met = stopping_criterion_met(sol.iterations, sol.theta0, eps, sol.sum_sq_norms);
            report.push(Check {
                name: "stopping-rule-met".into(),
                status: if met { Status::Pass } else { Status::Fail },
                measured: sol.iterations as f64,
                threshold: scale * sol.sum_sq_norms.sqrt(),
            });
            if sol.iterations >= 2 {
                let early = stopping_criterion_met(sol.iterations - 1, sol.theta0, eps, sol.sum_sq_norms_prev);
                report.push(Check {
                    name: "stopping-rule-first".into(),
                    status: if early { Status::Fail } else { Status::Pass },
                    measured: (sol.iterations - 1) as f64,
                    threshold: scale * sol.sum_sq_norms_prev.sqrt(),
                });
            }
        }
        StopReason::Cap => {
            let met = stopping_criterion_met(sol.iterations, sol.theta0, eps, sol.sum_sq_norms);
            report.push(Check {
                name: "stopped-by-cap".into(),
                status: if met { Status::Fail } else { Status::Warn },
                measured: sol.iterations as f64,
                threshold: scale * sol.sum_sq_norms.sqrt(),
            });
        }
    }
    let split = sol.productive_count + sol.nonproductive_count;
    report.push(Check {
        name: "step-count-split".into(),
        status: if split == sol.iterations && sol.productive_count > 0 { Status::Pass } else { Status::Fail },
        measured: split as f64,
        threshold: sol.iterations as f64,
    });
    if sol.trace_stride == 1 && sol.trace.len() as u64 == sol.iterations {
        let s: f64 = sol.trace.iter().map(|r| r.subgrad_norm * r.subgrad_norm).sum();
        let rel = (s - sol.sum_sq_norms).abs() / sol.sum_sq_norms.max(f64::MIN_POSITIVE);
        report.push(Check::at_most("trace-sum-of-squares", rel, 1e-9));
        let nonprod = sol.trace.iter().filter(|r| r.kind == StepKind::NonProductive).count() as u64;
        report.push(Check::at_most("trace-nonproductive", nonprod.abs_diff(sol.nonproductive_count) as f64, 0.0));
    }

    // (d) / (e) optimality gap against the reference.
    if let Some(r) = reference {
        let gap = f.value(&sol.x_bar) - r.f_star;
        if sol.exact_subgradients {
            report.push(Check::at_most("optimality-gap", gap, eps + r.slack));
        } else {
            report.push(Check::info("optimality-gap-sample", gap));
        }
    }
    Ok(report)
}

/// Mean of per-seed gaps against `ε + slack`, with a two-standard-error band.
pub fn audit_expectation(gaps: &[f64], epsilon: f64, slack: f64) -> Result<Check> {
    if gaps.len() < 2 {
        return Err(Error::InvalidParameter("expectation audit needs at least two samples".into()));
    }
    let k = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / k;
    let var = gaps.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    let se = (var / k).sqrt();
    let threshold = epsilon + slack;
    let status = if mean <= threshold {
        Status::Pass
    } else if mean <= threshold + 2.0 * se {
        Status::Warn
    } else {
        Status::Fail
    };
    Ok(Check { name: format!("mean-gap(k={}, se={se:.3e})", gaps.len()), status, measured: mean, threshold })
}

/// `f(x̄) - f*` over `seeds`, each run with `base` and its seed replaced.
pub fn multi_seed_gaps(instance: &ProblemInstance, base: &SolverConfig, seeds: &[u64], f_star: f64) -> Result<Vec<f64>> {
    let (f, g) = instance.oracles()?;
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SolverConfig { seed, ..base.clone() };
            let sol = solve(&instance.setup, f.as_ref(), g.as_ref(), &cfg)?;
            Ok(f.value(&sol.x_bar) - f_star)
        })
        .collect()
}

/// Re-evaluates, for every recorded step `y = x^k → z = x^{k+1}` with step
/// size `h` and subgradient `∇φ(y)`,
///
/// `h (φ(y) - φ(x*)) ≤ h²/2 ‖∇φ(y)‖² + V_y(x*) - V_z(x*)`,
///
/// where `φ = f` on productive steps and `φ = g_j` on non-productive ones.
/// Needs a deterministic run with a complete trace and recorded iterates.
pub fn audit_lemma1(
    sol: &Solution,
    setup: &ProxSetup,
    f: &dyn ObjectiveOracle,
    g: &dyn ConstraintOracle,
    x_star: &[f64],
) -> Result<VerificationReport> {
    let iterates = sol.iterates.as_ref().ok_or(Error::TraceUnavailable)?;
    if !sol.exact_subgradients || sol.trace_stride != 1 || iterates.len() != sol.trace.len() + 1 {
        return Err(Error::TraceUnavailable);
    }
    let n = setup.dim();
    let mut grad = vec![0.0; n];
    let mut report = VerificationReport::default();
    let (mut violations, mut max_excess) = (0u64, f64::NEG_INFINITY);
    for (k, rec) in sol.trace.iter().enumerate() {
        let (y, z) = (&iterates[k], &iterates[k + 1]);
        let (phi_y, phi_star) = match (rec.kind, rec.violated_index) {
            (StepKind::Productive, _) => {
                f.exact_subgrad(y, &mut grad)?;
                (f.value(y), f.value(x_star))
            }
            (StepKind::NonProductive, Some(j)) => {
                g.exact_subgrad(j, y, &mut grad)?;
                (g.value(j, y)?, g.value(j, x_star)?)
            }
            (StepKind::NonProductive, None) => return Err(Error::TraceUnavailable),
        };
        let h = rec.step_size.unwrap_or(0.0);
        let gn = setup.dual_norm(&grad);
        let lhs = h * (phi_y - phi_star);
        let rhs = 0.5 * h * h * gn * gn + setup.bregman(y, x_star)? - setup.bregman(z, x_star)?;
        let excess = lhs - rhs;
        max_excess = max_excess.max(excess);
        if excess > LEMMA_TOL {
            violations += 1;
            if violations <= 20 {
                report.push(Check::at_most(format!("lemma1-step-{k}"), excess, LEMMA_TOL));
            }
        }
    }
    report.push(Check::at_most("lemma1-violations", violations as f64, 0.0));
    report.push(Check::at_most("lemma1-max-excess", max_excess, LEMMA_TOL));
    report.push(Check::info("lemma1-steps", sol.trace.len() as f64));
    Ok(report)
}

/// Monte-Carlo mean of `draws` stochastic subgradients at `x` against the
/// exact subgradient; returns `(‖mean - exact‖₂, 5·M/√draws)`.
pub fn objective_bias(f: &dyn ObjectiveOracle, x: &[f64], draws: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    let n = x.len();
    let mut exact = vec![0.0; n];
    f.exact_subgrad(x, &mut exact)?;
    let mut acc = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for _ in 0..draws {
        f.stochastic_subgrad(x, rng, &mut tmp)?;
        acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
    }
    let err = norm2(&acc.iter().zip(&exact).map(|(a, e)| a / draws as f64 - e).collect::<Vec<_>>());
    Ok((err, 5.0 * f.lipschitz_bound() / (draws as f64).sqrt()))
}

/// As [`objective_bias`] for constraint component `j`.
pub fn constraint_bias(g: &dyn ConstraintOracle, j: usize, x: &[f64], draws: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    let n = x.len();
    let mut exact = vec![0.0; n];
    g.exact_subgrad(j, x, &mut exact)?;
    let mut acc = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for _ in 0..draws {
        g.stochastic_subgrad(j, x, rng, &mut tmp)?;
        acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
    }
    let err = norm2(&acc.iter().zip(&exact).map(|(a, e)| a / draws as f64 - e).collect::<Vec<_>>());
    Ok((err, 5.0 * g.lipschitz_bound() / (draws as f64).sqrt()))
}

/// Brute-force `argmin_{u ∈ Q} <p, u> + V_x(u)` by successive grid zooming,
/// for a 2-D ball or box or a 3-D simplex.
///
/// The objective is written out directly here (not through [`ProxSetup`]) so
/// the comparison with [`ProxSetup::mirr`] stays independent.
pub fn reference_mirr(setup: &ProxSetup, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    const K: usize = 41;
    type Lift = Box<dyn Fn(f64, f64) -> Option<Vec<f64>>>;
    // The ball is searched in polar coordinates so its boundary is a flat
    // edge of the parameter box; a Cartesian grid over a curved edge can miss
    // the optimum by far more than one cell.
    let (lift, mut center, mut half): (Lift, [f64; 2], [f64; 2]) = match setup.kind() {
        ProxKind::EuclideanBall { radius } if setup.dim() == 2 => {
            let r = *radius;
            let lift: Lift = Box::new(move |rho, th| (0.0..=r).contains(&rho).then(|| vec![rho * th.cos(), rho * th.sin()]));
            (lift, [0.5 * r, 0.0], [0.5 * r, std::f64::consts::PI])
        }
        ProxKind::EuclideanBox { lower, upper } if setup.dim() == 2 => {
            let (l, u) = (lower.clone(), upper.clone());
            let c = [0.5 * (l[0] + u[0]), 0.5 * (l[1] + u[1])];
            let h = [0.5 * (u[0] - l[0]), 0.5 * (u[1] - l[1])];
            let lift: Lift = Box::new(move |a, b| (a >= l[0] && a <= u[0] && b >= l[1] && b <= u[1]).then(|| vec![a, b]));
            (lift, c, h)
        }
        ProxKind::EntropySimplex if setup.dim() == 3 => {
            let lift: Lift = Box::new(|a, b| (a >= 0.0 && b >= 0.0 && a + b <= 1.0).then(|| vec![a, b, (1.0 - a - b).max(0.0)]));
            (lift, [0.5, 0.5], [0.5, 0.5])
        }
        _ => return Err(Error::InvalidParameter("reference mirror step needs a 2-D ball/box or a 3-D simplex".into())),
    };
    let entropy = matches!(setup.kind(), ProxKind::EntropySimplex);
    let objective = |u: &[f64]| -> f64 {
        let lin = dot(p, u);
        if entropy {
            lin + u.iter().zip(x).map(|(&ui, &xi)| if ui > 0.0 { ui * (ui / xi).ln() } else { 0.0 } + xi - ui).sum::<f64>()
        } else {
            lin + 0.5 * u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }
    };
    let mut best: Option<(f64, [f64; 2], Vec<f64>)> = None;
    while half[0].max(half[1]) > 1e-12 {
        let step = [2.0 * half[0] / (K - 1) as f64, 2.0 * half[1] / (K - 1) as f64];
        for i in 0..K {
            for j in 0..K {
                let ab = [center[0] - half[0] + i as f64 * step[0], center[1] - half[1] + j as f64 * step[1]];
                if let Some(u) = lift(ab[0], ab[1]) {
                    let v = objective(&u);
                    if best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
                        best = Some((v, ab, u));
                    }
                }
            }
        }
        let (_, ab, _) = best.as_ref().ok_or(Error::EmptyFeasibleGrid(K - 1))?;
        center = *ab;
        half = [4.0 * step[0], 4.0 * step[1]];
    }
    Ok(best.expect("grid visited").2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::{AbsLinear, LinearMax, SumOfNorms};
    use crate::problems::{ConstraintSpec, Distribution, GenerationMetadata, Generator, ObjectiveSpec};
    use crate::solver::Algorithm;

    fn free_constraint(n: usize) -> LinearMax {
        LinearMax::new(Matrix::zeros(1, n), vec![-1.0]).unwrap()
    }

    fn tiny_example(seed: u64, stochastic: bool) -> ProblemInstance {
        let mut rng = RngStream::new(seed);
        let a = crate::problems::generate_random_matrix(2, 2, Distribution::Uniform, &mut rng);
        let b = vec![0.3, -0.2];
        ProblemInstance {
            objective: ObjectiveSpec::AbsLinear { a, b },
            constraints: ConstraintSpec::LinearMax { alpha: Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), beta: vec![-0.5] },
            setup: ProxSetup::ball(2, 1.0).unwrap(),
            metadata: GenerationMetadata {
                generator: Generator::Custom,
                distribution: None,
                seed,
                summands: 2,
                dim: 2,
                constraints: 1,
                notes: vec![if stochastic { "stochastic".into() } else { "exact".into() }],
            },
        }
    }

    #[test]
    fn norm_minimum_is_the_origin() {
        let setup = ProxSetup::ball(2, 1.0).unwrap();
        let f = SumOfNorms::new(Matrix::zeros(1, 2)).unwrap();
        let r = grid_search(&setup, &f, &free_constraint(2), 100).unwrap();
        assert!(r.f_star <= r.slack);
        assert!(norm2(&r.x_star) <= r.spacing);
        assert_eq!(r.slack, 0.02);
    }

    #[test]
    fn grid_refinement_is_self_consistent() {
        let inst = tiny_example(4, false);
        let m_f = inst.objective_oracle().unwrap().lipschitz_bound();
        for res in [50, 100, 200] {
            let coarse = grid_search_reference(&inst, res).unwrap();
            let fine = grid_search_reference(&inst, 2 * res).unwrap();
            assert!((coarse.f_star - fine.f_star).abs() <= m_f * coarse.spacing);
            assert!(fine.f_star <= coarse.f_star + 1e-15);
        }
    }

    #[test]
    fn infeasible_and_oversized_grids_error() {
        let setup = ProxSetup::ball(2, 1.0).unwrap();
        let f = SumOfNorms::new(Matrix::zeros(1, 2)).unwrap();
        let g = LinearMax::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![10.0]).unwrap();
        assert!(matches!(grid_search(&setup, &f, &g, 20), Err(Error::EmptyFeasibleGrid(20))));
        let big = ProxSetup::ball(4, 1.0).unwrap();
        let f4 = SumOfNorms::new(Matrix::zeros(1, 4)).unwrap();
        assert!(matches!(grid_search(&big, &f4, &free_constraint(4), 4), Err(Error::DimensionTooLarge(4))));
    }

    #[test]
    fn simplex_grid_enumerates_compositions() {
        let setup = ProxSetup::simplex(3).unwrap();
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]]).unwrap();
        let f = crate::oracle::SimplexColumnSampler::new(a).unwrap();
        let r = grid_search(&setup, &f, &free_constraint(3), 60).unwrap();
        assert_eq!(r.feasible_points, 61 * 62 / 2);
        // min ½ Σ d_i x_i² on the simplex: x_i ∝ 1/d_i, value ½ / Σ 1/d_i.
        let exact = 0.5 / (1.0 + 0.5 + 1.0 / 3.0);
        assert!(r.f_star >= exact - 1e-12 && r.f_star - exact <= r.slack);
    }

    #[test]
    fn deterministic_tiny_run_passes_every_check() {
        let inst = tiny_example(1, false);
        let reference = grid_search_reference(&inst, resolution_for_slack(&inst, 0.01).unwrap()).unwrap();
        assert!(reference.slack <= 0.01);
        let (f, g) = inst.oracles().unwrap();
        let cfg = SolverConfig::new(0.1, Algorithm::Modified, inst.default_start(), 3).exact();
        let sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg).unwrap();
        let report = audit_solution(&sol, &inst, Some(&reference)).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        assert!(report.checks.iter().any(|c| c.name == "optimality-gap"));
        // Audits are pure.
        assert_eq!(audit_solution(&sol, &inst, Some(&reference)).unwrap(), report);
    }

    #[test]
    fn doctored_iteration_count_fails_the_bound() {
        let inst = tiny_example(2, false);
        let (f, g) = inst.oracles().unwrap();
        let cfg = SolverConfig::new(0.1, Algorithm::Standard, inst.default_start(), 3).exact();
        let mut sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg).unwrap();
        let bound = sol.theoretical_bound;
        sol.iterations = bound + 1;
        let report = audit_solution(&sol, &inst, None).unwrap();
        let c = report.checks.iter().find(|c| c.name == "iterations-within-bound").unwrap();
        assert_eq!(c.status, Status::Fail);
        assert_eq!((c.measured, c.threshold), ((bound + 1) as f64, bound as f64));
        assert!(!report.passed());
    }

    #[test]
    fn mismatched_instance_is_rejected() {
        let inst = tiny_example(2, false);
        let (f, g) = inst.oracles().unwrap();
        let cfg = SolverConfig::new(0.1, Algorithm::Standard, inst.default_start(), 3).exact();
        let sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg).unwrap();
        let other = crate::problems::make_fts(3, 4, 2, 1).unwrap();
        assert!(matches!(audit_solution(&sol, &other, None), Err(Error::InstanceMismatch(_))));
    }

    #[test]
    fn stochastic_expectation_over_seeds() {
        let inst = tiny_example(5, true);
        let reference = grid_search_reference(&inst, resolution_for_slack(&inst, 0.01).unwrap()).unwrap();
        let base = SolverConfig::new(0.1, Algorithm::Modified, inst.default_start(), 0);
        let seeds: Vec<u64> = (0..50).collect();
        let gaps = multi_seed_gaps(&inst, &base, &seeds, reference.f_star).unwrap();
        let check = audit_expectation(&gaps, 0.1, reference.slack).unwrap();
        assert_ne!(check.status, Status::Fail, "{}", check.line());
    }

    #[test]
    fn expectation_statuses() {
        assert_eq!(audit_expectation(&[0.0, 0.1], 0.1, 0.0).unwrap().status, Status::Pass);
        assert_eq!(audit_expectation(&[0.1, 0.12], 0.1, 0.0).unwrap().status, Status::Warn);
        assert_eq!(audit_expectation(&[1.0, 1.0], 0.1, 0.0).unwrap().status, Status::Fail);
        assert!(audit_expectation(&[1.0], 0.1, 0.0).is_err());
    }

    fn lemma_run() -> (Solution, ProxSetup, AbsLinear, LinearMax) {
        let setup = ProxSetup::ball(2, 1.0).unwrap();
        let f = AbsLinear::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![0.0]).unwrap();
        let g = LinearMax::new(Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap(), vec![-10.0]).unwrap();
        let cfg = SolverConfig::new(0.5, Algorithm::Standard, vec![1.0, 0.0], 1).exact().recording_iterates();
        let sol = solve(&setup, &f, &g, &cfg).unwrap();
        (sol, setup, f, g)
    }

    #[test]
    fn thirty_two_step_run_satisfies_the_inequality() {
        let (sol, setup, f, g) = lemma_run();
        assert_eq!(sol.iterations, 32);
        let report = audit_lemma1(&sol, &setup, &f, &g, &[0.0, 0.0]).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        let steps = report.checks.iter().find(|c| c.name == "lemma1-steps").unwrap();
        assert_eq!(steps.measured, 32.0);
    }

    #[test]
    fn perturbed_iterate_is_flagged() {
        let (mut sol, setup, f, g) = lemma_run();
        let its = sol.iterates.as_mut().unwrap();
        its[1][0] -= 0.1;
        let report = audit_lemma1(&sol, &setup, &f, &g, &[0.0, 0.0]).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn zero_subgradient_steps_pass_trivially() {
        let setup = ProxSetup::ball(2, 1.0).unwrap();
        let f = AbsLinear::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![0.0]).unwrap();
        let g = free_constraint(2);
        let cfg = SolverConfig::new(0.5, Algorithm::Modified, vec![0.0, 0.3], 1).exact().recording_iterates();
        let sol = solve(&setup, &f, &g, &cfg).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.trace[0].step_size, None);
        let report = audit_lemma1(&sol, &setup, &f, &g, &[0.0, 0.0]).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn lemma_audit_needs_a_full_deterministic_trace() {
        let setup = ProxSetup::ball(2, 1.0).unwrap();
        let f = AbsLinear::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), vec![1.0]).unwrap();
        let g = free_constraint(2);
        let cfg = SolverConfig::new(0.5, Algorithm::Standard, vec![1.0, 0.0], 1).recording_iterates();
        let sol = solve(&setup, &f, &g, &cfg).unwrap();
        assert!(matches!(audit_lemma1(&sol, &setup, &f, &g, &[1.0, 0.0]), Err(Error::TraceUnavailable)));
        let cfg = SolverConfig::new(0.5, Algorithm::Standard, vec![1.0, 0.0], 1).exact();
        let sol = solve(&setup, &f, &g, &cfg).unwrap();
        assert!(matches!(audit_lemma1(&sol, &setup, &f, &g, &[1.0, 0.0]), Err(Error::TraceUnavailable)));
    }

    #[test]
    fn reference_mirr_agrees_with_closed_forms() {
        let ball = ProxSetup::ball(2, 1.0).unwrap();
        let u = reference_mirr(&ball, &[0.5, 0.0], &[-2.0, 0.0]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-8 && u[1].abs() < 1e-8, "{u:?}");
        let simplex = ProxSetup::simplex(3).unwrap();
        let x = [0.25, 0.25, 0.5];
        let u = reference_mirr(&simplex, &x, &[0.0, 0.0, 0.0]).unwrap();
        assert!(u.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8), "{u:?}");
    }

    #[test]
    fn bias_estimates_are_small() {
        let inst = tiny_example(9, true);
        let (f, g) = inst.oracles().unwrap();
        let mut rng = RngStream::new(4);
        let (err, tol) = objective_bias(f.as_ref(), &[0.1, 0.2], 20_000, &mut rng).unwrap();
        assert!(err <= tol, "{err} > {tol}");
        let (err, _) = constraint_bias(g.as_ref(), 0, &[0.1, 0.2], 10, &mut rng).unwrap();
        assert_eq!(err, 0.0);
    }
}
