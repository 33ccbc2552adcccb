//! Python bindings for `asmd-core`.
//!
//! Vectors cross the boundary as lists of floats; instances, setups and
//! solutions are opaque classes. Build with `maturin develop`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use asmd_core::problems::{self, Distribution, ProblemInstance};
use asmd_core::solver::{self, Algorithm, SolverConfig};
use asmd_core::{verify, Error, RngStream};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown {what} '{s}'")))
}

/// Feasible set with its distance-generating function.
#[pyclass(name = "ProxSetup", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyProxSetup(asmd_core::ProxSetup);

#[pymethods]
impl PyProxSetup {
    /// Euclidean ball of the given radius centred at the origin.
    #[staticmethod]
    fn ball(dim: usize, radius: f64) -> PyResult<Self> {
        asmd_core::ProxSetup::ball(dim, radius).map(Self).map_err(py_err)
    }

    /// Euclidean box `lower <= x <= upper`.
    #[staticmethod]
    #[pyo3(name = "box")]
    fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> PyResult<Self> {
        asmd_core::ProxSetup::boxed(lower, upper).map(Self).map_err(py_err)
    }

    /// Probability simplex with the entropy distance.
    #[staticmethod]
    fn simplex(dim: usize) -> PyResult<Self> {
        asmd_core::ProxSetup::simplex(dim).map(Self).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn theta0(&self) -> f64 {
        self.0.theta0()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn bregman(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.0.bregman(&x, &y).map_err(py_err)
    }

    /// Mirror step `argmin_u <p, u> + V_x(u)`.
    fn mirr(&self, x: Vec<f64>, p: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.mirr(&x, &p).map_err(py_err)
    }

    fn is_feasible(&self, x: Vec<f64>) -> bool {
        self.0.is_feasible(&x)
    }

    /// A reproducible random point of the set.
    #[pyo3(signature = (seed=0))]
    fn sample(&self, seed: u64) -> Vec<f64> {
        self.0.sample(&mut RngStream::new(seed))
    }

    fn __repr__(&self) -> String {
        format!("ProxSetup({}, dim={}, theta0={})", self.0.name(), self.0.dim(), self.0.theta0())
    }
}

/// A benchmark problem: objective, constraints and feasible set.
#[pyclass(name = "Instance", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyInstance(ProblemInstance);

#[pymethods]
impl PyInstance {
    #[staticmethod]
    #[pyo3(signature = (summands, n, m, dist="gumbel", seed=1))]
    fn example1(summands: usize, n: usize, m: usize, dist: &str, seed: u64) -> PyResult<Self> {
        problems::make_example1(summands, n, m, parse::<Distribution>("distribution", dist)?, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (summands, n, m, dist="gumbel", seed=1))]
    fn example2(summands: usize, n: usize, m: usize, dist: &str, seed: u64) -> PyResult<Self> {
        problems::make_example2(summands, n, m, parse::<Distribution>("distribution", dist)?, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (summands, n, m, seed=1))]
    fn fts(summands: usize, n: usize, m: usize, seed: u64) -> PyResult<Self> {
        problems::make_fts(summands, n, m, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, m, dist="uniform", seed=1))]
    fn simplex(n: usize, m: usize, dist: &str, seed: u64) -> PyResult<Self> {
        problems::make_simplex(n, m, parse::<Distribution>("distribution", dist)?, seed).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        ProblemInstance::load(path).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        ProblemInstance::from_bytes(data).map(Self).map_err(py_err)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(py_err)
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn constraints(&self) -> usize {
        self.0.metadata.constraints
    }

    #[getter]
    fn setup(&self) -> PyProxSetup {
        PyProxSetup(self.0.setup.clone())
    }

    #[getter]
    fn name(&self) -> String {
        self.0.auto_name()
    }

    fn default_start(&self) -> Vec<f64> {
        self.0.default_start()
    }

    /// Exact objective value `f(x)`.
    fn objective(&self, x: Vec<f64>) -> PyResult<f64> {
        check_dim(&self.0, &x)?;
        Ok(self.0.objective_oracle().map_err(py_err)?.value(&x))
    }

    /// `max_j g_j(x)`.
    fn max_constraint(&self, x: Vec<f64>) -> PyResult<f64> {
        check_dim(&self.0, &x)?;
        self.0.constraint_oracle().and_then(|g| g.max_value(&x)).map_err(py_err)
    }

    fn summary(&self) -> String {
        self.0.summary()
    }

    fn __repr__(&self) -> String {
        format!("Instance({}, id={})", self.0.auto_name(), self.0.id())
    }
}

fn check_dim(inst: &ProblemInstance, x: &[f64]) -> PyResult<()> {
    if x.len() != inst.dim() {
        return Err(py_err(Error::DimensionMismatch { expected: inst.dim(), got: x.len() }));
    }
    Ok(())
}

/// Outcome of one solver run.
#[pyclass(name = "Solution", frozen, from_py_object)]
#[derive(Clone)]
pub struct PySolution(asmd_core::Solution);

#[pymethods]
impl PySolution {
    #[getter]
    fn x_bar(&self) -> Vec<f64> {
        self.0.x_bar.clone()
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.0.algorithm.as_str()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.0.iterations
    }

    #[getter]
    fn productive(&self) -> u64 {
        self.0.productive_count
    }

    #[getter]
    fn nonproductive(&self) -> u64 {
        self.0.nonproductive_count
    }

    #[getter]
    fn objective_at_xbar(&self) -> f64 {
        self.0.objective_value_at_xbar
    }

    #[getter]
    fn constraint_at_xbar(&self) -> f64 {
        self.0.constraint_value_at_xbar
    }

    #[getter]
    fn theoretical_bound(&self) -> u64 {
        self.0.theoretical_bound
    }

    #[getter]
    fn stopped_by(&self) -> &'static str {
        self.0.stopped_by.as_str()
    }

    #[getter]
    fn wall_time_s(&self) -> f64 {
        self.0.wall_time_s
    }

    /// Oracle call totals: objective subgradients, constraint values,
    /// constraint subgradients.
    #[getter]
    fn calls(&self) -> (u64, u64, u64) {
        let c = self.0.totals;
        (c.objective_subgrad, c.constraint_values, c.constraint_subgrad)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| py_err(e.into()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution({}, eps={}, iterations={}, productive={}, stopped_by={})",
            self.0.algorithm.as_str(),
            self.0.epsilon,
            self.0.iterations,
            self.0.productive_count,
            self.0.stopped_by.as_str()
        )
    }
}

/// Runs the standard or modified method on an instance.
#[pyfunction]
#[pyo3(signature = (instance, eps, algorithm="modified", seed=0, x0=None, theta0=None, cap=None, exact=false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    eps: f64,
    algorithm: &str,
    seed: u64,
    x0: Option<Vec<f64>>,
    theta0: Option<f64>,
    cap: Option<u64>,
    exact: bool,
) -> PyResult<PySolution> {
    let inst = &instance.0;
    let alg: Algorithm = parse("algorithm", algorithm)?;
    let mut cfg = SolverConfig::new(eps, alg, x0.unwrap_or_else(|| inst.default_start()), seed);
    cfg.theta0 = theta0;
    cfg.max_iterations = cap;
    cfg.exact_subgradients = exact;
    let (f, g) = inst.oracles().map_err(py_err)?;
    let sol = py.detach(|| solver::solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg)).map_err(py_err)?;
    Ok(PySolution(sol))
}

/// Worst-case iteration count for the given Lipschitz bounds.
#[pyfunction]
fn theoretical_bound(m_f: f64, m_g: f64, theta0: f64, eps: f64) -> u64 {
    solver::theoretical_bound(m_f, m_g, theta0, eps)
}

/// Brute-force reference optimum `(f_star, x_star, slack)` for instances of
/// dimension at most three.
#[pyfunction]
#[pyo3(signature = (instance, resolution=None, slack=0.01))]
fn grid_reference(py: Python<'_>, instance: &PyInstance, resolution: Option<usize>, slack: f64) -> PyResult<(f64, Vec<f64>, f64)> {
    let inst = &instance.0;
    let res = match resolution {
        Some(r) => r,
        None => verify::resolution_for_slack(inst, slack).map_err(py_err)?,
    };
    let r = py.detach(|| verify::grid_search_reference(inst, res)).map_err(py_err)?;
    Ok((r.f_star, r.x_star, r.slack))
}

/// Audits a solution against its instance. Returns `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (solution, instance, resolution=None))]
fn audit(py: Python<'_>, solution: &PySolution, instance: &PyInstance, resolution: Option<usize>) -> PyResult<(bool, String)> {
    let inst = &instance.0;
    let reference = match resolution {
        Some(r) => Some(py.detach(|| verify::grid_search_reference(inst, r)).map_err(py_err)?),
        None => None,
    };
    let report = verify::audit_solution(&solution.0, inst, reference.as_ref()).map_err(py_err)?;
    Ok((report.passed(), report.to_text()))
}

/// Adaptive stochastic mirror descent for constrained convex problems.
#[pymodule]
mod asmd {
    #[pymodule_export]
    use super::{audit, grid_reference, solve, theoretical_bound, PyInstance, PyProxSetup, PySolution};
}
