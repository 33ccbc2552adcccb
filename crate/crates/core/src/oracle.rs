//! First-order oracles.
//!
//! Every objective exposes exact values, a stochastic subgradient that is
//! unbiased for [`ObjectiveOracle::exact_subgrad`], and a declared bound
//! `M` with `‖stochastic subgradient‖₂ ≤ M` on every draw. Constraint values
//! are always exact; only their subgradients may be random.
//!
//! The almost-sure bound is checked with `debug_assert!` on every draw, so
//! any test run exercises it.

use std::fmt::Debug;

use crate::linalg::{dot, norm2, Matrix};
use crate::{Error, Result, RngStream};


/// Objective `f` with stochastic subgradients `∇f(x, ξ)`.
pub trait ObjectiveOracle: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Draws `∇f(x, ξ)` into `out`.
    fn stochastic_subgrad(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()>;

    /// Writes the subgradient `E[∇f(x, ξ)]` into `out`.
    fn exact_subgrad(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn has_exact_subgrad(&self) -> bool {
        true
    }

    /// Declared `M_f`.
    fn lipschitz_bound(&self) -> f64;

    fn name(&self) -> &'static str;
}

/// A family of constraints `g_j`, `j = 0..m`, combined as `g = max_j g_j`.
///
/// Indices are zero-based throughout.
pub trait ConstraintOracle: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn count(&self) -> usize;

    fn value(&self, j: usize, x: &[f64]) -> Result<f64>;

    fn stochastic_subgrad(&self, j: usize, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()>;

    fn exact_subgrad(&self, j: usize, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Declared `M_g`, valid for every component.
    fn lipschitz_bound(&self) -> f64;

    /// `g(x) = max_j g_j(x)`.
    fn max_value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.argmax(x)?.1)
    }

    /// Smallest index attaining the maximum, with the maximum.
    fn argmax(&self, x: &[f64]) -> Result<(usize, f64)> {
        let mut best = (0, self.value(0, x)?);
        for j in 1..self.count() {
            let v = self.value(j, x)?;
            if v > best.1 {
                best = (j, v);
            }
        }
        Ok(best)
    }

    /// Smallest `j` with `g_j(x) > eps`.
    fn first_violated(&self, x: &[f64], eps: f64) -> Result<Option<usize>> {
        for j in 0..self.count() {
            if self.value(j, x)? > eps {
                return Ok(Some(j));
            }
        }
        Ok(None)
    }
}

fn check_len(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

fn check_batch(batch: usize) -> Result<usize> {
    if batch == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    Ok(batch)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn debug_check_bound(out: &[f64], bound: f64) {
    debug_assert!(
        norm2(out) <= bound * (1.0 + 1e-12) + 1e-12,
        "stochastic subgradient norm {} exceeds declared bound {bound}",
        norm2(out)
    );
}

/// `f(x) = (1/N) Σ |<a_i, x> - b_i|`.
#[derive(Debug, Clone)]
pub struct AbsLinear {
    a: Matrix,
    b: Vec<f64>,
    batch: usize,
    bound: f64,
}

impl AbsLinear {
    /// `M_f = max_i ‖a_i‖₂`.
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::InvalidParameter("abs-linear objective needs N >= 1 and n >= 1".into()));
        }
        check_len(a.rows(), &b)?;
        let bound = (0..a.rows()).map(|i| norm2(a.row(i))).fold(0.0, f64::max);
        Ok(Self { a, b, batch: 1, bound })
    }

    /// Averages `batch` independent component draws per query.
    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        self.batch = check_batch(batch)?;
        Ok(self)
    }
}

impl ObjectiveOracle for AbsLinear {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.a.rows();
        (0..n).map(|i| (dot(self.a.row(i), x) - self.b[i]).abs()).sum::<f64>() / n as f64
    }

    fn stochastic_subgrad(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let w = 1.0 / self.batch as f64;
        for _ in 0..self.batch {
            let i = rng.index(self.a.rows());
            let row = self.a.row(i);
            let s = w * sign(dot(row, x) - self.b[i]);
            if s != 0.0 {
                out.iter_mut().zip(row).for_each(|(o, a)| *o += s * a);
            }
        }
        debug_check_bound(out, self.bound);
        Ok(())
    }

    fn exact_subgrad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let w = 1.0 / self.a.rows() as f64;
        for i in 0..self.a.rows() {
            let row = self.a.row(i);
            let s = w * sign(dot(row, x) - self.b[i]);
            out.iter_mut().zip(row).for_each(|(o, a)| *o += s * a);
        }
        Ok(())
    }

    fn lipschitz_bound(&self) -> f64 {
        self.bound
    }

    fn name(&self) -> &'static str {
        "abs-linear"
    }
}

/// `f(x) = (1/N) Σ ½ <C_i x, x>` with each `C_i` symmetrized on construction.
#[derive(Debug, Clone)]
pub struct QuadraticSum {
    c: Vec<Matrix>,
    batch: usize,
    bound: f64,
}

impl QuadraticSum {
    /// `M_f = max_i ‖C_i‖₂ · radius`, where `radius` bounds `‖x‖₂` over `Q`.
    pub fn new(c: Vec<Matrix>, radius: f64) -> Result<Self> {
        let op_norms = c
            .iter()
            .map(|m| {
                if m.rows() != m.cols() {
                    // Rejected below.
                    return 0.0;
                }
                let ev = m.symmetrized().symmetric_eigenvalues();
                ev.first().map_or(0.0, |l| l.abs()).max(ev.last().map_or(0.0, |l| l.abs()))
            })
            .collect::<Vec<_>>();
        Self::with_operator_norms(c, &op_norms, radius)
    }

    /// As [`QuadraticSum::new`] with precomputed spectral norms of the symmetrized matrices.
    pub fn with_operator_norms(c: Vec<Matrix>, op_norms: &[f64], radius: f64) -> Result<Self> {
        let n = c.first().map(Matrix::rows).ok_or_else(|| Error::InvalidParameter("quadratic-sum objective needs N >= 1".into()))?;
        if n == 0 {
            return Err(Error::InvalidParameter("quadratic-sum objective needs n >= 1".into()));
        }
        check_len(c.len(), op_norms)?;
        for m in &c {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: if m.rows() != n { m.rows() } else { m.cols() } });
            }
        }
        let c: Vec<Matrix> = c.into_iter().map(|m| if m.is_symmetric() { m } else { m.symmetrized() }).collect();
        let bound = op_norms.iter().copied().fold(0.0, f64::max) * radius;
        Ok(Self { c, batch: 1, bound })
    }

    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        self.batch = check_batch(batch)?;
        Ok(self)
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.c
    }
}

impl ObjectiveOracle for QuadraticSum {
    fn dim(&self) -> usize {
        self.c[0].rows()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut cx = vec![0.0; self.dim()];
        let total: f64 = self
            .c
            .iter()
            .map(|m| {
                m.mul_vec_into(x, &mut cx);
                0.5 * dot(&cx, x)
            })
            .sum();
        total / self.c.len() as f64
    }

    fn stochastic_subgrad(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        if self.batch == 1 {
            self.c[rng.index(self.c.len())].mul_vec_into(x, out);
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            let w = 1.0 / self.batch as f64;
            for _ in 0..self.batch {
                let m = &self.c[rng.index(self.c.len())];
                for (i, o) in out.iter_mut().enumerate() {
                    *o += w * dot(m.row(i), x);
                }
            }
        }
        debug_check_bound(out, self.bound);
        Ok(())
    }

    fn exact_subgrad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let w = 1.0 / self.c.len() as f64;
        for m in &self.c {
            for (i, o) in out.iter_mut().enumerate() {
                *o += w * dot(m.row(i), x);
            }
        }
        Ok(())
    }

    fn lipschitz_bound(&self) -> f64 {
        self.bound
    }

    fn name(&self) -> &'static str {
        "quadratic-sum"
    }
}

/// `f(x) = Σ_k ‖x - A_k‖₂` (plain sum, no `1/N`).
#[derive(Debug, Clone)]
pub struct SumOfNorms {
    anchors: Matrix,
    batch: usize,
}

impl SumOfNorms {
    /// `anchors` holds one point per row. `M_f = N`.
    pub fn new(anchors: Matrix) -> Result<Self> {
        if anchors.rows() == 0 || anchors.cols() == 0 {
            return Err(Error::InvalidParameter("sum-of-norms objective needs N >= 1 and n >= 1".into()));
        }
        Ok(Self { anchors, batch: 1 })
    }

    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        self.batch = check_batch(batch)?;
        Ok(self)
    }

    /// Adds `scale · (x - A_k)/‖x - A_k‖` to `out`; the kink contributes zero.
    fn add_unit(&self, k: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let a = self.anchors.row(k);
        let d = x.iter().zip(a).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if d > 0.0 {
            let s = scale / d;
            for ((o, p), q) in out.iter_mut().zip(x).zip(a) {
                *o += s * (p - q);
            }
        }
    }
}

impl ObjectiveOracle for SumOfNorms {
    fn dim(&self) -> usize {
        self.anchors.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..self.anchors.rows())
            .map(|k| x.iter().zip(self.anchors.row(k)).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
            .sum()
    }

    fn stochastic_subgrad(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let n = self.anchors.rows();
        let scale = n as f64 / self.batch as f64;
        for _ in 0..self.batch {
            self.add_unit(rng.index(n), x, scale, out);
        }
        debug_check_bound(out, self.lipschitz_bound());
        Ok(())
    }

    fn exact_subgrad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.anchors.rows() {
            self.add_unit(k, x, 1.0, out);
        }
        Ok(())
    }

    fn lipschitz_bound(&self) -> f64 {
        self.anchors.rows() as f64
    }

    fn name(&self) -> &'static str {
        "sum-of-norms"
    }
}

/// `f(x) = ½ <A x, x>` on the simplex, with the O(n) column estimator:
/// draw `ξ = i` with probability `x_i` and return column `i` of `A`.
/// `A` is symmetrized so the estimator is unbiased for `∇f(x) = A x`.
#[derive(Debug, Clone)]
pub struct SimplexColumnSampler {
    a: Matrix,
    bound: f64,
}

impl SimplexColumnSampler {
    /// `M_f = max_i ‖A^⟨i⟩‖₂`.
    pub fn new(a: Matrix) -> Result<Self> {
        if a.rows() != a.cols() || a.rows() == 0 {
            return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
        }
        let a = if a.is_symmetric() { a } else { a.symmetrized() };
        let bound = (0..a.rows()).map(|i| norm2(a.row(i))).fold(0.0, f64::max);
        Ok(Self { a, bound })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }
}

impl ObjectiveOracle for SimplexColumnSampler {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(&self.a.mul_vec(x), x)
    }

    fn stochastic_subgrad(&self, x: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        let neg = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
        let total: f64 = x.iter().sum();
        let viol = neg.max((total - 1.0).abs());
        if viol > crate::FEASIBILITY_TOL || !total.is_finite() {
            return Err(Error::Infeasible { set: "entropy-simplex", violation: viol });
        }
        let u = rng.uniform() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &p) in x.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                pick = Some(i);
                if u < acc {
                    break;
                }
            }
        }
        let i = pick.ok_or(Error::Infeasible { set: "entropy-simplex", violation: 1.0 })?;
        // Symmetric, so column i is row i.
        out.copy_from_slice(self.a.row(i));
        debug_check_bound(out, self.bound);
        Ok(())
    }

    fn exact_subgrad(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        self.a.mul_vec_into(x, out);
        Ok(())
    }

    fn lipschitz_bound(&self) -> f64 {
        self.bound
    }

    fn name(&self) -> &'static str {
        "simplex-quadratic"
    }
}

/// `g_j(x) = <α_j, x> + β_j`; subgradients are exact (`α_j`).
#[derive(Debug, Clone)]
pub struct LinearMax {
    alpha: Matrix,
    beta: Vec<f64>,
    bound: f64,
}

impl LinearMax {
    /// `M_g = max_j ‖α_j‖₂`.
    pub fn new(alpha: Matrix, beta: Vec<f64>) -> Result<Self> {
        if alpha.rows() == 0 {
            return Err(Error::InvalidParameter("linear-max constraints need m >= 1".into()));
        }
        check_len(alpha.rows(), &beta)?;
        let bound = (0..alpha.rows()).map(|j| norm2(alpha.row(j))).fold(0.0, f64::max);
        Ok(Self { alpha, beta, bound })
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.beta.len() {
            return Err(Error::IndexOutOfRange { index: j, count: self.beta.len() });
        }
        Ok(())
    }
}

impl ConstraintOracle for LinearMax {
    fn dim(&self) -> usize {
        self.alpha.cols()
    }

    fn count(&self) -> usize {
        self.beta.len()
    }

    #[inline]
    fn value(&self, j: usize, x: &[f64]) -> Result<f64> {
        self.check_index(j)?;
        Ok(dot(self.alpha.row(j), x) + self.beta[j])
    }

    fn stochastic_subgrad(&self, j: usize, x: &[f64], _rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        self.exact_subgrad(j, x, out)
    }

    fn exact_subgrad(&self, j: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_index(j)?;
        check_len(self.dim(), x)?;
        out.copy_from_slice(self.alpha.row(j));
        Ok(())
    }

    fn lipschitz_bound(&self) -> f64 {
        self.bound
    }
}
