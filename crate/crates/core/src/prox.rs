//! Proximal setups: distance-generating function `d`, its Bregman divergence
//! `V_x(y) = d(y) - d(x) - <∇d(x), y - x>` and the mirror step
//! `Mirr_x(p) = argmin_{u ∈ Q} <p, u> + V_x(u)`.
//!
//! Three setups are supported, each with a closed-form mirror step:
//!
//! | Kind | `d(x)` | Mirror step |
//! |------|--------|-------------|
//! | Euclidean ball | `½‖x‖²` | radial projection of `x - p` |
//! | Euclidean box | `½‖x‖²` | clamp of `x - p` |
//! | Entropy simplex | `Σ x_i ln x_i` | `u_i ∝ x_i exp(-p_i)` |
//!
//! Points that sit outside the feasible set by at most [`FEASIBILITY_TOL`] are
//! projected back silently; anything further out is an error.

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm2};
use crate::{Error, Result, RngStream, FEASIBILITY_TOL};

/// Floor applied to simplex coordinates before taking logarithms.
pub const ENTROPY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProxKind {
    EuclideanBall { radius: f64 },
    EuclideanBox { lower: Vec<f64>, upper: Vec<f64> },
    EntropySimplex,
}

/// An immutable proximal setup over a feasible set `Q ⊂ ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxSetup {
    kind: ProxKind,
    dim: usize,
    theta0: f64,
}

impl ProxSetup {
    /// Ball of the given radius centred at the origin. `Θ₀ = √2·radius`, since
    /// `½‖x - y‖² ≤ 2r²` on the ball.
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball needs n >= 1 and radius > 0 (n = {dim}, r = {radius})")));
        }
        Ok(Self { kind: ProxKind::EuclideanBall { radius }, dim, theta0: std::f64::consts::SQRT_2 * radius })
    }

    /// Axis-aligned box. `Θ₀ = sqrt(½ Σ (u_i - l_i)²)`, the half squared diameter.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter("box bounds must be finite with lower <= upper".into()));
        }
        let half_sq: f64 = 0.5 * lower.iter().zip(&upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>();
        let dim = lower.len();
        Ok(Self { kind: ProxKind::EuclideanBox { lower, upper }, dim, theta0: half_sq.sqrt().max(f64::MIN_POSITIVE) })
    }

    /// Probability simplex with the entropy distance-generating function.
    ///
    /// The Bregman divergence is unbounded near the boundary, so no finite `Θ₀`
    /// covers all pairs. The default `Θ₀ = sqrt(ln n)` bounds `V_{x⁰}(y)` from
    /// the barycentre `x⁰ = (1/n, …, 1/n)`, the usual starting point.
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("simplex needs n >= 1".into()));
        }
        let theta0 = (dim as f64).ln().sqrt().max(1e-3);
        Ok(Self { kind: ProxKind::EntropySimplex, dim, theta0 })
    }

    pub fn with_theta0(mut self, theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta0 must be positive, got {theta0}")));
        }
        self.theta0 = theta0;
        Ok(self)
    }

    pub fn kind(&self) -> &ProxKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProxKind::EuclideanBall { .. } => "euclidean-ball",
            ProxKind::EuclideanBox { .. } => "euclidean-box",
            ProxKind::EntropySimplex => "entropy-simplex",
        }
    }

    /// Radius of the smallest origin-centred ball containing `Q`.
    pub fn outer_radius(&self) -> f64 {
        match &self.kind {
            ProxKind::EuclideanBall { radius } => *radius,
            ProxKind::EuclideanBox { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| l.abs().max(u.abs()).powi(2)).sum::<f64>().sqrt()
            }
            ProxKind::EntropySimplex => 1.0,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// How far `x` lies outside `Q` (0 for feasible points).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ProxKind::EuclideanBall { radius } => (norm2(x) - radius).max(0.0),
            ProxKind::EuclideanBox { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            ProxKind::EntropySimplex => {
                let neg = x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
                let sum: f64 = x.iter().sum();
                neg.max((sum - 1.0).abs())
            }
        }
    }

    /// Euclidean-style projection used to absorb floating-point drift.
    fn pull_back(&self, x: &mut [f64]) {
        match &self.kind {
            ProxKind::EuclideanBall { radius } => {
                let nrm = norm2(x);
                if nrm > *radius {
                    let s = radius / nrm;
                    x.iter_mut().for_each(|v| *v *= s);
                }
            }
            ProxKind::EuclideanBox { lower, upper } => {
                for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
            ProxKind::EntropySimplex => {
                x.iter_mut().for_each(|v| *v = v.max(0.0));
                let s: f64 = x.iter().sum();
                if s > 0.0 {
                    x.iter_mut().for_each(|v| *v /= s);
                }
            }
        }
    }

    /// Checks membership in `Q`: drift up to [`FEASIBILITY_TOL`] is projected
    /// away in place, larger violations are errors.
    pub fn ensure_feasible(&self, x: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point"));
        }
        let viol = self.violation(x);
        if viol > FEASIBILITY_TOL {
            return Err(Error::Infeasible { set: self.name(), violation: viol });
        }
        if viol > 0.0 {
            self.pull_back(x);
        }
        Ok(())
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.is_finite()) && self.violation(x) <= FEASIBILITY_TOL
    }

    /// `d(x)`.
    pub fn distance_generating(&self, x: &[f64]) -> f64 {
        match self.kind {
            ProxKind::EntropySimplex => x.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum(),
            _ => 0.5 * dot(x, x),
        }
    }

    /// `∇d(x)`; entropy coordinates are floored at [`ENTROPY_FLOOR`].
    pub fn grad_distance_generating(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ProxKind::EntropySimplex => x.iter().map(|&v| v.max(ENTROPY_FLOOR).ln() + 1.0).collect(),
            _ => x.to_vec(),
        }
    }

    /// Bregman divergence `V_x(y)`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        match self.kind {
            ProxKind::EntropySimplex => {
                let mut acc = 0.0;
                for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
                    if xi <= 0.0 {
                        return Err(Error::ZeroCoordinate { index: i });
                    }
                    if yi > 0.0 {
                        acc += yi * (yi / xi).ln();
                    }
                    acc += xi - yi;
                }
                Ok(acc.max(0.0))
            }
            _ => Ok(0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()),
        }
    }

    /// Mirror step `Mirr_x(p)` written into `out`.
    pub fn mirr_into(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        self.check_dim(p)?;
        self.check_dim(out)?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mirror step direction"));
        }
        match &self.kind {
            ProxKind::EuclideanBall { radius } => {
                for ((o, a), b) in out.iter_mut().zip(x).zip(p) {
                    *o = a - b;
                }
                let nrm = norm2(out);
                if nrm > *radius {
                    let s = radius / nrm;
                    out.iter_mut().for_each(|v| *v *= s);
                }
            }
            ProxKind::EuclideanBox { lower, upper } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (x[i] - p[i]).clamp(lower[i], upper[i]);
                }
            }
            ProxKind::EntropySimplex => {
                let mut top = f64::NEG_INFINITY;
                for ((o, &a), &b) in out.iter_mut().zip(x).zip(p) {
                    *o = a.max(ENTROPY_FLOOR).ln() - b;
                    top = top.max(*o);
                }
                let mut sum = 0.0;
                for o in out.iter_mut() {
                    *o = (*o - top).exp();
                    sum += *o;
                }
                if !(sum.is_finite() && sum > 0.0) {
                    return Err(Error::NonFinite("entropy mirror step"));
                }
                out.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(())
    }

    pub fn mirr(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.mirr_into(x, p, &mut out)?;
        Ok(out)
    }

    /// Dual norm used for `M_k`: the Euclidean norm for every setup.
    #[inline]
    pub fn dual_norm(&self, p: &[f64]) -> f64 {
        norm2(p)
    }

    /// A random point of `Q`: uniform in the ball or box, flat Dirichlet on the
    /// simplex (strictly positive coordinates).
    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match &self.kind {
            ProxKind::EuclideanBall { radius } => {
                let mut v: Vec<f64> = (0..self.dim).map(|_| rng.normal()).collect();
                let nrm = norm2(&v).max(f64::MIN_POSITIVE);
                let r = radius * rng.uniform().powf(1.0 / self.dim as f64);
                v.iter_mut().for_each(|c| *c *= r / nrm);
                v
            }
            ProxKind::EuclideanBox { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| l + (u - l) * rng.uniform()).collect()
            }
            ProxKind::EntropySimplex => {
                let mut v: Vec<f64> = (0..self.dim).map(|_| -rng.uniform_open0().ln() + 1e-12).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|c| *c /= s);
                v
            }
        }
    }

    /// Sampled check of `sup V_x(y) ≤ Θ₀²`. Only a lower bound on the true
    /// supremum; a pass is evidence, a fail is a certificate.
    pub fn check_theta0(&self, samples: usize, rng: &mut RngStream) -> Result<Theta0Report> {
        if samples == 0 {
            return Err(Error::InvalidParameter("check_theta0 needs at least one sample".into()));
        }
        let mut max_observed = 0.0f64;
        for _ in 0..samples {
            let x = self.sample(rng);
            let y = self.sample(rng);
            max_observed = max_observed.max(self.bregman(&x, &y)?);
        }
        let bound = self.theta0 * self.theta0;
        Ok(Theta0Report { samples, max_observed, bound, passed: max_observed <= bound })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta0Report {
    pub samples: usize,
    pub max_observed: f64,
    /// `Θ₀²`.
    pub bound: f64,
    pub passed: bool,
}
