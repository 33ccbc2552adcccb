//! Benchmark instances: the finite-sum objectives, the Toeplitz-built linear
//! constraints, the sum-of-norms location problem and a simplex quadratic,
//! plus a self-describing on-disk format (see [`format`]).

mod format;
mod generate;

pub use format::{FORMAT_MAGIC, FORMAT_VERSION};
pub use generate::{generate_random_matrix, make_example1, make_example2, make_fts, make_simplex, regenerate, toeplitz_constraints};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::linalg::Matrix;
use crate::oracle::{AbsLinear, ConstraintOracle, LinearMax, ObjectiveOracle, QuadraticSum, SimplexColumnSampler, SumOfNorms};
use crate::{Error, ProxKind, ProxSetup, Result};

/// Entry distributions for random problem data. Parameters are fixed:
///
/// * `Gumbel`: location (mode) 1, scale 2, sampled as `1 - 2 ln(-ln U)`;
/// * `Exponential`: scale 1, sampled as `-ln(1 - U)`;
/// * `Uniform`: `U` on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    Gumbel,
    Exponential,
    Uniform,
}

impl Distribution {
    pub const GUMBEL_LOCATION: f64 = 1.0;
    pub const GUMBEL_SCALE: f64 = 2.0;
    pub const EXPONENTIAL_SCALE: f64 = 1.0;

    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::Gumbel => "gumbel",
            Distribution::Exponential => "exponential",
            Distribution::Uniform => "uniform",
        }
    }

    pub fn params(self) -> &'static str {
        match self {
            Distribution::Gumbel => "location=1 scale=2",
            Distribution::Exponential => "scale=1",
            Distribution::Uniform => "low=0 high=1",
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gumbel" => Ok(Distribution::Gumbel),
            "exponential" => Ok(Distribution::Exponential),
            "uniform" => Ok(Distribution::Uniform),
            other => Err(Error::InvalidParameter(format!("unknown distribution `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Mean absolute residual of a random linear system.
    Example1,
    /// Mean of positive definite quadratics.
    Example2,
    /// Sum of distances to anchor points.
    Fts,
    /// Quadratic on the simplex with the column-sampling oracle.
    Simplex,
    /// Hand-assembled instance; cannot be regenerated.
    Custom,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Example1 => "example1",
            Generator::Example2 => "example2",
            Generator::Fts => "fts",
            Generator::Simplex => "simplex",
            Generator::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "example1" | "1" => Ok(Generator::Example1),
            "example2" | "2" => Ok(Generator::Example2),
            "fts" => Ok(Generator::Fts),
            "simplex" => Ok(Generator::Simplex),
            "custom" => Ok(Generator::Custom),
            other => Err(Error::InvalidParameter(format!("unknown generator `{other}`"))),
        }
    }
}

/// Everything needed to rebuild an instance from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetadata {
    pub generator: Generator,
    pub distribution: Option<Distribution>,
    pub seed: u64,
    /// Number of summands (`N`) of the finite-sum objective.
    pub summands: usize,
    pub dim: usize,
    pub constraints: usize,
    /// Free-form remarks, e.g. which data repairs were applied.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    /// `f(x) = (1/N) Σ |<a_i, x> - b_i|`, rows of `a` are `a_i`.
    AbsLinear { a: Matrix, b: Vec<f64> },
    /// `f(x) = (1/N) Σ ½ <C_i x, x>` with cached spectral norms `‖C_i‖₂`.
    QuadraticSum { matrices: Vec<Matrix>, op_norms: Vec<f64> },
    /// `f(x) = Σ ‖x - A_k‖₂`, rows of `anchors` are `A_k`.
    SumOfNorms { anchors: Matrix },
    /// `f(x) = ½ <A x, x>` on the simplex.
    SimplexQuadratic { a: Matrix },
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::AbsLinear { .. } => "abs-linear",
            ObjectiveSpec::QuadraticSum { .. } => "quadratic-sum",
            ObjectiveSpec::SumOfNorms { .. } => "sum-of-norms",
            ObjectiveSpec::SimplexQuadratic { .. } => "simplex-quadratic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstraintSpec {
    /// `g_j(x) = <α_j, x> + β_j`.
    LinearMax { alpha: Matrix, beta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub objective: ObjectiveSpec,
    pub constraints: ConstraintSpec,
    pub setup: ProxSetup,
    pub metadata: GenerationMetadata,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.setup.dim()
    }

    pub fn objective_oracle(&self) -> Result<Box<dyn ObjectiveOracle>> {
        let radius = self.setup.outer_radius();
        Ok(match &self.objective {
            ObjectiveSpec::AbsLinear { a, b } => Box::new(AbsLinear::new(a.clone(), b.clone())?),
            ObjectiveSpec::QuadraticSum { matrices, op_norms } => {
                Box::new(QuadraticSum::with_operator_norms(matrices.clone(), op_norms, radius)?)
            }
            ObjectiveSpec::SumOfNorms { anchors } => Box::new(SumOfNorms::new(anchors.clone())?),
            ObjectiveSpec::SimplexQuadratic { a } => Box::new(SimplexColumnSampler::new(a.clone())?),
        })
    }

    pub fn constraint_oracle(&self) -> Result<Box<dyn ConstraintOracle>> {
        match &self.constraints {
            ConstraintSpec::LinearMax { alpha, beta } => Ok(Box::new(LinearMax::new(alpha.clone(), beta.clone())?)),
        }
    }

    pub fn oracles(&self) -> Result<(Box<dyn ObjectiveOracle>, Box<dyn ConstraintOracle>)> {
        Ok((self.objective_oracle()?, self.constraint_oracle()?))
    }

    /// `(1/√n, …, 1/√n)` for the finite-sum examples, the origin for the
    /// location problem and the barycentre on the simplex.
    pub fn default_start(&self) -> Vec<f64> {
        let n = self.dim();
        match (self.metadata.generator, self.setup.kind()) {
            (_, ProxKind::EntropySimplex) => vec![1.0 / n as f64; n],
            (Generator::Fts, _) => vec![0.0; n],
            (_, ProxKind::EuclideanBall { .. }) => vec![1.0 / (n as f64).sqrt(); n],
            (_, ProxKind::EuclideanBox { lower, upper }) => lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect(),
        }
    }

    /// Start point by name: `uniform-norm`, `origin` or `center`.
    pub fn named_start(&self, name: &str) -> Result<Vec<f64>> {
        let n = self.dim();
        match name {
            "uniform-norm" => Ok(vec![1.0 / (n as f64).sqrt(); n]),
            "origin" => Ok(vec![0.0; n]),
            "center" => Ok(vec![1.0 / n as f64; n]),
            "default" => Ok(self.default_start()),
            other => Err(Error::InvalidParameter(format!("unknown start `{other}`"))),
        }
    }

    /// Serialized `.prob` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        format::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        format::decode(bytes)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        if let Some(dir) = path.as_ref().parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Content fingerprint: the first 16 hex digits of SHA-256 over the
    /// serialized bytes.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// File stem used when no output path is given.
    pub fn auto_name(&self) -> String {
        let m = &self.metadata;
        let dist = m.distribution.map_or(String::new(), |d| format!("-{}", d.as_str()));
        format!("{}-N{}-n{}-m{}{}-s{}", m.generator.as_str(), m.summands, m.dim, m.constraints, dist, m.seed)
    }

    pub fn summary(&self) -> String {
        let m = &self.metadata;
        let mut s = format!(
            "instance {}\n  generator: {}\n  objective: {} (N = {})\n  constraints: linear-max (m = {})\n  setup: {} (n = {}, theta0 = {})\n  seed: {}",
            self.id(),
            m.generator.as_str(),
            self.objective.name(),
            m.summands,
            m.constraints,
            self.setup.name(),
            self.dim(),
            self.setup.theta0(),
            m.seed
        );
        if let Some(d) = m.distribution {
            s.push_str(&format!("\n  distribution: {} ({})", d.as_str(), d.params()));
        }
        for note in &m.notes {
            s.push_str(&format!("\n  note: {note}"));
        }
        s
    }
}
