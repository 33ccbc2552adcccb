use crate::linalg::{norm2, Matrix};
use crate::{Error, ProxSetup, Result, RngStream};

use super::{ConstraintSpec, Distribution, GenerationMetadata, Generator, ObjectiveSpec, ProblemInstance};

/// Diagonal margin added when a symmetrized draw is not positive definite.
const PD_MARGIN: f64 = 0.1;
/// Anchors outside the unit ball are pulled to this radius.
const ANCHOR_RADIUS: f64 = 0.999;

/// Toeplitz `B ∈ ℝ^{m×(n+1)}` with first row all ones and first column
/// `(1, 2, …, m)ᵀ`, split into `α = B[:, ..n]` and `β = B[:, n]`.
pub fn toeplitz_constraints(m: usize, n: usize) -> (Matrix, Vec<f64>) {
    let mut b = Matrix::zeros(m, n + 1);
    for i in 0..m {
        for j in 0..=n {
            b[(i, j)] = if i >= j { (i - j + 1) as f64 } else { 1.0 };
        }
    }
    b.split_last_column()
}

fn draw(dist: Distribution, rng: &mut RngStream) -> f64 {
    match dist {
        Distribution::Uniform => rng.uniform(),
        Distribution::Exponential => -Distribution::EXPONENTIAL_SCALE * (1.0 - rng.uniform()).ln(),
        Distribution::Gumbel => {
            let mut u = rng.uniform();
            while u == 0.0 {
                u = rng.uniform();
            }
            Distribution::GUMBEL_LOCATION - Distribution::GUMBEL_SCALE * (-u.ln()).ln()
        }
    }
}

/// Entry-wise i.i.d. draws, filled row by row.
pub fn generate_random_matrix(rows: usize, cols: usize, dist: Distribution, rng: &mut RngStream) -> Matrix {
    let data = (0..rows * cols).map(|_| draw(dist, rng)).collect();
    Matrix::from_row_major(rows, cols, data).expect("shape matches")
}

fn check_dims(summands: usize, n: usize, m: usize) -> Result<()> {
    if summands == 0 || n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("dimensions must be positive (N = {summands}, n = {n}, m = {m})")));
    }
    Ok(())
}

fn unit_ball(n: usize) -> Result<ProxSetup> {
    ProxSetup::ball(n, 1.0)?.with_theta0(std::f64::consts::SQRT_2)
}

fn linear_max(m: usize, n: usize) -> ConstraintSpec {
    let (alpha, beta) = toeplitz_constraints(m, n);
    ConstraintSpec::LinearMax { alpha, beta }
}

/// Mean absolute residual: `A ∈ ℝ^{N×(n+1)}` drawn from `dist`, rows of the
/// first `n` columns are `a_i`, the last column is `b`.
pub fn make_example1(summands: usize, n: usize, m: usize, dist: Distribution, seed: u64) -> Result<ProblemInstance> {
    check_dims(summands, n, m)?;
    let mut rng = RngStream::new(seed).split("objective");
    let (a, b) = generate_random_matrix(summands, n + 1, dist, &mut rng).split_last_column();
    Ok(ProblemInstance {
        objective: ObjectiveSpec::AbsLinear { a, b },
        constraints: linear_max(m, n),
        setup: unit_ball(n)?,
        metadata: GenerationMetadata {
            generator: Generator::Example1,
            distribution: Some(dist),
            seed,
            summands,
            dim: n,
            constraints: m,
            notes: Vec::new(),
        },
    })
}

/// Mean of quadratics `½ <C_i x, x>`. Each raw draw `R` is symmetrized to
/// `S = (R + Rᵀ)/2`; when `S` is not positive definite it is shifted to
/// `S + (|λ_min(S)| + 0.1) I`.
pub fn make_example2(summands: usize, n: usize, m: usize, dist: Distribution, seed: u64) -> Result<ProblemInstance> {
    check_dims(summands, n, m)?;
    let mut rng = RngStream::new(seed).split("objective");
    let mut matrices = Vec::with_capacity(summands);
    let mut op_norms = Vec::with_capacity(summands);
    let mut repaired = 0usize;
    for _ in 0..summands {
        let mut c = generate_random_matrix(n, n, dist, &mut rng).symmetrized();
        let ev = c.symmetric_eigenvalues();
        let (lo, hi) = (ev[0], ev[n - 1]);
        let mut norm = lo.abs().max(hi.abs());
        if lo <= 0.0 || !c.cholesky_ok() {
            let shift = lo.abs() + PD_MARGIN;
            for i in 0..n {
                c[(i, i)] += shift;
            }
            // Eigenvalues move to λ + shift > 0.
            norm = hi + shift;
            repaired += 1;
        }
        matrices.push(c);
        op_norms.push(norm);
    }
    let mut notes = Vec::new();
    if repaired > 0 {
        notes.push(format!(
            "pd-repair: {repaired} of {summands} symmetrized draws shifted by (|lambda_min| + {PD_MARGIN}) I"
        ));
    }
    Ok(ProblemInstance {
        objective: ObjectiveSpec::QuadraticSum { matrices, op_norms },
        constraints: linear_max(m, n),
        setup: unit_ball(n)?,
        metadata: GenerationMetadata {
            generator: Generator::Example2,
            distribution: Some(dist),
            seed,
            summands,
            dim: n,
            constraints: m,
            notes,
        },
    })
}

/// Location problem `Σ ‖x - A_k‖₂` with anchors drawn uniformly from
/// `[0,1)ⁿ`; anchors outside the unit ball are rescaled to norm 0.999.
pub fn make_fts(summands: usize, n: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    check_dims(summands, n, m)?;
    let mut rng = RngStream::new(seed).split("anchors");
    let mut anchors = generate_random_matrix(summands, n, Distribution::Uniform, &mut rng);
    let mut rescaled = 0usize;
    for k in 0..summands {
        let nrm = norm2(anchors.row(k));
        if nrm > 1.0 {
            for j in 0..n {
                anchors[(k, j)] *= ANCHOR_RADIUS / nrm;
            }
            rescaled += 1;
        }
    }
    let mut notes = Vec::new();
    if rescaled > 0 {
        notes.push(format!("anchor-rescale: {rescaled} of {summands} anchors scaled to norm {ANCHOR_RADIUS}"));
    }
    Ok(ProblemInstance {
        objective: ObjectiveSpec::SumOfNorms { anchors },
        constraints: linear_max(m, n),
        setup: unit_ball(n)?,
        metadata: GenerationMetadata {
            generator: Generator::Fts,
            distribution: Some(Distribution::Uniform),
            seed,
            summands,
            dim: n,
            constraints: m,
            notes,
        },
    })
}

/// `½ <A x, x>` on the simplex with `A` drawn from `dist` and symmetrized.
/// Constraints `<α_j, x> + β_j` have `α_j` drawn from `dist` and
/// `β_j = -<α_j, 1/n>`, so the barycentre is feasible with every `g_j = 0`.
/// `summands` is recorded for bookkeeping and must equal 1.
pub fn make_simplex(n: usize, m: usize, dist: Distribution, seed: u64) -> Result<ProblemInstance> {
    check_dims(1, n, m)?;
    let root = RngStream::new(seed);
    let a = generate_random_matrix(n, n, dist, &mut root.split("objective")).symmetrized();
    let alpha = generate_random_matrix(m, n, dist, &mut root.split("constraints"));
    let beta = (0..m).map(|j| -alpha.row(j).iter().sum::<f64>() / n as f64).collect();
    Ok(ProblemInstance {
        objective: ObjectiveSpec::SimplexQuadratic { a },
        constraints: ConstraintSpec::LinearMax { alpha, beta },
        setup: ProxSetup::simplex(n)?,
        metadata: GenerationMetadata {
            generator: Generator::Simplex,
            distribution: Some(dist),
            seed,
            summands: 1,
            dim: n,
            constraints: m,
            notes: vec!["constraints: beta_j = -<alpha_j, barycentre>".into()],
        },
    })
}

/// Rebuilds an instance from its metadata alone.
pub fn regenerate(meta: &GenerationMetadata) -> Result<ProblemInstance> {
    let dist = || meta.distribution.ok_or_else(|| Error::InvalidParameter("metadata lacks a distribution".into()));
    match meta.generator {
        Generator::Example1 => make_example1(meta.summands, meta.dim, meta.constraints, dist()?, meta.seed),
        Generator::Example2 => make_example2(meta.summands, meta.dim, meta.constraints, dist()?, meta.seed),
        Generator::Fts => make_fts(meta.summands, meta.dim, meta.constraints, meta.seed),
        Generator::Simplex => make_simplex(meta.dim, meta.constraints, dist()?, meta.seed),
        Generator::Custom => Err(Error::InvalidParameter("custom instances cannot be regenerated".into())),
    }
}
