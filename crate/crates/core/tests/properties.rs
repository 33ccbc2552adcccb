use asmd_core::linalg::Matrix;
use asmd_core::problems::{
    make_example1, make_example2, make_fts, make_simplex, toeplitz_constraints, ConstraintSpec, Distribution, GenerationMetadata,
    Generator, ObjectiveSpec, ProblemInstance,
};
use asmd_core::solver::{solve, Algorithm, SolverConfig};
use asmd_core::verify::{audit_lemma1, audit_solution, grid_search_reference};
use asmd_core::{ProxSetup, RngStream};
use proptest::prelude::*;

fn dist(k: u8) -> Distribution {
    [Distribution::Gumbel, Distribution::Exponential, Distribution::Uniform][k as usize % 3]
}

/// Random 2-D abs-linear instance on the unit ball with one half-plane
/// constraint that keeps a neighbourhood of the origin feasible.
fn tiny(seed: u64) -> ProblemInstance {
    let mut rng = RngStream::new(seed);
    let n_sum = 1 + rng.index(4);
    let a = Matrix::from_row_major(n_sum, 2, (0..2 * n_sum).map(|_| rng.normal() * 0.6).collect()).unwrap();
    let b = (0..n_sum).map(|_| rng.normal() * 0.5).collect();
    let alpha = Matrix::from_rows(&[vec![rng.normal(), rng.normal()]]).unwrap();
    let beta = vec![-0.2 - 0.5 * rng.uniform()];
    ProblemInstance {
        objective: ObjectiveSpec::AbsLinear { a, b },
        constraints: ConstraintSpec::LinearMax { alpha, beta },
        setup: ProxSetup::ball(2, 1.0).unwrap(),
        metadata: GenerationMetadata {
            generator: Generator::Custom,
            distribution: None,
            seed,
            summands: n_sum,
            dim: 2,
            constraints: 1,
            notes: vec![],
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn toeplitz_diagonals_are_constant(m in 1usize..30, n in 1usize..30) {
        let (alpha, beta) = toeplitz_constraints(m, n);
        let b = |i: usize, j: usize| if j < n { alpha[(i, j)] } else { beta[i] };
        for i in 0..m {
            prop_assert_eq!(b(i, 0), (i + 1) as f64);
        }
        for j in 0..=n {
            prop_assert_eq!(b(0, j), 1.0);
        }
        for i in 1..m {
            for j in 1..=n {
                prop_assert_eq!(b(i, j), b(i - 1, j - 1));
            }
        }
    }

    #[test]
    fn instances_round_trip_through_bytes(seed in any::<u64>(), kind in 0u8..4, d in 0u8..3, n in 1usize..6, m in 1usize..4, k in 1usize..5) {
        let inst = match kind {
            0 => make_example1(k, n, m, dist(d), seed),
            1 => make_example2(k, n, m, dist(d), seed),
            2 => make_fts(k, n, m, seed),
            _ => make_simplex(n, m, dist(d), seed),
        }
        .unwrap();
        let back = ProblemInstance::from_bytes(&inst.to_bytes()).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.metadata, inst.metadata);
    }

    #[test]
    fn example2_draws_are_positive_definite(seed in any::<u64>(), d in 0u8..3, n in 1usize..8) {
        let inst = make_example2(3, n, 2, dist(d), seed).unwrap();
        let ObjectiveSpec::QuadraticSum { matrices, .. } = &inst.objective else { unreachable!() };
        for c in matrices {
            prop_assert!(c.is_symmetric());
            prop_assert!(c.cholesky_ok());
            prop_assert!(c.symmetric_eigenvalues()[0] > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn grid_refinement_changes_optimum_by_at_most_the_coarse_slack(seed in any::<u64>(), r in 20usize..80) {
        let inst = tiny(seed);
        let coarse = grid_search_reference(&inst, r).unwrap();
        let fine = grid_search_reference(&inst, 2 * r).unwrap();
        prop_assert!((coarse.f_star - fine.f_star).abs() <= coarse.slack + 1e-12);
    }

    #[test]
    fn deterministic_runs_are_near_optimal_and_satisfy_the_step_inequality(seed in any::<u64>(), modified in any::<bool>()) {
        let inst = tiny(seed);
        let reference = grid_search_reference(&inst, 400).unwrap();
        let (f, g) = inst.oracles().unwrap();
        let alg = if modified { Algorithm::Modified } else { Algorithm::Standard };
        let cfg = SolverConfig::new(0.2, alg, vec![0.0, 0.0], seed).exact().recording_iterates();
        let sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg).unwrap();
        let report = audit_solution(&sol, &inst, Some(&reference)).unwrap();
        prop_assert!(report.passed(), "{}", report.to_text());
        let lemma = audit_lemma1(&sol, &inst.setup, f.as_ref(), g.as_ref(), &reference.x_star).unwrap();
        prop_assert!(lemma.passed(), "{}", lemma.to_text());
    }
}
