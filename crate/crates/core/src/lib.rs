//! Adaptive stochastic mirror descent for non-smooth convex minimization
//! under a family of convex functional constraints `g_j(x) <= 0`.
//!
//! The crate is split along the lines of the method itself:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`prox`] | Distance-generating functions, Bregman divergences, the mirror step |
//! | [`oracle`] | First-order oracles (exact values, stochastic subgradients) and [`RngStream`] |
//! | [`solver`] | The standard adaptive method and its one-constraint modification |
//! | [`problems`] | Benchmark instance generators and the `.prob` file format |
//! | [`verify`] | Grid-search reference optima and certificate audits |
//!
//! A minimal run:
//!
//! ```
//! use asmd_core::problems::{make_example1, Distribution};
//! use asmd_core::solver::{solve, Algorithm, SolverConfig};
//!
//! let inst = make_example1(20, 10, 5, Distribution::Uniform, 7).unwrap();
//! let cfg = SolverConfig::new(0.5, Algorithm::Modified, inst.default_start(), 1)
//!     .with_theta0(inst.setup.theta0());
//! let (f, g) = inst.oracles().unwrap();
//! let sol = solve(&inst.setup, f.as_ref(), g.as_ref(), &cfg).unwrap();
//! assert!(sol.constraint_value_at_xbar <= 0.5);
//! ```

pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use oracle::{ConstraintOracle, ObjectiveOracle};
pub use prox::{ProxKind, ProxSetup};
pub use rng::RngStream;
pub use solver::{solve, Algorithm, Solution, SolverConfig};

/// Feasibility tolerance shared by every membership test in the crate.
pub const FEASIBILITY_TOL: f64 = 1e-9;
