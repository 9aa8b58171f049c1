//! Solver library for monotone linear complementarity problems:
//! find `x >= 0`, `y >= 0` with `y = Mx + q` and `x_i y_i = 0`.
//!
//! The main entry point is [`rpfmtr::solve`], a residual-regularized
//! path-following method whose continuation time step is adjusted by a
//! trust-region ratio instead of a line search. Around it:
//!
//! - [`problem`] builds benchmark instances by skew-embedding NETLIB LP
//!   constraint matrices with a designed complementary solution;
//! - [`flow`] integrates the underlying constrained Newton flow with a
//!   fixed-step 4th-order scheme to verify the analytic decay laws, and
//!   carries a damped-Newton line-search baseline for comparison;
//! - [`diagnostics`] attaches post-hoc monitors (centrality, auxiliary
//!   feasible sequence, per-step algebraic identities) to solve traces;
//! - [`io`] reads and writes Matrix Market files and problem bundles.

pub mod diagnostics;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod rng;
pub mod rpfmtr;

pub use linalg::DenseMatrix;
pub use problem::LcpProblem;
pub use rpfmtr::{SolveReport, SolveStatus, SolverConfig};
