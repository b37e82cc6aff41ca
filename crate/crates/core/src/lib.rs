//! Adaptive accelerated first-order methods with primal-dual certificates,
//! applied to entropy-regularized optimal transport.
//!
//! * [`astm`]: the adaptive similar-triangles method for smooth convex
//!   minimization with a backtracking curvature estimate.
//! * [`pdastm`]: the same method run on the dual of a strongly convex problem
//!   with linear constraints, reconstructing a primal point by averaging.
//! * [`oracles`]: dual oracles for regularized transport, entropy linear
//!   programming and a projection test problem.
//! * [`sinkhorn`]: the matrix-scaling baseline.
//! * [`datagen`] and [`bench`]: instance families and the experiment harness.

pub mod astm;
pub mod bench;
pub mod datagen;
pub mod error;
pub mod oracles;
pub mod pdastm;
pub mod prox;
pub mod sinkhorn;
pub mod vecops;

pub use astm::{run_astm, Astm, AstmOptions, AstmState, Evaluation, SmoothObjective, StoppingRule};
pub use error::{Error, Result};
pub use oracles::{ElpInstance, ProjectionProblem, TransportInstance};
pub use pdastm::{run_pdastm, ConstrainedProblem, DualOracle, Pdastm, PrimalDualResult, Tolerances};
pub use prox::{EuclideanSetup, ProxSetup};
pub use sinkhorn::{sinkhorn_solve, warm_start, ScalingMode};
