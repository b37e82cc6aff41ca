//! Dual oracles for the shipped problem families.

pub mod elp;
pub mod io;
pub mod quadratic;
pub mod transport;

pub use elp::{elp_dual_oracle, ElpInstance};
pub use quadratic::ProjectionProblem;
pub use transport::TransportInstance;
