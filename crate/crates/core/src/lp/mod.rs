//! Small dense linear programming and linear algebra.

pub mod linalg;
pub mod simplex;

pub use simplex::{minimize, LpSolution};
