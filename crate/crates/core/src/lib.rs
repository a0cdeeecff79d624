//! Design and verification of privacy mechanisms that disclose information
//! about a useful variable `Y` while capping what leaks about a correlated
//! private variable `X`.
//!
//! The crate covers exact information measures on finite alphabets,
//! functional-representation mechanisms (exact and sampled), their
//! randomized-response extensions, closed-form utility bounds, the
//! zero-leakage utility `g0`, and audits that check a mechanism against its
//! contract.

pub mod audit;
pub mod bounds;
pub mod error;
pub mod extension;
pub mod lp;
pub mod mechanism;
pub mod oracle;
pub mod perfect_privacy;
pub mod prob;
pub mod scenario;
pub mod separation;
pub mod stats;
pub mod synthesis;

pub use bounds::{compute_bounds, BoundsConfig, BoundsReport};
pub use error::{PmechError, Result};
pub use mechanism::{Arithmetic, Construction, Mechanism};
pub use prob::{JointPmf, LogBase, TripletPmf, Var};
