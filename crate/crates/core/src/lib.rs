//! Reverse Hölder and Muckenhoupt constants of weights on k-homogeneous
//! trees, the prefix-interval constants of their non-increasing
//! rearrangements, self-improvement exponents, and a traced stopping-time
//! decomposition that checks every step of the rearrangement bound
//! `prefix constant ≤ k·c − k + 1`.

pub mod error;
pub mod exponents;
pub mod rearrange;
pub mod trace;
pub mod tree;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
pub use exponents::{improvement_range, p0_solve, power_weight_constant, ExponentResult};
pub use rearrange::{rearrangement, PrefixReport, StepFunction};
pub use trace::{trace_theorem1, DecompositionTrace, FractionalSet};
pub use tree::{NodeId, TreeSpace};
pub use weight::{DyadicWeight, LogUniform, RhiReport};
