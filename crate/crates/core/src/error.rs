use thiserror::Error;

use crate::tree::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid tree: k = {k}, depth = {depth} ({reason})")]
    InvalidTree {
        k: usize,
        depth: u32,
        reason: &'static str,
    },

    #[error("node {0} does not belong to the tree")]
    InvalidNode(NodeId),

    #[error("node {0} is a leaf and has no children")]
    LeafHasNoChildren(NodeId),

    #[error("the root has no father")]
    RootHasNoFather,

    #[error("expected {expected} leaf values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("leaf {index} has invalid value {value} (must be finite and non-negative)")]
    InvalidLeafValue { index: usize, value: f64 },

    #[error("zero value with negative exponent {exponent}")]
    ZeroWithNegativeExponent { exponent: f64 },

    #[error("weight is identically zero")]
    ZeroWeight,

    #[error("parameter {name} = {value} out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid step function: {0}")]
    InvalidStepFunction(&'static str),

    #[error("root average exceeds the threshold {threshold}")]
    RootAboveThreshold { threshold: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty set")]
    EmptySet,

    #[error("malformed weight document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
