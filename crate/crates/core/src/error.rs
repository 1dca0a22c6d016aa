use thiserror::Error;

/// Errors produced by constructions and evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain mismatch between operands")]
    DomainMismatch,

    #[error("summation variable {0} not found")]
    SummationVarNotFound(usize),

    #[error("quasi-polynomial is not integer-valued at {0:?}")]
    NotIntegerValued(Vec<Int>),

    #[error("zero column {0}: solution count may be infinite")]
    ZeroColumn(usize),

    #[error("negative offset in row {0}")]
    NegativeOffset(usize),

    #[error("zero direction vector")]
    ZeroDirection,

    #[error("bound is negative on region {0}")]
    BoundNegative(String),

    #[error("matrix is not pointed: non-trivial non-negative kernel vector {0:?}")]
    NonPointed(Vec<Rat>),

    #[error("simple set straddles orthants in coordinate {coord}: mixed signs")]
    OrthantIncompatible { coord: usize },

    #[error("point outside domain")]
    PointOutsideDomain,

    #[error("lattice must be N for this operation")]
    LatticeMismatch,

    #[error("growth spec does not match set dimension: t1 {t1} + t2 {t2} != {dim}")]
    SpecMismatch { t1: usize, t2: usize, dim: usize },

    #[error("generators are not linearly independent over Q")]
    DependentGenerators,

    #[error("disjointness contract violated at {0:?}: point in {1} pieces")]
    DisjointnessViolated(Vec<Int>, usize),

    #[error("internal LP failure: {0}")]
    LpFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

use crate::scalar::{Int, Rat};
