//! Exact symbolic counting of lattice points.
//!
//! The library computes counting functions of non-negative Diophantine linear
//! systems, growth functions of semi-linear sets of `N^t` and `Z^t`, and the
//! Dahmen-Micchelli vector partition function. Every result is produced as a
//! *box spline*: a partition of the domain into conic regions cut by rational
//! hyperplanes, with one quasi-polynomial attached to each region. All
//! arithmetic is exact rational; there is no floating point anywhere.
//!
//! The `oracle` module provides brute-force enumeration counters and a
//! differential-test harness that checks every symbolic construction
//! pointwise at desk scale.

pub mod scalar;
pub mod poly;
pub mod quasi;
pub mod lp;
pub mod intlin;
pub mod arrangement;
pub mod spline;
pub mod dio;
pub mod semilinear;
pub mod dm;
pub mod oracle;
pub mod error;

pub use error::Error;
pub use scalar::{Int, Rat};
