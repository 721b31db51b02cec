//! Numerics for dual power weights, lacunary A2 weights and sparse operators.
//!
//! Positive magnitudes are carried in base-2 logarithms ([`LogPos`]),
//! coordinates carry an unbounded binary exponent ([`Coord`]), and every
//! weight is a [`PiecewisePowerFn`] whose integrals are computed in closed
//! form. On top of that algebra sit the sparse operators, the A2 and A-infinity
//! characteristics, and the experiment harness used by the `a2lab` binary.

pub mod acc;
pub mod characteristics;
pub mod coord;
pub mod error;
pub mod interval;
pub mod lab;
pub mod logpos;
pub mod operators;
mod params;
pub mod piecewise;
pub mod weights;

pub use coord::Coord;
pub use error::{Error, Result};
pub use interval::Interval;
pub use logpos::LogPos;
pub use piecewise::{Orientation, Piece, PiecewisePowerFn, PowerTerm, StepFn};
pub use weights::WeightPair;

