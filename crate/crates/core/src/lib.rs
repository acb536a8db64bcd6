//! Spectral gaps of the second-moment operator of one-dimensional brickwork random
//! circuits built from unitary, orthogonal or symplectic two-site gates.

// `!(x > 0.0)` is meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commutant;
pub mod error;
pub mod io;
pub mod exact;
pub mod layer;
pub mod numeric;
pub mod rational;
pub mod tensornet;
pub mod verify;

pub use commutant::{CommutantBasis, GroupKind, LocalMomentMatrix};
pub use error::{GapError, Result};
pub use layer::{Boundary, CircuitSpec, LayerOperator, PairChain};
