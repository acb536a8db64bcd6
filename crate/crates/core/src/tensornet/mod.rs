//! Matrix-product operator of the deflated layer and a two-site DMRG search for its
//! largest eigenvalue.

mod dmrg;
mod mpo;
mod mps;

pub use dmrg::{dmrg_gap, DmrgConfig, DmrgOutcome, SweepRecord};
pub use mpo::{build_mpo, operator_schmidt, MpoOperator, MpoTensor};
pub use mps::{Mps, SiteTensor};
