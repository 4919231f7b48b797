//! Floquet quasienergies and decay of a metastable quantum well driven by an
//! oscillating barrier (model A) or an oscillating well bottom (model B).

pub mod cli;
pub mod duality;
pub mod error;
pub mod floquet;
pub mod observables;
mod linalg;
pub mod potential;
pub mod quad;
pub mod rootfind;
pub mod spectra;
pub mod special;
pub mod static_solver;
pub mod tdse;

pub use error::{Error, Result};
