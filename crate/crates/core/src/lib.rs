//! Deterministic quasi-Monte Carlo sample enumeration along space-filling
//! curves.
//!
//! The crate assigns points of a low discrepancy sequence to the pixels of an
//! image by walking the pixels along a space-filling curve. The modules build
//! on each other:
//!
//! * [`curves`]: Morton, Hilbert, Moore and Peano index maps on square grids.
//! * [`radical`]: scrambled radical inverses and their inverses.
//! * [`sequences`]: Halton and rank-1 lattice sequences.
//! * [`strategies`]: the pixel/sample to sequence index assignments.
//! * [`analysis`]: correlation diagnostics and discrepancy metrics.
//! * [`harness`]: a small renderer over analytic integrands.
//! * [`cli`]: the `sfcqmc` command line.

pub mod analysis;
pub mod cli;
pub mod curves;
mod error;
pub mod hash;
pub mod image;
pub mod radical;
pub mod sequences;
pub mod strategies;
pub mod harness;

pub use error::{Error, Result};
