//! Entanglement dynamics of a math-type q-deformed bosonic field coupled to a
//! Kerr-nonlinear atomic mode through a beam-splitter interaction.
//!
//! The total excitation number `n + m` is conserved, so the Hamiltonian splits
//! into small real symmetric tridiagonal blocks. States are propagated exactly
//! in the eigenbasis of each block, reduced by partial trace, and scored with
//! the von Neumann entropy.

// validation must reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocks;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod qalgebra;

pub use blocks::{build_block, BlockMatrix, SystemParams};
pub use dynamics::{DensityMatrix, EntropyResult, LogBase, SpectralCache, TwoModeState};
pub use eigen::BlockSpectrum;
pub use error::{Error, Result};
pub use qalgebra::{CoherentSpec, DeformationParam};
