//! Wavenumber-division multiplexing (WDM) between two linear electromagnetic
//! segments with arbitrary relative orientation and position.
//!
//! The crate assembles the mode-coupling matrix and the EMI correlation matrix
//! of a Fourier-basis line-of-sight link by composite Gauss–Legendre
//! quadrature, whitens the channel, evaluates four linear processing
//! architectures with water-filling, and drives the experiment sweeps exposed
//! by the `wdmsim` binary.
//!
//! Module map:
//! - [`geometry`]: source direction, rotation to the source frame, segment points.
//! - [`quadrature`]: composite Gauss–Legendre rules in one and two dimensions.
//! - [`em_field`]: far-field Green's kernel, radiation pattern, field profiles, peak predictors.
//! - [`channel`]: Fourier bases, `H`/`R` assembly, whitening, channel files.
//! - [`receivers`]: SVD / MMSE / MR / plain WDM with water-filling.
//! - [`experiments`]: configuration, sweeps, CSV/SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod em_field;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod quadrature;
pub mod receivers;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
