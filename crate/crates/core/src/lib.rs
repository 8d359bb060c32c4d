//! Arrival-time dynamics for a particle meeting a complex absorbing step
//! −iV₀θ(−x): split-step and closed-form propagation, currents and arrival
//! densities, the classical absorbing analogue, scattering amplitudes,
//! decoherent-histories class operators and Wigner-function diagnostics.
//!
//! Units have ħ = 1; the mass is carried by each state.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod classical;
pub mod error;
pub mod grid;
pub mod histories;
pub mod packet;
pub mod pdx;
pub mod qdyn;
pub mod quad;
pub mod series;
pub mod special;
mod spectral;
pub mod wavefunction;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use grid::Grid1D;
pub use packet::{make_gaussian, make_superposition, GaussianPacketSpec, SuperpositionTerm};
pub use series::{TimeGrid, TimeSeries};
pub use wavefunction::{momentum_representation, norm2, overlap, Representation, WaveFunction};
