//! Gaussian wave packets of massive particles in a uniform gravitational
//! field.
//!
//! The crate evaluates the closed-form evolution of a minimum-uncertainty
//! packet in `V = m_g g z` and builds two mass-dependent observables on top
//! of it:
//!
//! * [`detection`]: the probability of finding a vertically launched packet
//!   in a narrow window at its launch point or at the apex of its flight;
//! * [`arrival`]: the mean arrival time at a detector below a packet released
//!   from rest, from the modulus of the probability current.
//!
//! [`oracle`] evolves matched classical phase-space ensembles as an
//! independent check, and [`quadrature`] supplies the error function and the
//! adaptive integrator. All quantities are in CGS units.

pub mod arrival;
pub mod detection;
pub mod error;
pub mod kernel;
pub mod oracle;
pub mod physics;
pub mod quadrature;

pub use error::{Error, Result};
pub use physics::{make_spec_from_amu, MassSweep, PhysicalConstants, WavePacketSpec};
