//! Oscillator-network computing: coupled LC oscillators with cubic
//! conductances, their phase reduction, and phase-encoded Boolean gates.
//!
//! * [`dynamics`] full-state vector fields for single units and netlists
//! * [`integrator`] fixed-step RK4, trajectories, phase-lock detection
//! * [`phase_model`] phase-amplitude deviation equations, averaging and the
//!   closed-form reduced equations of the register, NOT and MAJORITY gates
//! * [`gates`] gate netlists, bit encoding and truth-table runs
//! * [`stability`] equilibria, Jacobian spectra and Liapunov certificates

pub mod dynamics;
pub mod error;
pub mod gates;
pub mod integrator;
pub mod phase_model;
pub mod stability;

pub use error::{Error, Result};
