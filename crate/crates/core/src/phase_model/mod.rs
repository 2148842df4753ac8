//! Phase reduction: exact phase/amplitude deviation equations in a Floquet
//! frame, period averaging, and the closed-form gate phase equations.

pub mod averaging;
pub mod closed_form;
pub mod deviation;
pub mod frame;
pub mod reduction;

use nalgebra::DVector;

use crate::error::{ensure_finite, Result};
use crate::integrator::wrap_phase;

pub use averaging::{average_coupling, averaged_phase_rhs, reduced_phase_rhs, DEFAULT_QUAD_POINTS};
pub use closed_form::{
    averaged_example_jacobian, averaged_example_rhs, cycle_exponents, majority_phase_rhs, not_phase_rhs,
    register_phase_rhs, GateEquations,
};
pub use deviation::{
    amplitude_rhs_full, deviation_terms, embed, k_factor, phase_rhs_full, CouplingFn, DetuneFn, DeviationTerms,
    NodeCoordinates,
};
pub use frame::{AveragedOscillator, ConstantFrame, FloquetFrame, LimitCycle};
pub use reduction::{PhaseNetwork, PhaseSource, PhaseTerm};

/// Per-node phase deviations `psi_i = theta_i - tau`, wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    psi: Vec<f64>,
}

impl PhaseState {
    pub fn new(psi: &[f64]) -> Result<Self> {
        ensure_finite("phase state", psi)?;
        Ok(Self {
            psi: psi.iter().map(|&p| wrap_phase(p)).collect(),
        })
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// `theta_i = psi_i + tau`.
    pub fn theta(&self, tau: f64) -> Vec<f64> {
        self.psi.iter().map(|p| p + tau).collect()
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

/// Per-node orbital deviations `R_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub deviations: Vec<DVector<f64>>,
}

impl AmplitudeState {
    pub fn zeros(nodes: usize, cycle_dim: usize) -> Self {
        Self {
            deviations: vec![DVector::zeros(cycle_dim - 1); nodes],
        }
    }

    /// Pairs these deviations with phases into node coordinates.
    pub fn with_phases(&self, theta: &[f64]) -> Vec<NodeCoordinates> {
        theta
            .iter()
            .zip(&self.deviations)
            .map(|(&t, r)| NodeCoordinates::new(t, r.clone()))
            .collect()
    }
}
