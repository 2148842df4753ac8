//! Closed-form averaged phase equations of the register, NOT and MAJORITY
//! gates, and the averaged single-unit equation.

use crate::dynamics::CYCLE_AMPLITUDE;
use crate::error::{Error, Result};

/// Slave of a master-slave register: `(rho - gamma) sin psi_k`.
pub fn register_phase_rhs(psi_k: f64, rho: f64, gamma: f64) -> f64 {
    (rho - gamma) * psi_k.sin()
}

/// Driven input `j` resistively coupled to output `k`.
pub fn not_phase_rhs(psi_j: f64, psi_k: f64, psi_dj: f64, rho: f64, gamma: f64) -> (f64, f64) {
    (
        rho * (psi_j - psi_k).sin() - gamma * (psi_j - psi_dj).sin(),
        rho * (psi_k - psi_j).sin(),
    )
}

/// Three all-to-all conductively coupled units: inputs `i`, `j` with their
/// own drives, output `k`, and a global drive `psi_d` on every unit.
///
/// `drives = (psi_di, psi_dj, psi_d)`, `gains = (gamma_i, gamma_j, gamma)`.
pub fn majority_phase_rhs(psi: [f64; 3], drives: [f64; 3], gains: [f64; 3]) -> [f64; 3] {
    let [pi, pj, pk] = psi;
    let [di, dj, d] = drives;
    let [gi, gj, g] = gains;
    [
        -gi * (pi - di).sin() - g * (pi - d).sin() - g * ((pi - pj).sin() + (pi - pk).sin()),
        -gj * (pj - dj).sin() - g * (pj - d).sin() - g * ((pj - pi).sin() + (pj - pk).sin()),
        -g * (pk - d).sin() - g * ((pk - pi).sin() + (pk - pj).sin()),
    ]
}

/// `(dtheta/dtau, dA/dtau)` of the averaged single unit.
pub fn averaged_example_rhs(_theta: f64, amplitude: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(amplitude >= 0.0) {
        return Err(Error::Domain(format!("amplitude must be >= 0, got {amplitude}")));
    }
    Ok((1.0, 0.5 * alpha * amplitude * (1.0 - 0.75 * amplitude * amplitude)))
}

/// Analytic Jacobian of [`averaged_example_rhs`] with respect to
/// `(theta, A)`.
pub fn averaged_example_jacobian(amplitude: f64, alpha: f64) -> [[f64; 2]; 2] {
    [[0.0, 0.0], [0.0, 0.5 * alpha * (1.0 - 2.25 * amplitude * amplitude)]]
}

/// Eigenvalues of the averaged Jacobian on the cycle `A = 2/sqrt(3)`: the
/// matrix is diagonal, so they are its diagonal entries `{0, -alpha}`.
pub fn cycle_exponents(alpha: f64) -> [f64; 2] {
    let j = averaged_example_jacobian(CYCLE_AMPLITUDE, alpha);
    [j[0][0], j[1][1]]
}

/// A reduced gate model with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateEquations {
    Register { rho: f64, gamma: f64 },
    Not { psi_dj: f64, rho: f64, gamma: f64 },
    Majority { drives: [f64; 3], gains: [f64; 3] },
}

impl GateEquations {
    pub fn dim(&self) -> usize {
        match self {
            GateEquations::Register { .. } => 1,
            GateEquations::Not { .. } => 2,
            GateEquations::Majority { .. } => 3,
        }
    }

    pub fn rhs(&self, psi: &[f64], out: &mut [f64]) {
        match *self {
            GateEquations::Register { rho, gamma } => out[0] = register_phase_rhs(psi[0], rho, gamma),
            GateEquations::Not { psi_dj, rho, gamma } => {
                let (a, b) = not_phase_rhs(psi[0], psi[1], psi_dj, rho, gamma);
                out[0] = a;
                out[1] = b;
            }
            GateEquations::Majority { drives, gains } => {
                out[..3].copy_from_slice(&majority_phase_rhs([psi[0], psi[1], psi[2]], drives, gains));
            }
        }
    }

    pub fn eval(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.rhs(psi, &mut out);
        out
    }
}
