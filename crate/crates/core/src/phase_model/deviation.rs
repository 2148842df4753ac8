//! Exact phase and amplitude deviation equations of a weakly perturbed
//! network of identical oscillators.
//!
//! Each node state is written `x_i = x_s(theta_i) + Y(theta_i) R_i`. Projecting
//! `dx_i/dtau = a(x_i) + p_i(x_i) + c_i(x_1, .., x_N)` on `v_1` and on `Z`
//! gives
//!
//! ```text
//! dtheta_i/dtau = 1 + a_theta + da_theta + C_theta
//! dR_i/dtau     = L R_i + a_R + da_R + C_R
//! ```
//!
//! with `K = (r + v_1^T Y' R)^-1` and `L = -Z^T Y'` (`Y' = dY/dtheta`). The
//! small parameter is carried inside `p_i` and `c_i`.

use nalgebra::DVector;

use super::frame::{FloquetFrame, LimitCycle};
use crate::error::{Error, Result};

/// Smallest admissible `|r + v_1^T Y' R|`.
pub const MIN_DENOMINATOR: f64 = 1e-9;

/// Intrinsic perturbation `p_i(x)` of one node.
pub type DetuneFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Sync;
/// Coupling `c_i(x_1, .., x_N)` acting on one node.
pub type CouplingFn = dyn Fn(&[DVector<f64>]) -> DVector<f64> + Sync;

/// Phase `theta_i` and orbital deviation `R_i` of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCoordinates {
    pub theta: f64,
    pub deviation: DVector<f64>,
}

impl NodeCoordinates {
    pub fn new(theta: f64, deviation: DVector<f64>) -> Self {
        Self { theta, deviation }
    }

    /// Node exactly on the cycle.
    pub fn on_cycle(theta: f64, dim: usize) -> Self {
        Self {
            theta,
            deviation: DVector::zeros(dim - 1),
        }
    }
}

/// `x_s(theta) + Y(theta) R`.
pub fn embed(cycle: &dyn LimitCycle, frame: &dyn FloquetFrame, coords: &NodeCoordinates) -> DVector<f64> {
    cycle.point(coords.theta) + frame.transversal(coords.theta) * &coords.deviation
}

/// `K(theta, R) = (|a(x_s(theta))| + v_1^T dY/dtheta R)^-1`.
pub fn k_factor(cycle: &dyn LimitCycle, frame: &dyn FloquetFrame, theta: f64, deviation: &DVector<f64>) -> Result<f64> {
    let v1 = frame.tangent_cobasis(theta);
    let dy = frame.transversal_derivative(theta);
    let denominator = cycle.speed(theta) + v1.dot(&(dy * deviation));
    if !(denominator.abs() >= MIN_DENOMINATOR) {
        return Err(Error::OutsideNeighbourhood { denominator });
    }
    Ok(denominator.recip())
}

/// Every term of the phase and amplitude equations for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationTerms {
    pub k: f64,
    pub a_theta: f64,
    pub detune_theta: f64,
    pub coupling_theta: f64,
    /// `L(theta) R`.
    pub linear_r: DVector<f64>,
    pub a_r: DVector<f64>,
    pub detune_r: DVector<f64>,
    pub coupling_r: DVector<f64>,
}

impl DeviationTerms {
    pub fn phase_rate(&self) -> f64 {
        1.0 + self.a_theta + self.detune_theta + self.coupling_theta
    }

    pub fn amplitude_rate(&self) -> DVector<f64> {
        &self.linear_r + &self.a_r + &self.detune_r + &self.coupling_r
    }
}

/// Evaluates all deviation terms of node `node` for the network state
/// `network`.
///
/// `C_R` includes `-Z^T Y' R C_theta`, the coupling counterpart of the
/// `Y' R a_theta` and `Y' R da_theta` pieces of `a_R` and `da_R`; without it
/// the decomposition does not reproduce `dx/dtau` when `R != 0` and the frame
/// rotates.
pub fn deviation_terms(
    cycle: &dyn LimitCycle,
    frame: &dyn FloquetFrame,
    node: usize,
    network: &[NodeCoordinates],
    detune: Option<&DetuneFn>,
    coupling: Option<&CouplingFn>,
) -> Result<DeviationTerms> {
    let me = network
        .get(node)
        .ok_or_else(|| Error::Domain(format!("node {node} outside network of {}", network.len())))?;
    let n = cycle.dim();
    if me.deviation.len() + 1 != n {
        return Err(Error::Domain(format!(
            "deviation has {} entries, cycle dimension {n} needs {}",
            me.deviation.len(),
            n - 1
        )));
    }
    let theta = me.theta;
    let k = k_factor(cycle, frame, theta, &me.deviation)?;
    let v1 = frame.tangent_cobasis(theta);
    let z = frame.transversal_cobasis(theta);
    let dy = frame.transversal_derivative(theta);
    let dy_r = &dy * &me.deviation;

    let xs = cycle.point(theta);
    let x = embed(cycle, frame, me);
    let a_x = cycle.field(&x);
    let a_theta = k * v1.dot(&(&a_x - cycle.field(&xs) - &dy_r));

    let p = detune.map(|p| p(&x));
    let detune_theta = p.as_ref().map_or(0.0, |p| k * v1.dot(p));

    let c = match coupling {
        Some(c) => {
            let states: Vec<DVector<f64>> = network.iter().map(|m| embed(cycle, frame, m)).collect();
            Some(c(&states))
        }
        None => None,
    };
    let coupling_theta = c.as_ref().map_or(0.0, |c| k * v1.dot(c));

    let zt = z.transpose();
    let linear_r = -(&zt * &dy) * &me.deviation;
    let a_r = -(&zt * (&dy_r * a_theta - &a_x));
    let detune_r = match &p {
        Some(p) => -(&zt * (&dy_r * detune_theta - p)),
        None => DVector::zeros(n - 1),
    };
    let coupling_r = match &c {
        Some(c) => -(&zt * (&dy_r * coupling_theta - c)),
        None => DVector::zeros(n - 1),
    };

    Ok(DeviationTerms {
        k,
        a_theta,
        detune_theta,
        coupling_theta,
        linear_r,
        a_r,
        detune_r,
        coupling_r,
    })
}

/// `dtheta_i/dtau` of node `node`.
pub fn phase_rhs_full(
    cycle: &dyn LimitCycle,
    frame: &dyn FloquetFrame,
    node: usize,
    network: &[NodeCoordinates],
    detune: Option<&DetuneFn>,
    coupling: Option<&CouplingFn>,
) -> Result<f64> {
    deviation_terms(cycle, frame, node, network, detune, coupling).map(|t| t.phase_rate())
}

/// `dR_i/dtau` of node `node`.
pub fn amplitude_rhs_full(
    cycle: &dyn LimitCycle,
    frame: &dyn FloquetFrame,
    node: usize,
    network: &[NodeCoordinates],
    detune: Option<&DetuneFn>,
    coupling: Option<&CouplingFn>,
) -> Result<DVector<f64>> {
    deviation_terms(cycle, frame, node, network, detune, coupling).map(|t| t.amplitude_rate())
}
