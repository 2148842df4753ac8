//! Continuous-time vector fields in normalised circuit variables.
//!
//! Every unit is an LC tank loaded by a cubic conductance. After scaling
//! (`x = i`, `y = sqrt(C/L) v`, `tau = t / sqrt(LC)`) a single unit reads
//!
//! ```text
//! dx/dtau = y
//! dy/dtau = -x - g(y),    g(y) = -alpha*y + alpha*y^3
//! ```
//!
//! Units are joined by series resistors (`rho` terms acting on `x`) and by
//! conductances (`gamma` terms acting on `y`). Ideal drive sources sit on the
//! cycle of the reference oscillator and enter only through `y`.
//!
//! Phase convention used throughout the crate: a state on a cycle of
//! amplitude `A` at phase `theta` is `(x, y) = (-A cos theta, A sin theta)`,
//! so `theta` grows with `tau` and a drive `y_D = A sin(tau + psi_D)` has
//! phase exactly `tau + psi_D`.

use std::collections::{HashMap, HashSet};

use crate::error::{ensure_finite, Error, Result};

/// Averaged amplitude of the weakly nonlinear cycle, `2 / sqrt(3)`.
pub const CYCLE_AMPLITUDE: f64 = 1.154_700_538_379_251_7;

/// Default nonlinearity strength.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Cubic conductance `g(y) = -alpha*y + alpha*y^3`.
#[inline]
pub fn conductance(y: f64, alpha: f64) -> f64 {
    alpha * y * (y * y - 1.0)
}

/// Point of the ideal cycle of amplitude `amplitude` at phase `theta`.
#[inline]
pub fn cycle_point(theta: f64, amplitude: f64) -> [f64; 2] {
    [-amplitude * theta.cos(), amplitude * theta.sin()]
}

/// Instantaneous phase of a planar state, inverse of [`cycle_point`].
#[inline]
pub fn phase_of(x: f64, y: f64) -> f64 {
    y.atan2(-x)
}

/// Full state `(x, y)` of an ideal drive source with offset `psi_d`.
#[inline]
pub fn drive_state(tau: f64, psi_d: f64) -> [f64; 2] {
    cycle_point(tau + psi_d, CYCLE_AMPLITUDE)
}

/// One free-running unit with `G1 = G3 = alpha`.
pub fn single_oscillator_field(state: [f64; 2], alpha: f64) -> Result<[f64; 2]> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    ensure_finite("oscillator state", &state)?;
    let [x, y] = state;
    Ok([y, -x - conductance(y, alpha)])
}

/// Normalised parameters of a physical LC unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCircuit {
    pub g1: f64,
    pub g3: f64,
    /// Physical seconds per unit of `tau`.
    pub time_scale: f64,
}

/// Maps `(L, C, g1, g3)` to the dimensionless `(G1, G3)` and the time scale.
pub fn normalize_circuit(inductance: f64, capacitance: f64, g1: f64, g3: f64) -> Result<NormalizedCircuit> {
    for (name, value) in [("L", inductance), ("C", capacitance), ("g1", g1), ("g3", g3)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!("{name} must be positive, got {value}")));
        }
    }
    let ratio = inductance / capacitance;
    Ok(NormalizedCircuit {
        g1: g1 * ratio.sqrt(),
        g3: g3 * ratio.powf(1.5),
        time_scale: (inductance * capacitance).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSpec {
    pub id: String,
    pub alpha: f64,
}

impl OscillatorSpec {
    pub fn new(id: impl Into<String>, alpha: f64) -> Self {
        Self { id: id.into(), alpha }
    }
}

/// Resistive (`rho`) and conductive (`gamma`) link between two units.
///
/// A directed edge only acts on `to`; an undirected edge acts on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEdge {
    pub from: String,
    pub to: String,
    pub rho: f64,
    pub gamma: f64,
    pub directed: bool,
}

impl CouplingEdge {
    pub fn resistive(from: impl Into<String>, to: impl Into<String>, rho: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            rho,
            gamma: 0.0,
            directed: false,
        }
    }

    pub fn conductive(from: impl Into<String>, to: impl Into<String>, gamma: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            rho: 0.0,
            gamma,
            directed: false,
        }
    }

    pub fn master_slave(from: impl Into<String>, to: impl Into<String>, rho: f64, gamma: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            rho,
            gamma,
            directed: true,
        }
    }
}

/// Ideal sinusoidal source locked to the reference, `y_D = A sin(tau + psi_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenSource {
    pub target: String,
    pub psi_d: f64,
    pub gamma_d: f64,
}

impl DrivenSource {
    pub fn new(target: impl Into<String>, psi_d: f64, gamma_d: f64) -> Self {
        Self {
            target: target.into(),
            psi_d,
            gamma_d,
        }
    }
}

/// Directed weighted oscillator graph with optional master node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkSpec {
    pub oscillators: Vec<OscillatorSpec>,
    pub edges: Vec<CouplingEdge>,
    pub sources: Vec<DrivenSource>,
    pub reference: Option<String>,
}

impl NetworkSpec {
    pub fn node_count(&self) -> usize {
        self.oscillators.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.oscillators.iter().position(|o| o.id == id)
    }

    /// Checks every structural invariant and resolves ids to indices.
    pub fn compile(&self) -> Result<Network> {
        let mut index = HashMap::with_capacity(self.oscillators.len());
        for (i, osc) in self.oscillators.iter().enumerate() {
            if osc.id.is_empty() {
                return Err(Error::Config(format!("oscillator #{i} has an empty id")));
            }
            if index.insert(osc.id.as_str(), i).is_some() {
                return Err(Error::Config(format!("duplicate oscillator id '{}'", osc.id)));
            }
            if !(osc.alpha > 0.0 && osc.alpha.is_finite()) {
                return Err(Error::Config(format!(
                    "oscillator '{}': alpha must be positive, got {}",
                    osc.id, osc.alpha
                )));
            }
        }
        let lookup = |id: &str, what: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Config(format!("{what} references unknown node '{id}'")))
        };

        let reference = match &self.reference {
            Some(id) => Some(lookup(id, "reference")?),
            None => None,
        };

        let mut links = Vec::new();
        for edge in &self.edges {
            let label = format!("edge {} -> {}", edge.from, edge.to);
            let tail = lookup(&edge.from, &label)?;
            let head = lookup(&edge.to, &label)?;
            if tail == head {
                return Err(Error::Config(format!("{label}: self-loop")));
            }
            for (name, value) in [("rho", edge.rho), ("gamma", edge.gamma)] {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::Config(format!(
                        "{label}: {name} must be non-negative, got {value}"
                    )));
                }
            }
            if let Some(r) = reference {
                if head == r || (!edge.directed && tail == r) {
                    return Err(Error::Config(format!(
                        "{label}: reference node may only have outgoing directed edges"
                    )));
                }
            }
            links.push(Link {
                head,
                tail,
                rho: edge.rho,
                gamma: edge.gamma,
            });
            if !edge.directed {
                links.push(Link {
                    head: tail,
                    tail: head,
                    rho: edge.rho,
                    gamma: edge.gamma,
                });
            }
        }

        let mut drives = Vec::with_capacity(self.sources.len());
        for src in &self.sources {
            let label = format!("drive on {}", src.target);
            let target = lookup(&src.target, &label)?;
            if Some(target) == reference {
                return Err(Error::Config(format!("{label}: reference node cannot be driven")));
            }
            if !(src.gamma_d >= 0.0 && src.gamma_d.is_finite()) || !src.psi_d.is_finite() {
                return Err(Error::Config(format!("{label}: need finite psi_d and gamma_d >= 0")));
            }
            drives.push(Drive {
                target,
                psi_d: src.psi_d,
                gamma_d: src.gamma_d,
            });
        }

        Ok(Network {
            ids: self.oscillators.iter().map(|o| o.id.clone()).collect(),
            alphas: self.oscillators.iter().map(|o| o.alpha).collect(),
            links,
            drives,
            reference,
        })
    }

    /// Nodes that some edge or drive influences.
    pub fn driven_nodes(&self) -> HashSet<&str> {
        let mut out: HashSet<&str> = self.sources.iter().map(|s| s.target.as_str()).collect();
        for e in &self.edges {
            out.insert(e.to.as_str());
            if !e.directed {
                out.insert(e.from.as_str());
            }
        }
        out
    }
}

/// Coupling term acting on `head`, sourced from `tail`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub head: usize,
    pub tail: usize,
    pub rho: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub target: usize,
    pub psi_d: f64,
    pub gamma_d: f64,
}

/// Validated network with resolved indices, ready for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    ids: Vec<String>,
    alphas: Vec<f64>,
    links: Vec<Link>,
    drives: Vec<Drive>,
    reference: Option<usize>,
}

impl Network {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        2 * self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    pub fn reference(&self) -> Option<usize> {
        self.reference
    }

    /// Writes `d(state)/dtau` into `out`. Layout is `[x0, y0, x1, y1, ...]`.
    pub fn field(&self, tau: f64, state: &[f64], out: &mut [f64]) {
        debug_assert_eq!(state.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (i, &alpha) in self.alphas.iter().enumerate() {
            let (x, y) = (state[2 * i], state[2 * i + 1]);
            out[2 * i] = y;
            out[2 * i + 1] = -x - conductance(y, alpha);
        }
        for link in &self.links {
            let (h, t) = (link.head, link.tail);
            if link.rho != 0.0 {
                out[2 * h] -= 2.0 * link.rho * (state[2 * h] + state[2 * t]);
            }
            if link.gamma != 0.0 {
                out[2 * h + 1] -= 2.0 * link.gamma * (state[2 * h + 1] - state[2 * t + 1]);
            }
        }
        for drive in &self.drives {
            let [_, y_d] = drive_state(tau, drive.psi_d);
            let i = drive.target;
            out[2 * i + 1] -= 2.0 * drive.gamma_d * (state[2 * i + 1] - y_d);
        }
    }
}

/// Per-node `(x, y)` pairs stored flat as `[x0, y0, x1, y1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState(Vec<f64>);

impl FullState {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "full state needs an even length, got {}",
                values.len()
            )));
        }
        ensure_finite("full state", &values)?;
        Ok(Self(values))
    }

    pub fn from_nodes(nodes: &[[f64; 2]]) -> Result<Self> {
        Self::new(nodes.iter().flatten().copied().collect())
    }

    /// Every node on the ideal cycle at the given phases.
    pub fn on_cycle(phases: &[f64]) -> Self {
        Self(phases.iter().flat_map(|&p| cycle_point(p, CYCLE_AMPLITUDE)).collect())
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        [self.0[2 * i], self.0[2 * i + 1]]
    }

    pub fn node_count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Register unit `k` slaved to an externally supplied reference state.
pub fn register_field(state_ref: [f64; 2], state_k: [f64; 2], edge: &CouplingEdge, alpha: f64) -> Result<[f64; 2]> {
    ensure_finite("reference state", &state_ref)?;
    ensure_finite("register state", &state_k)?;
    let [x_r, y_r] = state_ref;
    let [x_k, y_k] = state_k;
    Ok([
        y_k - 2.0 * edge.rho * (x_k + x_r),
        -x_k - conductance(y_k, alpha) - 2.0 * edge.gamma * (y_k - y_r),
    ])
}

/// Derivative of a whole network at `tau`. Compiles `net` on every call; use
/// [`NetworkSpec::compile`] and [`Network::field`] inside integration loops.
pub fn network_field(net: &NetworkSpec, state: &FullState, tau: f64) -> Result<FullState> {
    let compiled = net.compile()?;
    if state.as_slice().len() != compiled.dim() {
        return Err(Error::Config(format!(
            "state has {} entries, network needs {}",
            state.as_slice().len(),
            compiled.dim()
        )));
    }
    let mut out = vec![0.0; compiled.dim()];
    compiled.field(tau, state.as_slice(), &mut out);
    FullState::new(out)
}
