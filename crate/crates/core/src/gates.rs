//! Phase-encoded gates built from coupled oscillators, their truth tables,
//! and composition into combinational circuits.
//!
//! Bit 0 is in-phase with the reference (`psi = 0`), bit 1 anti-phase
//! (`psi = pi`).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::{self, Write as _};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{CouplingEdge, DrivenSource, FullState, NetworkSpec, OscillatorSpec, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::integrator::{
    detect_lock, integrate, wrap_phase, LockReport, PhaseReference, Trajectory, TrajectoryKind, DEFAULT_LOCK_TOL,
    DEFAULT_LOCK_WINDOW, DEFAULT_STEP,
};
use crate::phase_model::PhaseNetwork;

/// Half-width of the undecidable band around `pi/2`.
pub const AMBIGUITY_MARGIN: f64 = 0.2;
/// Amplitude of the random phase kick applied to every initial condition.
pub const INITIAL_KICK: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TAU_END: f64 = 3000.0;

pub fn encode_bit(bit: u8) -> Result<f64> {
    match bit {
        0 => Ok(0.0),
        1 => Ok(PI),
        other => Err(Error::Domain(format!("bit must be 0 or 1, got {other}"))),
    }
}

pub fn decode_bit(psi: f64) -> Result<u8> {
    if !psi.is_finite() {
        return Err(Error::Domain(format!("cannot decode non-finite phase {psi}")));
    }
    let w = wrap_phase(psi).abs();
    if (w - FRAC_PI_2).abs() <= AMBIGUITY_MARGIN {
        return Err(Error::AmbiguousPhase { psi });
    }
    Ok(u8::from(w >= FRAC_PI_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Register,
    Not,
    And,
    Or,
}

impl GateKind {
    pub fn input_count(self) -> usize {
        match self {
            GateKind::Register => 0,
            GateKind::Not => 1,
            GateKind::And | GateKind::Or => 2,
        }
    }

    /// Boolean function realised by the gate.
    pub fn evaluate(self, inputs: &[u8]) -> Result<u8> {
        if inputs.len() != self.input_count() || inputs.iter().any(|&b| b > 1) {
            return Err(Error::Domain(format!(
                "{self} takes {} bits, got {inputs:?}",
                self.input_count()
            )));
        }
        match self {
            GateKind::Register => Err(Error::Config("a register has no logic inputs".into())),
            GateKind::Not => Ok(1 - inputs[0]),
            GateKind::And => Ok(inputs[0] & inputs[1]),
            GateKind::Or => Ok(inputs[0] | inputs[1]),
        }
    }

    /// Phase of the global MAJORITY drive selecting AND or OR.
    pub fn function_select(self) -> Option<f64> {
        match self {
            GateKind::And => Some(0.0),
            GateKind::Or => Some(PI),
            _ => None,
        }
    }

    /// All input combinations in truth-table order.
    pub fn input_rows(self) -> Vec<Vec<u8>> {
        match self.input_count() {
            0 => vec![],
            1 => vec![vec![0], vec![1]],
            _ => vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateKind::Register => "register",
            GateKind::Not => "not",
            GateKind::And => "and",
            GateKind::Or => "or",
        })
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "register" => Ok(GateKind::Register),
            "not" => Ok(GateKind::Not),
            "and" => Ok(GateKind::And),
            "or" => Ok(GateKind::Or),
            other => Err(Error::Config(format!("unknown gate '{other}'"))),
        }
    }
}

/// Coupling gains. `rho` and `gamma` are the register/NOT resistive and
/// conductive (drive) gains; MAJORITY uses `gamma_i`, `gamma_j` for the input
/// drives and `gamma` for the mutual edges and the global drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    pub alpha: f64,
    pub rho: f64,
    pub gamma: f64,
    pub gamma_i: f64,
    pub gamma_j: f64,
}

impl GateParams {
    pub fn default_for(kind: GateKind) -> Self {
        let base = Self {
            alpha: DEFAULT_ALPHA,
            rho: 0.0,
            gamma: 0.0,
            gamma_i: 0.0,
            gamma_j: 0.0,
        };
        match kind {
            GateKind::Register => Self {
                rho: 0.05,
                gamma: 0.1,
                ..base
            },
            GateKind::Not => Self {
                rho: 0.05,
                gamma: 0.1,
                ..base
            },
            GateKind::And | GateKind::Or => Self {
                gamma: 0.015,
                gamma_i: 0.09,
                gamma_j: 0.09,
                ..base
            },
        }
    }

    pub fn validate(&self, kind: GateKind) -> Result<()> {
        let all = [self.alpha, self.rho, self.gamma, self.gamma_i, self.gamma_j];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!(
                "gains must be finite and non-negative: {self:?}"
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config("alpha must be positive".into()));
        }
        match kind {
            GateKind::Register => Ok(()),
            GateKind::Not if self.rho > 0.0 && self.gamma > 0.0 => Ok(()),
            GateKind::Not => Err(Error::Config("NOT needs rho > 0 and gamma > 0".into())),
            GateKind::And | GateKind::Or => {
                if self.gamma_i != self.gamma_j {
                    return Err(Error::Config("MAJORITY needs gamma_i = gamma_j".into()));
                }
                let factor = if kind == GateKind::And { 1.0 } else { 2.0 };
                if !(self.gamma > 0.0 && self.gamma_i > factor * self.gamma) {
                    return Err(Error::Config(format!(
                        "{kind} needs gamma_i > {factor} gamma > 0 (gamma_i = {}, gamma = {})",
                        self.gamma_i, self.gamma
                    )));
                }
                Ok(())
            }
        }
    }
}

/// One gate of a circuit. Node ids are `<name>.<role>`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    pub name: String,
    pub kind: GateKind,
    pub params: GateParams,
    /// NOT only: drive the `k` unit and read `j`.
    pub reversed: bool,
}

impl GateInstance {
    pub fn new(name: impl Into<String>, kind: GateKind) -> Self {
        Self {
            name: name.into(),
            kind,
            params: GateParams::default_for(kind),
            reversed: false,
        }
    }

    pub fn with_params(mut self, params: GateParams) -> Self {
        self.params = params;
        self
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = true;
        self
    }

    fn node(&self, role: &str) -> String {
        format!("{}.{role}", self.name)
    }

    /// Node ids of the logic inputs.
    pub fn input_nodes(&self) -> Vec<String> {
        match self.kind {
            GateKind::Register => vec![],
            GateKind::Not if self.reversed => vec![self.node("k")],
            GateKind::Not => vec![self.node("j")],
            GateKind::And | GateKind::Or => vec![self.node("i"), self.node("j")],
        }
    }

    pub fn output_node(&self) -> String {
        match self.kind {
            GateKind::Register => self.node("k"),
            GateKind::Not if self.reversed => self.node("j"),
            _ => self.node("k"),
        }
    }

    /// Nodes in the order `i, j, k` (MAJORITY), `j, k` (NOT) or `ref, k`.
    pub fn nodes(&self) -> Vec<String> {
        let roles: &[&str] = match self.kind {
            GateKind::Register => &["ref", "k"],
            GateKind::Not => &["j", "k"],
            GateKind::And | GateKind::Or => &["i", "j", "k"],
        };
        roles.iter().map(|r| self.node(r)).collect()
    }

    /// Gain of the drive attached to input `index`.
    pub fn input_gain(&self, index: usize) -> f64 {
        match self.kind {
            GateKind::Not => self.params.gamma,
            _ if index == 0 => self.params.gamma_i,
            _ => self.params.gamma_j,
        }
    }

    /// Netlist with the inputs driven at the given bits. `None` leaves an
    /// input undriven (to be wired by [`compose`]).
    pub fn netlist_with(&self, inputs: &[Option<u8>]) -> Result<NetworkSpec> {
        self.params.validate(self.kind)?;
        if inputs.len() != self.kind.input_count() {
            return Err(Error::Config(format!(
                "{} takes {} inputs, got {}",
                self.kind,
                self.kind.input_count(),
                inputs.len()
            )));
        }
        let p = &self.params;
        let mut spec = NetworkSpec {
            oscillators: self
                .nodes()
                .into_iter()
                .map(|id| OscillatorSpec::new(id, p.alpha))
                .collect(),
            ..Default::default()
        };
        match self.kind {
            GateKind::Register => {
                spec.edges.push(CouplingEdge::master_slave(
                    self.node("ref"),
                    self.node("k"),
                    p.rho,
                    p.gamma,
                ));
                spec.reference = Some(self.node("ref"));
            }
            GateKind::Not => {
                spec.edges
                    .push(CouplingEdge::resistive(self.node("j"), self.node("k"), p.rho));
            }
            GateKind::And | GateKind::Or => {
                let (i, j, k) = (self.node("i"), self.node("j"), self.node("k"));
                spec.edges.push(CouplingEdge::conductive(&i, &j, p.gamma));
                spec.edges.push(CouplingEdge::conductive(&i, &k, p.gamma));
                spec.edges.push(CouplingEdge::conductive(&j, &k, p.gamma));
                let psi_d = self.kind.function_select().unwrap_or(0.0);
                for node in [i, j, k] {
                    spec.sources.push(DrivenSource::new(node, psi_d, p.gamma));
                }
            }
        }
        for (index, (node, bit)) in self.input_nodes().into_iter().zip(inputs).enumerate() {
            if let Some(bit) = bit {
                spec.sources
                    .push(DrivenSource::new(node, encode_bit(*bit)?, self.input_gain(index)));
            }
        }
        Ok(spec)
    }

    pub fn netlist(&self, inputs: &[u8]) -> Result<NetworkSpec> {
        let inputs: Vec<Option<u8>> = inputs.iter().map(|&b| Some(b)).collect();
        self.netlist_with(&inputs)
    }
}

/// Two-unit NOT gate with its input driven at `input`.
pub fn build_not(params: GateParams, input: u8) -> Result<NetworkSpec> {
    GateInstance::new("not", GateKind::Not)
        .with_params(params)
        .netlist(&[input])
}

/// Three-unit MAJORITY gate in AND (`psi_D = 0`) or OR (`psi_D = pi`) mode.
pub fn build_majority(kind: GateKind, params: GateParams, inputs: [u8; 2]) -> Result<NetworkSpec> {
    if kind.function_select().is_none() {
        return Err(Error::Config(format!("{kind} is not a MAJORITY mode")));
    }
    GateInstance::new("maj", kind).with_params(params).netlist(&inputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    FullState,
    PhaseModel,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Engine::FullState),
            "phase" => Ok(Engine::PhaseModel),
            other => Err(Error::Config(format!("unknown engine '{other}' (full|phase)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub h: f64,
    pub tau_end: f64,
    pub seed: u64,
    pub sample_every: usize,
    pub lock_window: f64,
    pub lock_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            h: DEFAULT_STEP,
            tau_end: DEFAULT_TAU_END,
            seed: DEFAULT_SEED,
            sample_every: 10,
            lock_window: DEFAULT_LOCK_WINDOW,
            lock_tol: DEFAULT_LOCK_TOL,
        }
    }
}

/// Initial phases: every unit near the reference phase, kicked by a uniform
/// draw in `[-INITIAL_KICK, INITIAL_KICK]`. `stream` separates independent
/// runs sharing one seed.
pub fn initial_phases(nodes: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..nodes)
        .map(|_| rng.gen_range(-INITIAL_KICK..=INITIAL_KICK))
        .collect()
}

/// Lock reference of a netlist: its reference unit if it has one, otherwise
/// the ideal drive phase.
pub fn lock_reference(spec: &NetworkSpec) -> PhaseReference {
    spec.reference
        .as_deref()
        .and_then(|r| spec.index_of(r))
        .map_or(PhaseReference::Drive, PhaseReference::Node)
}

/// Integrates a netlist from on-cycle initial phases.
pub fn simulate(spec: &NetworkSpec, engine: Engine, phases: &[f64], opts: &RunOptions) -> Result<Trajectory> {
    if phases.len() != spec.node_count() {
        return Err(Error::Config(format!(
            "{} initial phases for {} units",
            phases.len(),
            spec.node_count()
        )));
    }
    match engine {
        Engine::FullState => {
            let net = spec.compile()?;
            let state = FullState::on_cycle(phases);
            let field = |t: f64, s: &[f64], o: &mut [f64]| net.field(t, s, o);
            integrate(
                &field,
                state.as_slice(),
                opts.tau_end,
                opts.h,
                opts.sample_every,
                TrajectoryKind::FullState,
            )
        }
        Engine::PhaseModel => {
            let net = PhaseNetwork::from_network(spec)?;
            let field = |_: f64, s: &[f64], o: &mut [f64]| net.rhs(s, o);
            integrate(
                &field,
                phases,
                opts.tau_end,
                opts.h,
                opts.sample_every,
                TrajectoryKind::PhaseState,
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthTableRow {
    /// Reference (function select) bit: 0 for AND and NOT, 1 for OR.
    pub reference_bit: u8,
    pub inputs: Vec<u8>,
    pub expected: u8,
    pub observed: Option<u8>,
    /// Steady phase deviation of every unit, in gate node order.
    pub psi: Vec<f64>,
    pub locked: bool,
    pub lock: Option<LockReport>,
    /// Why the row failed to produce a bit, if it did.
    pub failure: Option<String>,
}

impl TruthTableRow {
    pub fn passed(&self) -> bool {
        self.locked && self.observed == Some(self.expected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    pub gate: GateKind,
    pub engine: Engine,
    pub seed: u64,
    pub rows: Vec<TruthTableRow>,
}

impl TruthTable {
    pub fn all_passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(TruthTableRow::passed)
    }

    pub fn observed(&self) -> Vec<Option<u8>> {
        self.rows.iter().map(|r| r.observed).collect()
    }

    /// Aligned text report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "gate {}  engine {}  seed {}",
            self.gate,
            match self.engine {
                Engine::FullState => "full",
                Engine::PhaseModel => "phase",
            },
            self.seed
        );
        let _ = writeln!(
            out,
            "{:>3} {:>3} {:>3} {:>8} {:>8} {:>9} {:>9} {:>9} {:>6}",
            "ref", "in1", "in2", "expected", "observed", "psi_i", "psi_j", "psi_k", "locked"
        );
        for (row, cells) in self.rows.iter().zip(self.csv_cells()) {
            let _ = write!(
                out,
                "{:>3} {:>3} {:>3} {:>8} {:>8} {:>9} {:>9} {:>9} {:>6}",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                cells[4],
                short(&cells[5]),
                short(&cells[6]),
                short(&cells[7]),
                cells[8]
            );
            if let Some(why) = &row.failure {
                let _ = write!(out, "  {why}");
            }
            out.push('\n');
        }
        let passed = self.rows.iter().filter(|r| r.passed()).count();
        let _ = writeln!(out, "{passed}/{} rows correct", self.rows.len());
        out
    }

    fn csv_cells(&self) -> Vec<[String; 9]> {
        self.rows
            .iter()
            .map(|r| {
                let psi = |i: Option<usize>| i.and_then(|i| r.psi.get(i)).map_or(String::new(), |p| p.to_string());
                let (pi, pj, pk) = match self.gate {
                    GateKind::Not => (None, Some(0), Some(1)),
                    GateKind::Register => (None, Some(0), Some(1)),
                    _ => (Some(0), Some(1), Some(2)),
                };
                [
                    r.reference_bit.to_string(),
                    r.inputs.first().map_or(String::new(), u8::to_string),
                    r.inputs.get(1).map_or(String::new(), u8::to_string),
                    r.expected.to_string(),
                    r.observed.map_or(String::new(), |b| b.to_string()),
                    psi(pi),
                    psi(pj),
                    psi(pk),
                    r.locked.to_string(),
                ]
            })
            .collect()
    }

    /// CSV with header `ref,in1,in2,expected,observed,psi_i,psi_j,psi_k,locked`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "ref", "in1", "in2", "expected", "observed", "psi_i", "psi_j", "psi_k", "locked",
        ])?;
        for cells in self.csv_cells() {
            w.write_record(&cells)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

fn short(cell: &str) -> String {
    cell.parse::<f64>().map_or(cell.to_string(), |v| format!("{v:.4}"))
}

/// Simulates a netlist and reads the bit on `output` (a node index).
fn settle(
    spec: &NetworkSpec,
    engine: Engine,
    output: usize,
    opts: &RunOptions,
    stream: u64,
) -> Result<(Option<u8>, Vec<f64>, Option<LockReport>, Option<String>)> {
    let phases = initial_phases(spec.node_count(), opts.seed, stream);
    let traj = simulate(spec, engine, &phases, opts)?;
    let lock = match detect_lock(&traj, lock_reference(spec), opts.lock_window, opts.lock_tol) {
        Ok(l) => l,
        Err(e @ (Error::NotOscillating { .. } | Error::TrajectoryTooShort(_))) => {
            return Ok((None, vec![], None, Some(e.to_string())))
        }
        Err(e) => return Err(e),
    };
    let psi = lock.phase_diffs.clone();
    let (observed, failure) = match decode_bit(psi[output]) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let failure = failure.or_else(|| (!lock.locked).then(|| format!("not locked (residual {:.2e})", lock.residual)));
    Ok((observed, psi, Some(lock), failure))
}

/// Runs every input combination of `gate` concurrently and decodes the
/// output. Rows are returned in truth-table order.
pub fn run_truth_table(gate: &GateInstance, engine: Engine, opts: &RunOptions) -> Result<TruthTable> {
    if gate.kind == GateKind::Register {
        return Err(Error::Config("a register has no logic inputs".into()));
    }
    gate.params.validate(gate.kind)?;
    let reference_bit = u8::from(gate.kind == GateKind::Or);
    let rows = gate
        .kind
        .input_rows()
        .into_par_iter()
        .enumerate()
        .map(|(stream, inputs)| {
            let spec = gate.netlist(&inputs)?;
            let output = spec
                .index_of(&gate.output_node())
                .ok_or_else(|| Error::Config("gate output missing from its netlist".into()))?;
            let (observed, psi, lock, failure) = settle(&spec, engine, output, opts, stream as u64)?;
            Ok(TruthTableRow {
                reference_bit,
                expected: gate.kind.evaluate(&inputs)?,
                inputs,
                observed,
                psi,
                locked: lock.as_ref().is_some_and(|l| l.locked),
                lock,
                failure,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TruthTable {
        gate: gate.kind,
        engine,
        seed: opts.seed,
        rows,
    })
}

/// Connects the output of gate `from` to input `input` of gate `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wire {
    pub from: usize,
    pub to: usize,
    pub input: usize,
}

/// Gates plus output-to-input wiring.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub gates: Vec<GateInstance>,
    pub wires: Vec<Wire>,
}

impl Circuit {
    pub fn new(gates: Vec<GateInstance>, wires: Vec<Wire>) -> Self {
        Self { gates, wires }
    }

    /// `(gate, input)` pairs not fed by a wire, in gate order. These take the
    /// external bits.
    pub fn external_inputs(&self) -> Vec<(usize, usize)> {
        let wired: Vec<(usize, usize)> = self.wires.iter().map(|w| (w.to, w.input)).collect();
        self.gates
            .iter()
            .enumerate()
            .flat_map(|(g, gate)| (0..gate.kind.input_count()).map(move |i| (g, i)))
            .filter(|p| !wired.contains(p))
            .collect()
    }

    /// Gates whose output feeds nothing.
    pub fn sinks(&self) -> Vec<usize> {
        (0..self.gates.len())
            .filter(|g| !self.wires.iter().any(|w| w.from == *g))
            .collect()
    }

    /// Gate indices in dependency order.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.gates.len();
        for w in &self.wires {
            if w.from >= n || w.to >= n {
                return Err(Error::Config(format!("wire {w:?} names a missing gate")));
            }
            if w.input >= self.gates[w.to].kind.input_count() {
                return Err(Error::Config(format!("wire {w:?} names a missing input")));
            }
        }
        let mut seen = HashMap::new();
        for w in &self.wires {
            if let Some(prev) = seen.insert((w.to, w.input), w.from) {
                return Err(Error::Config(format!(
                    "input {} of gate {} wired twice (from {prev} and {})",
                    w.input, w.to, w.from
                )));
            }
        }
        let mut indegree = vec![0usize; n];
        for w in &self.wires {
            indegree[w.to] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&g| indegree[g] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(n);
        while let Some(g) = ready.pop() {
            order.push(g);
            for w in self.wires.iter().filter(|w| w.from == g) {
                indegree[w.to] -= 1;
                if indegree[w.to] == 0 {
                    ready.push(w.to);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Config("gate wiring contains a cycle".into()));
        }
        Ok(order)
    }

    /// Boolean value of every gate output for the external `bits`.
    pub fn evaluate(&self, bits: &[u8]) -> Result<Vec<u8>> {
        let order = self.topological_order()?;
        let external = self.external_inputs();
        if bits.len() != external.len() {
            return Err(Error::Config(format!(
                "circuit takes {} bits, got {}",
                external.len(),
                bits.len()
            )));
        }
        let mut values: Vec<Option<u8>> = vec![None; self.gates.len()];
        for g in order {
            let inputs = (0..self.gates[g].kind.input_count())
                .map(|i| match self.wires.iter().find(|w| w.to == g && w.input == i) {
                    Some(w) => Ok(values[w.from].expect("upstream evaluated first")),
                    None => Ok(bits[external.iter().position(|p| *p == (g, i)).expect("external input")]),
                })
                .collect::<Result<Vec<u8>>>()?;
            values[g] = Some(self.gates[g].kind.evaluate(&inputs)?);
        }
        Ok(values.into_iter().map(|v| v.expect("all gates evaluated")).collect())
    }
}

/// One netlist for the whole circuit. External inputs are driven at `bits`;
/// a wired input gets a directed conductive edge from the upstream output
/// with the gain its drive would have had.
pub fn compose(circuit: &Circuit, bits: &[u8]) -> Result<NetworkSpec> {
    circuit.topological_order()?;
    let external = circuit.external_inputs();
    if bits.len() != external.len() {
        return Err(Error::Config(format!(
            "circuit takes {} bits, got {}",
            external.len(),
            bits.len()
        )));
    }
    let mut names = std::collections::HashSet::new();
    for gate in &circuit.gates {
        if !names.insert(gate.name.as_str()) {
            return Err(Error::Config(format!("duplicate gate name '{}'", gate.name)));
        }
    }
    let mut spec = NetworkSpec::default();
    for (g, gate) in circuit.gates.iter().enumerate() {
        let inputs: Vec<Option<u8>> = (0..gate.kind.input_count())
            .map(|i| external.iter().position(|p| *p == (g, i)).map(|k| bits[k]))
            .collect();
        let part = gate.netlist_with(&inputs)?;
        if part.reference.is_some() {
            if spec.reference.is_some() {
                return Err(Error::Config("a circuit can hold only one register reference".into()));
            }
            spec.reference = part.reference;
        }
        spec.oscillators.extend(part.oscillators);
        spec.edges.extend(part.edges);
        spec.sources.extend(part.sources);
    }
    for w in &circuit.wires {
        let to = &circuit.gates[w.to];
        spec.edges.push(CouplingEdge::master_slave(
            circuit.gates[w.from].output_node(),
            to.input_nodes()[w.input].clone(),
            0.0,
            to.input_gain(w.input),
        ));
    }
    Ok(spec)
}

/// Result of simulating a circuit on one input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitRun {
    pub bits: Vec<u8>,
    /// Boolean value of each sink gate.
    pub expected: Vec<u8>,
    pub observed: Vec<Option<u8>>,
    pub locked: bool,
}

impl CircuitRun {
    pub fn passed(&self) -> bool {
        self.locked && self.observed.iter().zip(&self.expected).all(|(o, e)| *o == Some(*e))
    }
}

/// Simulates the composed netlist for every external input vector and
/// compares each sink output against Boolean evaluation.
pub fn run_circuit(circuit: &Circuit, engine: Engine, opts: &RunOptions) -> Result<Vec<CircuitRun>> {
    let n = circuit.external_inputs().len();
    let sinks = circuit.sinks();
    (0..1u32 << n)
        .into_par_iter()
        .map(|code| {
            let bits: Vec<u8> = (0..n).rev().map(|k| ((code >> k) & 1) as u8).collect();
            let values = circuit.evaluate(&bits)?;
            let spec = compose(circuit, &bits)?;
            let phases = initial_phases(spec.node_count(), opts.seed, u64::from(code));
            let traj = simulate(&spec, engine, &phases, opts)?;
            let (observed, locked) = match detect_lock(&traj, lock_reference(&spec), opts.lock_window, opts.lock_tol) {
                Ok(lock) => {
                    let observed = sinks
                        .iter()
                        .map(|&g| {
                            let idx = spec
                                .index_of(&circuit.gates[g].output_node())
                                .expect("sink node exists");
                            decode_bit(lock.phase_diffs[idx]).ok()
                        })
                        .collect();
                    (observed, lock.locked)
                }
                Err(Error::NotOscillating { .. }) => (vec![None; sinks.len()], false),
                Err(e) => return Err(e),
            };
            Ok(CircuitRun {
                expected: sinks.iter().map(|&g| values[g]).collect(),
                bits,
                observed,
                locked,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_decode_examples() {
        assert_eq!(encode_bit(0).unwrap(), 0.0);
        assert_eq!(encode_bit(1).unwrap(), PI);
        assert!(encode_bit(2).is_err());
        assert_eq!(decode_bit(0.03).unwrap(), 0);
        assert_eq!(decode_bit(3.0).unwrap(), 1);
        assert!(matches!(decode_bit(FRAC_PI_2), Err(Error::AmbiguousPhase { .. })));
        assert!(matches!(
            decode_bit(-FRAC_PI_2 - 0.1),
            Err(Error::AmbiguousPhase { .. })
        ));
        for b in [0, 1] {
            assert_eq!(decode_bit(encode_bit(b).unwrap()).unwrap(), b);
        }
    }

    #[test]
    fn not_structure() {
        let spec = build_not(GateParams::default_for(GateKind::Not), 0).unwrap();
        assert_eq!(spec.oscillators.len(), 2);
        assert_eq!(spec.edges.len(), 1);
        assert!(!spec.edges[0].directed);
        assert_eq!(spec.sources.len(), 1);
        assert_eq!(spec.sources[0].target, "not.j");
        let rev = GateInstance::new("n", GateKind::Not).reversed();
        assert_eq!(rev.netlist(&[1]).unwrap().sources[0].target, "n.k");
        assert_eq!(rev.output_node(), "n.j");
    }

    #[test]
    fn majority_structure_and_gain_checks() {
        let p = GateParams::default_for(GateKind::And);
        let spec = build_majority(GateKind::Or, p, [1, 0]).unwrap();
        assert_eq!(spec.oscillators.len(), 3);
        assert_eq!(spec.edges.len(), 3);
        assert_eq!(spec.sources.len(), 5);
        assert!(spec
            .sources
            .iter()
            .filter(|s| s.gamma_d == p.gamma)
            .all(|s| s.psi_d == PI));
        let bad = GateParams {
            gamma_i: 0.05,
            gamma_j: 0.05,
            gamma: 0.03,
            ..p
        };
        assert!(bad.validate(GateKind::And).is_ok());
        assert!(bad.validate(GateKind::Or).is_err());
        let skew = GateParams { gamma_j: 0.08, ..p };
        assert!(build_majority(GateKind::And, skew, [0, 0]).is_err());
        assert!(build_majority(GateKind::Not, p, [0, 0]).is_err());
        assert!(GateParams {
            rho: 0.0,
            ..GateParams::default_for(GateKind::Not)
        }
        .validate(GateKind::Not)
        .is_err());
    }

    #[test]
    fn composition_plumbing() {
        let c = Circuit::default();
        assert_eq!(compose(&c, &[]).unwrap(), NetworkSpec::default());
        let nand = Circuit::new(
            vec![
                GateInstance::new("a", GateKind::And),
                GateInstance::new("n", GateKind::Not),
            ],
            vec![Wire {
                from: 0,
                to: 1,
                input: 0,
            }],
        );
        assert_eq!(nand.external_inputs(), vec![(0, 0), (0, 1)]);
        assert_eq!(nand.sinks(), vec![1]);
        assert_eq!(nand.evaluate(&[1, 1]).unwrap(), vec![1, 0]);
        let spec = compose(&nand, &[1, 0]).unwrap();
        assert!(spec.compile().is_ok());
        assert!(spec.sources.iter().all(|s| s.target != "n.j"));
        let wire = spec.edges.iter().find(|e| e.to == "n.j").unwrap();
        assert!(wire.directed && wire.from == "a.k" && wire.gamma == 0.1 && wire.rho == 0.0);

        let cyclic = Circuit::new(
            vec![
                GateInstance::new("x", GateKind::Not),
                GateInstance::new("y", GateKind::Not),
            ],
            vec![
                Wire {
                    from: 0,
                    to: 1,
                    input: 0,
                },
                Wire {
                    from: 1,
                    to: 0,
                    input: 0,
                },
            ],
        );
        assert!(matches!(compose(&cyclic, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn initial_phases_are_seeded() {
        let a = initial_phases(5, 7, 0);
        assert_eq!(a, initial_phases(5, 7, 0));
        assert_ne!(a, initial_phases(5, 7, 1));
        assert!(a.iter().all(|p| p.abs() <= INITIAL_KICK));
    }

    proptest! {
        #[test]
        fn decode_is_2pi_periodic_and_matches_threshold(psi in -10.0..10.0f64, k in -3i32..3) {
            let a = decode_bit(psi);
            let b = decode_bit(psi + k as f64 * std::f64::consts::TAU);
            match (a, b) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x, y);
                    prop_assert_eq!(x == 1, wrap_phase(psi).abs() >= FRAC_PI_2);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!((wrap_phase(psi).abs() - FRAC_PI_2).abs() > AMBIGUITY_MARGIN - 1e-9),
            }
        }
    }
}
