//! Subcommand implementations. Each returns the report text and whether the
//! run met its success condition; `main` prints and maps to exit codes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use osc_logic::gates::{
    initial_phases, lock_reference, run_truth_table, simulate, Engine, GateInstance, GateKind, GateParams, RunOptions,
};
use osc_logic::integrator::{detect_lock, wrap_phase, DEFAULT_LOCK_TOL, DEFAULT_LOCK_WINDOW};
use osc_logic::phase_model::{GateEquations, PhaseNetwork};
use osc_logic::stability::{
    analyze_equilibrium, liapunov_descent_check, reports_to_text, predicted_stability, write_reports_csv, DescentOptions,
    Stability,
};

use crate::netlist::{parse_netlist, NetlistError};

pub const SEED_ENV: &str = "OSC_LOGIC_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: NetlistError },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Simulation(#[from] osc_logic::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            // a unit that stopped oscillating is a failed lock, not a crash
            CliError::Simulation(osc_logic::Error::NotOscillating { .. }) => 1,
            CliError::Io { .. } | CliError::Simulation(_) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub success: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.success {
            0
        } else {
            1
        }
    }
}

/// Seed from `OSC_LOGIC_SEED`, if set.
pub fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_netlist(path: &Path) -> Result<(osc_logic::dynamics::NetworkSpec, crate::netlist::SimConfig), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_netlist(&text).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

pub fn simulate_cmd(
    netlist: &Path,
    engine: Engine,
    csv: Option<&Path>,
    seed: Option<u64>,
) -> Result<Outcome, CliError> {
    let (spec, sim) = read_netlist(netlist)?;
    let seed = seed.unwrap_or(sim.seed);
    let opts = RunOptions {
        h: sim.h,
        tau_end: sim.tau_end,
        seed,
        ..RunOptions::default()
    };
    let phases = initial_phases(spec.node_count(), seed, 0);
    let traj = simulate(&spec, engine, &phases, &opts)?;
    if let Some(path) = csv {
        traj.write_csv(create(path)?)?;
    }
    let lock = detect_lock(&traj, lock_reference(&spec), DEFAULT_LOCK_WINDOW, DEFAULT_LOCK_TOL)?;

    let mut report = String::new();
    let _ = writeln!(report, "seed = {seed}");
    let against = spec.reference.as_deref().unwrap_or("drive");
    let _ = writeln!(report, "phases relative to {against}:");
    for (o, psi) in spec.oscillators.iter().zip(&lock.phase_diffs) {
        let _ = write!(report, "  psi_{} = {psi:+.6} rad", o.id);
        if let Some(r) = lock
            .radii
            .as_ref()
            .and_then(|r| r.get(spec.index_of(&o.id).unwrap_or(0)))
        {
            let _ = write!(report, "  radius {r:.4}");
        }
        report.push('\n');
    }
    let _ = writeln!(report, "residual = {:.3e}", lock.residual);
    let _ = writeln!(report, "locked = {}", lock.locked);
    Ok(Outcome {
        report,
        success: lock.locked,
    })
}

pub fn truth_table_cmd(
    kind: GateKind,
    engine: Engine,
    csv: Option<&Path>,
    seed: Option<u64>,
) -> Result<Outcome, CliError> {
    if kind == GateKind::Register {
        return Err(CliError::Usage("truth tables exist for not, and, or".into()));
    }
    let opts = RunOptions {
        seed: seed.unwrap_or(RunOptions::default().seed),
        ..RunOptions::default()
    };
    let table = run_truth_table(&GateInstance::new("g", kind), engine, &opts)?;
    if let Some(path) = csv {
        table.write_csv(create(path)?)?;
    }
    Ok(Outcome {
        report: table.to_text(),
        success: table.all_passed(),
    })
}

/// Parses `0,pi` style phase lists: decimals, `pi`, `-pi`, `pi/2`, `2pi`.
pub fn parse_phases(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|item| {
            let s = item.trim().to_ascii_lowercase();
            let bad = || CliError::Usage(format!("cannot read phase '{}'", item.trim()));
            let (neg, body) = match s.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, s.as_str()),
            };
            let value = if let Some(pos) = body.find("pi") {
                let coeff = match &body[..pos] {
                    "" => 1.0,
                    c => c.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
                };
                let div = match &body[pos + 2..] {
                    "" => 1.0,
                    d => d.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
                };
                coeff * PI / div
            } else {
                body.parse::<f64>().map_err(|_| bad())?
            };
            if !value.is_finite() {
                return Err(bad());
            }
            Ok(if neg { -value } else { value })
        })
        .collect()
}

fn parse_bits(text: &str) -> Result<Vec<u8>, CliError> {
    text.split(',')
        .map(|b| match b.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(CliError::Usage(format!("input bits must be 0 or 1, got '{other}'"))),
        })
        .collect()
}

/// Nearest logic bit of a phase, for reading drives off a target.
fn bit_of(psi: f64) -> u8 {
    u8::from(wrap_phase(psi).abs() > PI / 2.0)
}

#[derive(Debug, Clone, Default)]
pub struct StabilityArgs {
    pub target: String,
    pub inputs: Option<String>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_i: Option<f64>,
    pub csv: Option<PathBuf>,
}

/// Phase equations of `kind` for the given input bits.
pub fn gate_equations(kind: GateKind, params: &GateParams, inputs: &[u8]) -> Result<GateEquations, CliError> {
    let phase = |b: u8| if b == 1 { PI } else { 0.0 };
    if inputs.len() != kind.input_count() {
        return Err(CliError::Usage(format!(
            "{kind} takes {} input bit(s)",
            kind.input_count()
        )));
    }
    Ok(match kind {
        GateKind::Register => GateEquations::Register {
            rho: params.rho,
            gamma: params.gamma,
        },
        GateKind::Not => GateEquations::Not {
            psi_dj: phase(inputs[0]),
            rho: params.rho,
            gamma: params.gamma,
        },
        GateKind::And | GateKind::Or => GateEquations::Majority {
            drives: [
                phase(inputs[0]),
                phase(inputs[1]),
                kind.function_select().unwrap_or(0.0),
            ],
            gains: [params.gamma_i, params.gamma_j, params.gamma],
        },
    })
}

pub fn stability_cmd(kind: GateKind, args: &StabilityArgs) -> Result<Outcome, CliError> {
    let target = parse_phases(&args.target)?;
    let dim = match kind {
        GateKind::Register => 1,
        GateKind::Not => 2,
        GateKind::And | GateKind::Or => 3,
    };
    if target.len() != dim {
        return Err(CliError::Usage(format!("{kind} needs a target of {dim} phase(s)")));
    }
    let target: Vec<f64> = target.into_iter().map(wrap_phase).collect();
    let inputs = match &args.inputs {
        Some(text) => parse_bits(text)?,
        // drives follow the inputs encoded in the target
        None => target.iter().take(kind.input_count()).map(|&p| bit_of(p)).collect(),
    };
    let mut params = GateParams::default_for(kind);
    if let Some(r) = args.rho {
        params.rho = r;
    }
    if let Some(g) = args.gamma {
        params.gamma = g;
    }
    if let Some(g) = args.gamma_i {
        params.gamma_i = g;
        params.gamma_j = g;
    }
    params.validate(kind)?;
    let eq = gate_equations(kind, &params, &inputs)?;

    let rhs = |p: &[f64]| eq.eval(p);
    let mut report = analyze_equilibrium(&rhs, &target)?;
    let residual = eq.eval(&target).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let claim = predicted_stability(&eq, &target);
    if claim == Some(Stability::Stable) && kind != GateKind::Register {
        report.liapunov = Some(liapunov_descent_check(&eq, &target, &DescentOptions::default())?);
    }
    let certificate_ok = report.liapunov.as_ref().is_none_or(|c| c.passed());
    let success = residual < 1e-9 && claim == Some(report.classification) && certificate_ok;

    if let Some(path) = &args.csv {
        write_reports_csv(std::slice::from_ref(&report), create(path)?)?;
    }
    let mut text = String::new();
    let _ = writeln!(text, "gate {kind}  inputs {inputs:?}  params {params:?}");
    text.push_str(&reports_to_text(std::slice::from_ref(&report)));
    if residual >= 1e-9 {
        let _ = writeln!(text, "  not an equilibrium: |rhs| = {residual:.3e}");
    }
    let _ = writeln!(
        text,
        "claim {}  verdict {}",
        claim.map_or("none".to_string(), |c| c.to_string()),
        if success { "match" } else { "MISMATCH" }
    );
    Ok(Outcome { report: text, success })
}

pub fn reduce_cmd(netlist: &Path) -> Result<Outcome, CliError> {
    let (spec, _) = read_netlist(netlist)?;
    let net = PhaseNetwork::from_network(&spec)?;
    Ok(Outcome {
        report: net.describe(),
        success: true,
    })
}
