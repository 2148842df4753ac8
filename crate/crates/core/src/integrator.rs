//! Fixed-step classical Runge-Kutta integration and phase-lock detection.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use crate::dynamics::{drive_state, phase_of};
use crate::error::{Error, Result};

/// Default step: roughly 628 steps per oscillation period.
pub const DEFAULT_STEP: f64 = 0.01;
/// Default lock tolerance in rad per unit tau.
pub const DEFAULT_LOCK_TOL: f64 = 1e-3;
/// Default detection window: ten periods.
pub const DEFAULT_LOCK_WINDOW: f64 = 10.0 * TAU;
/// Mean radius below which a node counts as not oscillating.
pub const MIN_OSCILLATION_RADIUS: f64 = 0.1;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Reusable RK4 stepper; owns the stage buffers so the hot loop does not
/// allocate.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    scratch: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            scratch: vec![0.0; dim],
        }
    }

    /// Advances `state` in place from `tau` to `tau + h`.
    pub fn step<F>(&mut self, field: &F, tau: f64, h: f64, state: &mut [f64]) -> Result<()>
    where
        F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
    {
        let n = state.len();
        debug_assert_eq!(n, self.k1.len());
        let half = 0.5 * h;

        field(tau, state, &mut self.k1);
        check_stage(&self.k1, tau, 1)?;
        for i in 0..n {
            self.scratch[i] = state[i] + half * self.k1[i];
        }
        field(tau + half, &self.scratch, &mut self.k2);
        check_stage(&self.k2, tau, 2)?;
        for i in 0..n {
            self.scratch[i] = state[i] + half * self.k2[i];
        }
        field(tau + half, &self.scratch, &mut self.k3);
        check_stage(&self.k3, tau, 3)?;
        for i in 0..n {
            self.scratch[i] = state[i] + h * self.k3[i];
        }
        field(tau + h, &self.scratch, &mut self.k4);
        check_stage(&self.k4, tau, 4)?;

        let sixth = h / 6.0;
        for i in 0..n {
            state[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                tau,
                reason: "non-finite state after update".into(),
            });
        }
        Ok(())
    }
}

fn check_stage(k: &[f64], tau: f64, stage: usize) -> Result<()> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration {
            tau,
            reason: format!("non-finite derivative in stage {stage}"),
        })
    }
}

/// One classical RK4 step.
pub fn rk4_step<F>(field: &F, state: &[f64], tau: f64, h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let mut next = state.to_vec();
    Rk4::new(state.len()).step(field, tau, h, &mut next)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// `[x0, y0, x1, y1, ...]` per sample.
    FullState,
    /// `[psi0, psi1, ...]` per sample.
    PhaseState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn node_count(&self) -> usize {
        let dim = self.states.first().map_or(0, Vec::len);
        match self.kind {
            TrajectoryKind::FullState => dim / 2,
            TrajectoryKind::PhaseState => dim,
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols = vec!["tau".to_string()];
        for i in 0..self.node_count() {
            match self.kind {
                TrajectoryKind::FullState => {
                    cols.push(format!("node{i}_x"));
                    cols.push(format!("node{i}_y"));
                }
                TrajectoryKind::PhaseState => cols.push(format!("psi_{i}")),
            }
        }
        cols
    }

    /// Writes the trajectory as CSV. Values use the shortest decimal form
    /// that parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        let mut row = Vec::with_capacity(1 + self.states.first().map_or(0, Vec::len));
        for (t, s) in self.times.iter().zip(&self.states) {
            row.clear();
            row.push(t.to_string());
            row.extend(s.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let kind = match header.get(1) {
            Some(c) if c.starts_with("psi_") => TrajectoryKind::PhaseState,
            _ => TrajectoryKind::FullState,
        };
        let mut times = Vec::new();
        let mut states = Vec::new();
        for record in r.records() {
            let record = record?;
            let mut values = record.iter().map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Csv(format!("bad number '{f}': {e}")))
            });
            let t = values.next().ok_or_else(|| Error::Csv("empty row".into()))??;
            times.push(t);
            states.push(values.collect::<Result<Vec<_>>>()?);
        }
        Ok(Self { times, states, kind })
    }
}

/// Integrates on the uniform grid `k*h`, storing every `sample_every`-th
/// point. The last sample is the largest stored grid time not beyond
/// `tau_end`.
pub fn integrate<F>(
    field: &F,
    state0: &[f64],
    tau_end: f64,
    h: f64,
    sample_every: usize,
    kind: TrajectoryKind,
) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    if !(tau_end > 0.0 && tau_end.is_finite()) {
        return Err(Error::Domain(format!("tau_end must be positive, got {tau_end}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    if sample_every == 0 {
        return Err(Error::Domain("sample_every must be at least 1".into()));
    }
    // guard against 1.0 / 0.1 landing a hair below 10
    let steps = (tau_end / h * (1.0 + 1e-12)).floor() as usize;
    let samples = steps / sample_every + 1;
    let total = (samples - 1) * sample_every;

    let mut times = Vec::with_capacity(samples);
    let mut states = Vec::with_capacity(samples);
    let mut state = state0.to_vec();
    let mut rk = Rk4::new(state.len());
    times.push(0.0);
    states.push(state.clone());
    for k in 0..total {
        let tau = k as f64 * h;
        rk.step(field, tau, h, &mut state)?;
        if (k + 1) % sample_every == 0 {
            times.push((k + 1) as f64 * h);
            states.push(state.clone());
        }
    }
    Ok(Trajectory { times, states, kind })
}

/// What the per-node phases are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseReference {
    /// Another node of the same trajectory.
    Node(usize),
    /// The ideal drive reference with phase `tau` (drive offset zero).
    Drive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockReport {
    pub locked: bool,
    /// Circular-mean phase deviation per node over the window, in `(-pi, pi]`.
    pub phase_diffs: Vec<f64>,
    /// Largest drift rate of a period-averaged phase deviation in the window.
    pub residual: f64,
    /// Mean orbit radius per node over the window (full-state only).
    pub radii: Option<Vec<f64>>,
}

/// Decides whether every node is phase-locked to `reference` at the tail of
/// the trajectory.
///
/// The window is cut into whole periods (`2 pi`). Inside each period the
/// deviation is circularly averaged, which removes the intra-cycle phase
/// wobble of the nonlinear orbit; the residual is the largest change of that
/// average between consecutive periods divided by the period.
pub fn detect_lock(traj: &Trajectory, reference: PhaseReference, window: f64, tol: f64) -> Result<LockReport> {
    let (first, last) = match (traj.times.first(), traj.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::TrajectoryTooShort("empty trajectory".into())),
    };
    let periods = (window / TAU + 1e-9).floor() as usize;
    if periods < 2 {
        return Err(Error::Domain(format!("window {window} must span at least two periods")));
    }
    let start = last - periods as f64 * TAU;
    if start < first - 1e-9 {
        return Err(Error::TrajectoryTooShort(format!(
            "need tau >= {:.3} of history, trajectory covers {:.3}",
            periods as f64 * TAU,
            last - first
        )));
    }
    let nodes = traj.node_count();
    if let PhaseReference::Node(r) = reference {
        if r >= nodes {
            return Err(Error::Domain(format!("reference node {r} out of range")));
        }
    }

    let begin = traj.times.partition_point(|&t| t < start - 1e-9);
    let mut sums = vec![vec![(0.0f64, 0.0f64); periods]; nodes];
    let mut counts = vec![0usize; periods];
    let mut radius_sum = vec![0.0; nodes];
    let mut samples = 0usize;

    for (t, s) in traj.times[begin..].iter().zip(&traj.states[begin..]) {
        let block = (((t - start) / TAU) as usize).min(periods - 1);
        counts[block] += 1;
        samples += 1;
        let ref_phase = match (traj.kind, reference) {
            (_, PhaseReference::Drive) => match traj.kind {
                TrajectoryKind::FullState => {
                    let [x, y] = drive_state(*t, 0.0);
                    phase_of(x, y)
                }
                TrajectoryKind::PhaseState => 0.0,
            },
            (TrajectoryKind::FullState, PhaseReference::Node(r)) => phase_of(s[2 * r], s[2 * r + 1]),
            (TrajectoryKind::PhaseState, PhaseReference::Node(r)) => s[r],
        };
        for node in 0..nodes {
            let phase = match traj.kind {
                TrajectoryKind::FullState => {
                    let (x, y) = (s[2 * node], s[2 * node + 1]);
                    radius_sum[node] += x.hypot(y);
                    phase_of(x, y)
                }
                TrajectoryKind::PhaseState => s[node],
            };
            let dev = phase - ref_phase;
            let acc = &mut sums[node][block];
            acc.0 += dev.cos();
            acc.1 += dev.sin();
        }
    }
    if counts.contains(&0) {
        return Err(Error::TrajectoryTooShort(
            "sampling too sparse for the detection window".into(),
        ));
    }

    let radii = match traj.kind {
        TrajectoryKind::FullState => {
            let radii: Vec<f64> = radius_sum.iter().map(|r| r / samples as f64).collect();
            if let Some((node, &radius)) = radii.iter().enumerate().find(|(_, &r)| r < MIN_OSCILLATION_RADIUS) {
                return Err(Error::NotOscillating { node, radius });
            }
            Some(radii)
        }
        TrajectoryKind::PhaseState => None,
    };

    let mut residual: f64 = 0.0;
    let mut phase_diffs = Vec::with_capacity(nodes);
    for blocks in &sums {
        let means: Vec<f64> = blocks.iter().map(|(c, s)| s.atan2(*c)).collect();
        for pair in means.windows(2) {
            let drift = wrap_phase(pair[1] - pair[0]).abs() / TAU;
            residual = residual.max(drift);
        }
        let (c, s) = blocks.iter().fold((0.0, 0.0), |(ac, as_), (c, s)| (ac + c, as_ + s));
        phase_diffs.push(wrap_phase(s.atan2(c)));
    }

    Ok(LockReport {
        locked: residual < tol,
        phase_diffs,
        residual,
        radii,
    })
}
