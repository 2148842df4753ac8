//! Averaged phase model of an arbitrary netlist.
//!
//! Every coupling link and drive of a [`NetworkSpec`] is projected onto the
//! averaged polar cycle, averaged over one period, and fitted by its first
//! harmonic in the phase difference. The result is a Kuramoto-type model
//!
//! ```text
//! dpsi_h/dtau = sum over terms  s sin(psi_h - psi_src) + c cos(psi_h - psi_src) + o
//! ```
//!
//! where the source is another node or a drive with fixed phase.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DVector;

use super::averaging::{averaged_phase_rhs, DEFAULT_QUAD_POINTS};
use super::deviation::CouplingFn;
use super::frame::{cartesian_rate_to_polar, polar_to_cartesian, AveragedOscillator, ConstantFrame};
use crate::dynamics::NetworkSpec;
use crate::error::{ensure_finite, Result};

/// Number of phase-difference samples used for the harmonic fit.
const FIT_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSource {
    Node(usize),
    /// Ideal drive with constant phase deviation.
    Drive(f64),
}

/// One averaged interaction acting on `node`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTerm {
    pub node: usize,
    pub source: PhaseSource,
    pub sin_coeff: f64,
    pub cos_coeff: f64,
    pub offset: f64,
    /// Largest deviation of the averaged coupling from the fitted harmonic.
    pub fit_residual: f64,
}

impl PhaseTerm {
    fn rate(&self, psi: &[f64]) -> f64 {
        let src = match self.source {
            PhaseSource::Node(m) => psi[m],
            PhaseSource::Drive(p) => p,
        };
        let d = psi[self.node] - src;
        let mut rate = self.sin_coeff * d.sin() + self.offset;
        if self.cos_coeff != 0.0 {
            rate += self.cos_coeff * d.cos();
        }
        rate
    }
}

/// Averaged phase model of a compiled network.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNetwork {
    ids: Vec<String>,
    terms: Vec<PhaseTerm>,
    reference: Option<usize>,
}

/// Averages a two-unit coupling `(head, source) -> Cartesian rate on head`
/// at phase difference `delta` on the averaged cycle.
fn averaged_pair<F>(alpha: f64, coupling: F, delta: f64, m: usize) -> Result<f64>
where
    F: Fn([f64; 2], [f64; 2]) -> [f64; 2] + Sync + 'static,
{
    let cycle = AveragedOscillator::new(alpha);
    let frame = ConstantFrame::new(2);
    let on_head = move |x: &[DVector<f64>]| {
        let rate = coupling(polar_to_cartesian(&x[0]), polar_to_cartesian(&x[1]));
        cartesian_rate_to_polar(&x[0], rate)
    };
    let c: &CouplingFn = &on_head;
    let rates = averaged_phase_rhs(&cycle, &frame, &[delta, 0.0], &[None, None], &[Some(c), None], m)?;
    Ok(rates[0])
}

/// First-harmonic fit of `h(delta)` sampled on a uniform grid.
fn fit_harmonic(samples: &[f64]) -> (f64, f64, f64, f64) {
    let n = samples.len() as f64;
    let (mut s, mut c, mut o) = (0.0, 0.0, 0.0);
    for (k, h) in samples.iter().enumerate() {
        let d = TAU * k as f64 / n;
        s += h * d.sin();
        c += h * d.cos();
        o += h;
    }
    let (s, c, o) = (2.0 * s / n, 2.0 * c / n, o / n);
    let residual = samples
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let d = TAU * k as f64 / n;
            (h - s * d.sin() - c * d.cos() - o).abs()
        })
        .fold(0.0, f64::max);
    (s, c, o, residual)
}

fn fitted_term<F>(node: usize, source: PhaseSource, alpha: f64, coupling: F, m: usize) -> Result<PhaseTerm>
where
    F: Fn([f64; 2], [f64; 2]) -> [f64; 2] + Sync + Copy + 'static,
{
    let samples = (0..FIT_SAMPLES)
        .map(|k| averaged_pair(alpha, coupling, TAU * k as f64 / FIT_SAMPLES as f64, m))
        .collect::<Result<Vec<_>>>()?;
    let (sin_coeff, cos_coeff, offset, fit_residual) = fit_harmonic(&samples);
    // exact zeros read better in reports than 1e-18 quadrature noise
    let clean = |v: f64| if v.abs() < 1e-13 { 0.0 } else { v };
    Ok(PhaseTerm {
        node,
        source,
        sin_coeff: clean(sin_coeff),
        cos_coeff: clean(cos_coeff),
        offset: clean(offset),
        fit_residual,
    })
}

impl PhaseNetwork {
    pub fn from_network(spec: &NetworkSpec) -> Result<Self> {
        Self::with_quadrature(spec, DEFAULT_QUAD_POINTS)
    }

    pub fn with_quadrature(spec: &NetworkSpec, m: usize) -> Result<Self> {
        let net = spec.compile()?;
        let mut terms = Vec::new();
        for link in net.links() {
            let alpha = net.alphas()[link.head];
            let source = PhaseSource::Node(link.tail);
            if link.rho != 0.0 {
                let rho = link.rho;
                let c = move |h: [f64; 2], t: [f64; 2]| [-2.0 * rho * (h[0] + t[0]), 0.0];
                terms.push(fitted_term(link.head, source, alpha, c, m)?);
            }
            if link.gamma != 0.0 {
                let gamma = link.gamma;
                let c = move |h: [f64; 2], t: [f64; 2]| [0.0, -2.0 * gamma * (h[1] - t[1])];
                terms.push(fitted_term(link.head, source, alpha, c, m)?);
            }
        }
        for drive in net.drives() {
            let alpha = net.alphas()[drive.target];
            let gamma = drive.gamma_d;
            // a drive has the cycle amplitude, so it averages like a second
            // unit sitting at psi_d
            let c = move |h: [f64; 2], d: [f64; 2]| [0.0, -2.0 * gamma * (h[1] - d[1])];
            terms.push(fitted_term(drive.target, PhaseSource::Drive(drive.psi_d), alpha, c, m)?);
        }
        Ok(Self {
            ids: net.ids().to_vec(),
            terms,
            reference: net.reference(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn terms(&self) -> &[PhaseTerm] {
        &self.terms
    }

    pub fn reference(&self) -> Option<usize> {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Writes `dpsi/dtau` into `out`.
    pub fn rhs(&self, psi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for term in &self.terms {
            out[term.node] += term.rate(psi);
        }
    }

    pub fn eval(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.rhs(psi, &mut out);
        ensure_finite("phase rate", &out)?;
        Ok(out)
    }

    /// Human-readable listing of the reduced equations.
    pub fn describe(&self) -> String {
        let mut text = String::new();
        for (i, id) in self.ids.iter().enumerate() {
            let _ = write!(text, "d psi_{id}/dtau =");
            let mut any = false;
            for term in self.terms.iter().filter(|t| t.node == i) {
                let src = match term.source {
                    PhaseSource::Node(m) => format!("psi_{}", self.ids[m]),
                    PhaseSource::Drive(p) => format!("{p}"),
                };
                if term.sin_coeff != 0.0 {
                    let _ = write!(text, " {:+} sin(psi_{id} - {src})", term.sin_coeff);
                    any = true;
                }
                if term.cos_coeff != 0.0 {
                    let _ = write!(text, " {:+} cos(psi_{id} - {src})", term.cos_coeff);
                    any = true;
                }
                if term.offset != 0.0 {
                    let _ = write!(text, " {:+}", term.offset);
                    any = true;
                }
            }
            if !any {
                text.push_str(" 0");
            }
            if self.reference == Some(i) {
                text.push_str("    (reference)");
            }
            text.push('\n');
        }
        text
    }
}
