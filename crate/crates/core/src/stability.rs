//! Equilibria of reduced phase models, their linear classification, and
//! numerical checks of the gates' Liapunov functions.

use std::f64::consts::{PI, TAU};
use std::fmt::{self, Write as _};
use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::integrator::{wrap_phase, Rk4};
use crate::phase_model::GateEquations;

pub const JACOBIAN_STEP: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 8;
pub const HYPERBOLICITY_MARGIN: f64 = 1e-9;
pub const DEDUP_TOL: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

/// Central-difference Jacobian of `rhs` at `psi`.
pub fn numeric_jacobian<F>(rhs: &F, psi: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    if !(1e-7..=1e-4).contains(&step) {
        return Err(Error::Domain(format!("jacobian step {step} outside [1e-7, 1e-4]")));
    }
    ensure_finite("jacobian point", psi)?;
    let n = psi.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut p = psi.to_vec();
    for col in 0..n {
        p[col] = psi[col] + step;
        let plus = rhs(&p);
        p[col] = psi[col] - step;
        let minus = rhs(&p);
        p[col] = psi[col];
        for row in 0..n {
            jac[(row, col)] = (plus[row] - minus[row]) / (2.0 * step);
        }
    }
    Ok(jac)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton from `seed`; `None` when it does not converge.
fn newton<F>(rhs: &F, seed: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let mut x = seed.to_vec();
    let mut f = rhs(&x);
    for _ in 0..NEWTON_MAX_ITER {
        let norm = max_abs(&f);
        if !norm.is_finite() {
            return None;
        }
        if norm < NEWTON_TOL {
            return Some(x);
        }
        let jac = numeric_jacobian(rhs, &x, JACOBIAN_STEP).ok()?;
        let delta = jac.lu().solve(&(-DVector::from_column_slice(&f)))?;
        if !delta.iter().all(|d| d.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + t * d).collect();
            let ft = rhs(&trial);
            if max_abs(&ft) < norm || t < 1e-4 {
                x = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
    }
    (max_abs(&f) < NEWTON_TOL).then_some(x)
}

/// Distance between two phase vectors modulo `2 pi` per axis.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max(wrap_phase(x - y).abs()))
}

/// Zeros of a `2 pi`-periodic `rhs` found by damped Newton from a uniform
/// `grid^dim` seed lattice. Points are wrapped to `(-pi, pi]`, deduplicated
/// modulo `2 pi` and sorted.
pub fn find_equilibria<F>(rhs: &F, dim: usize, grid: usize) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + ?Sized,
{
    if grid < 4 {
        return Err(Error::Domain(format!(
            "grid must have at least 4 seeds per axis, got {grid}"
        )));
    }
    if dim == 0 {
        return Ok(vec![]);
    }
    let total = grid
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::Domain("seed grid too large".into()))?;
    let roots: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let mut c = code;
            let seed: Vec<f64> = (0..dim)
                .map(|_| {
                    let k = c % grid;
                    c /= grid;
                    TAU * k as f64 / grid as f64
                })
                .collect();
            newton(rhs, &seed)
        })
        .collect();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for root in roots {
        let mut w: Vec<f64> = root.iter().map(|&p| wrap_phase(p)).collect();
        // keep pi rather than a rounding-level -pi
        for p in &mut w {
            if (*p + PI).abs() < DEDUP_TOL {
                *p = PI;
            }
            if p.abs() < 1e-14 {
                *p = 0.0;
            }
        }
        if !unique.iter().any(|u| torus_distance(u, &w) < DEDUP_TOL) {
            unique.push(w);
        }
    }
    unique.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(unique)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    NonHyperbolic,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::NonHyperbolic => "non-hyperbolic",
        })
    }
}

pub fn eigenvalues(jac: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = jac.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn classify(eigenvalues: &[Complex<f64>]) -> Stability {
    let max_re = eigenvalues.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    if max_re < -HYPERBOLICITY_MARGIN {
        Stability::Stable
    } else if max_re > HYPERBOLICITY_MARGIN {
        Stability::Unstable
    } else {
        Stability::NonHyperbolic
    }
}

/// Monic characteristic polynomial `det(lambda I - A)` by Faddeev-LeVerrier;
/// coefficients from the leading `1` down to the constant term.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + DMatrix::<f64>::identity(n, n) * c;
        c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Characteristic polynomial of the OR gate Jacobian at `(0, 0, 0)`:
/// `(1, 2 g_i + 3 g, g_i^2 + 4 g_i g, g_i^2 g - 4 g^3)`.
pub fn or_char_poly(gamma_i: f64, gamma: f64) -> Result<[f64; 4]> {
    if !(gamma > 0.0 && gamma_i > 2.0 * gamma) {
        return Err(Error::Domain(format!(
            "needs gamma_i > 2 gamma > 0, got gamma_i = {gamma_i}, gamma = {gamma}"
        )));
    }
    Ok([
        1.0,
        2.0 * gamma_i + 3.0 * gamma,
        gamma_i * gamma_i + 4.0 * gamma_i * gamma,
        gamma_i * gamma_i * gamma - 4.0 * gamma.powi(3),
    ])
}

fn is_logic_phase(p: f64) -> Option<bool> {
    if wrap_phase(p).abs() < 1e-9 {
        Some(false)
    } else if (wrap_phase(p).abs() - PI).abs() < 1e-9 {
        Some(true)
    } else {
        None
    }
}

/// The stable equilibrium the analytic gate results assign to `eq`, if any.
pub fn predicted_equilibrium(eq: &GateEquations) -> Option<Vec<f64>> {
    match *eq {
        GateEquations::Register { rho, gamma } if rho != gamma => Some(vec![if gamma > rho { 0.0 } else { PI }]),
        GateEquations::Register { .. } => None,
        GateEquations::Not { psi_dj, .. } => {
            let d = is_logic_phase(psi_dj)?;
            Some(if d { vec![PI, 0.0] } else { vec![0.0, PI] })
        }
        GateEquations::Majority { drives, .. } => {
            let bits = [
                is_logic_phase(drives[0])?,
                is_logic_phase(drives[1])?,
                is_logic_phase(drives[2])?,
            ];
            let ones = bits.iter().filter(|&&b| b).count();
            let phase = |b: bool| if b { PI } else { 0.0 };
            Some(vec![phase(bits[0]), phase(bits[1]), phase(ones >= 2)])
        }
    }
}

/// Classification predicted for `point`, if any.
pub fn predicted_stability(eq: &GateEquations, point: &[f64]) -> Option<Stability> {
    match *eq {
        GateEquations::Register { rho, gamma } if rho != gamma => {
            let stable = predicted_equilibrium(eq)?;
            if torus_distance(&stable, point) < DEDUP_TOL {
                Some(Stability::Stable)
            } else if torus_distance(&[wrap_phase(stable[0] + PI)], point) < DEDUP_TOL {
                Some(Stability::Unstable)
            } else {
                None
            }
        }
        _ => {
            let stable = predicted_equilibrium(eq)?;
            (torus_distance(&stable, point) < DEDUP_TOL).then_some(Stability::Stable)
        }
    }
}

fn check_target(eq: &GateEquations, target: &[f64]) -> Result<()> {
    let Some(expected) = predicted_equilibrium(eq) else {
        return Err(Error::Domain(format!("no predicted equilibrium for {eq:?}")));
    };
    if target.len() != expected.len() || torus_distance(&expected, target) > 1e-9 {
        return Err(Error::Domain(format!(
            "target {target:?} is not the predicted equilibrium {expected:?} for {eq:?}"
        )));
    }
    Ok(())
}

/// Liapunov function of the NOT or MAJORITY phase equations normalised to
/// vanish at `target`.
///
/// Each constant `N` is `-cos` of the corresponding target phase (or phase
/// difference), so `N = -1` for in-phase and `+1` for anti-phase. The output
/// term of the MAJORITY function carries `cos psi_D` like the input terms;
/// with that factor `V` is a potential of the phase equations
/// (`grad V = -dpsi/dtau`) for either setting of the global drive.
pub fn liapunov_value(eq: &GateEquations, psi: &[f64], target: &[f64]) -> Result<f64> {
    check_target(eq, target)?;
    if psi.len() != target.len() {
        return Err(Error::Domain(format!(
            "{} phases for a {}-unit gate",
            psi.len(),
            target.len()
        )));
    }
    let n = |a: f64| -a.cos();
    match *eq {
        GateEquations::Not { psi_dj, rho, gamma } => {
            let (j, k) = (psi[0], psi[1]);
            let (tj, tk) = (target[0], target[1]);
            Ok(-gamma * psi_dj.cos() * (j.cos() + n(tj)) + rho * ((j - k).cos() + n(tj - tk)))
        }
        GateEquations::Majority { drives, gains } => {
            let [di, dj, d] = drives;
            let [gi, gj, g] = gains;
            let [i, j, k] = [psi[0], psi[1], psi[2]];
            let [ti, tj, tk] = [target[0], target[1], target[2]];
            let ci = gi * di.cos() + g * d.cos();
            let cj = gj * dj.cos() + g * d.cos();
            let ck = g * d.cos();
            Ok(-ci * (i.cos() + n(ti))
                - cj * (j.cos() + n(tj))
                - ck * (k.cos() + n(tk))
                - g * ((i - j).cos() + (i - k).cos() + (j - k).cos() + n(ti - tj) + n(ti - tk) + n(tj - tk)))
        }
        GateEquations::Register { .. } => Err(Error::Domain("no Liapunov function is given for the register".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiapunovCertificate {
    pub value_at_eq: f64,
    /// Smallest `V` on the grid over the punctured ball.
    pub min_over_punctured_ball: f64,
    /// Largest per-step increase of `V` along the sampled trajectories.
    pub max_descent_violation: f64,
    /// Allowed per-step increase, `10 h^5`.
    pub violation_budget: f64,
    pub trajectories: usize,
    /// Index of the first trajectory that broke the certificate.
    pub failing_seed: Option<usize>,
    pub failure: Option<String>,
}

impl LiapunovCertificate {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    pub trajectories: usize,
    pub ball_radius: f64,
    pub seed: u64,
    pub h: f64,
    pub tau_max: f64,
    pub grid_step: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            trajectories: 100,
            ball_radius: 0.3,
            seed: 42,
            h: 0.01,
            tau_max: 100.0,
            grid_step: 1e-2,
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Minimum of `V` over grid points of the punctured ball.
fn punctured_ball_min(eq: &GateEquations, target: &[f64], radius: f64, step: f64) -> Result<f64> {
    let per_axis = (radius / step).round() as i64;
    let dim = target.len();
    let side = (2 * per_axis + 1) as usize;
    let total = side.pow(dim as u32);
    let values = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut c = code;
            let offset: Vec<f64> = (0..dim)
                .map(|_| {
                    let k = (c % side) as i64 - per_axis;
                    c /= side;
                    k as f64 * step
                })
                .collect();
            let r = offset.iter().map(|o| o * o).sum::<f64>().sqrt();
            if r == 0.0 || r > radius + 1e-12 {
                return Ok(f64::INFINITY);
            }
            let p: Vec<f64> = target.iter().zip(&offset).map(|(t, o)| t + o).collect();
            liapunov_value(eq, &p, target)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// Checks `V(target) = 0`, `V > 0` on the punctured ball and monotone
/// descent of `V` along trajectories from seeded points in the ball.
///
/// A trajectory fails if `V` grows by more than `10 h^5` in one RK4 step, if
/// it leaves the ball while `V` is still at or above its initial value, or if
/// `V` at `tau_max` is not below its initial value.
pub fn liapunov_descent_check(
    eq: &GateEquations,
    target: &[f64],
    opts: &DescentOptions,
) -> Result<LiapunovCertificate> {
    check_target(eq, target)?;
    if !(opts.ball_radius > 0.0 && opts.ball_radius <= 0.5) {
        return Err(Error::Domain(format!(
            "ball radius {} outside (0, 0.5]",
            opts.ball_radius
        )));
    }
    let value_at_eq = liapunov_value(eq, target, target)?;
    let min_ball = punctured_ball_min(eq, target, opts.ball_radius, opts.grid_step)?;
    let budget = 10.0 * opts.h.powi(5);
    let dim = target.len();
    let steps = (opts.tau_max / opts.h).ceil() as usize;

    let outcomes = (0..opts.trajectories)
        .into_par_iter()
        .map(|index| -> Result<(f64, Option<String>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(index as u64);
            let offset = loop {
                let o: Vec<f64> = (0..dim)
                    .map(|_| rng.gen_range(-opts.ball_radius..=opts.ball_radius))
                    .collect();
                let r = o.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r > 0.0 && r <= opts.ball_radius {
                    break o;
                }
            };
            let mut psi: Vec<f64> = target.iter().zip(&offset).map(|(t, o)| t + o).collect();
            let field = |_: f64, s: &[f64], out: &mut [f64]| eq.rhs(s, out);
            let mut rk = Rk4::new(dim);
            let v0 = liapunov_value(eq, &psi, target)?;
            let mut v = v0;
            let mut worst: f64 = 0.0;
            for s in 0..steps {
                rk.step(&field, s as f64 * opts.h, opts.h, &mut psi)?;
                let next = liapunov_value(eq, &psi, target)?;
                worst = worst.max(next - v);
                if next - v > budget {
                    return Ok((worst, Some(format!("V rose by {:.3e} at step {s}", next - v))));
                }
                v = next;
                if euclid(&psi, target) > opts.ball_radius && v >= v0 {
                    return Ok((worst, Some(format!("left the ball at step {s} before descending"))));
                }
            }
            if !(v < v0) {
                return Ok((worst, Some(format!("V did not decrease ({v0:.3e} -> {v:.3e})"))));
            }
            Ok((worst, None))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_violation = outcomes.iter().fold(0.0f64, |m, (w, _)| m.max(*w));
    let first_bad = outcomes.iter().position(|(_, f)| f.is_some());
    let mut failure = first_bad.map(|i| format!("trajectory {i}: {}", outcomes[i].1.as_deref().unwrap_or_default()));
    if value_at_eq.abs() > 1e-12 {
        failure.get_or_insert_with(|| format!("V(target) = {value_at_eq:e}"));
    }
    if !(min_ball > 0.0) {
        failure.get_or_insert_with(|| format!("V not positive on the punctured ball (min {min_ball:e})"));
    }
    Ok(LiapunovCertificate {
        value_at_eq,
        min_over_punctured_ball: min_ball,
        max_descent_violation: max_violation,
        violation_budget: budget,
        trajectories: opts.trajectories,
        failing_seed: first_bad,
        failure,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub point: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub classification: Stability,
    pub liapunov: Option<LiapunovCertificate>,
}

pub fn analyze_equilibrium<F>(rhs: &F, point: &[f64]) -> Result<EquilibriumReport>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let jacobian = numeric_jacobian(rhs, point, JACOBIAN_STEP)?;
    let eigenvalues = eigenvalues(&jacobian);
    Ok(EquilibriumReport {
        point: point.to_vec(),
        classification: classify(&eigenvalues),
        jacobian,
        eigenvalues,
        liapunov: None,
    })
}

/// Every equilibrium of a gate model with its classification; the predicted
/// target also gets a Liapunov certificate when the gate has one.
pub fn gate_report(eq: &GateEquations, opts: &DescentOptions) -> Result<Vec<EquilibriumReport>> {
    let rhs = |p: &[f64]| eq.eval(p);
    let target = predicted_equilibrium(eq);
    let mut reports = Vec::new();
    for point in find_equilibria(&rhs, eq.dim(), DEFAULT_GRID)? {
        let mut report = analyze_equilibrium(&rhs, &point)?;
        if let Some(t) = &target {
            let is_target = torus_distance(t, &point) < DEDUP_TOL;
            if is_target && !matches!(eq, GateEquations::Register { .. }) {
                report.liapunov = Some(liapunov_descent_check(eq, t, opts)?);
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Structured text dump of equilibrium reports.
pub fn reports_to_text(reports: &[EquilibriumReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = writeln!(
            out,
            "equilibrium {:?}",
            r.point.iter().map(|p| (p * 1e9).round() / 1e9).collect::<Vec<_>>()
        );
        let _ = writeln!(out, "  class       {}", r.classification);
        let eig: Vec<String> = r
            .eigenvalues
            .iter()
            .map(|e| {
                if e.im.abs() < 1e-12 {
                    format!("{:.6e}", e.re)
                } else {
                    format!("{:.6e}{:+.6e}i", e.re, e.im)
                }
            })
            .collect();
        let _ = writeln!(out, "  eigenvalues {}", eig.join(", "));
        for row in r.jacobian.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
            let _ = writeln!(out, "  J  {}", cells.join(" "));
        }
        if let Some(c) = &r.liapunov {
            let _ = writeln!(
                out,
                "  liapunov    {}  V(eq) = {:.1e}  min V on ball = {:.3e}  worst rise = {:.1e} (budget {:.1e}, {} trajectories)",
                if c.passed() { "pass" } else { "FAIL" },
                c.value_at_eq,
                c.min_over_punctured_ball,
                c.max_descent_violation,
                c.violation_budget,
                c.trajectories
            );
            if let Some(f) = &c.failure {
                let _ = writeln!(out, "  failure     {f}");
            }
        }
    }
    out
}

/// CSV with columns `psi_0.., eig_real_0.., class, liapunov_pass`.
pub fn write_reports_csv<W: Write>(reports: &[EquilibriumReport], writer: W) -> Result<()> {
    let dim = reports.first().map_or(0, |r| r.point.len());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dim).map(|i| format!("psi_{i}")).collect();
    header.extend((0..dim).map(|i| format!("eig_real_{i}")));
    header.push("class".into());
    header.push("liapunov_pass".into());
    w.write_record(&header)?;
    for r in reports {
        let mut rec: Vec<String> = r.point.iter().map(f64::to_string).collect();
        rec.extend(r.eigenvalues.iter().map(|e| e.re.to_string()));
        rec.push(r.classification.to_string());
        rec.push(r.liapunov.as_ref().map_or(String::new(), |c| c.passed().to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
