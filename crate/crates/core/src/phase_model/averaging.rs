//! Phase dynamics on the cycle (`R = 0`) and their period average.

use std::f64::consts::TAU;

use super::deviation::{deviation_terms, CouplingFn, DetuneFn, NodeCoordinates};
use super::frame::{FloquetFrame, LimitCycle};
use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_QUAD_POINTS: usize = 256;
pub const MIN_QUAD_POINTS: usize = 64;

fn check_points(m: usize) -> Result<()> {
    if m < MIN_QUAD_POINTS {
        return Err(Error::Domain(format!(
            "averaging needs at least {MIN_QUAD_POINTS} quadrature points, got {m}"
        )));
    }
    Ok(())
}

/// `(1/2pi) int_0^2pi c(psi_1 + tau, .., psi_N + tau) dtau` by the uniform
/// rectangle rule with `m` points.
pub fn average_coupling<F>(c_fn: F, psi: &[f64], m: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    check_points(m)?;
    let mut shifted = vec![0.0; psi.len()];
    let mut sum = 0.0;
    for k in 0..m {
        let tau = TAU * k as f64 / m as f64;
        for (s, p) in shifted.iter_mut().zip(psi) {
            *s = p + tau;
        }
        sum += c_fn(&shifted);
    }
    Ok(sum / m as f64)
}

/// `dpsi_i/dtau = da_theta(psi_i + tau) + C_theta(psi_1 + tau, ..)` with every
/// node on the cycle. `detune` and `coupling` are indexed by node; `None`
/// means the term is absent.
pub fn reduced_phase_rhs(
    cycle: &dyn LimitCycle,
    frame: &dyn FloquetFrame,
    psi: &[f64],
    tau: f64,
    detune: &[Option<&DetuneFn>],
    coupling: &[Option<&CouplingFn>],
) -> Result<Vec<f64>> {
    let n = psi.len();
    if detune.len() != n || coupling.len() != n {
        return Err(Error::Domain(format!(
            "{n} phases but {} detune and {} coupling terms",
            detune.len(),
            coupling.len()
        )));
    }
    let network: Vec<NodeCoordinates> = psi
        .iter()
        .map(|p| NodeCoordinates::on_cycle(p + tau, cycle.dim()))
        .collect();
    let mut rates = Vec::with_capacity(n);
    for i in 0..n {
        let t = deviation_terms(cycle, frame, i, &network, detune[i], coupling[i])?;
        rates.push(t.detune_theta + t.coupling_theta);
    }
    ensure_finite("reduced phase rate", &rates)?;
    Ok(rates)
}

/// Period average of [`reduced_phase_rhs`] at fixed `psi`.
pub fn averaged_phase_rhs(
    cycle: &dyn LimitCycle,
    frame: &dyn FloquetFrame,
    psi: &[f64],
    detune: &[Option<&DetuneFn>],
    coupling: &[Option<&CouplingFn>],
    m: usize,
) -> Result<Vec<f64>> {
    check_points(m)?;
    let mut acc = vec![0.0; psi.len()];
    for k in 0..m {
        let tau = TAU * k as f64 / m as f64;
        let rates = reduced_phase_rhs(cycle, frame, psi, tau, detune, coupling)?;
        for (a, r) in acc.iter_mut().zip(rates) {
            *a += r;
        }
    }
    Ok(acc.into_iter().map(|a| a / m as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_model::frame::{AveragedOscillator, ConstantFrame};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn constant_integrand_averages_to_itself() {
        for m in [64, 100, 256, 1000] {
            assert_abs_diff_eq!(average_coupling(|_| 2.5, &[0.3], m).unwrap(), 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn tau_free_integrand_is_returned_exactly() {
        let psi = [0.9, -0.4];
        let avg = average_coupling(|th| (th[0] - th[1]).sin(), &psi, 256).unwrap();
        assert_abs_diff_eq!(avg, (psi[0] - psi[1]).sin(), epsilon = 1e-14);
    }

    #[test]
    fn product_to_sum_oracle() {
        // sin(psi + tau) cos(tau) averages to sin(psi) / 2
        for psi in [-2.0, -0.3, 0.0, 1.1, 3.0] {
            let avg = average_coupling(|th| th[0].sin() * (th[0] - psi).cos(), &[psi], 256).unwrap();
            assert_abs_diff_eq!(avg, 0.5 * f64::sin(psi), epsilon = 1e-12);
        }
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(average_coupling(|_| 1.0, &[0.0], 63).is_err());
    }

    #[test]
    fn no_terms_give_zero_rates() {
        let cycle = AveragedOscillator::new(0.1);
        let frame = ConstantFrame::new(2);
        let rates = reduced_phase_rhs(&cycle, &frame, &[0.2, 1.0], 0.7, &[None, None], &[None, None]).unwrap();
        assert_eq!(rates, vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_coupling_at_equal_phases_gives_equal_rates() {
        let cycle = AveragedOscillator::new(0.1);
        let frame = ConstantFrame::new(2);
        let c0 = |x: &[DVector<f64>]| DVector::from_vec(vec![(x[1][0] - x[0][0]).sin(), 0.0]);
        let c1 = |x: &[DVector<f64>]| DVector::from_vec(vec![(x[0][0] - x[1][0]).sin(), 0.0]);
        let rates =
            reduced_phase_rhs(&cycle, &frame, &[0.4, 0.4], 1.3, &[None, None], &[Some(&c0), Some(&c1)]).unwrap();
        assert_eq!(rates[0], rates[1]);
    }
}
