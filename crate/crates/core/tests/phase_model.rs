//! Deviation equations checked against a rotating Cartesian frame, and the
//! averaged register coupling checked against its sine law.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use osc_logic::dynamics::{cycle_point, CYCLE_AMPLITUDE};
use osc_logic::phase_model::frame::{biorthogonality_defect, tangent_defect};
use osc_logic::phase_model::{
    average_coupling, deviation_terms, embed, k_factor, CouplingFn, DetuneFn, FloquetFrame, LimitCycle, NodeCoordinates,
};
use osc_logic::Error;

/// Harmonic circle of radius `2/sqrt(3)` in `(x, y)`.
struct HarmonicCycle;

impl LimitCycle for HarmonicCycle {
    fn dim(&self) -> usize {
        2
    }

    fn point(&self, theta: f64) -> DVector<f64> {
        DVector::from_row_slice(&cycle_point(theta, CYCLE_AMPLITUDE))
    }

    fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![x[1], -x[0]])
    }
}

/// Unit tangent plus a transversal vector rotating with the phase: the
/// outward radial direction tilted by `skew` towards the tangent.
struct RotatingFrame {
    skew: f64,
}

impl FloquetFrame for RotatingFrame {
    fn basis(&self, theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        let k = self.skew;
        DMatrix::from_row_slice(2, 2, &[s, -c + k * s, c, s + k * c])
    }

    fn cobasis(&self, theta: f64) -> DMatrix<f64> {
        self.basis(theta).try_inverse().expect("frame is invertible")
    }

    fn transversal_derivative(&self, theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        let k = self.skew;
        DMatrix::from_row_slice(2, 1, &[s + k * c, c - k * s])
    }
}

const RADIAL: RotatingFrame = RotatingFrame { skew: 0.0 };
const SKEWED: RotatingFrame = RotatingFrame { skew: 0.5 };

const ALPHA: f64 = 0.1;

fn nonlinearity(x: &DVector<f64>) -> DVector<f64> {
    let y = x[1];
    DVector::from_vec(vec![0.0, ALPHA * y - ALPHA * y * y * y])
}

fn register_on_slave(x: &[DVector<f64>]) -> DVector<f64> {
    let (rho, gamma) = (0.05, 0.1);
    let (m, s) = (&x[0], &x[1]);
    DVector::from_vec(vec![-2.0 * rho * (s[0] + m[0]), -2.0 * gamma * (s[1] - m[1])])
}

/// `(dx_s/dtheta + dY/dtheta R) dtheta/dtau + Y dR/dtau`.
fn reconstruct(coords: &NodeCoordinates, theta_dot: f64, r_dot: &DVector<f64>) -> DVector<f64> {
    let cycle = HarmonicCycle;
    let frame = SKEWED;
    let t = coords.theta;
    let tangent = cycle.field(&cycle.point(t)) + frame.transversal_derivative(t) * &coords.deviation;
    tangent * theta_dot + frame.transversal(t) * r_dot
}

#[test]
fn rotating_frame_is_a_valid_frame() {
    for frame in [RADIAL, SKEWED] {
        for k in 0..64 {
            let theta = TAU * k as f64 / 64.0;
            assert!(biorthogonality_defect(&frame, theta) < 1e-10);
            assert!(tangent_defect(&HarmonicCycle, &frame, theta) < 1e-12);
            let h = 1e-6;
            let fd = (frame.transversal(theta + h) - frame.transversal(theta - h)) / (2.0 * h);
            assert!((fd - frame.transversal_derivative(theta)).norm() < 1e-9);
        }
    }
}

#[test]
fn deviation_equations_reproduce_the_full_vector_field() {
    let cycle = HarmonicCycle;
    let frame = SKEWED;
    let detune: &DetuneFn = &nonlinearity;
    let coupling: &CouplingFn = &register_on_slave;
    for (theta0, r0, theta1, r1) in [(0.3, 0.0, 2.0, 0.0), (1.0, 0.2, -0.7, -0.3), (4.0, -0.5, 2.5, 0.6)] {
        let net = vec![
            NodeCoordinates::new(theta0, DVector::from_vec(vec![r0])),
            NodeCoordinates::new(theta1, DVector::from_vec(vec![r1])),
        ];
        let t = deviation_terms(&cycle, &frame, 1, &net, Some(detune), Some(coupling)).unwrap();
        let x_all: Vec<_> = net.iter().map(|n| embed(&cycle, &frame, n)).collect();
        let expected = cycle.field(&x_all[1]) + nonlinearity(&x_all[1]) + register_on_slave(&x_all);
        let got = reconstruct(&net[1], t.phase_rate(), &t.amplitude_rate());
        assert!((got - &expected).norm() < 1e-13, "state {theta1}, {r1}");

        // dropping the Y' R C_theta piece of C_R breaks the identity off-cycle
        let z = frame.transversal_cobasis(theta1);
        let dy_r = frame.transversal_derivative(theta1) * &net[1].deviation;
        let truncated = t.amplitude_rate() + z.transpose() * dy_r * t.coupling_theta;
        let bad = reconstruct(&net[1], t.phase_rate(), &truncated);
        let gap = (bad - &expected).norm();
        if r1 != 0.0 {
            assert!(gap > 1e-4, "gap {gap}");
        } else {
            assert!(gap < 1e-13);
        }
    }
}

#[test]
fn k_factor_of_rotating_frame_and_neighbourhood_guard() {
    let cycle = HarmonicCycle;
    let frame = RADIAL;
    let k0 = k_factor(&cycle, &frame, 0.4, &DVector::from_vec(vec![0.0])).unwrap();
    assert!((k0 - 1.0 / CYCLE_AMPLITUDE).abs() < 1e-15);
    let k = k_factor(&cycle, &frame, 0.4, &DVector::from_vec(vec![0.3])).unwrap();
    assert!((k - 1.0 / (CYCLE_AMPLITUDE + 0.3)).abs() < 1e-14);
    let err = k_factor(&cycle, &frame, 0.4, &DVector::from_vec(vec![-CYCLE_AMPLITUDE])).unwrap_err();
    assert!(matches!(err, Error::OutsideNeighbourhood { .. }));
}

/// Averaged phase rate of the slave at deviation `psi`, built from the
/// Cartesian register coupling projected on `v_1 / r`.
fn averaged_register(psi: f64, rho: f64, gamma: f64) -> f64 {
    let cycle = HarmonicCycle;
    let frame = RADIAL;
    average_coupling(
        |th| {
            let master = cycle.point(th[0]);
            let slave = cycle.point(th[1]);
            let c = DVector::from_vec(vec![
                -2.0 * rho * (slave[0] + master[0]),
                -2.0 * gamma * (slave[1] - master[1]),
            ]);
            frame.tangent_cobasis(th[1]).dot(&c) / cycle.speed(th[1])
        },
        &[0.0, psi],
        256,
    )
    .unwrap()
}

#[test]
fn averaged_register_is_a_sine_law() {
    for (rho, gamma) in [(0.05, 0.1), (0.1, 0.05), (0.2, 0.03)] {
        let k = averaged_register(PI / 2.0, rho, gamma);
        assert!((k - (rho - gamma)).abs() < 1e-12);
        let mut worst: f64 = 0.0;
        for j in 0..64 {
            let psi = -PI + TAU * j as f64 / 64.0;
            worst = worst.max((averaged_register(psi, rho, gamma) - k * psi.sin()).abs());
        }
        assert!(worst / k.abs() < 1e-3);
    }
    assert!(averaged_register(1.0, 0.07, 0.07).abs() < 1e-15);
}
