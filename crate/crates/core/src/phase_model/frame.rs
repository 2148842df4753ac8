//! Limit cycles and periodic Floquet frames.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{cycle_point, CYCLE_AMPLITUDE};

/// A `2 pi`-periodic orbit `x_s(theta)` of an autonomous field `a`.
pub trait LimitCycle: Sync {
    fn dim(&self) -> usize;

    fn period(&self) -> f64 {
        TAU
    }

    /// Point on the cycle at phase `theta`.
    fn point(&self, theta: f64) -> DVector<f64>;

    /// The unperturbed vector field `a(x)`.
    fn field(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `r(theta) = |a(x_s(theta))|`.
    fn speed(&self, theta: f64) -> f64 {
        self.field(&self.point(theta)).norm()
    }
}

/// Periodic basis `U = [u_1 .. u_n]` and reciprocal co-basis `V` (rows
/// `v_i^T`) along a cycle, with `u_1` the unit tangent.
pub trait FloquetFrame: Sync {
    fn basis(&self, theta: f64) -> DMatrix<f64>;

    fn cobasis(&self, theta: f64) -> DMatrix<f64>;

    /// `dY/dtheta`, shape `n x (n-1)`.
    fn transversal_derivative(&self, theta: f64) -> DMatrix<f64>;

    /// `Y = [u_2 .. u_n]`.
    fn transversal(&self, theta: f64) -> DMatrix<f64> {
        let u = self.basis(theta);
        let n = u.ncols();
        u.columns(1, n - 1).into_owned()
    }

    /// `Z = [v_2 .. v_n]`.
    fn transversal_cobasis(&self, theta: f64) -> DMatrix<f64> {
        let vt = self.cobasis(theta).transpose();
        let n = vt.ncols();
        vt.columns(1, n - 1).into_owned()
    }

    /// `v_1`.
    fn tangent_cobasis(&self, theta: f64) -> DVector<f64> {
        self.cobasis(theta).row(0).transpose()
    }
}

/// `|V U - I|` (Frobenius) at `theta`.
pub fn biorthogonality_defect(frame: &dyn FloquetFrame, theta: f64) -> f64 {
    let u = frame.basis(theta);
    let n = u.ncols();
    (frame.cobasis(theta) * u - DMatrix::<f64>::identity(n, n)).norm()
}

/// Distance between `u_1` and the normalised field on the cycle.
pub fn tangent_defect(cycle: &dyn LimitCycle, frame: &dyn FloquetFrame, theta: f64) -> f64 {
    let a = cycle.field(&cycle.point(theta));
    let u1 = frame.basis(theta).column(0).into_owned();
    (u1 - a.normalize()).norm()
}

/// The weakly nonlinear unit after polar averaging, in coordinates
/// `(theta, A)`:
///
/// ```text
/// dtheta/dtau = 1
/// dA/dtau     = (alpha/2) A (1 - 3/4 A^2)
/// ```
///
/// Its cycle is `(tau mod 2 pi, 2/sqrt(3))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedOscillator {
    pub alpha: f64,
}

impl AveragedOscillator {
    pub fn new(alpha: f64) -> Self {
        Self { alpha }
    }
}

impl LimitCycle for AveragedOscillator {
    fn dim(&self) -> usize {
        2
    }

    fn point(&self, theta: f64) -> DVector<f64> {
        DVector::from_vec(vec![theta.rem_euclid(TAU), CYCLE_AMPLITUDE])
    }

    fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        let a = x[1];
        DVector::from_vec(vec![1.0, 0.5 * self.alpha * a * (1.0 - 0.75 * a * a)])
    }
}

/// Constant orthonormal frame `U = V = I`. It is the Floquet frame of
/// [`AveragedOscillator`]: the Jacobian on the cycle is `diag(0, -alpha)`
/// with eigenvectors `e_1` and `e_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantFrame {
    pub dim: usize,
}

impl ConstantFrame {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 2, "a frame needs at least one transversal direction");
        Self { dim }
    }
}

impl FloquetFrame for ConstantFrame {
    fn basis(&self, _theta: f64) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn cobasis(&self, _theta: f64) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim)
    }

    fn transversal_derivative(&self, _theta: f64) -> DMatrix<f64> {
        DMatrix::zeros(self.dim, self.dim - 1)
    }
}

/// Cartesian `(x, y)` of the polar state `(theta, A)`.
pub fn polar_to_cartesian(polar: &DVector<f64>) -> [f64; 2] {
    cycle_point(polar[0], polar[1])
}

/// Expresses a Cartesian rate `(dx, dy)` at polar state `(theta, A)` as
/// `(dtheta, dA)`.
pub fn cartesian_rate_to_polar(polar: &DVector<f64>, rate: [f64; 2]) -> DVector<f64> {
    let (theta, amplitude) = (polar[0], polar[1]);
    let (s, c) = theta.sin_cos();
    DVector::from_vec(vec![
        (s * rate[0] + c * rate[1]) / amplitude,
        -c * rate[0] + s * rate[1],
    ])
}
