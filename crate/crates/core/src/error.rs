use thiserror::Error;

/// Errors raised across the simulation, reduction and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A network or gate description is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A Runge-Kutta stage produced a non-finite value.
    #[error("integration failed at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    /// The mean orbit radius of a node fell below the oscillation threshold.
    #[error("node {node} is not oscillating (mean radius {radius:.3e})")]
    NotOscillating { node: usize, radius: f64 },

    /// The trajectory does not cover the requested detection window.
    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    /// A phase sits too close to the decision boundary to be read as a bit.
    #[error("ambiguous phase {psi:.4} rad: gate did not settle into a logic state")]
    AmbiguousPhase { psi: f64 },

    /// The phase-amplitude coordinate map is not invertible here.
    #[error("outside tubular neighbourhood of the cycle (denominator {denominator:.3e})")]
    OutsideNeighbourhood { denominator: f64 },

    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub(crate) fn ensure_finite(label: &str, values: &[f64]) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{label}: non-finite entry at index {pos}")));
    }
    Ok(())
}
