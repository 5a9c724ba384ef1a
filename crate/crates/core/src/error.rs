use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids are not Fourier conjugates: {0}")]
    GridPairing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state in {context} at t = {time}")]
    NonFinite { context: &'static str, time: f64 },

    #[error("degenerate parametrization: dx/dtheta vanishes at theta = {theta}")]
    DegenerateParametrization { theta: f64 },

    #[error("det of the decoherence matrix stays below 1/4 up to t = {horizon} (max reached {max_det:.6e})")]
    NeverPositive { horizon: f64, max_det: f64 },

    #[error("truncated basis leaks: population {population:.3e} in the top levels of dim {dim}; increase dim")]
    TruncationLeak { dim: usize, population: f64 },

    #[error("Hamiltonian `{0}` has no number-basis representation")]
    NoMatrixForm(String),

    #[error("window width {delta} does not satisfy delta^2 = hbar/2 (hbar = {hbar})")]
    WindowWidth { delta: f64, hbar: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Non-fatal numerical diagnostics attached to a result.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Field magnitude at the grid boundary relative to its peak.
    GridEdge { relative: f64 },
    /// Doubling the resolution of a quadrature moved the result by `change`.
    Quadrature { change: f64 },
    /// Halving the integration step moved the endpoint by `change`.
    StepSize { change: f64 },
    /// Integrand at the end of a truncated integration range, relative to peak.
    TailTruncation { relative: f64 },
    /// Imaginary residue of a field that should be real.
    ImaginaryResidue { max_abs: f64 },
    /// Branches dropped because they sit on a caustic.
    CausticExcluded { count: usize, q: f64 },
    /// A spectral peak narrower than the grid spacing was widened to it.
    WidthFloor { branch: usize, floor: f64 },
    /// Husimi input carries weight near the grid boundary.
    BoundaryLeak { mass: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::GridEdge { relative } => {
                write!(f, "field reaches {relative:.2e} of its peak on the grid boundary")
            }
            Warning::Quadrature { change } => {
                write!(f, "quadrature not converged: resolution change moved result by {change:.2e}")
            }
            Warning::StepSize { change } => {
                write!(f, "step size: halving dt moved the endpoint by {change:.2e}")
            }
            Warning::TailTruncation { relative } => {
                write!(f, "integration range truncates a tail at {relative:.2e} of peak")
            }
            Warning::ImaginaryResidue { max_abs } => {
                write!(f, "imaginary residue {max_abs:.2e} in a real field")
            }
            Warning::CausticExcluded { count, q } => {
                write!(f, "{count} caustic branch(es) excluded at Q = {q}")
            }
            Warning::WidthFloor { branch, floor } => {
                write!(f, "branch {branch} is narrower than the grid; width floored to {floor:.3e}")
            }
            Warning::BoundaryLeak { mass } => {
                write!(f, "{mass:.2e} of the Wigner mass lies near the grid boundary")
            }
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn clean(value: T) -> Self {
        Checked { value, warnings: Vec::new() }
    }

    pub fn new(value: T, warnings: Vec<Warning>) -> Self {
        Checked { value, warnings }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked { value: f(self.value), warnings: self.warnings }
    }

    pub fn into_parts(self) -> (T, Vec<Warning>) {
        (self.value, self.warnings)
    }
}
