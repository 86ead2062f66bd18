use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("undamped susceptibility evaluated {separation:e} rad/s from the pole at {omega0:e} rad/s")]
    Pole { omega0: f64, separation: f64 },

    #[error("point ({x}, {y}, {z}) m lies outside the cavity")]
    OutOfCavity { x: f64, y: f64, z: f64 },

    #[error("field vanishes at the requested point, polarisation undefined")]
    DegenerateField,

    #[error("closed form only derived for {expected}, got {got}")]
    UnsupportedModePair { expected: &'static str, got: String },

    #[error("grid `{axis}`: {reason}")]
    Grid { axis: &'static str, reason: String },

    #[error("norm drift {drift:e} per period exceeds 1e-6, reduce the time step")]
    StepTooLarge { drift: f64 },

    #[error("steady state not reached: amplitude drifts {drift:.3e} per period")]
    NotSettled { drift: f64 },

    #[error("no dip found in spectrum")]
    NoDip,

    #[error("least-squares fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("splitting unresolved: 2|g̃| = {two_g:e} rad/s does not exceed κ + η = {width:e} rad/s")]
    Unresolved { two_g: f64, width: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn grid(axis: &'static str, reason: impl Into<String>) -> Self {
        Error::Grid { axis, reason: reason.into() }
    }
}
