//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    /// Eigenstate labeling failed: the best bare-state overlap for |{n},{m}>
    /// is only {overlap}. The system is too close to a level resonance for
    /// the adiabatic labeling (and the gate) to make sense.
    #[error("ambiguous eigenstate labeling for |{n},{m}>: max overlap {overlap:.4} <= 0.5")]
    LabelingAmbiguous { n: usize, m: usize, overlap: f64 },

    #[error("division singularity in {0}")]
    DivisionSingularity(String),

    /// Adiabatic continuation of the driven control-qubit eigenstates lost
    /// track of a level between successive grid points.
    #[error("adiabatic continuation lost near eps = {eps_mhz} MHz (overlap {overlap:.4})")]
    ContinuationLost { eps_mhz: f64, overlap: f64 },

    #[error("integration step too coarse: drive phase per step is {phase:.3} rad > 0.5 rad")]
    StepTooCoarse { phase: f64 },

    #[error("angle unwrap ambiguous: |delta phi| = {dphi:.3} rad > pi; reduce dtau")]
    UnwrapAmbiguous { dphi: f64 },

    #[error("degenerate computational block {block} in angle extraction")]
    DegenerateBlock { block: usize },

    #[error("rank-deficient computational block {block} in polar decomposition")]
    RankDeficientBlock { block: usize },

    /// The duration search did not find a phase-difference crossing of +-pi
    /// within the scan window; typical of near-resonant detunings.
    #[error("no CNOT duration bracket found up to {tau_max_ns} ns")]
    NoBracket { tau_max_ns: f64 },

    #[error("target infidelity {target} is not reached for any drive amplitude")]
    TargetUnreachable { target: f64 },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
