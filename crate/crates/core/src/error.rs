use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpinError {
    #[error("qubit index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// An eigenphase of a unitary sits on the principal-branch cut at -1.
    #[error("branch ambiguity: eigenphase {phase} within {tol:e} of the branch cut")]
    BranchAmbiguity { phase: f64, tol: f64 },

    /// Too few phase-cycling steps to separate coherence orders.
    #[error("aliasing: {steps} phase-cycle steps cannot separate orders -{n}..={n} (need at least {needed})")]
    Aliasing { steps: usize, n: usize, needed: usize },

    /// The per-qubit readout has a coefficient at the noise floor.
    #[error("ambiguous readout: |coefficient| {value:e} of qubit {qubit} below threshold {threshold:e}")]
    AmbiguousReadout {
        qubit: usize,
        value: f64,
        threshold: f64,
    },

    /// The t1 sampling grid cannot represent the transition frequencies.
    #[error("sampling error: max |omega| {max_omega} rad/s exceeds Nyquist {nyquist} rad/s")]
    Sampling { max_omega: f64, nyquist: f64 },
}

pub type Result<T> = std::result::Result<T, SpinError>;
