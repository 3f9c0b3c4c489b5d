use spinsearch_core::error::SpinError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ambiguous readout: {0}")]
    AmbiguousReadout(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("numerical branch error: {0}")]
    Branch(String),
    #[error("selftest failed: {}", .0.join(", "))]
    SelftestFailed(Vec<String>),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::SelftestFailed(_) | CliError::Numerical(_) | CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::AmbiguousReadout(_) => 3,
            CliError::Sampling(_) => 4,
            CliError::Branch(_) => 5,
        }
    }
}

impl From<SpinError> for CliError {
    fn from(e: SpinError) -> Self {
        let msg = e.to_string();
        match e {
            SpinError::AmbiguousReadout { .. } => CliError::AmbiguousReadout(msg),
            SpinError::Sampling { .. } => CliError::Sampling(msg),
            SpinError::BranchAmbiguity { .. } => CliError::Branch(msg),
            SpinError::Configuration(_)
            | SpinError::Domain(_)
            | SpinError::IndexOutOfRange { .. }
            | SpinError::Aliasing { .. } => CliError::Config(msg),
            SpinError::ContractViolation(_) => CliError::Numerical(msg),
        }
    }
}
