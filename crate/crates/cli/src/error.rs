use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] snkf_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 for infeasible problems, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        use snkf_core::Error as E;
        match self {
            CliError::Core(E::Infeasible { .. }) => 3,
            CliError::Core(
                E::InvalidScenario(_)
                | E::Parse(_)
                | E::Domain(_)
                | E::Dimension(_)
                | E::Unstable(_)
                | E::ZeroMeanChannel(_)
                | E::DegenerateSnr,
            ) => 2,
            CliError::Config(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
