use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the domain of the requested operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The product cover has more cells than the configured budget allows.
    #[error("product cover has {cells} cells, budget is {budget}")]
    CellBudget { cells: u128, budget: u64 },

    /// Pre-flight refusal: expected waiting times are out of desk reach.
    #[error("refused: 1/min cell mass = {inverse_mass:.4e} exceeds the simulation limit {limit:.1e}")]
    Infeasible { inverse_mass: f64, limit: f64 },

    /// A trial ran into the hard step cap.
    #[error("trial {trial} exceeded the step cap of {cap}")]
    StepCap { trial: u64, cap: u64 },

    /// The fine side of a cover-time bracket is out of reach.
    #[error("refused cover at scale {scale:.6e}: {reason}; finest feasible scale is {finest:.6e}")]
    BracketRefused {
        scale: f64,
        finest: f64,
        reason: String,
    },

    /// Linear system for the exact hitting-time oracle could not be solved.
    #[error("singular hitting-time system: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
