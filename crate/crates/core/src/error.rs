use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("chain is not irreducible: {0}")]
    Irreducible(String),

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    Convergence { iterations: usize, best_residual: f64 },

    #[error("tail accuracy unavailable: {message} (residual bound {residual_bound:e})")]
    Accuracy { message: String, residual_bound: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("state space has {count} states, above the budget of {budget}")]
    Capacity { count: u128, budget: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("certificate infeasible: {0}")]
    Infeasible(String),

    #[error("truncation box too small: leaked mass {leaked:e} exceeds budget {budget:e}; increase the box radius")]
    Truncation { leaked: f64, budget: f64 },

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("block alignment: {0}")]
    Alignment(String),

    #[error("interaction rate fits neither growth case: {0}")]
    Classification(String),

    #[error("comparison violated: {0}")]
    ComparisonViolated(String),

    #[error("sampling domain: {0}")]
    SamplingDomain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error("detailed balance fails: {0}")]
    DetailedBalance(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
