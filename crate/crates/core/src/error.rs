use thiserror::Error;

#[derive(Debug, Error)]
pub enum McError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid observation set: {0}")]
    InvalidObservations(String),
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("reveal probability {requested} exceeds 1 at {site}")]
    ProbabilityOverflow { site: &'static str, requested: f64 },
    #[error("observation budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("left factor is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("power iteration did not certify the residual after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("drop schedule removes every index: {0}")]
    InsufficientBudget(String),
    #[error("candidate column set is empty")]
    EmptyCandidateSet,
    #[error("ridge system is singular with zero regularisation")]
    DegenerateRidge,
    #[error("least-squares design is rank deficient")]
    RankDeficient,
    #[error("no candidate has a {needed}-strong neighbourhood among {count}")]
    NoConsensus { count: usize, needed: usize },
    #[error("loop exceeded its iteration cap of {cap}")]
    NonTermination { cap: usize },
    #[error("enumeration of {count:e} subsets exceeds the budget of {budget:e}")]
    EnumerationBudget { count: f64, budget: f64 },
    #[error("reached the minimum noise level without a certified iterate")]
    DeltaMinReached,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure classes, used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Precondition,
    Algorithmic,
}

impl McError {
    pub fn class(&self) -> ErrorClass {
        use McError::*;
        match self {
            Io(_) | Format(_) | InvalidObservations(_) | NonFinite { .. } => ErrorClass::Input,
            NoConsensus { .. } | NonTermination { .. } | NonConvergence { .. } | DeltaMinReached => {
                ErrorClass::Algorithmic
            }
            _ => ErrorClass::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, McError>;
