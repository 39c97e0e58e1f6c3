use thiserror::Error;

use crate::game::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game spec: {0}")]
    Validation(ValidationReport),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("lasso cycle must be nonempty")]
    EmptyCycle,

    #[error("posterior undefined on null history")]
    NullHistory,

    #[error("payoff {0} is not lasso-evaluable")]
    NotLassoEvaluable(String),

    #[error("infeasible split plan: residual {residual:?}")]
    InfeasiblePlan { residual: Vec<f64> },

    #[error("invalid split plan: {0}")]
    InvalidPlan(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("query {0} lies outside the sampled region of the simplex")]
    OutsideSimplex(String),

    #[error("no u-oracle for payoff family {0}")]
    NoOracle(String),

    #[error("linear program is {0}")]
    Lp(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid descriptor: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
