use thiserror::Error;

use crate::hamiltonian::Point;

pub type Result<T> = std::result::Result<T, HjError>;

#[derive(Debug, Error)]
pub enum HjError {
    #[error("kernel under-resolved: eta = {eta} < 2h = {}", 2.0 * .h)]
    KernelUnderResolved { eta: f64, h: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("not converged after {steps} steps (residual {residual:e})")]
    NotConverged {
        steps: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("unstable: non-finite iterate at step {step}")]
    Unstable { step: usize },

    #[error("solver stagnation: backward error history {history:?}")]
    SolverStagnation { history: Vec<f64> },

    #[error("sign violation in linearized operator at row {row}, column {col}: coupling {value:e}")]
    SignViolation { row: usize, col: usize, value: f64 },

    #[error("{bound} violated at x = ({}, {})", .at[0], .at[1])]
    AssumptionViolated { bound: String, at: Point },

    #[error("no convergence trend: Cauchy differences {diffs:?}")]
    NoConvergenceTrend { diffs: Vec<f64> },

    #[error("competitor {index} not holonomic: residual {residual:e} > threshold {threshold:e}")]
    CompetitorNotHolonomic {
        index: usize,
        residual: f64,
        threshold: f64,
    },

    #[error("{0}")]
    Config(#[from] crate::experiment::config::ConfigErrors),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
