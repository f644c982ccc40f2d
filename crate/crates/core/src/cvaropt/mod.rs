//! Mean-CVaR portfolio selection as a linear program.

mod lp;
mod portfolio;
mod simplex;

use thiserror::Error;

pub use lp::{LpProblem, LpRow, Sense};
pub use portfolio::{build_dual_lp, build_lp, cvar_of_weights, optimize_portfolio, optimize_with, OptConfig, OptResult, Route, ScenarioMatrix, PRIMAL_ROUTE_MAX_SCENARIOS};
pub use simplex::{solve_lp, DenseSimplex, LpSolution, LpSolver, LpStatus};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("numerical failure in LP solver: {0}")]
    NumericalFailure(String),
    #[error("malformed linear program: {0}")]
    InvalidProblem(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
