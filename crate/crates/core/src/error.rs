use thiserror::Error;

use crate::graph::Violation;
use crate::nonlinearity::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alignment error: expected {expected} values, got {got}")]
    Alignment { expected: usize, got: usize },

    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("graph validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("singular power: |∇ψ|^{exponent} at vertex {vertex} with |∇ψ| = 0 (configure a regularization epsilon)")]
    Singular { vertex: usize, exponent: f64 },

    #[error("function is nonzero outside the domain at vertex {0}")]
    Support(usize),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("problem file: {0}")]
    ProblemFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
