//! Discrete variational calculus on weighted graphs: poly-Laplacian
//! operators, Sobolev-type norms, the coupled energy functional and
//! numerical searches for its minimax and local-minimum critical points.

pub mod calculus;
pub mod cli;
pub mod energy;
pub mod error;
pub mod graph;
pub mod hypotheses;
pub mod io;
pub mod nonlinearity;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
