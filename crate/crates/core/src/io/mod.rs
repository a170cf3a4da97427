//! Problem files and result files.

mod output;
mod problem;

pub use output::{
    level_rows, write_history_csv, write_json, write_sweep, LevelRow, SolutionFile, VertexValue,
};
pub use problem::{
    DomainSection, EdgeEntry, EnvelopeSection, GraphSection, NonlinearitySection, ProblemFile,
    ProblemSection, Scalar, VertexEntry,
};
