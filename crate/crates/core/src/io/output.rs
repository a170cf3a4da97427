//! Result files: solution JSON, iteration history and level tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::ProblemInstance;
use crate::error::{Error, Result};
use crate::solvers::{CriticalPoint, HistoryRecord, PointKind, SolverConfig, Status, SweepResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexValue {
    pub id: String,
    pub u: f64,
    pub v: f64,
}

/// Contents of `solution.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub kind: PointKind,
    pub status: Status,
    pub accepted: bool,
    pub level: f64,
    pub residual: f64,
    pub radius: Option<f64>,
    pub iterations: usize,
    pub mean_pair: (f64, f64),
    pub interior: Option<bool>,
    pub boundary_sup: Option<f64>,
    pub displacement: Option<f64>,
    pub vertices: Vec<VertexValue>,
    pub config: SolverConfig,
}

impl SolutionFile {
    pub fn new(inst: &ProblemInstance, cp: &CriticalPoint, cfg: &SolverConfig) -> Self {
        let vertices = inst
            .graph()
            .ids()
            .iter()
            .enumerate()
            .map(|(x, id)| VertexValue { id: id.clone(), u: cp.state.u[x], v: cp.state.v[x] })
            .collect();
        Self {
            kind: cp.kind,
            status: cp.status.clone(),
            accepted: cp.accepted(),
            level: cp.level,
            residual: cp.residual,
            radius: cp.radius,
            iterations: cp.iterations,
            mean_pair: cp.mean_pair,
            interior: cp.interior,
            boundary_sup: cp.boundary_sup,
            displacement: cp.displacement,
            vertices,
            config: cfg.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

/// Columns: `iteration,phase,level,residual,step,node,winding`; empty cells
/// for values a phase does not produce.
pub fn write_history_csv(path: &Path, history: &[HistoryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if history.is_empty() {
        w.write_record(["iteration", "phase", "level", "residual", "step", "node", "winding"])
            .map_err(csv_error)?;
    }
    for h in history {
        w.serialize(h).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of `levels.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: usize,
    pub kind: PointKind,
    pub radius: Option<f64>,
    pub level: Option<f64>,
    pub residual: Option<f64>,
    pub status: String,
}

pub fn level_rows(res: &SweepResult) -> Vec<LevelRow> {
    res.rows
        .iter()
        .map(|r| LevelRow {
            n: r.index,
            kind: r.kind,
            radius: r.radius,
            level: r.point.as_ref().map(|p| p.level),
            residual: r.point.as_ref().map(|p| p.residual),
            status: match &r.point {
                Some(p) => p.status.name().to_string(),
                None => "not_run".to_string(),
            },
        })
        .collect()
}

/// Writes `levels.csv`, `minimax_levels.dat`, `localmin_levels.dat` and
/// `sweep.json` into `dir`.
pub fn write_sweep(dir: &Path, res: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("levels.csv")).map_err(csv_error)?;
    let rows = level_rows(res);
    if rows.is_empty() {
        w.write_record(["n", "kind", "radius", "level", "residual", "status"])
            .map_err(csv_error)?;
    }
    for row in &rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    for (kind, file) in [
        (PointKind::Minimax, "minimax_levels.dat"),
        (PointKind::LocalMin, "localmin_levels.dat"),
    ] {
        let mut text = String::from("# index level\n");
        for row in rows.iter().filter(|r| r.kind == kind) {
            if let Some(level) = row.level {
                text.push_str(&format!("{} {:.17e}\n", row.n, level));
            }
        }
        fs::write(dir.join(file), text)?;
    }
    write_json(&dir.join("sweep.json"), res)
}
