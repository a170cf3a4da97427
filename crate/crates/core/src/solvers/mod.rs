//! Numerical searches for critical points: slab-constrained minimization,
//! disk-membrane minimax relaxation and Levenberg–Marquardt refinement.

mod config;
mod minimax;
mod refine;
mod slab;
mod sweep;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use config::SolverConfig;
pub use minimax::{boundary_sup, minimax_disk, minimax_disk_with_grid, winding_number, DiskGrid};
pub use refine::refine_critical;
pub use slab::minimize_slab;
pub use sweep::{sweep, RadiusSource, SweepResult, SweepRow};

use crate::energy::{grad_phi, phi, ProblemInstance, StatePair};
use crate::error::{Error, Result};
use crate::spaces::mean_on;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Minimax,
    LocalMin,
    Refined,
}

impl PointKind {
    pub fn name(self) -> &'static str {
        match self {
            PointKind::Minimax => "minimax",
            PointKind::LocalMin => "localmin",
            PointKind::Refined => "refined",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// Iteration budget exhausted before the residual met the tolerance.
    Unconverged { residual: f64 },
    /// Slab minimum sits on the constraint circle; not a critical point.
    BoundaryPinned { mean_norm: f64 },
    /// The disk maximum sits on (or below) the frozen boundary.
    LevelNotAboveBoundary { level: f64, boundary_sup: f64 },
    /// Refinement stalled with the residual above tolerance.
    Plateau { residual: f64 },
    /// Refinement moved too far from its seed.
    Displaced { displacement: f64, limit: f64 },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Unconverged { .. } => "unconverged",
            Status::BoundaryPinned { .. } => "boundary_pinned",
            Status::LevelNotAboveBoundary { .. } => "level_not_above_boundary",
            Status::Plateau { .. } => "plateau",
            Status::Displaced { .. } => "displaced",
        }
    }
}

/// One row of the iteration history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub phase: String,
    pub level: f64,
    pub residual: f64,
    pub step: f64,
    pub node: Option<usize>,
    pub winding: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub kind: PointKind,
    pub state: StatePair,
    pub level: f64,
    pub residual: f64,
    pub status: Status,
    /// Disk or slab radius the point was produced from.
    pub radius: Option<f64>,
    pub iterations: usize,
    pub mean_pair: (f64, f64),
    /// Slab results: whether the mean pair lies strictly inside the disk.
    pub interior: Option<bool>,
    /// Minimax results: sup of φ over the frozen boundary circle.
    pub boundary_sup: Option<f64>,
    /// Distance moved by the final refinement.
    pub displacement: Option<f64>,
    pub history: Vec<HistoryRecord>,
}

impl CriticalPoint {
    pub fn accepted(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Free coordinates of a state: `u` then `v` on the free vertices.
pub(crate) struct Coords {
    free: Vec<usize>,
    n: usize,
    metric: DVector<f64>,
}

impl Coords {
    pub(crate) fn new(inst: &ProblemInstance) -> Self {
        let free = inst.free_vertices();
        let mu = inst.graph().mu();
        let metric = DVector::from_iterator(
            2 * free.len(),
            free.iter().chain(free.iter()).map(|&x| mu[x]),
        );
        Self {
            free,
            n: inst.len(),
            metric,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        2 * self.free.len()
    }

    pub(crate) fn metric(&self) -> &DVector<f64> {
        &self.metric
    }

    pub(crate) fn extract(&self, s: &StatePair) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.free
                .iter()
                .map(|&x| s.u[x])
                .chain(self.free.iter().map(|&x| s.v[x])),
        )
    }

    pub(crate) fn state(&self, x: &DVector<f64>) -> StatePair {
        let k = self.free.len();
        let mut s = StatePair::zeros(self.n);
        for (i, &v) in self.free.iter().enumerate() {
            s.u.values_mut()[v] = x[i];
            s.v.values_mut()[v] = x[k + i];
        }
        s
    }

    pub(crate) fn gradient(&self, inst: &ProblemInstance, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.extract(&grad_phi(inst, &self.state(x))?))
    }

    /// Gradient divided by μ coordinatewise; its norm is the residual.
    pub(crate) fn strong_residual(
        &self,
        inst: &ProblemInstance,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        Ok(self.gradient(inst, x)?.component_div(&self.metric))
    }

    pub(crate) fn phi(&self, inst: &ProblemInstance, x: &DVector<f64>) -> Result<f64> {
        phi(inst, &self.state(x))
    }

    /// Mean pair of the free coordinates.
    pub(crate) fn mean(&self, x: &DVector<f64>) -> (f64, f64) {
        let k = self.free.len();
        let vol: f64 = self.metric.rows(0, k).sum();
        let su: f64 = (0..k).map(|i| self.metric[i] * x[i]).sum();
        let sv: f64 = (0..k).map(|i| self.metric[i] * x[k + i]).sum();
        (su / vol, sv / vol)
    }

    /// Adds the constant pair `(du, dv)` on the free vertices.
    pub(crate) fn shift(&self, x: &mut DVector<f64>, du: f64, dv: f64) {
        let k = self.free.len();
        for i in 0..k {
            x[i] += du;
            x[k + i] += dv;
        }
    }

    /// `(Σ μ(Δu² + Δv²) / |V|)^{1/2}`, with |Ω| in place of |V| on a domain.
    pub(crate) fn distance(&self, inst: &ProblemInstance, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let d = a - b;
        let s: f64 = d.iter().zip(self.metric.iter()).map(|(d, m)| m * d * d).sum();
        (s / inst.mean_volume()).sqrt()
    }
}

pub(crate) fn mean_pair(inst: &ProblemInstance, s: &StatePair) -> (f64, f64) {
    let g = inst.graph();
    (
        mean_on(g, s.u.values(), inst.domain()),
        mean_on(g, s.v.values(), inst.domain()),
    )
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("radius must be positive and finite, got {r}")))
    }
}
