use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minimax_disk, minimize_slab, CriticalPoint, PointKind, SolverConfig};
use crate::energy::ProblemInstance;
use crate::error::Result;
use crate::hypotheses::{find_witnesses, interleave, rhs_thresholds, SearchPlan, WitnessKind};

/// Where the sweep takes its disk radii `R_n` and slab radii `r_m` from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum RadiusSource {
    /// Witness searches, interleaved as `R₁ < r₁ < R₂ < …`.
    Witnesses(SearchPlan),
    /// User-supplied radii, used as given.
    Explicit { high: Vec<f64>, low: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: PointKind,
    /// 1-based level index within its family.
    pub index: usize,
    pub radius: Option<f64>,
    pub point: Option<CriticalPoint>,
    pub note: String,
}

impl SweepRow {
    pub fn accepted(&self) -> bool {
        self.point.as_ref().is_some_and(CriticalPoint::accepted)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Ordering violations among accepted points of each family.
    pub violations: Vec<String>,
}

impl SweepResult {
    pub fn all_accepted(&self) -> bool {
        self.rows.iter().all(SweepRow::accepted)
    }

    pub fn levels(&self, kind: PointKind) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.point.as_ref().map(|p| p.level))
            .collect()
    }
}

fn radii(inst: &ProblemInstance, n: usize, m: usize, source: &RadiusSource) -> Result<(Vec<f64>, Vec<f64>, String)> {
    match source {
        RadiusSource::Explicit { high, low } => Ok((
            high.iter().take(n).copied().collect(),
            low.iter().take(m).copied().collect(),
            "explicit radius not supplied".into(),
        )),
        RadiusSource::Witnesses(plan) => {
            let th = rhs_thresholds(inst)?;
            let hi = find_witnesses(inst, &th, WitnessKind::High, n + m, plan)?;
            let lo = find_witnesses(inst, &th, WitnessKind::Low, n + m, plan)?;
            let hr: Vec<f64> = hi.witnesses.iter().map(|w| w.radius).collect();
            let lr: Vec<f64> = lo.witnesses.iter().map(|w| w.radius).collect();
            let (rs, ls) = interleave(&hr, &lr, n, m);
            Ok((rs, ls, format!("no witness radius: {}; {}", hi.note, lo.note)))
        }
    }
}

/// Runs `minimax_disk` at `R₁..R_n` and `minimize_slab` at `r₁..r_m`.
/// Per-solve failures are recorded in their rows; the sweep continues.
pub fn sweep(
    inst: &ProblemInstance,
    n: usize,
    m: usize,
    source: &RadiusSource,
    cfg: &SolverConfig,
) -> Result<SweepResult> {
    cfg.validate()?;
    if n == 0 && m == 0 {
        return Ok(SweepResult { rows: Vec::new(), violations: Vec::new() });
    }
    let (high, low, missing) = radii(inst, n, m, source)?;
    let jobs: Vec<(PointKind, usize, Option<f64>)> = (0..n)
        .map(|i| (PointKind::Minimax, i + 1, high.get(i).copied()))
        .chain((0..m).map(|i| (PointKind::LocalMin, i + 1, low.get(i).copied())))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(kind, index, radius)| {
            let Some(r) = radius else {
                return SweepRow { kind, index, radius, point: None, note: missing.clone() };
            };
            let solved = match kind {
                PointKind::Minimax => minimax_disk(inst, r, cfg),
                _ => minimize_slab(inst, r, cfg),
            };
            match solved {
                Ok(p) => {
                    let note = p.status.name().to_string();
                    SweepRow { kind, index, radius, point: Some(p), note }
                }
                Err(e) => SweepRow { kind, index, radius, point: None, note: e.to_string() },
            }
        })
        .collect();

    let mut violations = Vec::new();
    for kind in [PointKind::Minimax, PointKind::LocalMin] {
        let accepted: Vec<&SweepRow> = rows.iter().filter(|r| r.kind == kind && r.accepted()).collect();
        for w in accepted.windows(2) {
            let (a, b) = (w[0].point.as_ref().unwrap().level, w[1].point.as_ref().unwrap().level);
            let bad = match kind {
                PointKind::Minimax => b < a,
                _ => b > a,
            };
            if bad {
                violations.push(format!(
                    "{} levels out of order: level {} = {a} then level {} = {b}",
                    kind.name(),
                    w[0].index,
                    w[1].index
                ));
            }
        }
    }
    Ok(SweepResult { rows, violations })
}
