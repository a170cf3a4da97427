use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{mean_pair, Coords, CriticalPoint, HistoryRecord, PointKind, SolverConfig, Status};
use crate::energy::{phi, residual, ProblemInstance, StatePair};
use crate::error::{Error, Result};

pub(crate) struct LmOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub history: Vec<HistoryRecord>,
    pub converged: bool,
}

/// Central-difference Jacobian of the strong residual.
fn jacobian(inst: &ProblemInstance, coords: &Coords, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = coords.dim();
    let cols = (0..n)
        .into_par_iter()
        .map(|j| -> Result<DVector<f64>> {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let rp = coords.strong_residual(inst, &xp)?;
            let rm = coords.strong_residual(inst, &xm)?;
            Ok((rp - rm) / (2.0 * h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Levenberg–Marquardt on the strong residual `grad/μ`, starting at `x`.
pub(crate) fn levenberg_marquardt(
    inst: &ProblemInstance,
    coords: &Coords,
    mut x: DVector<f64>,
    cfg: &SolverConfig,
    phase: &str,
    first_iteration: usize,
) -> Result<LmOutcome> {
    let mut r = coords.strong_residual(inst, &x)?;
    let mut norm = r.norm();
    let mut history = Vec::new();
    let mut lambda = 1e-3;
    let mut it = 0;
    while norm > cfg.grad_tol && it < cfg.refine_max_iter {
        it += 1;
        let j = jacobian(inst, coords, &x)?;
        let jt = j.transpose();
        let a = &jt * &j;
        let b = &jt * &r;
        let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(*v)).max(1e-300);
        let mut accepted = None;
        for _ in 0..40 {
            let mut m = a.clone();
            for k in 0..m.nrows() {
                m[(k, k)] += lambda * (a[(k, k)] + 1e-12 * scale);
            }
            let Some(step) = m.lu().solve(&(-&b)) else {
                lambda *= 4.0;
                continue;
            };
            let xn = &x + &step;
            let rn = coords.strong_residual(inst, &xn)?;
            let nn = rn.norm();
            if nn.is_finite() && nn < norm {
                accepted = Some((xn, rn, nn, step.norm()));
                lambda = (lambda / 3.0).max(1e-15);
                break;
            }
            lambda *= 4.0;
        }
        let Some((xn, rn, nn, step)) = accepted else {
            break;
        };
        x = xn;
        r = rn;
        norm = nn;
        history.push(HistoryRecord {
            iteration: first_iteration + it,
            phase: phase.to_string(),
            level: phi(inst, &coords.state(&x))?,
            residual: norm,
            step,
            node: None,
            winding: None,
        });
    }
    Ok(LmOutcome {
        converged: norm <= cfg.grad_tol,
        x,
        iterations: it,
        history,
    })
}

/// Drives the residual of `seed` below `grad_tol` by a damped Gauss–Newton
/// iteration. A seed that already meets the tolerance is returned unchanged.
pub fn refine_critical(
    inst: &ProblemInstance,
    seed: &StatePair,
    cfg: &SolverConfig,
) -> Result<CriticalPoint> {
    cfg.validate()?;
    if !seed.is_finite() {
        return Err(Error::InvalidInput("seed contains NaN or infinite values".into()));
    }
    inst.check_state(seed)?;
    let coords = Coords::new(inst);
    let x0 = coords.extract(seed);
    let out = levenberg_marquardt(inst, &coords, x0.clone(), cfg, "refine", 0)?;
    let state = coords.state(&out.x);
    let res = residual(inst, &state)?;
    let status = if res <= cfg.grad_tol {
        Status::Converged
    } else {
        Status::Plateau { residual: res }
    };
    Ok(CriticalPoint {
        kind: PointKind::Refined,
        level: phi(inst, &state)?,
        residual: res,
        status,
        radius: None,
        iterations: out.iterations,
        mean_pair: mean_pair(inst, &state),
        interior: None,
        boundary_sup: None,
        displacement: Some(coords.distance(inst, &out.x, &x0)),
        history: out.history,
        state,
    })
}
