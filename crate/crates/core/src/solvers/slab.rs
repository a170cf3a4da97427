use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::refine::levenberg_marquardt;
use super::{check_radius, mean_pair, Coords, CriticalPoint, HistoryRecord, PointKind, SolverConfig, Status};
use crate::energy::{phi, residual, ProblemInstance};
use crate::error::Result;

const START_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 0.95];
const START_ANGLES: usize = 16;

/// Rescales the mean pair onto the closed disk of radius `r` by a constant shift.
fn project(coords: &Coords, mut x: DVector<f64>, r: f64) -> DVector<f64> {
    let (mu, mv) = coords.mean(&x);
    let n = mu.hypot(mv);
    if n > r {
        let s = r / n;
        coords.shift(&mut x, mu * s - mu, mv * s - mv);
    }
    x
}

/// Central-difference Hessian of φ from the analytic gradient, symmetrized.
fn hessian(inst: &ProblemInstance, coords: &Coords, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let cols = (0..coords.dim())
        .into_par_iter()
        .map(|j| -> Result<DVector<f64>> {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            Ok((coords.gradient(inst, &xp)? - coords.gradient(inst, &xm)?) / (2.0 * h))
        })
        .collect::<Result<Vec<_>>>()?;
    let h = DMatrix::from_columns(&cols);
    Ok((&h + h.transpose()) * 0.5)
}

/// Solves `(H + λM)d = −g` with the smallest tried λ ≥ 0 that makes the
/// matrix positive definite; falls back to `−g/μ`.
fn newton_direction(
    inst: &ProblemInstance,
    coords: &Coords,
    x: &DVector<f64>,
    g: &DVector<f64>,
) -> Result<DVector<f64>> {
    let h = hessian(inst, coords, x)?;
    let m = coords.metric();
    let scale = (0..h.nrows())
        .map(|i| (h[(i, i)] / m[i]).abs())
        .fold(1.0f64, f64::max);
    let mut lambda = 0.0;
    for _ in 0..40 {
        let mut a = h.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += lambda * m[i];
        }
        if let Some(ch) = a.cholesky() {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Ok(d);
            }
        }
        lambda = if lambda == 0.0 { 1e-8 * scale } else { lambda * 10.0 };
    }
    Ok(-g.component_div(m))
}

struct Run {
    x: DVector<f64>,
    level: f64,
    iterations: usize,
    history: Vec<HistoryRecord>,
}

/// Projected descent with Armijo backtracking; φ never increases.
fn descend(
    inst: &ProblemInstance,
    coords: &Coords,
    x0: DVector<f64>,
    r: f64,
    cfg: &SolverConfig,
) -> Result<Run> {
    let mut x = project(coords, x0, r);
    let mut f = coords.phi(inst, &x)?;
    let mut t_last = cfg.initial_step;
    let mut history = Vec::new();
    let mut it = 0;
    while it < cfg.max_iter {
        let g = coords.gradient(inst, &x)?;
        if g.component_div(coords.metric()).norm() <= cfg.grad_tol {
            break;
        }
        let newton = newton_direction(inst, coords, &x, &g)?;
        let steepest = -g.component_div(coords.metric());
        let mut accepted = None;
        'directions: for d in [newton, steepest] {
            let mut t = (2.0 * t_last).min(cfg.initial_step);
            for _ in 0..60 {
                let xn = project(coords, &x + &d * t, r);
                let slope = g.dot(&(&xn - &x));
                if slope < 0.0 {
                    let fnew = coords.phi(inst, &xn)?;
                    if fnew.is_finite() && fnew <= f + cfg.armijo_c * slope {
                        accepted = Some((xn, fnew, t));
                        break 'directions;
                    }
                }
                t *= cfg.backtrack;
            }
        }
        let Some((xn, fnew, t)) = accepted else {
            break;
        };
        it += 1;
        let step = (&xn - &x).amax();
        let tiny = step <= 1e-15 * (1.0 + x.amax());
        x = xn;
        f = fnew;
        t_last = t;
        history.push(HistoryRecord {
            iteration: it,
            phase: "descent".into(),
            level: f,
            residual: coords.strong_residual(inst, &x)?.norm(),
            step,
            node: None,
            winding: None,
        });
        if tiny {
            break;
        }
    }
    Ok(Run { x, level: f, iterations: it, history })
}

fn is_interior(coords: &Coords, x: &DVector<f64>, r: f64, cfg: &SolverConfig) -> bool {
    let (a, b) = coords.mean(x);
    a.hypot(b) < r * (1.0 - cfg.interior_margin)
}

/// Minimizes φ over the slab of states whose mean pair lies in the disk of
/// radius `r`. Only interior minima with a small residual count as critical.
pub fn minimize_slab(inst: &ProblemInstance, r: f64, cfg: &SolverConfig) -> Result<CriticalPoint> {
    cfg.validate()?;
    check_radius(r)?;
    let coords = Coords::new(inst);

    let mut seeds = vec![(0.0, 0.0)];
    for frac in START_FRACTIONS {
        for k in 0..START_ANGLES {
            let theta = std::f64::consts::TAU * k as f64 / START_ANGLES as f64;
            seeds.push((frac * r * theta.cos(), frac * r * theta.sin()));
        }
    }
    let mut ranked = seeds
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Ok((phi(inst, &inst.constant_state(a, b))?, i)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    ranked.truncate(cfg.slab_starts);

    let runs = ranked
        .par_iter()
        .map(|&(_, i)| {
            let (a, b) = seeds[i];
            let mut run = descend(inst, &coords, coords.extract(&inst.constant_state(a, b)), r, cfg)?;
            if is_interior(&coords, &run.x, r, cfg)
                && coords.strong_residual(inst, &run.x)?.norm() > cfg.grad_tol
            {
                let lm = levenberg_marquardt(inst, &coords, run.x.clone(), cfg, "polish", run.iterations)?;
                let level = coords.phi(inst, &lm.x)?;
                if lm.converged && is_interior(&coords, &lm.x, r, cfg) {
                    run.iterations += lm.iterations;
                    run.history.extend(lm.history);
                    run.x = lm.x;
                    run.level = level;
                }
            }
            let res = residual(inst, &coords.state(&run.x))?;
            Ok((run, res))
        })
        .collect::<Result<Vec<_>>>()?;

    let (best, res) = runs
        .into_iter()
        .min_by(|(a, ra), (b, rb)| {
            let ok_a = is_interior(&coords, &a.x, r, cfg) && *ra <= cfg.grad_tol;
            let ok_b = is_interior(&coords, &b.x, r, cfg) && *rb <= cfg.grad_tol;
            ok_b.cmp(&ok_a).then(a.level.total_cmp(&b.level))
        })
        .expect("at least one start");

    let state = coords.state(&best.x);
    let interior = is_interior(&coords, &best.x, r, cfg);
    let mp = mean_pair(inst, &state);
    let status = if !interior {
        Status::BoundaryPinned { mean_norm: mp.0.hypot(mp.1) }
    } else if res <= cfg.grad_tol {
        Status::Converged
    } else {
        Status::Unconverged { residual: res }
    };
    Ok(CriticalPoint {
        kind: PointKind::LocalMin,
        level: phi(inst, &state)?,
        residual: res,
        status,
        radius: Some(r),
        iterations: best.iterations,
        mean_pair: mp,
        interior: Some(interior),
        boundary_sup: None,
        displacement: None,
        history: best.history,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Mode;
    use crate::graph::WeightedGraph;
    use crate::nonlinearity::{parse_expression, Nonlinearity};

    fn two_vertex(nl: Nonlinearity) -> ProblemInstance {
        let g = WeightedGraph::from_parts(vec![1.0, 1.0], &[(0, 1, 1.0)])
            .unwrap()
            .with_potentials(&[1.0, 1.0], &[1.0, 1.0])
            .unwrap();
        ProblemInstance::new(g, None, 1, 1, 2.0, 2.0, nl, None, Mode::Finite).unwrap()
    }

    #[test]
    fn convex_two_vertex_minimum() {
        let inst = two_vertex(parse_expression("u+v").unwrap());
        let cp = minimize_slab(&inst, 10.0, &SolverConfig::default()).unwrap();
        assert!(cp.accepted(), "{:?}", cp.status);
        assert_eq!(cp.interior, Some(true));
        for x in 0..2 {
            assert!((cp.state.u[x] - 1.0).abs() < 1e-10);
            assert!((cp.state.v[x] - 1.0).abs() < 1e-10);
        }
        assert!((cp.level + 2.0).abs() < 1e-10);
        assert!(cp.residual < 1e-10);
    }

    #[test]
    fn zero_nonlinearity_gives_origin() {
        let inst = two_vertex(Nonlinearity::zero());
        let cp = minimize_slab(&inst, 3.0, &SolverConfig::default()).unwrap();
        assert!(cp.accepted());
        assert_eq!(cp.level, 0.0);
        assert!(cp.state.u.max_abs() == 0.0 && cp.state.v.max_abs() == 0.0);
    }

    #[test]
    fn pinned_minimum_is_not_accepted() {
        let inst = two_vertex(parse_expression("10*u").unwrap());
        let cp = minimize_slab(&inst, 1.0, &SolverConfig::default()).unwrap();
        match cp.status {
            Status::BoundaryPinned { mean_norm } => assert!((mean_norm - 1.0).abs() < 1e-9),
            ref s => panic!("unexpected status {s:?}"),
        }
        assert!(!cp.accepted());
    }

    #[test]
    fn descent_is_monotone() {
        let inst = two_vertex(parse_expression("u^4/(1+u^2) + sin(v)").unwrap());
        let cp = minimize_slab(&inst, 5.0, &SolverConfig::default()).unwrap();
        let descent: Vec<f64> = cp
            .history
            .iter()
            .filter(|h| h.phase == "descent")
            .map(|h| h.level)
            .collect();
        assert!(descent.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_nonpositive_radius() {
        let inst = two_vertex(Nonlinearity::zero());
        assert!(minimize_slab(&inst, 0.0, &SolverConfig::default()).is_err());
        assert!(minimize_slab(&inst, f64::NAN, &SolverConfig::default()).is_err());
    }
}
