use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rayon::prelude::*;

use super::refine::levenberg_marquardt;
use super::{check_radius, mean_pair, Coords, CriticalPoint, HistoryRecord, PointKind, SolverConfig, Status};
use crate::energy::{phi, residual, ProblemInstance, StatePair};
use crate::error::Result;

/// Polar discretization of a disk map `γ : B_R → X`.
///
/// Node 0 is the center; node `1 + (i−1)·spokes + j` sits on ring `i` at
/// radius `R·i/rings` and angle `2πj/spokes`. The outer ring is frozen at the
/// constant-pair embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskGrid {
    radius: f64,
    rings: usize,
    spokes: usize,
    nodes: Vec<StatePair>,
}

impl DiskGrid {
    /// The constant-pair embedding: node at `(a, b)` holds `u ≡ a`, `v ≡ b`.
    pub fn new(inst: &ProblemInstance, radius: f64, rings: usize, spokes: usize) -> Self {
        let mut grid = Self { radius, rings, spokes, nodes: Vec::new() };
        grid.nodes = (0..grid.len())
            .map(|k| {
                let (a, b) = grid.position(k);
                inst.constant_state(a, b)
            })
            .collect();
        grid
    }

    pub fn len(&self) -> usize {
        1 + self.rings * self.spokes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[StatePair] {
        &self.nodes
    }

    /// Ring index of node `k`; the center is ring 0.
    pub fn ring(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            1 + (k - 1) / self.spokes
        }
    }

    pub fn is_frozen(&self, k: usize) -> bool {
        self.ring(k) == self.rings
    }

    /// Parameter point of node `k` in the disk.
    pub fn position(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            return (0.0, 0.0);
        }
        let i = self.ring(k);
        let j = (k - 1) % self.spokes;
        let rho = self.radius * i as f64 / self.rings as f64;
        let theta = TAU * j as f64 / self.spokes as f64;
        (rho * theta.cos(), rho * theta.sin())
    }

    fn node(&self, i: usize, j: usize) -> usize {
        1 + (i - 1) * self.spokes + j % self.spokes
    }

    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        if k == 0 {
            return (0..self.spokes).map(|j| self.node(1, j)).collect();
        }
        let i = self.ring(k);
        let j = (k - 1) % self.spokes;
        let mut out = vec![
            self.node(i, j + self.spokes - 1),
            self.node(i, j + 1),
            if i == 1 { 0 } else { self.node(i - 1, j) },
        ];
        if i < self.rings {
            out.push(self.node(i + 1, j));
        }
        out
    }

    pub fn outer_ring(&self) -> std::ops::Range<usize> {
        let start = self.node(self.rings, 0);
        start..start + self.spokes
    }

    /// Winding number of the outer ring's mean-pair image about (0,0).
    pub fn winding(&self, inst: &ProblemInstance) -> Option<i64> {
        let pts: Vec<(f64, f64)> = self.outer_ring().map(|k| mean_pair(inst, &self.nodes[k])).collect();
        winding_number(&pts)
    }

    /// Whether some node's mean pair lies within one image edge length of
    /// (0,0), the discrete form of the image meeting the mean-zero subspace.
    pub fn meets_mean_zero(&self, inst: &ProblemInstance) -> bool {
        let means: Vec<(f64, f64)> = self.nodes.iter().map(|s| mean_pair(inst, s)).collect();
        let mut edge = 0.0f64;
        for k in 0..self.len() {
            for n in self.neighbors(k) {
                let (a, b) = (means[k], means[n]);
                edge = edge.max((a.0 - b.0).hypot(a.1 - b.1));
            }
        }
        means.iter().any(|m| m.0.hypot(m.1) <= edge)
    }
}

/// Winding number of a closed polygon about the origin; `None` when a vertex
/// sits at the origin.
pub fn winding_number(points: &[(f64, f64)]) -> Option<i64> {
    if points.iter().any(|p| p.0 == 0.0 && p.1 == 0.0) {
        return None;
    }
    let mut total = 0.0;
    for (k, a) in points.iter().enumerate() {
        let b = points[(k + 1) % points.len()];
        let mut d = b.1.atan2(b.0) - a.1.atan2(a.0);
        if d > PI {
            d -= TAU;
        } else if d <= -PI {
            d += TAU;
        }
        total += d;
    }
    Some((total / TAU).round() as i64)
}

/// Sup of φ over the constant pairs on the circle of radius `r`.
pub fn boundary_sup(inst: &ProblemInstance, r: f64, directions: usize) -> Result<f64> {
    let values = (0..directions)
        .into_par_iter()
        .map(|k| {
            let theta = TAU * k as f64 / directions as f64;
            phi(inst, &inst.constant_state(r * theta.cos(), r * theta.sin()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn argmax(levels: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in levels.iter().enumerate() {
        if v > levels[best] {
            best = k;
        }
    }
    best
}

/// Disk-membrane relaxation of the minimax level over identity-boundary disk
/// maps of radius `radius`, followed by refinement of the final max node.
pub fn minimax_disk(inst: &ProblemInstance, radius: f64, cfg: &SolverConfig) -> Result<CriticalPoint> {
    minimax_disk_with_grid(inst, radius, cfg).map(|(cp, _)| cp)
}

/// As [`minimax_disk`], also returning the relaxed disk map.
pub fn minimax_disk_with_grid(
    inst: &ProblemInstance,
    radius: f64,
    cfg: &SolverConfig,
) -> Result<(CriticalPoint, DiskGrid)> {
    cfg.validate()?;
    check_radius(radius)?;
    let coords = Coords::new(inst);
    let mut grid = DiskGrid::new(inst, radius, cfg.rings, cfg.spokes);
    let mut x: Vec<DVector<f64>> = grid.nodes.iter().map(|s| coords.extract(s)).collect();
    let neighbors: Vec<Vec<usize>> = (0..grid.len()).map(|k| grid.neighbors(k)).collect();
    let ring = grid.outer_ring();
    let winding_of = |x: &[DVector<f64>]| {
        let pts: Vec<(f64, f64)> = ring.clone().map(|k| coords.mean(&x[k])).collect();
        winding_number(&pts)
    };
    let mut history = Vec::new();
    let mut t_last = cfg.initial_step;
    let mut iterations = 0;

    let levels_of = |x: &[DVector<f64>]| -> Result<Vec<f64>> {
        x.par_iter().map(|xk| coords.phi(inst, xk)).collect()
    };
    let mut levels = levels_of(&x)?;
    let mut top = argmax(&levels);
    while iterations < cfg.max_iter && !grid.is_frozen(top) {
        iterations += 1;
        let f = levels[top];
        let g = coords.gradient(inst, &x[top])?;
        let d = -g.component_div(coords.metric());
        let res = d.norm();
        let mut step = 0.0;
        if res > cfg.grad_tol {
            let slope = g.dot(&d);
            let mut t = (2.0 * t_last).min(cfg.initial_step);
            for _ in 0..60 {
                let xn = &x[top] + &d * t;
                let fnew = coords.phi(inst, &xn)?;
                if fnew.is_finite() && fnew <= f + cfg.armijo_c * t * slope {
                    step = t * d.amax();
                    x[top] = xn;
                    t_last = t;
                    break;
                }
                t *= cfg.backtrack;
            }
        }
        history.push(HistoryRecord {
            iteration: iterations,
            phase: "relax".into(),
            level: f,
            residual: res,
            step,
            node: Some(top),
            winding: winding_of(&x),
        });
        if res <= cfg.grad_tol {
            break;
        }
        let lambda = cfg.smoothing;
        let smoothed: Vec<DVector<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                if grid.is_frozen(k) {
                    return x[k].clone();
                }
                let mut avg = DVector::zeros(coords.dim());
                for &n in &neighbors[k] {
                    avg += &x[n];
                }
                avg /= neighbors[k].len() as f64;
                &x[k] * (1.0 - lambda) + avg * lambda
            })
            .collect();
        x = smoothed;
        levels = levels_of(&x)?;
        top = argmax(&levels);
    }
    for (k, xk) in x.iter().enumerate() {
        if !grid.is_frozen(k) {
            grid.nodes[k] = coords.state(xk);
        }
    }

    let ring_sup = grid.outer_ring().map(|k| levels[k]).fold(f64::NEG_INFINITY, f64::max);
    let sup = ring_sup.max(boundary_sup(inst, radius, cfg.boundary_directions)?);
    let seed = x[top].clone();

    if grid.is_frozen(top) {
        let state = coords.state(&seed);
        let cp = CriticalPoint {
            kind: PointKind::Minimax,
            level: levels[top],
            residual: residual(inst, &state)?,
            status: Status::LevelNotAboveBoundary { level: levels[top], boundary_sup: sup },
            radius: Some(radius),
            iterations,
            mean_pair: mean_pair(inst, &state),
            interior: None,
            boundary_sup: Some(sup),
            displacement: None,
            history,
            state,
        };
        return Ok((cp, grid));
    }

    let lm = levenberg_marquardt(inst, &coords, seed.clone(), cfg, "refine", iterations)?;
    iterations += lm.iterations;
    history.extend(lm.history);
    let state = coords.state(&lm.x);
    let level = phi(inst, &state)?;
    let res = residual(inst, &state)?;
    let displacement = coords.distance(inst, &lm.x, &seed);
    let limit = cfg.accept_fraction * radius;
    let status = if res > cfg.grad_tol {
        Status::Plateau { residual: res }
    } else if displacement > limit {
        Status::Displaced { displacement, limit }
    } else if level <= sup {
        Status::LevelNotAboveBoundary { level, boundary_sup: sup }
    } else {
        Status::Converged
    };
    let cp = CriticalPoint {
        kind: PointKind::Minimax,
        level,
        residual: res,
        status,
        radius: Some(radius),
        iterations,
        mean_pair: mean_pair(inst, &state),
        interior: None,
        boundary_sup: Some(sup),
        displacement: Some(displacement),
        history,
        state,
    };
    Ok((cp, grid))
}
