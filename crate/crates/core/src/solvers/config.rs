use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Residual threshold for accepting a critical point.
    pub grad_tol: f64,
    /// Iteration budget of the descent and relaxation loops.
    pub max_iter: usize,
    /// Iteration budget of the Levenberg–Marquardt refinement.
    pub refine_max_iter: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    /// Disk grid rings, excluding the center node.
    pub rings: usize,
    pub spokes: usize,
    /// Weight of the neighbor average in the smoothing pass.
    pub smoothing: f64,
    /// Relative interiority margin: interior means `|mean| < r(1 − margin)`.
    pub interior_margin: f64,
    /// Largest accepted refinement displacement, as a fraction of the disk radius.
    pub accept_fraction: f64,
    /// Number of multi-start seeds kept for the slab descent.
    pub slab_starts: usize,
    /// Directions in the independent boundary-sup check.
    pub boundary_directions: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 2000,
            refine_max_iter: 200,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            rings: 12,
            spokes: 24,
            smoothing: 0.1,
            interior_margin: 1e-6,
            accept_fraction: 0.25,
            slab_starts: 3,
            boundary_directions: 4096,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("armijo_c", self.armijo_c),
            ("backtrack", self.backtrack),
            ("initial_step", self.initial_step),
            ("interior_margin", self.interior_margin),
            ("accept_fraction", self.accept_fraction),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.backtrack >= 1.0 || self.armijo_c >= 1.0 {
            return Err(Error::InvalidInput("armijo_c and backtrack must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(Error::InvalidInput(format!(
                "smoothing must lie in [0, 1], got {}",
                self.smoothing
            )));
        }
        if self.rings < 4 || self.spokes < 4 {
            return Err(Error::InvalidInput(format!(
                "disk grid needs at least 4 rings and 4 spokes, got {}×{}",
                self.rings, self.spokes
            )));
        }
        if self.max_iter == 0 || self.slab_starts == 0 || self.boundary_directions < 4 {
            return Err(Error::InvalidInput(
                "max_iter, slab_starts must be positive and boundary_directions at least 4".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            SolverConfig { grad_tol: 0.0, ..Default::default() },
            SolverConfig { rings: 3, ..Default::default() },
            SolverConfig { spokes: 2, ..Default::default() },
            SolverConfig { backtrack: 1.5, ..Default::default() },
            SolverConfig { smoothing: -0.1, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }
}
