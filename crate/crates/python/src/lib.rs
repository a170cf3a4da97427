use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use polylap_core::energy::{grad_phi, phi, residual, ProblemInstance, StatePair};
use polylap_core::graph::VertexFunction;
use polylap_core::hypotheses::{check_hypotheses, HypothesisOptions};
use polylap_core::io::{ProblemFile, SolutionFile};
use polylap_core::solvers::{minimax_disk, minimize_slab, refine_critical, SolverConfig};
use polylap_core::spaces::KVariant;
use polylap_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Singular { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A parsed problem file bound to its validated instance.
#[pyclass(frozen)]
struct Problem {
    file: ProblemFile,
    inst: ProblemInstance,
}

impl Problem {
    fn state(&self, u: Vec<f64>, v: Vec<f64>) -> StatePair {
        StatePair::new(VertexFunction::new(u), VertexFunction::new(v))
    }

    fn config(&self, tol: Option<f64>, max_iter: Option<usize>) -> PyResult<SolverConfig> {
        let mut cfg = self.file.solver.clone().unwrap_or_default();
        if let Some(t) = tol {
            cfg.grad_tol = t;
        }
        if let Some(m) = max_iter {
            cfg.max_iter = m;
        }
        cfg.validate().map_err(to_py)?;
        Ok(cfg)
    }
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = ProblemFile::load(std::path::Path::new(path)).map_err(to_py)?;
        let inst = file.instance().map_err(to_py)?;
        Ok(Self { file, inst })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: ProblemFile = text.parse().map_err(to_py)?;
        let inst = file.instance().map_err(to_py)?;
        Ok(Self { file, inst })
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inst.graph().ids().to_vec()
    }

    #[getter]
    fn mode(&self) -> String {
        self.inst.mode().to_string()
    }

    fn constant_state(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let s = self.inst.constant_state(a, b);
        (s.u.into_vec(), s.v.into_vec())
    }

    fn phi(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        phi(&self.inst, &self.state(u, v)).map_err(to_py)
    }

    fn grad(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let g = grad_phi(&self.inst, &self.state(u, v)).map_err(to_py)?;
        Ok((g.u.into_vec(), g.v.into_vec()))
    }

    fn residual(&self, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        residual(&self.inst, &self.state(u, v)).map_err(to_py)
    }

    /// Hypothesis report as JSON.
    #[pyo3(signature = (n=2, m=2, k_variant="example51"))]
    fn hypotheses(&self, n: usize, m: usize, k_variant: &str) -> PyResult<String> {
        let variant: KVariant = k_variant.parse().map_err(to_py)?;
        let opts = HypothesisOptions { variant, n, m, ..HypothesisOptions::default() };
        let report = check_hypotheses(&self.inst, &opts, &self.file.claims()).map_err(to_py)?;
        to_json(&report)
    }

    /// Solution record as JSON; `mode` is `minimax`, `localmin` or `refine`.
    /// `refine` starts from the constant pair `(radius, 0)`.
    #[pyo3(signature = (mode, radius, tol=None, max_iter=None))]
    fn solve(&self, mode: &str, radius: f64, tol: Option<f64>, max_iter: Option<usize>) -> PyResult<String> {
        let cfg = self.config(tol, max_iter)?;
        let cp = match mode {
            "minimax" => minimax_disk(&self.inst, radius, &cfg),
            "localmin" => minimize_slab(&self.inst, radius, &cfg),
            "refine" => refine_critical(&self.inst, &self.inst.constant_state(radius, 0.0), &cfg),
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        }
        .map_err(to_py)?;
        to_json(&SolutionFile::new(&self.inst, &cp, &cfg))
    }
}

#[pymodule]
fn polylap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
