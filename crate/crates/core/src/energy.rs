//! The coupled energy functional on a finite graph or a bounded domain,
//! its exact coordinate gradient and the strong-form residual.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::calculus::{self, check_exponent, check_order, grad_norm_raw, Pairing, PowerRule};
use crate::error::{Error, Result};
use crate::graph::{
    integrate_all, integrate_on, validate, validate_finite, Coefficient, Domain, VertexFunction,
    WeightedGraph,
};
use crate::nonlinearity::{GrowthEnvelope, Nonlinearity};
use crate::spaces::{embedding_constants, EmbeddingConstants, KVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Finite,
    Dirichlet,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Finite => "finite",
            Mode::Dirichlet => "dirichlet",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub u: VertexFunction,
    pub v: VertexFunction,
}

impl StatePair {
    pub fn new(u: VertexFunction, v: VertexFunction) -> Self {
        Self { u, v }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(VertexFunction::zeros(n), VertexFunction::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// `u` followed by `v`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.u.values().to_vec();
        out.extend_from_slice(self.v.values());
        out
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        let n = flat.len() / 2;
        Self::new(flat[..n].to_vec().into(), flat[n..].to_vec().into())
    }
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    graph: WeightedGraph,
    dom: Option<Domain>,
    m1: usize,
    m2: usize,
    p: f64,
    q: f64,
    nl: Nonlinearity,
    env: Option<GrowthEnvelope>,
    mode: Mode,
    rule: PowerRule,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

impl ProblemInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        graph: WeightedGraph,
        dom: Option<Domain>,
        m1: usize,
        m2: usize,
        p: f64,
        q: f64,
        nl: Nonlinearity,
        env: Option<GrowthEnvelope>,
        mode: Mode,
    ) -> Result<Self> {
        check_order(m1)?;
        check_order(m2)?;
        check_exponent(p)?;
        check_exponent(q)?;
        let (h1, h2) = match (mode, &dom) {
            (Mode::Finite, None) => {
                let v = validate_finite(&graph);
                if !v.is_empty() {
                    return Err(Error::Validation(v));
                }
                (
                    graph.coefficient(Coefficient::H1)?,
                    graph.coefficient(Coefficient::H2)?,
                )
            }
            (Mode::Dirichlet, Some(d)) => {
                let v = validate(&graph);
                if !v.is_empty() {
                    return Err(Error::Validation(v));
                }
                if d.omega().is_empty() {
                    return Err(Error::InvalidInput("domain Ω is empty".into()));
                }
                (vec![0.0; graph.len()], vec![0.0; graph.len()])
            }
            (Mode::Finite, Some(_)) => {
                return Err(Error::ModeMismatch("finite-graph mode takes no domain".into()))
            }
            (Mode::Dirichlet, None) => {
                return Err(Error::ModeMismatch("Dirichlet mode requires a domain".into()))
            }
        };
        nl.check_bindings(&graph)?;
        if let Some(e) = &env {
            for i in 0..4 {
                e.column(i, &graph)?;
            }
            if e.p != p || e.q != q {
                return Err(Error::InvalidInput(format!(
                    "envelope exponents ({}, {}) differ from the problem's ({p}, {q})",
                    e.p, e.q
                )));
            }
        }
        Ok(Self {
            graph,
            dom,
            m1,
            m2,
            p,
            q,
            nl,
            env,
            mode,
            rule: PowerRule::Strict,
            h1,
            h2,
        })
    }

    pub fn with_rule(mut self, rule: PowerRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.dom.as_ref()
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.m1, self.m2)
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.p, self.q)
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn envelope(&self) -> Option<&GrowthEnvelope> {
        self.env.as_ref()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rule(&self) -> PowerRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Vertices whose values are unknowns: all of V, or Ω in Dirichlet mode.
    pub fn free_vertices(&self) -> Vec<usize> {
        match &self.dom {
            Some(d) => d.omega().to_vec(),
            None => (0..self.graph.len()).collect(),
        }
    }

    pub fn embedding_constants(&self, variant: KVariant) -> Result<EmbeddingConstants> {
        embedding_constants(
            &self.graph,
            self.dom.as_ref(),
            self.m1,
            self.m2,
            self.p,
            self.q,
            variant,
        )
    }

    /// The state `u ≡ a`, `v ≡ b` on V (finite mode) or on Ω, zero elsewhere.
    pub fn constant_state(&self, a: f64, b: f64) -> StatePair {
        let n = self.graph.len();
        match &self.dom {
            None => StatePair::new(VertexFunction::constant(n, a), VertexFunction::constant(n, b)),
            Some(d) => {
                let mut s = StatePair::zeros(n);
                for &x in d.omega() {
                    s.u.values_mut()[x] = a;
                    s.v.values_mut()[x] = b;
                }
                s
            }
        }
    }

    /// Volume of the set the mean pair averages over.
    pub fn mean_volume(&self) -> f64 {
        match &self.dom {
            Some(d) => d.omega().iter().map(|&x| self.graph.mu()[x]).sum(),
            None => self.graph.volume(),
        }
    }

    pub fn check_state(&self, s: &StatePair) -> Result<()> {
        self.graph.check_aligned(&s.u)?;
        self.graph.check_aligned(&s.v)?;
        if !s.is_finite() {
            return Err(Error::InvalidInput("state contains non-finite values".into()));
        }
        if let Some(d) = &self.dom {
            if let Some(x) =
                (0..s.len()).find(|&x| !d.contains(x) && (s.u[x] != 0.0 || s.v[x] != 0.0))
            {
                return Err(Error::Support(x));
            }
        }
        Ok(())
    }

    fn gradient_integral(&self, psi: &[f64], m: usize, l: f64) -> f64 {
        let grad = grad_norm_raw(&self.graph, psi, m);
        let dens: Vec<f64> = grad.iter().map(|x| x.powf(l)).collect();
        match &self.dom {
            Some(d) => integrate_on(self.graph.mu(), &dens, &d.closure()),
            None => integrate_all(self.graph.mu(), &dens),
        }
    }

    fn f_integral(&self, s: &StatePair) -> Result<f64> {
        let mu = self.graph.mu();
        let mut total = 0.0;
        for x in self.free_vertices() {
            total += mu[x] * self.nl.eval(&self.graph, x, s.u[x], s.v[x])?.re;
        }
        Ok(total)
    }
}

/// `|x|^{l−2}x`, taken as 0 at x = 0.
fn signed_pow(x: f64, l: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(l - 1.0) * x.signum()
    }
}

/// The energy of a state pair.
pub fn phi(inst: &ProblemInstance, s: &StatePair) -> Result<f64> {
    inst.check_state(s)?;
    let (p, q) = (inst.p, inst.q);
    let mut value = inst.gradient_integral(s.u.values(), inst.m1, p) / p
        + inst.gradient_integral(s.v.values(), inst.m2, q) / q;
    if inst.mode == Mode::Finite {
        let mu = inst.graph.mu();
        let hu: Vec<f64> = (0..inst.len()).map(|x| inst.h1[x] * s.u[x].abs().powf(p)).collect();
        let hv: Vec<f64> = (0..inst.len()).map(|x| inst.h2[x] * s.v[x].abs().powf(q)).collect();
        value += integrate_all(mu, &hu) / p + integrate_all(mu, &hv) / q;
    }
    Ok(value - inst.f_integral(s)?)
}

/// Coordinate gradient `g.u(x) = ⟨φ'(u,v), (δ_x, 0)⟩`, `g.v(x) = ⟨φ'(u,v), (0, δ_x)⟩`,
/// assembled from the weak pairing. Coordinates outside Ω are zero in
/// Dirichlet mode.
pub fn grad_phi(inst: &ProblemInstance, s: &StatePair) -> Result<StatePair> {
    inst.check_state(s)?;
    let g = &inst.graph;
    let n = g.len();
    let over = inst.dom.as_ref();
    let pu = Pairing::new(g, inst.m1, inst.p, s.u.values(), over, inst.rule)?;
    let pv = Pairing::new(g, inst.m2, inst.q, s.v.values(), over, inst.rule)?;
    let mut out = StatePair::zeros(n);
    let mut delta = vec![0.0; n];
    for x in inst.free_vertices() {
        delta[x] = 1.0;
        let mut gu = pu.pair(&delta);
        let mut gv = pv.pair(&delta);
        delta[x] = 0.0;
        let mu = g.mu()[x];
        let d = inst.nl.eval(g, x, s.u[x], s.v[x])?;
        gu += mu * (inst.h1[x] * signed_pow(s.u[x], inst.p) - d.du);
        gv += mu * (inst.h2[x] * signed_pow(s.v[x], inst.q) - d.dv);
        out.u.values_mut()[x] = gu;
        out.v.values_mut()[x] = gv;
    }
    Ok(out)
}

/// The same gradient for `m₁ = m₂ = 1` through the pointwise p-Laplacian:
/// `g.u(x) = μ(x)(−Δ_p u + h₁|u|^{p−2}u − F_u)(x)`.
pub fn grad_phi_m1(inst: &ProblemInstance, s: &StatePair) -> Result<StatePair> {
    inst.check_state(s)?;
    if inst.m1 != 1 || inst.m2 != 1 {
        return Err(Error::Unsupported(
            "closed-form gradient requires m1 = m2 = 1".into(),
        ));
    }
    let g = &inst.graph;
    let lu = calculus::p_laplacian(g, &s.u, inst.p, inst.rule)?;
    let lv = calculus::p_laplacian(g, &s.v, inst.q, inst.rule)?;
    let mut out = StatePair::zeros(g.len());
    for x in inst.free_vertices() {
        let mu = g.mu()[x];
        let d = inst.nl.eval(g, x, s.u[x], s.v[x])?;
        out.u.values_mut()[x] = mu * (-lu[x] + inst.h1[x] * signed_pow(s.u[x], inst.p) - d.du);
        out.v.values_mut()[x] = mu * (-lv[x] + inst.h2[x] * signed_pow(s.v[x], inst.q) - d.dv);
    }
    Ok(out)
}

/// Euclidean norm of the free gradient coordinates, each divided by μ(x).
pub fn residual(inst: &ProblemInstance, s: &StatePair) -> Result<f64> {
    let g = grad_phi(inst, s)?;
    Ok(residual_of_gradient(inst, &g))
}

pub(crate) fn residual_of_gradient(inst: &ProblemInstance, g: &StatePair) -> f64 {
    let mu = inst.graph.mu();
    inst.free_vertices()
        .iter()
        .map(|&x| (g.u[x] / mu[x]).powi(2) + (g.v[x] / mu[x]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Lower-bound coefficients `(a_u, a_v)` with
/// `φ(u,v) ≥ a_u‖u‖^p + a_v‖v‖^q` in the `W^{m₁,p} × W^{m₂,q}` norms:
/// `a_u = (1/p)(1 − (‖f₁‖+‖f₂‖)K_p^p)`, `a_v = (1/q)(1 − ((pq−q)/p ‖f₂‖ + ‖f₄‖)K_q^q)`.
pub fn coercivity_coefficients(inst: &ProblemInstance, variant: KVariant) -> Result<(f64, f64)> {
    let env = inst
        .env
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("coercivity needs a growth envelope".into()))?;
    let EmbeddingConstants::Finite(k) = inst.embedding_constants(variant)? else {
        return Err(Error::ModeMismatch("coercivity bound is a finite-graph statement".into()));
    };
    let g = &inst.graph;
    let f = [0, 1, 2, 3]
        .map(|i| env.sup(i, g, None))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (p, q) = (inst.p, inst.q);
    let a_u = (1.0 - (f[0] + f[1]) / k.inv_k_p) / p;
    let a_v = (1.0 - ((p * q - q) / p * f[1] + f[3]) / k.inv_k_q) / q;
    Ok((a_u, a_v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::compute_boundary;
    use crate::nonlinearity::parse_expression;

    fn two_vertex(f: &str) -> ProblemInstance {
        let g = WeightedGraph::from_parts(vec![1.0, 1.0], &[(0, 1, 1.0)])
            .unwrap()
            .with_potentials(&[1.0, 1.0], &[1.0, 1.0])
            .unwrap();
        ProblemInstance::new(g, None, 1, 1, 2.0, 2.0, parse_expression(f).unwrap(), None, Mode::Finite)
            .unwrap()
    }

    fn st(u: &[f64], v: &[f64]) -> StatePair {
        StatePair::new(u.to_vec().into(), v.to_vec().into())
    }

    #[test]
    fn phi_examples() {
        let z = two_vertex("0");
        assert_eq!(phi(&z, &st(&[0.0, 0.0], &[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(phi(&z, &st(&[0.0, 1.0], &[0.0, 0.0])).unwrap(), 1.0);
        let lin = two_vertex("u+v");
        assert_eq!(phi(&lin, &st(&[1.0, 1.0], &[1.0, 1.0])).unwrap(), -2.0);
    }

    #[test]
    fn gradient_and_residual_examples() {
        let lin = two_vertex("u+v");
        let one = st(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(grad_phi(&lin, &one).unwrap(), StatePair::zeros(2));
        assert!(residual(&lin, &one).unwrap() < 1e-12);
        assert_eq!(residual(&lin, &StatePair::zeros(2)).unwrap(), 2.0);
        let z = two_vertex("0");
        assert_eq!(grad_phi(&z, &StatePair::zeros(2)).unwrap(), StatePair::zeros(2));
        assert_eq!(residual(&z, &StatePair::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_matches_pairing() {
        let inst = two_vertex("u*v^2 + sin(u)");
        let inst = ProblemInstance { p: 3.0, q: 2.5, ..inst };
        let s = st(&[0.3, -1.1], &[2.0, 0.4]);
        let a = grad_phi(&inst, &s).unwrap();
        let b = grad_phi_m1(&inst, &s).unwrap();
        for x in 0..2 {
            assert!((a.u[x] - b.u[x]).abs() < 1e-12);
            assert!((a.v[x] - b.v[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_consistency() {
        let g = WeightedGraph::from_parts(vec![1.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let d = compute_boundary(&g, &["1"]).unwrap();
        let nl = parse_expression("u").unwrap();
        assert!(matches!(
            ProblemInstance::new(g.clone(), None, 1, 1, 2.0, 2.0, nl.clone(), None, Mode::Dirichlet),
            Err(Error::ModeMismatch(_))
        ));
        assert!(matches!(
            ProblemInstance::new(g.clone(), None, 1, 1, 2.0, 2.0, nl.clone(), None, Mode::Finite),
            Err(Error::Validation(_))
        ));
        let inst =
            ProblemInstance::new(g, Some(d), 1, 1, 2.0, 2.0, nl, None, Mode::Dirichlet).unwrap();
        assert!(matches!(
            phi(&inst, &st(&[1.0, 0.0, 0.0], &[0.0; 3])),
            Err(Error::Support(0))
        ));
        // (1/2)·2 − 1 over the closure of Ω = {1}
        assert_eq!(phi(&inst, &st(&[0.0, 1.0, 0.0], &[0.0; 3])).unwrap(), 0.0);
        let gr = grad_phi(&inst, &st(&[0.0, 1.0, 0.0], &[0.0; 3])).unwrap();
        assert_eq!(gr.u.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn flat_round_trip() {
        let s = st(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(s.to_flat(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(StatePair::from_flat(&s.to_flat()), s);
    }
}
