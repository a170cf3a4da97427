//! Weighted graphs, vertex functions, domains and discrete integration.
//!
//! Vertex order is the canonical iteration and summation order: every
//! reduction in this crate walks vertices in index order so results are
//! bit-reproducible.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real value per vertex, aligned with a graph's vertex order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    /// Indicator function δ_x of vertex `x`.
    pub fn indicator(n: usize, x: usize) -> Self {
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&x| f(x)).collect())
    }

    /// `a·self + b·other`, elementwise.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for VertexFunction {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Input description of one vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexSpec {
    pub id: String,
    pub mu: f64,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub attributes: BTreeMap<String, f64>,
}

impl VertexSpec {
    pub fn new(id: impl Into<String>, mu: f64) -> Self {
        Self {
            id: id.into(),
            mu,
            h1: None,
            h2: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_h(mut self, h1: f64, h2: f64) -> Self {
        self.h1 = Some(h1);
        self.h2 = Some(h2);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

/// Which potential coefficient, h₁ (for u) or h₂ (for v).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    H1,
    H2,
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::H1 => write!(f, "h1"),
            Coefficient::H2 => write!(f, "h2"),
        }
    }
}

/// Undirected graph with vertex measure μ, optional potentials h₁, h₂ and
/// symmetric edge weights ω.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    mu: Vec<f64>,
    mu_floor: f64,
    h1: Vec<Option<f64>>,
    h2: Vec<Option<f64>>,
    attributes: Vec<BTreeMap<String, f64>>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from vertex specs and id-addressed edges.
    ///
    /// Structural problems that leave the graph addressable (nonpositive
    /// weights, duplicate edges, low measures) are kept and reported by
    /// [`validate`]; only unresolvable edge endpoints fail here.
    pub fn new(
        vertices: Vec<VertexSpec>,
        edges: &[(String, String, f64)],
        mu_floor: Option<f64>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            index.entry(v.id.clone()).or_insert(i);
        }
        let resolved = edges
            .iter()
            .map(|(a, b, w)| {
                let ia = *index.get(a).ok_or_else(|| Error::UnknownVertex(a.clone()))?;
                let ib = *index.get(b).ok_or_else(|| Error::UnknownVertex(b.clone()))?;
                Ok(Edge { a: ia, b: ib, w: *w })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = vertices.len();
        let mut ids = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        let mut h1 = Vec::with_capacity(n);
        let mut h2 = Vec::with_capacity(n);
        let mut attributes = Vec::with_capacity(n);
        for v in vertices {
            ids.push(v.id);
            mu.push(v.mu);
            h1.push(v.h1);
            h2.push(v.h2);
            attributes.push(v.attributes);
        }
        let mu_floor = mu_floor.unwrap_or_else(|| mu.iter().cloned().fold(f64::INFINITY, f64::min));
        let mut adj = vec![Vec::new(); n];
        for e in &resolved {
            adj[e.a].push((e.b, e.w));
            if e.a != e.b {
                adj[e.b].push((e.a, e.w));
            }
        }
        Ok(Self {
            ids,
            index,
            mu,
            mu_floor,
            h1,
            h2,
            attributes,
            edges: resolved,
            adj,
        })
    }

    /// Index-addressed constructor; vertex ids become `"0"`, `"1"`, ….
    pub fn from_parts(mu: Vec<f64>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let vertices = mu
            .iter()
            .enumerate()
            .map(|(i, &m)| VertexSpec::new(i.to_string(), m))
            .collect();
        let edges: Vec<_> = edges
            .iter()
            .map(|&(a, b, w)| (a.to_string(), b.to_string(), w))
            .collect();
        Self::new(vertices, &edges, None)
    }

    /// Sets h₁, h₂ at every vertex.
    pub fn with_potentials(mut self, h1: &[f64], h2: &[f64]) -> Result<Self> {
        check_len(self.len(), h1.len())?;
        check_len(self.len(), h2.len())?;
        self.h1 = h1.iter().map(|&x| Some(x)).collect();
        self.h2 = h2.iter().map(|&x| Some(x)).collect();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mu_floor(&self) -> f64 {
        self.mu_floor
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `x` with edge weights.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adj[x]
    }

    /// deg(x) = Σ_{y∼x} ω_xy.
    pub fn degree(&self, x: usize) -> f64 {
        self.adj[x].iter().map(|&(_, w)| w).sum()
    }

    /// |V| = Σ μ(x), summed in vertex order.
    pub fn volume(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn coefficient_raw(&self, which: Coefficient) -> &[Option<f64>] {
        match which {
            Coefficient::H1 => &self.h1,
            Coefficient::H2 => &self.h2,
        }
    }

    /// Dense h₁ or h₂ values; fails if any vertex lacks the coefficient.
    pub fn coefficient(&self, which: Coefficient) -> Result<Vec<f64>> {
        self.coefficient_raw(which)
            .iter()
            .enumerate()
            .map(|(i, h)| {
                h.ok_or_else(|| {
                    Error::InvalidInput(format!("vertex `{}` has no {which}", self.ids[i]))
                })
            })
            .collect()
    }

    pub fn attributes(&self, x: usize) -> &BTreeMap<String, f64> {
        &self.attributes[x]
    }

    /// Per-vertex values of a named attribute, if every vertex carries it.
    pub fn attribute_column(&self, name: &str) -> Option<Vec<f64>> {
        self.attributes.iter().map(|a| a.get(name).copied()).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == self.len()
    }

    pub(crate) fn check_aligned(&self, f: &VertexFunction) -> Result<()> {
        check_len(self.len(), f.len())
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Alignment { expected, got })
    }
}

/// A bounded domain Ω with its one-hop exterior boundary ∂Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    omega: Vec<usize>,
    boundary: Vec<usize>,
    inner: Vec<usize>,
    in_omega: Vec<bool>,
    in_closure: Vec<bool>,
}

impl Domain {
    /// Ω, sorted by vertex index.
    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    /// ∂Ω = { y ∉ Ω : y ∼ x for some x ∈ Ω }.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Ω \ ∂Ω. Since ∂Ω lies outside Ω this is Ω itself.
    pub fn interior(&self) -> &[usize] {
        &self.omega
    }

    /// Vertices of Ω whose neighbours all lie in Ω (the stricter reading
    /// of "interior").
    pub fn inner_vertices(&self) -> &[usize] {
        &self.inner
    }

    /// Ω ∪ ∂Ω in vertex order.
    pub fn closure(&self) -> Vec<usize> {
        (0..self.in_closure.len()).filter(|&x| self.in_closure[x]).collect()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.in_omega[x]
    }

    pub fn closure_contains(&self, x: usize) -> bool {
        self.in_closure[x]
    }
}

/// Computes ∂Ω and the interior sets for `omega` given by vertex ids.
pub fn compute_boundary(g: &WeightedGraph, omega: &[&str]) -> Result<Domain> {
    let idx = omega
        .iter()
        .map(|id| g.vertex_index(id).ok_or_else(|| Error::UnknownVertex(id.to_string())))
        .collect::<Result<Vec<_>>>()?;
    compute_boundary_indices(g, &idx)
}

pub fn compute_boundary_indices(g: &WeightedGraph, omega: &[usize]) -> Result<Domain> {
    let n = g.len();
    let mut in_omega = vec![false; n];
    for &x in omega {
        if x >= n {
            return Err(Error::UnknownVertex(x.to_string()));
        }
        in_omega[x] = true;
    }
    let mut in_boundary = vec![false; n];
    for x in 0..n {
        if in_omega[x] {
            for &(y, _) in g.neighbors(x) {
                if !in_omega[y] {
                    in_boundary[y] = true;
                }
            }
        }
    }
    let omega: Vec<usize> = (0..n).filter(|&x| in_omega[x]).collect();
    let boundary: Vec<usize> = (0..n).filter(|&x| in_boundary[x]).collect();
    let inner = omega
        .iter()
        .copied()
        .filter(|&x| g.neighbors(x).iter().all(|&(y, _)| in_omega[y]))
        .collect();
    let in_closure = (0..n).map(|x| in_omega[x] || in_boundary[x]).collect();
    Ok(Domain {
        omega,
        boundary,
        inner,
        in_omega,
        in_closure,
    })
}

/// ∫ f dμ = Σ μ(x) f(x) over V, or over Ω when a domain is given.
pub fn integrate(g: &WeightedGraph, f: &VertexFunction, over: Option<&Domain>) -> Result<f64> {
    g.check_aligned(f)?;
    Ok(match over {
        None => integrate_all(g.mu(), f.values()),
        Some(d) => integrate_on(g.mu(), f.values(), d.omega()),
    })
}

/// ∫_{Ω∪∂Ω} f dμ.
pub fn integrate_closure(g: &WeightedGraph, f: &VertexFunction, dom: &Domain) -> Result<f64> {
    g.check_aligned(f)?;
    Ok(integrate_on(g.mu(), f.values(), &dom.closure()))
}

pub(crate) fn integrate_all(mu: &[f64], f: &[f64]) -> f64 {
    mu.iter().zip(f).map(|(m, x)| m * x).sum()
}

pub(crate) fn integrate_on(mu: &[f64], f: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&x| mu[x] * f[x]).sum()
}

/// A broken graph invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonpositiveWeight { a: String, b: String, w: f64 },
    MeasureBelowFloor { vertex: String, mu: f64, floor: f64 },
    NonpositiveFloor(f64),
    SelfLoop(String),
    DuplicateEdge { a: String, b: String },
    DuplicateVertex(String),
    NonpositiveCoefficient { vertex: String, which: Coefficient, value: f64 },
    MissingCoefficient { vertex: String, which: Coefficient },
    Disconnected,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonpositiveWeight { a, b, w } => {
                write!(f, "nonpositive weight {w} on edge {a}-{b}")
            }
            Violation::MeasureBelowFloor { vertex, mu, floor } => {
                write!(f, "measure below floor at `{vertex}`: mu = {mu} < {floor}")
            }
            Violation::NonpositiveFloor(x) => write!(f, "measure floor {x} is not positive"),
            Violation::SelfLoop(x) => write!(f, "self-loop at `{x}`"),
            Violation::DuplicateEdge { a, b } => write!(f, "duplicate edge {a}-{b}"),
            Violation::DuplicateVertex(x) => write!(f, "duplicate vertex id `{x}`"),
            Violation::NonpositiveCoefficient { vertex, which, value } => {
                write!(f, "nonpositive {which} = {value} at `{vertex}`")
            }
            Violation::MissingCoefficient { vertex, which } => {
                write!(f, "missing {which} at `{vertex}`")
            }
            Violation::Disconnected => write!(f, "graph is not connected"),
        }
    }
}

/// Checks the structural graph invariants. An empty list means valid.
///
/// Potentials and connectivity are mode-dependent and checked by
/// [`validate_finite`].
pub fn validate(g: &WeightedGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen_ids = HashMap::new();
    for id in g.ids() {
        if seen_ids.insert(id.as_str(), ()).is_some() {
            out.push(Violation::DuplicateVertex(id.clone()));
        }
    }
    if !(g.mu_floor() > 0.0) {
        out.push(Violation::NonpositiveFloor(g.mu_floor()));
    }
    for (x, &m) in g.mu().iter().enumerate() {
        if !(m > 0.0) || m < g.mu_floor() || !m.is_finite() {
            out.push(Violation::MeasureBelowFloor {
                vertex: g.ids()[x].clone(),
                mu: m,
                floor: g.mu_floor(),
            });
        }
    }
    let mut seen_edges = HashMap::new();
    for e in g.edges() {
        let (a, b) = (g.ids()[e.a].clone(), g.ids()[e.b].clone());
        if !(e.w > 0.0) || !e.w.is_finite() {
            out.push(Violation::NonpositiveWeight {
                a: a.clone(),
                b: b.clone(),
                w: e.w,
            });
        }
        if e.a == e.b {
            out.push(Violation::SelfLoop(a));
            continue;
        }
        let key = (e.a.min(e.b), e.a.max(e.b));
        if seen_edges.insert(key, ()).is_some() {
            out.push(Violation::DuplicateEdge { a, b });
        }
    }
    out
}

/// [`validate`] plus the finite-graph requirements: connectivity and
/// positive h₁, h₂ at every vertex.
pub fn validate_finite(g: &WeightedGraph) -> Vec<Violation> {
    let mut out = validate(g);
    for which in [Coefficient::H1, Coefficient::H2] {
        for (x, h) in g.coefficient_raw(which).iter().enumerate() {
            let vertex = g.ids()[x].clone();
            match h {
                None => out.push(Violation::MissingCoefficient { vertex, which }),
                Some(v) if !(*v > 0.0) => out.push(Violation::NonpositiveCoefficient {
                    vertex,
                    which,
                    value: *v,
                }),
                _ => {}
            }
        }
    }
    if !g.is_connected() {
        out.push(Violation::Disconnected);
    }
    out
}
