#![allow(dead_code)]

use std::path::PathBuf;

use polylap_core::energy::ProblemInstance;
use polylap_core::graph::{compute_boundary_indices, Domain, VertexFunction, WeightedGraph};
use polylap_core::io::ProblemFile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> (ProblemFile, ProblemInstance) {
    let file = ProblemFile::load(&fixture(name)).unwrap();
    let inst = file.instance().unwrap();
    (file, inst)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct GraphPlan {
    pub n_min: usize,
    pub n_max: usize,
    pub mu: (f64, f64),
    pub w: (f64, f64),
    pub h: (f64, f64),
}

impl Default for GraphPlan {
    fn default() -> Self {
        Self { n_min: 2, n_max: 8, mu: (0.1, 2.0), w: (0.1, 3.0), h: (0.5, 2.0) }
    }
}

/// Connected graph: a random spanning tree plus a few chords, with potentials.
pub fn random_graph(rng: &mut ChaCha8Rng, plan: &GraphPlan) -> WeightedGraph {
    let n = rng.gen_range(plan.n_min..=plan.n_max);
    let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(plan.mu.0..plan.mu.1)).collect();
    let mut edges = Vec::new();
    let mut has = vec![vec![false; n]; n];
    for b in 1..n {
        let a = rng.gen_range(0..b);
        has[a][b] = true;
        edges.push((a, b, rng.gen_range(plan.w.0..plan.w.1)));
    }
    for _ in 0..n {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !has[a][b] {
            has[a][b] = true;
            edges.push((a, b, rng.gen_range(plan.w.0..plan.w.1)));
        }
    }
    let h1: Vec<f64> = (0..n).map(|_| rng.gen_range(plan.h.0..plan.h.1)).collect();
    let h2: Vec<f64> = (0..n).map(|_| rng.gen_range(plan.h.0..plan.h.1)).collect();
    WeightedGraph::from_parts(mu, &edges)
        .unwrap()
        .with_potentials(&h1, &h2)
        .unwrap()
}

/// A proper subset Ω with a nonempty inner set, grown from a random vertex.
pub fn random_domain(rng: &mut ChaCha8Rng, g: &WeightedGraph) -> Option<Domain> {
    let n = g.len();
    let start = rng.gen_range(0..n);
    let target = rng.gen_range(1..n.max(2));
    let mut omega = vec![start];
    while omega.len() < target {
        let frontier: Vec<usize> = omega
            .iter()
            .flat_map(|&x| g.neighbors(x).iter().map(|&(y, _)| y))
            .filter(|y| !omega.contains(y))
            .collect();
        if frontier.is_empty() {
            break;
        }
        omega.push(frontier[rng.gen_range(0..frontier.len())]);
    }
    let d = compute_boundary_indices(g, &omega).unwrap();
    (omega.len() < n && !d.inner_vertices().is_empty()).then_some(d)
}

pub fn random_function(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> VertexFunction {
    VertexFunction::new((0..n).map(|_| rng.gen_range(-scale..scale)).collect())
}

/// Zero outside Ω.
pub fn supported(rng: &mut ChaCha8Rng, d: &Domain, n: usize, scale: f64) -> VertexFunction {
    let mut f = VertexFunction::zeros(n);
    for &x in d.omega() {
        f.values_mut()[x] = rng.gen_range(-scale..scale);
    }
    f
}

/// Polynomial and transcendental templates for parsed nonlinearities.
pub fn random_expression(rng: &mut ChaCha8Rng) -> String {
    let a: f64 = rng.gen_range(-2.0..2.0);
    let b: f64 = rng.gen_range(-2.0..2.0);
    let c: f64 = rng.gen_range(0.1..1.0);
    match rng.gen_range(0..6) {
        0 => format!("{a:.6}*u^2*v + {b:.6}*v^3"),
        1 => format!("{a:.6}*sin(u*v) + {b:.6}*cos(u - v)"),
        2 => format!("{c:.6}*exp({a:.3}*u) + {b:.6}*u*v"),
        3 => format!("{a:.6}*(u^2 + v^2)*sin(ln(u^2 + v^2 + 1))"),
        4 => format!("{a:.6}*sqrt(u^2 + v^2 + {c:.6}) + {b:.6}*u^3"),
        _ => format!("{a:.6}*u^4 + {b:.6}*u^2*v^2 + {c:.6}*v"),
    }
}
