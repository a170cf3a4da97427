//! Growth envelope `|F_u| ≤ f₁|u|^{p−1} + f₂|v|^{(pq−q)/p}`,
//! `|F_v| ≤ f₃|u|^{(pq−p)/q} + f₄|v|^{q−1}` and its sampled verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// A coefficient that is either a constant or read from a vertex attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Constant(f64),
    Attribute { attribute: String },
}

impl Coef {
    pub fn at(&self, g: &WeightedGraph, x: usize) -> Result<f64> {
        let value = match self {
            Coef::Constant(c) => *c,
            Coef::Attribute { attribute } => {
                *g.attributes(x).get(attribute).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "envelope attribute `{attribute}` missing on vertex `{}`",
                        g.ids()[x]
                    ))
                })?
            }
        };
        if value >= 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InvalidInput(format!(
                "envelope coefficient must be a finite nonnegative number, got {value} at vertex `{}`",
                g.ids()[x]
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub f: [Coef; 4],
    pub p: f64,
    pub q: f64,
}

impl GrowthEnvelope {
    pub fn new(f: [Coef; 4], p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0 && q > 1.0 && p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "envelope exponents must exceed 1, got p = {p}, q = {q}"
            )));
        }
        if let Some(c) = f.iter().find_map(|c| match c {
            Coef::Constant(v) if !(*v >= 0.0 && v.is_finite()) => Some(*v),
            _ => None,
        }) {
            return Err(Error::InvalidInput(format!(
                "envelope coefficient must be nonnegative, got {c}"
            )));
        }
        Ok(Self { f, p, q })
    }

    pub fn constant(f: [f64; 4], p: f64, q: f64) -> Result<Self> {
        Self::new(f.map(Coef::Constant), p, q)
    }

    /// Values of `f_{i+1}` on every vertex.
    pub fn column(&self, i: usize, g: &WeightedGraph) -> Result<Vec<f64>> {
        (0..g.len()).map(|x| self.f[i].at(g, x)).collect()
    }

    /// `‖f_{i+1}‖_∞` over `set`, or over all vertices.
    pub fn sup(&self, i: usize, g: &WeightedGraph, set: Option<&[usize]>) -> Result<f64> {
        let col = self.column(i, g)?;
        Ok(match set {
            Some(s) => s.iter().map(|&x| col[x]).fold(0.0, f64::max),
            None => col.into_iter().fold(0.0, f64::max),
        })
    }

    fn bounds(&self, c: [f64; 4], s: f64, t: f64) -> (f64, f64) {
        let (p, q) = (self.p, self.q);
        let (s, t) = (s.abs(), t.abs());
        (
            c[0] * s.powf(p - 1.0) + c[1] * t.powf((p * q - q) / p),
            c[2] * s.powf((p * q - p) / q) + c[3] * t.powf(q - 1.0),
        )
    }
}

/// Probe layout: log-spaced radii times equispaced angles, plus uniform
/// random points (log-uniform radius, uniform angle) in every decade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub r_min: f64,
    pub r_max: f64,
    pub radii_per_decade: usize,
    pub angles: usize,
    pub random_per_decade: usize,
    pub seed: u64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e6,
            radii_per_decade: 8,
            angles: 64,
            random_per_decade: 10_000,
            seed: 0,
        }
    }
}

impl ProbePlan {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let lo = self.r_min.log10();
        let hi = self.r_max.log10();
        let decades = (hi - lo).ceil().max(1.0) as usize;
        let n_r = decades * self.radii_per_decade.max(1) + 1;
        let mut pts = vec![(0.0, 0.0)];
        for i in 0..n_r {
            let r = 10f64.powf(lo + (hi - lo) * i as f64 / (n_r - 1) as f64);
            for j in 0..self.angles {
                let th = std::f64::consts::TAU * j as f64 / self.angles as f64;
                pts.push((r * th.cos(), r * th.sin()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for d in 0..decades {
            let a = lo + d as f64;
            let b = (a + 1.0).min(hi);
            for _ in 0..self.random_per_decade {
                let r = 10f64.powf(rng.gen_range(a..=b));
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                pts.push((r * th.cos(), r * th.sin()));
            }
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeWitness {
    pub vertex: String,
    pub s: f64,
    pub t: f64,
    /// `"F_u"` or `"F_v"`.
    pub component: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub pass: bool,
    pub worst_ratio: f64,
    pub witness: Option<EnvelopeWitness>,
    pub probes: usize,
    pub plan: ProbePlan,
}

const REL_TOL: f64 = 1e-12;

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Samples both envelope inequalities at every probe and every vertex class
/// (vertices with identical coefficients and attributes are checked once).
pub fn check_envelope(
    g: &WeightedGraph,
    nl: &Nonlinearity,
    env: &GrowthEnvelope,
    plan: &ProbePlan,
) -> Result<EnvelopeReport> {
    let used = nl.attributes();
    let mut classes: Vec<(usize, [f64; 4])> = Vec::new();
    for x in 0..g.len() {
        let c = [
            env.f[0].at(g, x)?,
            env.f[1].at(g, x)?,
            env.f[2].at(g, x)?,
            env.f[3].at(g, x)?,
        ];
        let same = |&(y, cy): &(usize, [f64; 4])| {
            cy == c
                && used
                    .iter()
                    .all(|a| g.attributes(x).get(a) == g.attributes(y).get(a))
        };
        if !classes.iter().any(same) {
            classes.push((x, c));
        }
    }
    let pts = plan.points();
    let per_class = classes
        .iter()
        .map(|&(x, c)| {
            pts.par_iter()
                .map(|&(s, t)| -> Result<(f64, EnvelopeWitness, bool)> {
                    let d = nl.eval(g, x, s, t)?;
                    let (bu, bv) = env.bounds(c, s, t);
                    let ok = |lhs: f64, rhs: f64| lhs <= rhs + REL_TOL * rhs.max(lhs);
                    let (ru, rv) = (ratio(d.du.abs(), bu), ratio(d.dv.abs(), bv));
                    let (component, lhs, rhs, r) = if rv > ru {
                        ("F_v", d.dv.abs(), bv, rv)
                    } else {
                        ("F_u", d.du.abs(), bu, ru)
                    };
                    let witness = EnvelopeWitness {
                        vertex: g.ids()[x].clone(),
                        s,
                        t,
                        component: component.to_string(),
                        lhs,
                        rhs,
                    };
                    Ok((r, witness, ok(d.du.abs(), bu) && ok(d.dv.abs(), bv)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pass = true;
    let mut worst: Option<(f64, EnvelopeWitness)> = None;
    for (r, w, ok) in per_class.into_iter().flatten() {
        pass &= ok;
        if worst.as_ref().is_none_or(|b| r > b.0) {
            worst = Some((r, w));
        }
    }
    let (worst_ratio, witness) = match worst {
        Some((r, w)) => (r, Some(w)),
        None => (0.0, None),
    };
    Ok(EnvelopeReport {
        pass,
        worst_ratio,
        witness,
        probes: pts.len() * classes.len(),
        plan: plan.clone(),
    })
}
