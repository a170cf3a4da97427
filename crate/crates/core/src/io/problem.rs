//! JSON problem description.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::calculus::PowerRule;
use crate::energy::{Mode, ProblemInstance};
use crate::error::{Error, Result};
use crate::graph::{compute_boundary, VertexSpec, WeightedGraph};
use crate::nonlinearity::{Coef, GrowthEnvelope, Nonlinearity};
use crate::solvers::SolverConfig;

/// A real number written either as a JSON number or as a string holding a
/// decimal or a rational literal such as `"1/4000"`. The source text is kept
/// so that serialization reproduces it.
#[derive(Clone, Debug, PartialEq)]
pub struct Scalar {
    pub value: f64,
    pub text: Option<String>,
}

impl Scalar {
    pub fn new(value: f64) -> Self {
        Self { value, text: None }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value = parse_rational(text)
            .ok_or_else(|| Error::ProblemFile(format!("`{text}` is not a number or rational literal")))?;
        Ok(Self { value, text: Some(text.to_string()) })
    }
}

impl From<f64> for Scalar {
    fn from(value: f64) -> Self {
        Self::new(value)
    }
}

/// `a/b` is evaluated as one correctly rounded division.
fn parse_rational(text: &str) -> Option<f64> {
    let t = text.trim();
    match t.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().ok()?;
            let b: f64 = b.trim().parse().ok()?;
            (b != 0.0).then(|| a / b)
        }
        None => t.parse().ok(),
    }
    .filter(|v: &f64| v.is_finite())
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.text {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ScalarVisitor;

        impl Visitor<'_> for ScalarVisitor {
            type Value = Scalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a string such as \"1/4000\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::new(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::new(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Scalar, E> {
                Ok(Scalar::new(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Scalar, E> {
                Scalar::parse(v).map_err(|_| E::custom(format!("`{v}` is not a number or rational literal")))
            }
        }

        d.deserialize_any(ScalarVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexEntry {
    pub id: String,
    pub mu: Scalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<Scalar>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub a: String,
    pub b: String,
    pub w: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
    /// Lower bound on μ; defaults to the smallest μ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_floor: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub omega: Vec<String>,
}

fn default_mode() -> Mode {
    Mode::Finite
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub m1: usize,
    pub m2: usize,
    pub p: Scalar,
    pub q: Scalar,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// ε of the regularized power rule; strict when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    pub f1: Coef,
    pub f2: Coef,
    pub f3: Coef,
    pub f4: Coef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub graph: GraphSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSection>,
    pub problem: ProblemSection,
    pub nonlinearity: NonlinearitySection,
    /// Claimed report values as decimal strings, keyed by report name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub claims: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

impl std::str::FromStr for ProblemFile {
    type Err = Error;

    fn from_str(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| {
            Error::ProblemFile(format!("line {}, column {}: {e}", e.line(), e.column()))
        })
    }
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        src.parse()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn claims(&self) -> Vec<(String, String)> {
        self.claims.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    pub fn graph(&self) -> Result<WeightedGraph> {
        let vertices = self
            .graph
            .vertices
            .iter()
            .map(|v| {
                let mut spec = VertexSpec::new(v.id.clone(), v.mu.value);
                spec.h1 = v.h1.as_ref().map(|s| s.value);
                spec.h2 = v.h2.as_ref().map(|s| s.value);
                spec.attributes = v.attributes.iter().map(|(k, s)| (k.clone(), s.value)).collect();
                spec
            })
            .collect();
        let edges: Vec<(String, String, f64)> = self
            .graph
            .edges
            .iter()
            .map(|e| (e.a.clone(), e.b.clone(), e.w.value))
            .collect();
        WeightedGraph::new(vertices, &edges, self.graph.mu_floor.as_ref().map(|s| s.value))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        match (&self.nonlinearity.builtin, &self.nonlinearity.expression) {
            (Some(name), None) => Nonlinearity::builtin(name),
            (None, Some(src)) => Nonlinearity::parse(src),
            _ => Err(Error::ProblemFile(
                "nonlinearity needs exactly one of `builtin` or `expression`".into(),
            )),
        }
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        let g = self.graph()?;
        let dom = match &self.domain {
            Some(d) => {
                let ids: Vec<&str> = d.omega.iter().map(String::as_str).collect();
                Some(compute_boundary(&g, &ids)?)
            }
            None => None,
        };
        let (p, q) = (self.problem.p.value, self.problem.q.value);
        let env = match &self.nonlinearity.envelope {
            Some(e) => Some(GrowthEnvelope::new(
                [e.f1.clone(), e.f2.clone(), e.f3.clone(), e.f4.clone()],
                p,
                q,
            )?),
            None => None,
        };
        let inst = ProblemInstance::new(
            g,
            dom,
            self.problem.m1,
            self.problem.m2,
            p,
            q,
            self.nonlinearity()?,
            env,
            self.problem.mode,
        )?;
        Ok(match &self.problem.regularization {
            Some(eps) if eps.value > 0.0 => inst.with_rule(PowerRule::Regularized(eps.value)),
            Some(eps) => {
                return Err(Error::ProblemFile(format!(
                    "regularization must be positive, got {}",
                    eps.value
                )))
            }
            None => inst,
        })
    }
}
