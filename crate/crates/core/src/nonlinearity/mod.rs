//! The nonlinearity `F(x, u, v)` and its partials `F_u`, `F_v`.

mod catalog;
mod dual;
mod envelope;
mod expr;

use std::collections::{BTreeMap, BTreeSet};

pub use catalog::{BUILTIN_NAMES, EXAMPLE51_EXPR};
pub use dual::Dual;
pub use envelope::{
    check_envelope, Coef, EnvelopeReport, EnvelopeWitness, GrowthEnvelope, ProbePlan,
};
pub use expr::{BinOp, Expr, ExprError, Func};

use crate::error::{Error, Result};
use crate::graph::{Domain, WeightedGraph};

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Zero,
    Example51,
    Parsed { src: String, expr: Expr },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin<'a> {
    Builtin(&'a str),
    Expression(&'a str),
}

/// Immutable and cheap to share across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonlinearity {
    repr: Repr,
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self { repr: Repr::Zero }
    }

    pub fn example51() -> Self {
        Self {
            repr: Repr::Example51,
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "example51" => Ok(Self::example51()),
            _ => Err(Error::InvalidInput(format!(
                "unknown builtin nonlinearity `{name}` (available: {})",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self {
            repr: Repr::Parsed {
                src: src.to_string(),
                expr: Expr::parse(src)?,
            },
        })
    }

    pub fn origin(&self) -> Origin<'_> {
        match &self.repr {
            Repr::Zero => Origin::Builtin("zero"),
            Repr::Example51 => Origin::Builtin("example51"),
            Repr::Parsed { src, .. } => Origin::Expression(src),
        }
    }

    pub fn attributes(&self) -> BTreeSet<String> {
        match &self.repr {
            Repr::Parsed { expr, .. } => expr.attributes(),
            _ => BTreeSet::new(),
        }
    }

    /// Fails if some referenced attribute is missing on some vertex.
    pub fn check_bindings(&self, g: &WeightedGraph) -> Result<()> {
        for name in self.attributes() {
            if let Some(x) = (0..g.len()).find(|&x| !g.attributes(x).contains_key(&name)) {
                return Err(Error::InvalidInput(format!(
                    "nonlinearity references attribute `{name}` missing on vertex `{}`",
                    g.ids()[x]
                )));
            }
        }
        Ok(())
    }

    /// `(F, F_u, F_v)` at vertex `x` packed as a dual number.
    pub fn eval(&self, g: &WeightedGraph, x: usize, u: f64, v: f64) -> Result<Dual> {
        self.eval_with(g.attributes(x), u, v)
    }

    pub fn eval_with(&self, attrs: &BTreeMap<String, f64>, u: f64, v: f64) -> Result<Dual> {
        match &self.repr {
            Repr::Zero => Ok(Dual::constant(0.0)),
            Repr::Example51 => Ok(catalog::example51(u, v)),
            Repr::Parsed { expr, .. } => Ok(expr.eval(u, v, &|n| attrs.get(n).copied())?),
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Nonlinearity> {
    Nonlinearity::parse(src)
}

/// `∫ F(x, a, b) dμ` over V, or over Ω when a domain is given.
pub fn integral_f(
    g: &WeightedGraph,
    dom: Option<&Domain>,
    nl: &Nonlinearity,
    a: f64,
    b: f64,
) -> Result<f64> {
    let term = |x: usize| -> Result<f64> { Ok(g.mu()[x] * nl.eval(g, x, a, b)?.re) };
    match dom {
        Some(d) => d.omega().iter().map(|&x| term(x)).sum(),
        None => (0..g.len()).map(term).sum(),
    }
}
