//! Sobolev-type norms, mean/fluctuation splitting and embedding constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calculus::{check_order, grad_norm_raw};
use crate::error::{Error, Result};
use crate::graph::{integrate_all, integrate_on, Coefficient, Domain, VertexFunction, WeightedGraph};

fn check_l(l: f64) -> Result<()> {
    if l > 1.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("norm exponent must be > 1, got {l}")))
    }
}

fn check_support(dom: &Domain, u: &VertexFunction) -> Result<()> {
    match (0..u.len()).find(|&x| !dom.contains(x) && u[x] != 0.0) {
        Some(x) => Err(Error::Support(x)),
        None => Ok(()),
    }
}

/// `(∫ |∇^m u|^l + h|u|^l dμ)^{1/l}` with `h = h₁` or `h₂`.
pub fn sobolev_norm(
    g: &WeightedGraph,
    u: &VertexFunction,
    m: usize,
    l: f64,
    which: Coefficient,
) -> Result<f64> {
    g.check_aligned(u)?;
    check_order(m)?;
    check_l(l)?;
    let h = g.coefficient(which)?;
    let grad = grad_norm_raw(g, u.values(), m);
    let dens: Vec<f64> = (0..g.len())
        .map(|x| grad[x].powf(l) + h[x] * u[x].abs().powf(l))
        .collect();
    Ok(integrate_all(g.mu(), &dens).powf(1.0 / l))
}

/// `(∫ |u|^r dμ)^{1/r}` over V or Ω; `r = ∞` gives the maximum of `|u|`.
pub fn lr_norm(g: &WeightedGraph, u: &VertexFunction, r: f64, over: Option<&Domain>) -> Result<f64> {
    g.check_aligned(u)?;
    if !(r >= 1.0) {
        return Err(Error::InvalidInput(format!("r must be at least 1, got {r}")));
    }
    let set: Vec<usize> = match over {
        Some(d) => d.omega().to_vec(),
        None => (0..g.len()).collect(),
    };
    if r.is_infinite() {
        return Ok(set.iter().map(|&x| u[x].abs()).fold(0.0, f64::max));
    }
    let dens: Vec<f64> = u.values().iter().map(|x| x.abs().powf(r)).collect();
    Ok(integrate_on(g.mu(), &dens, &set).powf(1.0 / r))
}

/// `(∫_{Ω∪∂Ω} |∇^m u|^l dμ)^{1/l}` for `u` vanishing outside Ω.
pub fn dirichlet_norm(
    g: &WeightedGraph,
    dom: &Domain,
    u: &VertexFunction,
    m: usize,
    l: f64,
) -> Result<f64> {
    g.check_aligned(u)?;
    check_order(m)?;
    check_l(l)?;
    check_support(dom, u)?;
    let grad = grad_norm_raw(g, u.values(), m);
    let dens: Vec<f64> = grad.iter().map(|x| x.powf(l)).collect();
    Ok(integrate_on(g.mu(), &dens, &dom.closure()).powf(1.0 / l))
}

/// `(Σ_{k=0}^{m} ∫_{Ω∪∂Ω} |∇^k u|^l dμ)^{1/l}` with `|∇⁰u| = |u|`.
pub fn dirichlet_full_norm(
    g: &WeightedGraph,
    dom: &Domain,
    u: &VertexFunction,
    m: usize,
    l: f64,
) -> Result<f64> {
    g.check_aligned(u)?;
    check_l(l)?;
    check_support(dom, u)?;
    let closure = dom.closure();
    let mut total = 0.0;
    for k in 0..=m {
        let grad = if k == 0 {
            u.values().iter().map(|x| x.abs()).collect()
        } else {
            grad_norm_raw(g, u.values(), k)
        };
        let dens: Vec<f64> = grad.iter().map(|x| x.powf(l)).collect();
        total += integrate_on(g.mu(), &dens, &closure);
    }
    Ok(total.powf(1.0 / l))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub mean: f64,
    pub fluctuation: VertexFunction,
}

impl Decomposition {
    pub fn reconstruct(&self) -> VertexFunction {
        self.fluctuation.map(|x| x + self.mean)
    }
}

/// `u = ū + ũ` with `ū = (1/|V|)∫u dμ`.
pub fn decompose(g: &WeightedGraph, u: &VertexFunction) -> Result<Decomposition> {
    g.check_aligned(u)?;
    let mean = integrate_all(g.mu(), u.values()) / g.volume();
    Ok(Decomposition {
        mean,
        fluctuation: u.map(|x| x - mean),
    })
}

/// Mean of `u` over Ω (or V) with respect to μ.
pub(crate) fn mean_on(g: &WeightedGraph, u: &[f64], dom: Option<&Domain>) -> f64 {
    match dom {
        Some(d) => {
            let vol: f64 = d.omega().iter().map(|&x| g.mu()[x]).sum();
            integrate_on(g.mu(), u, d.omega()) / vol
        }
        None => integrate_all(g.mu(), u) / g.volume(),
    }
}

/// `(ū, v̄)`, averaging over Ω when a domain is given.
pub fn project_mean_pair(
    g: &WeightedGraph,
    dom: Option<&Domain>,
    u: &VertexFunction,
    v: &VertexFunction,
) -> Result<(f64, f64)> {
    g.check_aligned(u)?;
    g.check_aligned(v)?;
    Ok((mean_on(g, u.values(), dom), mean_on(g, v.values(), dom)))
}

/// Formula used for the finite-graph constants `K_p`, `K_q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KVariant {
    /// `K_p = K_q = (Σμ)^{1/q} / (μ_min h_min)^{1/p}`.
    #[default]
    Example51,
    /// `K_q = (Σμ)^{1/q} / (μ_min h_min)^{1/p}`, `K_p = (Σμ)^{1/p} / (μ_min h_min)^{1/q}`.
    H1Display,
    /// `K_l = (Σμ)^{1/l} / (μ_min h_min)^{1/l}` with the space's own `h`.
    Lemma22,
}

impl KVariant {
    pub const ALL: [KVariant; 3] = [KVariant::Example51, KVariant::H1Display, KVariant::Lemma22];

    pub fn name(self) -> &'static str {
        match self {
            KVariant::Example51 => "example51",
            KVariant::H1Display => "h1-display",
            KVariant::Lemma22 => "lemma22",
        }
    }
}

impl fmt::Display for KVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        KVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown K variant `{s}`")))
    }
}

/// `K_l = (Σμ)^{1/θ} / (μ_min h_min)^{1/l}`, the norm-independent embedding
/// constant for `W^{m,l}(V) ↪ L^θ(V)`.
pub fn lemma22_constant(g: &WeightedGraph, l: f64, theta: f64, which: Coefficient) -> Result<f64> {
    let h_min = g.coefficient(which)?.into_iter().fold(f64::INFINITY, f64::min);
    let mu_min = g.mu().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(g.volume().powf(1.0 / theta) / (mu_min * h_min).powf(1.0 / l))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteConstants {
    pub variant: KVariant,
    pub mu_min: f64,
    pub h_min: f64,
    pub volume: f64,
    pub d_p: f64,
    pub d_q: f64,
    pub k_p: f64,
    pub k_q: f64,
    /// `1/K_p^p`.
    pub inv_k_p: f64,
    /// `1/K_q^q`.
    pub inv_k_q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletConstants {
    /// Minimum of μ over Ω ∪ ∂Ω.
    pub mu0: f64,
    /// Maximum of μ over Ω ∪ ∂Ω.
    pub mu_max: f64,
    /// Minimum weight over edges with an endpoint in Ω.
    pub w_min: f64,
    /// `Σ_{x∈Ω} μ(x)`.
    pub omega_volume: f64,
    pub c_p: f64,
    pub c_q: f64,
    /// `1/C_{1,p}^p`.
    pub inv_c_p: f64,
    /// `1/C_{1,q}^q`.
    pub inv_c_q: f64,
    pub h_p: f64,
    pub h_q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EmbeddingConstants {
    Finite(FiniteConstants),
    Dirichlet(DirichletConstants),
}

/// `1/C_{1,l}^l = μ₀ w_min^{l/2} / ((2μ_max)^{l/2} (1 + |Ω|)^l)`.
fn dirichlet_inv_c(mu0: f64, mu_max: f64, w_min: f64, vol: f64, l: f64) -> f64 {
    mu0 * w_min.powf(0.5 * l) / ((2.0 * mu_max).powf(0.5 * l) * (1.0 + vol.abs()).powf(l))
}

pub fn embedding_constants(
    g: &WeightedGraph,
    dom: Option<&Domain>,
    m1: usize,
    m2: usize,
    p: f64,
    q: f64,
    variant: KVariant,
) -> Result<EmbeddingConstants> {
    check_l(p)?;
    check_l(q)?;
    check_order(m1)?;
    check_order(m2)?;
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    match dom {
        None => {
            let h1 = g.coefficient(Coefficient::H1)?;
            let h2 = g.coefficient(Coefficient::H2)?;
            let mu_min = min(&mut g.mu().iter().copied());
            let h1_min = min(&mut h1.iter().copied());
            let h2_min = min(&mut h2.iter().copied());
            let h_min = h1_min.min(h2_min);
            let vol = g.volume();
            let mh = mu_min * h_min;
            let (k_p, k_q) = match variant {
                KVariant::Example51 => {
                    let k = vol.powf(1.0 / q) / mh.powf(1.0 / p);
                    (k, k)
                }
                KVariant::H1Display => (
                    vol.powf(1.0 / p) / mh.powf(1.0 / q),
                    vol.powf(1.0 / q) / mh.powf(1.0 / p),
                ),
                KVariant::Lemma22 => (
                    (vol / (mu_min * h1_min)).powf(1.0 / p),
                    (vol / (mu_min * h2_min)).powf(1.0 / q),
                ),
            };
            Ok(EmbeddingConstants::Finite(FiniteConstants {
                variant,
                mu_min,
                h_min,
                volume: vol,
                d_p: (1.0 / (mu_min * h1_min)).powf(1.0 / p),
                d_q: (1.0 / (mu_min * h2_min)).powf(1.0 / q),
                k_p,
                k_q,
                inv_k_p: 1.0 / k_p.powf(p),
                inv_k_q: 1.0 / k_q.powf(q),
            }))
        }
        Some(d) => {
            if m1 > 1 || m2 > 1 {
                return Err(Error::Unsupported(format!(
                    "Dirichlet embedding constants are only available for m = 1 (got m1 = {m1}, m2 = {m2})"
                )));
            }
            let closure = d.closure();
            let mu0 = min(&mut closure.iter().map(|&x| g.mu()[x]));
            let mu_max = max(&mut closure.iter().map(|&x| g.mu()[x]));
            let w_min = min(&mut g
                .edges()
                .iter()
                .filter(|e| d.contains(e.a) || d.contains(e.b))
                .map(|e| e.w));
            if !w_min.is_finite() {
                return Err(Error::InvalidInput("domain has no incident edges".into()));
            }
            let vol: f64 = d.omega().iter().map(|&x| g.mu()[x]).sum();
            let inv_c_p = dirichlet_inv_c(mu0, mu_max, w_min, vol, p);
            let inv_c_q = dirichlet_inv_c(mu0, mu_max, w_min, vol, q);
            let c_p = inv_c_p.powf(-1.0 / p);
            let c_q = inv_c_q.powf(-1.0 / q);
            Ok(EmbeddingConstants::Dirichlet(DirichletConstants {
                mu0,
                mu_max,
                w_min,
                omega_volume: vol,
                c_p,
                c_q,
                inv_c_p,
                inv_c_q,
                h_p: c_p / mu0.powf(1.0 / p),
                h_q: c_q / mu0.powf(1.0 / q),
            }))
        }
    }
}
