//! Discrete differential operators on weighted graphs: Laplacian, gradient
//! form Γ, m-th order gradient lengths, the p-Laplacian, and the weak
//! pairing ⟨𝓛_{m,p}u, φ⟩ that defines the poly-Laplacian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Domain, VertexFunction, WeightedGraph};

/// How `|∇ψ|^{p−2}` is evaluated where `|∇ψ| = 0` and `p < 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerRule {
    /// Zero base with a negative exponent is an error.
    #[default]
    Strict,
    /// `(|∇ψ|² + ε²)^{(p−2)/2}`.
    Regularized(f64),
}

impl PowerRule {
    pub(crate) fn weight(self, base: f64, p: f64, vertex: usize) -> Result<f64> {
        match self {
            PowerRule::Strict => {
                if p == 2.0 {
                    Ok(1.0)
                } else if base == 0.0 && p < 2.0 {
                    Err(Error::Singular {
                        vertex,
                        exponent: p - 2.0,
                    })
                } else {
                    Ok(base.powf(p - 2.0))
                }
            }
            PowerRule::Regularized(eps) => Ok((base * base + eps * eps).powf(0.5 * (p - 2.0))),
        }
    }
}

pub(crate) fn laplacian_raw(g: &WeightedGraph, psi: &[f64], out: &mut [f64]) {
    for x in 0..g.len() {
        let s: f64 = g
            .neighbors(x)
            .iter()
            .map(|&(y, w)| w * (psi[y] - psi[x]))
            .sum();
        out[x] = s / g.mu()[x];
    }
}

/// Δ^k ψ.
pub(crate) fn laplacian_pow_raw(g: &WeightedGraph, psi: &[f64], k: usize) -> Vec<f64> {
    let mut cur = psi.to_vec();
    let mut next = vec![0.0; psi.len()];
    for _ in 0..k {
        laplacian_raw(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

pub(crate) fn gamma_raw(g: &WeightedGraph, a: &[f64], b: &[f64], out: &mut [f64]) {
    for x in 0..g.len() {
        let s: f64 = g
            .neighbors(x)
            .iter()
            .map(|&(y, w)| w * (a[y] - a[x]) * (b[y] - b[x]))
            .sum();
        out[x] = s / (2.0 * g.mu()[x]);
    }
}

/// (Δψ)(x) = (1/μ(x)) Σ_{y∼x} ω_xy (ψ(y) − ψ(x)).
pub fn laplacian(g: &WeightedGraph, psi: &VertexFunction) -> Result<VertexFunction> {
    g.check_aligned(psi)?;
    let mut out = vec![0.0; g.len()];
    laplacian_raw(g, psi.values(), &mut out);
    Ok(out.into())
}

/// Δ^k ψ, applying the Laplacian `k` times.
pub fn laplacian_power(g: &WeightedGraph, psi: &VertexFunction, k: usize) -> Result<VertexFunction> {
    g.check_aligned(psi)?;
    Ok(laplacian_pow_raw(g, psi.values(), k).into())
}

/// Γ(ψ₁, ψ₂)(x) = (1/2μ(x)) Σ_{y∼x} ω_xy (ψ₁(y)−ψ₁(x))(ψ₂(y)−ψ₂(x)).
pub fn gamma(g: &WeightedGraph, a: &VertexFunction, b: &VertexFunction) -> Result<VertexFunction> {
    g.check_aligned(a)?;
    g.check_aligned(b)?;
    let mut out = vec![0.0; g.len()];
    gamma_raw(g, a.values(), b.values(), &mut out);
    Ok(out.into())
}

pub(crate) fn grad_norm_raw(g: &WeightedGraph, psi: &[f64], m: usize) -> Vec<f64> {
    if m % 2 == 1 {
        let w = laplacian_pow_raw(g, psi, (m - 1) / 2);
        let mut out = vec![0.0; g.len()];
        gamma_raw(g, &w, &w, &mut out);
        out.iter_mut().for_each(|x| *x = x.max(0.0).sqrt());
        out
    } else {
        let mut w = laplacian_pow_raw(g, psi, m / 2);
        w.iter_mut().for_each(|x| *x = x.abs());
        w
    }
}

/// |∇^m ψ|: `|∇Δ^{(m−1)/2}ψ|` for odd m, `|Δ^{m/2}ψ|` for even m.
pub fn grad_norm(g: &WeightedGraph, psi: &VertexFunction, m: usize) -> Result<VertexFunction> {
    g.check_aligned(psi)?;
    check_order(m)?;
    Ok(grad_norm_raw(g, psi.values(), m).into())
}

pub(crate) fn check_order(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidInput("derivative order m must be at least 1".into()))
    } else {
        Ok(())
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("exponent must be > 1, got {p}")))
    }
}

/// Pointwise p-Laplacian
/// (1/2μ(x)) Σ_{y∼x} (|∇ψ|^{p−2}(y) + |∇ψ|^{p−2}(x)) ω_xy (ψ(y) − ψ(x)).
pub fn p_laplacian(
    g: &WeightedGraph,
    psi: &VertexFunction,
    p: f64,
    rule: PowerRule,
) -> Result<VertexFunction> {
    g.check_aligned(psi)?;
    check_exponent(p)?;
    let psi = psi.values();
    let norm = grad_norm_raw(g, psi, 1);
    let weight = norm
        .iter()
        .enumerate()
        .map(|(x, &n)| rule.weight(n, p, x))
        .collect::<Result<Vec<_>>>()?;
    let out = (0..g.len())
        .map(|x| {
            let s: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| (weight[y] + weight[x]) * w * (psi[y] - psi[x]))
                .sum();
            s / (2.0 * g.mu()[x])
        })
        .collect::<Vec<_>>();
    Ok(out.into())
}

/// Precomputed pieces of ⟨𝓛_{m,p}u, ·⟩ for a fixed `u`, so that pairing
/// against many test functions only costs the `Δ^k φ` evaluation.
pub(crate) struct Pairing<'g> {
    g: &'g WeightedGraph,
    odd: bool,
    k: usize,
    lifted: Vec<f64>,
    weight: Vec<f64>,
    support: Option<Vec<usize>>,
}

impl<'g> Pairing<'g> {
    pub(crate) fn new(
        g: &'g WeightedGraph,
        m: usize,
        p: f64,
        u: &[f64],
        over: Option<&Domain>,
        rule: PowerRule,
    ) -> Result<Self> {
        let odd = m % 2 == 1;
        let k = if odd { (m - 1) / 2 } else { m / 2 };
        let lifted = laplacian_pow_raw(g, u, k);
        let support = over.map(|d| d.closure());
        let norm = if odd {
            let mut out = vec![0.0; g.len()];
            gamma_raw(g, &lifted, &lifted, &mut out);
            out.iter_mut().for_each(|x| *x = x.max(0.0).sqrt());
            out
        } else {
            lifted.iter().map(|x| x.abs()).collect()
        };
        let mut weight = vec![0.0; g.len()];
        let mut fill = |x: usize| -> Result<()> {
            weight[x] = rule.weight(norm[x], p, x)?;
            Ok(())
        };
        match &support {
            Some(set) => set.iter().try_for_each(|&x| fill(x))?,
            None => (0..g.len()).try_for_each(fill)?,
        }
        Ok(Self {
            g,
            odd,
            k,
            lifted,
            weight,
            support,
        })
    }

    fn term(&self, x: usize, lifted_phi: &[f64]) -> f64 {
        let g = self.g;
        let inner = if self.odd {
            let s: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| {
                    w * (self.lifted[y] - self.lifted[x]) * (lifted_phi[y] - lifted_phi[x])
                })
                .sum();
            s / (2.0 * g.mu()[x])
        } else {
            self.lifted[x] * lifted_phi[x]
        };
        g.mu()[x] * self.weight[x] * inner
    }

    pub(crate) fn pair(&self, phi: &[f64]) -> f64 {
        let lifted_phi = laplacian_pow_raw(self.g, phi, self.k);
        match &self.support {
            Some(set) => set.iter().map(|&x| self.term(x, &lifted_phi)).sum(),
            None => (0..self.g.len()).map(|x| self.term(x, &lifted_phi)).sum(),
        }
    }
}

/// ⟨𝓛_{m,p}u, φ⟩: `∫ |∇^m u|^{p−2} Γ(Δ^{(m−1)/2}u, Δ^{(m−1)/2}φ) dμ` for odd
/// m and `∫ |∇^m u|^{p−2} Δ^{m/2}u Δ^{m/2}φ dμ` for even m. With a domain
/// the integral runs over Ω ∪ ∂Ω and `φ` must vanish outside Ω; `u` is
/// taken as given on all of V (zero-extended by the caller).
pub fn poly_pairing(
    g: &WeightedGraph,
    m: usize,
    p: f64,
    u: &VertexFunction,
    phi: &VertexFunction,
    over: Option<&Domain>,
    rule: PowerRule,
) -> Result<f64> {
    g.check_aligned(u)?;
    g.check_aligned(phi)?;
    check_order(m)?;
    check_exponent(p)?;
    if let Some(d) = over {
        if let Some(x) = (0..g.len()).find(|&x| !d.contains(x) && phi[x] != 0.0) {
            return Err(Error::Support(x));
        }
    }
    Ok(Pairing::new(g, m, p, u.values(), over, rule)?.pair(phi.values()))
}
