//! Checks of the structural hypotheses on a problem instance: smallness of
//! the growth envelope against the embedding constants, the two thresholds,
//! and ladders of witness radii on which the nonlinearity is large or small
//! along every constant direction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{Mode, ProblemInstance};
use crate::error::{Error, Result};
use crate::nonlinearity::{check_envelope, integral_f, EnvelopeReport, ProbePlan};
use crate::spaces::{EmbeddingConstants, KVariant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    /// `((pq−q)/p)‖f₂‖_∞ + ‖f₄‖_∞`.
    pub lhs_q: f64,
    /// `1/K_q^q` or `1/C_{1,q}^q`.
    pub rhs_q: f64,
    /// `‖f₁‖_∞ + ‖f₂‖_∞`.
    pub lhs_p: f64,
    /// `1/K_p^p` or `1/C_{1,p}^p`.
    pub rhs_p: f64,
    pub margin_q: f64,
    pub margin_p: f64,
    pub pass: bool,
}

fn sups(inst: &ProblemInstance) -> Result<[f64; 4]> {
    let env = inst
        .envelope()
        .ok_or_else(|| Error::InvalidInput("no growth envelope given".into()))?;
    let set = inst.domain().map(|d| d.omega());
    let g = inst.graph();
    Ok([
        env.sup(0, g, set)?,
        env.sup(1, g, set)?,
        env.sup(2, g, set)?,
        env.sup(3, g, set)?,
    ])
}

pub fn check_smallness(inst: &ProblemInstance, variant: KVariant) -> Result<SmallnessReport> {
    let f = sups(inst)?;
    let (p, q) = inst.exponents();
    let (rhs_p, rhs_q) = match inst.embedding_constants(variant)? {
        EmbeddingConstants::Finite(k) => (k.inv_k_p, k.inv_k_q),
        EmbeddingConstants::Dirichlet(c) => (c.inv_c_p, c.inv_c_q),
    };
    let lhs_q = (p * q - q) / p * f[1] + f[3];
    let lhs_p = f[0] + f[1];
    Ok(SmallnessReport {
        lhs_q,
        rhs_q,
        lhs_p,
        rhs_p,
        margin_q: rhs_q - lhs_q,
        margin_p: rhs_p - lhs_p,
        pass: lhs_q < rhs_q && lhs_p < rhs_p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `max{(1/p)∫h₁, (1/q)∫h₂}`; `None` in Dirichlet mode, where the
    /// integral of F itself must grow without bound.
    pub t_high: Option<f64>,
    pub t_low: f64,
    /// The two integrals whose minimum is `t_low`.
    pub t_low_terms: [f64; 2],
}

pub fn rhs_thresholds(inst: &ProblemInstance) -> Result<Thresholds> {
    let env = inst
        .envelope()
        .ok_or_else(|| Error::InvalidInput("no growth envelope given".into()))?;
    let g = inst.graph();
    let (p, q) = inst.exponents();
    let f: Vec<Vec<f64>> = (0..4).map(|i| env.column(i, g)).collect::<Result<_>>()?;
    let finite = inst.mode() == Mode::Finite;
    let (h1, h2) = if finite {
        (
            g.coefficient(crate::graph::Coefficient::H1)?,
            g.coefficient(crate::graph::Coefficient::H2)?,
        )
    } else {
        (vec![0.0; g.len()], vec![0.0; g.len()])
    };
    let mut a = 0.0;
    let mut b = 0.0;
    let mut ih1 = 0.0;
    let mut ih2 = 0.0;
    for x in inst.free_vertices() {
        let mu = g.mu()[x];
        a += mu
            * (f[0][x] / p - f[0][x] * 2f64.powf(p - 1.0) / p - (q - 1.0) / q * f[2][x] - h1[x] / p);
        b += mu
            * (f[3][x] / q
                - (p - 1.0) / p * f[1][x] * 2f64.powf(q - 1.0)
                - f[3][x] * 2f64.powf(q - 1.0) / q
                - h2[x] / q);
        ih1 += mu * h1[x];
        ih2 += mu * h2[x];
    }
    Ok(Thresholds {
        t_high: finite.then(|| (ih1 / p).max(ih2 / q)),
        t_low: a.min(b),
        t_low_terms: [a, b],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchPlan {
    pub r_min: f64,
    pub r_max: f64,
    pub radii_per_decade: usize,
    pub directions: usize,
    pub verify_directions: usize,
    pub golden_iterations: usize,
    /// Spacing of the growing ladder `L_k = k·ladder_step` in Dirichlet mode.
    pub ladder_step: f64,
}

impl Default for SearchPlan {
    fn default() -> Self {
        Self {
            r_min: 1.0,
            r_max: 1e8,
            radii_per_decade: 24,
            directions: 256,
            verify_directions: 4096,
            golden_iterations: 40,
            ladder_step: 1.0,
        }
    }
}

impl SearchPlan {
    pub fn radii(&self) -> Vec<f64> {
        let lo = self.r_min.log10();
        let hi = self.r_max.log10();
        let n = ((hi - lo) * self.radii_per_decade as f64).round().max(1.0) as usize;
        (0..=n)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / n as f64))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Infimum over the circle exceeds the threshold (disk radii `R_n`).
    High,
    /// Supremum over the circle stays below the threshold (slab radii `r_m`).
    Low,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub radius: f64,
    /// Extremal value over the circle: an infimum for `High`, a supremum for `Low`.
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
    /// Extremal value over the independent fine direction check.
    pub verified_value: f64,
    pub verified_margin: f64,
    /// Point on the circle attaining `value`.
    pub extremal_point: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSearch {
    pub kind: WitnessKind,
    pub requested: usize,
    pub witnesses: Vec<Witness>,
    pub confirmed: bool,
    pub note: String,
}

/// The quantity sampled on circles: `∫F(a,b)/(|a|^p+|b|^q)`, or `∫_Ω F(a,b)`
/// for high witnesses in Dirichlet mode.
fn circle_value(inst: &ProblemInstance, kind: WitnessKind, a: f64, b: f64) -> Result<f64> {
    let integral = integral_f(inst.graph(), inst.domain(), inst.nonlinearity(), a, b)?;
    if kind == WitnessKind::High && inst.mode() == Mode::Dirichlet {
        return Ok(integral);
    }
    let (p, q) = inst.exponents();
    Ok(integral / (a.abs().powf(p) + b.abs().powf(q)))
}

/// Extremum over the circle of radius `r`: the worst direction on an
/// equispaced grid, then golden-section refinement around it. Returned
/// value is oriented so that smaller is worse (negated for `Low`).
fn worst_on_circle(
    inst: &ProblemInstance,
    kind: WitnessKind,
    r: f64,
    dirs: usize,
    golden: usize,
) -> Result<(f64, (f64, f64))> {
    let sign = if kind == WitnessKind::High { 1.0 } else { -1.0 };
    let eval = |th: f64| -> Result<f64> {
        Ok(sign * circle_value(inst, kind, r * th.cos(), r * th.sin())?)
    };
    let step = std::f64::consts::TAU / dirs as f64;
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..dirs {
        let th = step * j as f64;
        let v = eval(th)?;
        if v < best.0 {
            best = (v, th);
        }
    }
    if golden > 0 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (best.1 - step, best.1 + step);
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (eval(c)?, eval(d)?);
        for _ in 0..golden {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = eval(c)?;
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = eval(d)?;
            }
        }
        for (v, th) in [(fc, c), (fd, d)] {
            if v < best.0 {
                best = (v, th);
            }
        }
    }
    Ok((sign * best.0, (r * best.1.cos(), r * best.1.sin())))
}

fn margin(kind: WitnessKind, value: f64, threshold: f64) -> f64 {
    match kind {
        WitnessKind::High => value - threshold,
        WitnessKind::Low => threshold - value,
    }
}

/// Threshold for the k-th witness (0-based).
fn threshold_for(inst: &ProblemInstance, th: &Thresholds, kind: WitnessKind, k: usize, plan: &SearchPlan) -> f64 {
    match (kind, th.t_high) {
        (WitnessKind::Low, _) => th.t_low,
        (WitnessKind::High, Some(t)) if inst.mode() == Mode::Finite => t,
        (WitnessKind::High, _) => (k + 1) as f64 * plan.ladder_step,
    }
}

/// Re-checks a circle with the fine direction grid and no refinement.
pub fn verify_radius(
    inst: &ProblemInstance,
    kind: WitnessKind,
    r: f64,
    directions: usize,
) -> Result<f64> {
    Ok(worst_on_circle(inst, kind, r, directions, 0)?.0)
}

/// Scans log-spaced radii for witnesses of the given kind. Consecutive
/// qualifying radii within one decade count as one witness (the one with
/// the largest margin). Every witness is re-verified on a finer direction
/// grid and dropped if its margin does not stay positive.
pub fn find_witnesses(
    inst: &ProblemInstance,
    thresholds: &Thresholds,
    kind: WitnessKind,
    count: usize,
    plan: &SearchPlan,
) -> Result<WitnessSearch> {
    let mut search = WitnessSearch {
        kind,
        requested: count,
        witnesses: Vec::new(),
        confirmed: count == 0,
        note: String::new(),
    };
    if count == 0 {
        return Ok(search);
    }
    let radii = plan.radii();
    let scans = radii
        .par_iter()
        .map(|&r| worst_on_circle(inst, kind, r, plan.directions, plan.golden_iterations))
        .collect::<Result<Vec<_>>>()?;
    let decade = |r: f64| r.log10().floor() as i64;
    let mut i = 0;
    let mut dropped = 0;
    while i < radii.len() && search.witnesses.len() < count {
        let thr = threshold_for(inst, thresholds, kind, search.witnesses.len(), plan);
        if margin(kind, scans[i].0, thr) <= 0.0 {
            i += 1;
            continue;
        }
        let mut best = i;
        let mut j = i + 1;
        while j < radii.len()
            && decade(radii[j]) == decade(radii[i])
            && margin(kind, scans[j].0, thr) > 0.0
        {
            if margin(kind, scans[j].0, thr) > margin(kind, scans[best].0, thr) {
                best = j;
            }
            j += 1;
        }
        i = j;
        let r = radii[best];
        let verified = verify_radius(inst, kind, r, plan.verify_directions)?;
        let vm = margin(kind, verified, thr);
        if vm <= 0.0 {
            dropped += 1;
            continue;
        }
        search.witnesses.push(Witness {
            radius: r,
            value: scans[best].0,
            threshold: thr,
            margin: margin(kind, scans[best].0, thr),
            verified_value: verified,
            verified_margin: vm,
            extremal_point: scans[best].1,
        });
    }
    search.confirmed = search.witnesses.len() >= count;
    let what = match kind {
        WitnessKind::High => "inf over the circle above threshold",
        WitnessKind::Low => "sup over the circle below threshold",
    };
    search.note = if search.confirmed {
        format!(
            "confirmed {count} witness(es) ({what}) up to radius {:e}",
            plan.r_max
        )
    } else {
        format!(
            "not confirmed: found {} of {count} witness(es) ({what}) on radii [{:e}, {:e}]{}",
            search.witnesses.len(),
            plan.r_min,
            plan.r_max,
            if dropped > 0 {
                format!("; {dropped} candidate(s) failed the fine re-check")
            } else {
                String::new()
            }
        )
    };
    Ok(search)
}

/// Greedily picks `R₁ < r₁ < R₂ < r₂ < …` from two increasing lists. Once
/// one family is complete or exhausted the other continues increasing.
pub fn interleave(high: &[f64], low: &[f64], n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rs = Vec::new();
    let mut ls = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let mut high_turn = true;
    loop {
        let need_h = rs.len() < n;
        let need_l = ls.len() < m;
        if !need_h && !need_l {
            break;
        }
        let take_high = (high_turn && need_h) || !need_l;
        let (src, dst) = if take_high { (high, &mut rs) } else { (low, &mut ls) };
        match src.iter().find(|&&r| r > last) {
            Some(&r) => {
                dst.push(r);
                last = r;
            }
            None => break,
        }
        high_turn = !take_high;
    }
    (rs, ls)
}

/// Equal-split points on the sine ladders of the bundled example:
/// `a² = |b|³ = (e^{2kπ+π/2} − 1)/2` for `High`, with `3π/2` for `Low`.
pub fn example51_ladder_point(k: usize, kind: WitnessKind) -> (f64, f64) {
    let phase = match kind {
        WitnessKind::High => 0.5,
        WitnessKind::Low => 1.5,
    };
    let s = ((std::f64::consts::PI * (2.0 * k as f64 + phase)).exp() - 1.0) / 2.0;
    let a = s.sqrt();
    (a, s.cbrt())
}

/// A claimed decimal value checked against the recomputed one. The
/// tolerance is half a unit in the claim's last displayed digit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub name: String,
    pub claimed: String,
    pub computed: f64,
    pub tolerance: f64,
    pub agrees: bool,
}

pub fn check_claim(name: &str, claimed: &str, computed: f64) -> Result<ClaimCheck> {
    let text = claimed.trim();
    let value: f64 = text
        .parse()
        .map_err(|_| Error::InvalidInput(format!("claim `{name}` is not a decimal: `{claimed}`")))?;
    let mantissa = text.split(['e', 'E']).next().unwrap_or(text);
    let exp: i32 = text
        .split_once(['e', 'E'])
        .map(|(_, e)| e.parse().unwrap_or(0))
        .unwrap_or(0);
    let decimals = mantissa.split_once('.').map_or(0, |(_, f)| f.len()) as i32;
    let tolerance = 0.5 * 10f64.powi(exp - decimals);
    Ok(ClaimCheck {
        name: name.to_string(),
        claimed: text.to_string(),
        computed,
        tolerance,
        agrees: (computed - value).abs() <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub mode: Mode,
    pub variant: KVariant,
    pub constants: Option<EmbeddingConstants>,
    pub smallness: Option<SmallnessReport>,
    pub f_at_origin: f64,
    pub envelope: Option<EnvelopeReport>,
    pub thresholds: Option<Thresholds>,
    pub high: WitnessSearch,
    pub low: WitnessSearch,
    pub claims: Vec<ClaimCheck>,
    pub confirmed: bool,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    /// Recomputed value for a named claim, if the report carries it.
    pub fn lookup(&self, name: &str) -> Option<f64> {
        let c = self.constants.as_ref();
        let s = self.smallness.as_ref();
        let t = self.thresholds.as_ref();
        match name {
            "inv_k_q" | "inv_c_q" => s.map(|s| s.rhs_q),
            "inv_k_p" | "inv_c_p" => s.map(|s| s.rhs_p),
            "lhs_q" => s.map(|s| s.lhs_q),
            "lhs_p" => s.map(|s| s.lhs_p),
            "t_high" => t.and_then(|t| t.t_high),
            "t_low" => t.map(|t| t.t_low),
            "volume" => c.map(|c| match c {
                EmbeddingConstants::Finite(k) => k.volume,
                EmbeddingConstants::Dirichlet(d) => d.omega_volume,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOptions {
    pub variant: KVariant,
    pub n: usize,
    pub m: usize,
    pub search: SearchPlan,
    pub probes: ProbePlan,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self {
            variant: KVariant::default(),
            n: 2,
            m: 2,
            search: SearchPlan::default(),
            probes: ProbePlan::default(),
        }
    }
}

/// Runs every check. Failures of individual hypotheses are data in the
/// report; only malformed inputs return an error.
pub fn check_hypotheses(
    inst: &ProblemInstance,
    opts: &HypothesisOptions,
    claims: &[(String, String)],
) -> Result<HypothesisReport> {
    let mut notes = Vec::new();
    let constants = match inst.embedding_constants(opts.variant) {
        Ok(c) => Some(c),
        Err(Error::Unsupported(msg)) => {
            notes.push(format!("constants unsupported: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let has_env = inst.envelope().is_some();
    if !has_env {
        notes.push("no growth envelope: smallness, thresholds and witnesses skipped".into());
    }
    let smallness = if has_env && constants.is_some() {
        Some(check_smallness(inst, opts.variant)?)
    } else {
        None
    };
    let f_at_origin = integral_f(inst.graph(), inst.domain(), inst.nonlinearity(), 0.0, 0.0)?;
    let envelope = match inst.envelope() {
        Some(env) => Some(check_envelope(inst.graph(), inst.nonlinearity(), env, &opts.probes)?),
        None => None,
    };
    let thresholds = if has_env { Some(rhs_thresholds(inst)?) } else { None };
    let empty = |kind, requested| WitnessSearch {
        kind,
        requested,
        witnesses: Vec::new(),
        confirmed: false,
        note: "not run".into(),
    };
    let (high, low) = match &thresholds {
        Some(t) => (
            find_witnesses(inst, t, WitnessKind::High, opts.n, &opts.search)?,
            find_witnesses(inst, t, WitnessKind::Low, opts.m, &opts.search)?,
        ),
        None => (empty(WitnessKind::High, opts.n), empty(WitnessKind::Low, opts.m)),
    };
    if let (Some(t), Mode::Dirichlet) = (&thresholds, inst.mode()) {
        debug_assert!(t.t_high.is_none());
        notes.push("Dirichlet mode: high witnesses use the growing ladder L_k = k·step on ∫_Ω F".into());
    }
    let mut report = HypothesisReport {
        mode: inst.mode(),
        variant: opts.variant,
        constants,
        smallness,
        f_at_origin,
        envelope,
        thresholds,
        high,
        low,
        claims: Vec::new(),
        confirmed: false,
        notes,
    };
    for (name, text) in claims {
        match report.lookup(name) {
            Some(v) => {
                let c = check_claim(name, text, v)?;
                if !c.agrees {
                    report.notes.push(format!(
                        "claimed {name} = {} disagrees with recomputed {:.6}",
                        c.claimed, c.computed
                    ));
                }
                report.claims.push(c);
            }
            None => report.notes.push(format!("claim `{name}` not checkable")),
        }
    }
    report.confirmed = report.smallness.as_ref().is_some_and(|s| s.pass)
        && report.f_at_origin == 0.0
        && report.envelope.as_ref().is_some_and(|e| e.pass)
        && report.high.confirmed
        && report.low.confirmed;
    Ok(report)
}
