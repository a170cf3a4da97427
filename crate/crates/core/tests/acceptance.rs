//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use polylap_core::calculus::{gamma, grad_norm, laplacian, p_laplacian, PowerRule};
use polylap_core::energy::{grad_phi, phi, Mode, ProblemInstance, StatePair};
use polylap_core::graph::{integrate, Coefficient, VertexFunction, WeightedGraph};
use polylap_core::hypotheses::{example51_ladder_point, SearchPlan, WitnessKind};
use polylap_core::io::SolutionFile;
use polylap_core::nonlinearity::parse_expression;
use polylap_core::solvers::{
    minimax_disk_with_grid, minimize_slab, refine_critical, sweep, PointKind, RadiusSource,
    SolverConfig, SweepResult,
};
use polylap_core::spaces::{
    dirichlet_norm, embedding_constants, lemma22_constant, lr_norm, sobolev_norm,
    EmbeddingConstants, KVariant,
};
use rand::Rng;
use serde_json::Value;

use common::{load, random_domain, random_expression, random_function, random_graph, rng, supported, GraphPlan};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Collects failed sub-checks.
#[derive(Default)]
struct Checks(Vec<String>);

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn finish(self, summary: String) -> Outcome {
        if self.0.is_empty() {
            Outcome::new(true, summary)
        } else {
            let shown: Vec<&str> = self.0.iter().take(6).map(String::as_str).collect();
            let more = if self.0.len() > 6 { format!(" (+{} more)", self.0.len() - 6) } else { String::new() };
            Outcome::new(false, format!("{summary}; {}{more}", shown.join("; ")))
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn hypotheses_json(fixture: &str) -> (Value, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_polylap"))
        .arg("hypotheses")
        .arg(common::fixture(fixture))
        .arg("--json")
        .output()
        .expect("polylap runs");
    let elapsed = start.elapsed();
    let v: Value = serde_json::from_slice(&out.stdout).expect("hypotheses prints JSON");
    (v, elapsed)
}

fn num(v: &Value, path: &str) -> f64 {
    v.pointer(path).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn example51_constants() -> Outcome {
    let (r, t) = hypotheses_json("example51.json");
    let inv_q = num(&r, "/constants/inv_k_q");
    let inv_p = num(&r, "/constants/inv_k_p");
    let th = num(&r, "/thresholds/t_high");
    let tl = num(&r, "/thresholds/t_low");
    let lq = num(&r, "/smallness/lhs_q");
    let lp = num(&r, "/smallness/lhs_p");
    let mut c = Checks::default();
    c.check(within(inv_q, 15.1, 0.1), || format!("1/K_q^q = {inv_q}"));
    c.check(within(inv_p, 6.1, 0.1), || format!("1/K_p^p = {inv_p}"));
    c.check(within(th, 0.91, 0.005), || format!("T_high = {th}"));
    c.check(within(tl, -0.92, 0.01), || format!("T_low = {tl}"));
    c.check(lq == 7.5, || format!("lhs_q = {lq}"));
    c.check(lp == 5.0, || format!("lhs_p = {lp}"));
    c.check(t < Duration::from_secs(1), || format!("runtime {t:?}"));
    c.finish(format!(
        "1/K_q^q {inv_q:.4}, 1/K_p^p {inv_p:.4}, T_high {th:.5}, T_low {tl:.5}, lhs {lq}/{lp}, {:.3}s",
        t.as_secs_f64()
    ))
}

fn example52_constants() -> Outcome {
    let (r, t) = hypotheses_json("example52.json");
    let inv_q = num(&r, "/constants/inv_c_q");
    let inv_p = num(&r, "/constants/inv_c_p");
    let tl = num(&r, "/thresholds/t_low");
    let mut c = Checks::default();
    c.check(within(inv_q, 1975.06, 0.5), || format!("1/C_q^q = {inv_q}"));
    c.check(within(inv_p, 5.07, 0.01), || format!("1/C_p^p = {inv_p}"));
    c.check(within(tl, -0.03, 0.005), || format!("T_low = {tl}"));
    c.check(t < Duration::from_secs(1), || format!("runtime {t:?}"));
    c.finish(format!(
        "1/C_q^q {inv_q:.4}, 1/C_p^p {inv_p:.4}, T_low {tl:.5}, {:.3}s",
        t.as_secs_f64()
    ))
}

/// Fourth-order central difference along coordinate `k` of the flat state.
fn fd_component(inst: &ProblemInstance, flat: &[f64], k: usize) -> f64 {
    let h = 1e-4 * flat[k].abs().max(1.0);
    let at = |d: f64| {
        let mut y = flat.to_vec();
        y[k] += d;
        phi(inst, &StatePair::from_flat(&y)).unwrap()
    };
    (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(3);
    let mut c = Checks::default();
    let mut worst: f64 = 0.0;
    let exps = [2.0, 2.5, 3.0];
    for case in 0..200 {
        let g = random_graph(&mut r, &GraphPlan::default());
        let n = g.len();
        let m1 = r.gen_range(1..=3);
        let m2 = r.gen_range(1..=3);
        let p = exps[r.gen_range(0..3)];
        let q = exps[r.gen_range(0..3)];
        let src = random_expression(&mut r);
        let nl = parse_expression(&src).unwrap();
        let (dom, mode) = match (case % 4 == 3).then(|| random_domain(&mut r, &g)).flatten() {
            Some(d) => (Some(d), Mode::Dirichlet),
            None => (None, Mode::Finite),
        };
        let (u, v) = match &dom {
            Some(d) => (supported(&mut r, d, n, 1.0), supported(&mut r, d, n, 1.0)),
            None => (random_function(&mut r, n, 1.0), random_function(&mut r, n, 1.0)),
        };
        let inst = ProblemInstance::new(g, dom, m1, m2, p, q, nl, None, mode).unwrap();
        let s = StatePair::new(u, v);
        let grad = grad_phi(&inst, &s).unwrap().to_flat();
        let flat = s.to_flat();
        let free: Vec<usize> = inst.free_vertices();
        let coords = free.iter().copied().chain(free.iter().map(|&x| x + n));
        for k in coords {
            let fd = fd_component(&inst, &flat, k);
            let rel = (grad[k] - fd).abs() / grad[k].abs().max(1.0);
            worst = worst.max(rel);
            c.check(rel <= 1e-6, || {
                format!("case {case} ({src}, m {m1}/{m2}, p {p}, q {q}) coord {k}: {} vs {fd}", grad[k])
            });
        }
    }
    let t = start.elapsed();
    c.check(t < Duration::from_secs(30), || format!("runtime {t:?}"));
    c.finish(format!("200 instances, worst relative error {worst:.2e}, {:.2}s", t.as_secs_f64()))
}

fn rel_gap(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn operator_identities() -> Outcome {
    let mut r = rng(4);
    let mut c = Checks::default();
    let mut worst_ibp: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    for case in 0..100 {
        let g = random_graph(&mut r, &GraphPlan::default());
        let n = g.len();
        let l = r.gen_range(1.5..4.0);
        let psi = random_function(&mut r, n, 1.0);
        let test = random_function(&mut r, n, 1.0);
        let (lhs, rhs, scale) = pairing_sides(&g, &psi, &test, l);
        let e = rel_gap(lhs, rhs, scale);
        worst_ibp = worst_ibp.max(e);
        c.check(e <= 1e-10, || format!("graph {case}: whole-graph pairing {lhs} vs {rhs}"));
        if let Some(d) = random_domain(&mut r, &g) {
            let u = supported(&mut r, &d, n, 1.0);
            let phi_c = supported(&mut r, &d, n, 1.0);
            let lap = p_laplacian(&g, &u, l, PowerRule::Strict).unwrap();
            let lhs: f64 = d.omega().iter().map(|&x| g.mu()[x] * lap[x] * phi_c[x]).sum();
            let w = grad_norm(&g, &u, 1).unwrap();
            let gm = gamma(&g, &u, &phi_c).unwrap();
            let terms: Vec<f64> = d.closure().iter().map(|&x| g.mu()[x] * w[x].powf(l - 2.0) * gm[x]).collect();
            let rhs = -terms.iter().sum::<f64>();
            let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(lhs.abs());
            let e = rel_gap(lhs, rhs, scale);
            worst_ibp = worst_ibp.max(e);
            c.check(e <= 1e-10, || format!("graph {case}: domain pairing {lhs} vs {rhs}"));
        }
        let k = r.gen_range(-5.0..5.0);
        let lc = laplacian(&g, &VertexFunction::constant(n, k)).unwrap();
        c.check(lc.values().iter().all(|&x| x == 0.0), || format!("graph {case}: Δ of constant {lc:?}"));
        let lp = laplacian(&g, &psi).unwrap();
        let total = integrate(&g, &lp, None).unwrap();
        let mass: f64 = (0..n).map(|x| g.mu()[x] * lp[x].abs()).sum();
        c.check(total.abs() <= 1e-12 * mass.max(1.0), || format!("graph {case}: ∫Δψ = {total}"));
    }
    for case in 0..50 {
        let g = random_graph(&mut r, &GraphPlan::default());
        let n = g.len();
        let c0 = r.gen_range(-10.0..10.0);
        let tilde = random_function(&mut r, n, 1.0);
        let mean = integrate(&g, &tilde, None).unwrap() / g.volume();
        let tilde = tilde.map(|x| x - mean);
        let shifted = tilde.map(|x| x + c0);
        for m in 1..=5 {
            let a = grad_norm(&g, &shifted, m).unwrap();
            let b = grad_norm(&g, &tilde, m).unwrap();
            let scale = b.max_abs().max(1.0);
            let e = (0..n).map(|x| (a[x] - b[x]).abs()).fold(0.0, f64::max) / scale;
            worst_inv = worst_inv.max(e);
            c.check(e <= 1e-12, || format!("sample {case}, m {m}: shift changes |∇^m| by {e:.2e}"));
        }
    }
    c.finish(format!(
        "worst pairing gap {worst_ibp:.2e}, worst shift gap {worst_inv:.2e}"
    ))
}

/// Both sides of the whole-graph p-Laplacian pairing and a magnitude scale.
fn pairing_sides(g: &WeightedGraph, psi: &VertexFunction, test: &VertexFunction, l: f64) -> (f64, f64, f64) {
    let n = g.len();
    let lap = p_laplacian(g, psi, l, PowerRule::Strict).unwrap();
    let w = grad_norm(g, psi, 1).unwrap();
    let gm = gamma(g, psi, test).unwrap();
    let lhs: f64 = (0..n).map(|x| g.mu()[x] * lap[x] * test[x]).sum();
    let terms: Vec<f64> = (0..n).map(|x| g.mu()[x] * w[x].powf(l - 2.0) * gm[x]).collect();
    let rhs = -terms.iter().sum::<f64>();
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(lhs.abs());
    (lhs, rhs, scale)
}

fn embedding_inequalities() -> Outcome {
    let mut r = rng(5);
    let mut c = Checks::default();
    let (mut finite, mut dirichlet) = (0, 0);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let g = random_graph(&mut r, &GraphPlan::default());
        let n = g.len();
        let l = r.gen_range(1.2..4.0);
        let theta = r.gen_range(1.1..6.0);
        let m = r.gen_range(1..=3);
        let psi = match case % 5 {
            0 => VertexFunction::constant(n, r.gen_range(-3.0..3.0)),
            1 => VertexFunction::indicator(n, r.gen_range(0..n)),
            _ => random_function(&mut r, n, 2.0),
        };
        let w = sobolev_norm(&g, &psi, m, l, Coefficient::H1).unwrap();
        let mu_min = g.mu().iter().copied().fold(f64::INFINITY, f64::min);
        let h_min = g.coefficient(Coefficient::H1).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        let d_l = (1.0 / (mu_min * h_min)).powf(1.0 / l);
        let sup = psi.max_abs();
        worst = worst.max(sup / (d_l * w));
        c.check(sup <= d_l * w * (1.0 + 1e-12), || format!("sample {case}: sup {sup} > d_l·W {}", d_l * w));
        let k_l = lemma22_constant(&g, l, theta, Coefficient::H1).unwrap();
        let lt = lr_norm(&g, &psi, theta, None).unwrap();
        worst = worst.max(lt / (k_l * w));
        c.check(lt <= k_l * w * (1.0 + 1e-12), || format!("sample {case}: L^θ {lt} > K_l·W {}", k_l * w));
        finite += 1;

        let Some(d) = random_domain(&mut r, &g) else { continue };
        let u = match case % 3 {
            0 => {
                let mut f = VertexFunction::zeros(n);
                d.omega().iter().for_each(|&x| f.values_mut()[x] = 1.0);
                f
            }
            _ => supported(&mut r, &d, n, 2.0),
        };
        let EmbeddingConstants::Dirichlet(k) = embedding_constants(&g, Some(&d), 1, 1, l, l, KVariant::default()).unwrap()
        else {
            unreachable!()
        };
        let w0 = dirichlet_norm(&g, &d, &u, 1, l).unwrap();
        for th in [1.0, 2.0, theta, f64::INFINITY] {
            let lt = lr_norm(&g, &u, th, Some(&d)).unwrap();
            worst = worst.max(lt / (k.c_p * w0));
            c.check(lt <= k.c_p * w0 * (1.0 + 1e-12), || {
                format!("sample {case}: L^{th}(Ω) {lt} > C·W0 {}", k.c_p * w0)
            });
        }
        let sup = lr_norm(&g, &u, f64::INFINITY, Some(&d)).unwrap();
        worst = worst.max(sup / (k.h_p * w0));
        c.check(sup <= k.h_p * w0 * (1.0 + 1e-12), || format!("sample {case}: sup {sup} > H·W0 {}", k.h_p * w0));
        dirichlet += 1;
    }
    c.finish(format!(
        "{finite} whole-graph and {dirichlet} domain samples, largest lhs/rhs ratio {worst:.3}"
    ))
}

fn tight() -> SolverConfig {
    SolverConfig { grad_tol: 1e-11, ..SolverConfig::default() }
}

fn closed_form_solve() -> Outcome {
    let (_, inst) = load("two_vertex.json");
    let cfg = tight();
    let slab = minimize_slab(&inst, 10.0, &cfg).unwrap();
    let refined = refine_critical(&inst, &StatePair::zeros(inst.len()), &cfg).unwrap();
    let mut c = Checks::default();
    for (name, cp) in [("minimize_slab", &slab), ("refine_critical", &refined)] {
        let exact = cp.state.to_flat().iter().all(|&x| within(x, 1.0, 1e-9));
        c.check(exact, || format!("{name}: state {:?}", cp.state.to_flat()));
        c.check(within(cp.level, -2.0, 1e-12), || format!("{name}: level {}", cp.level));
        c.check(cp.residual <= 1e-10, || format!("{name}: residual {:.3e}", cp.residual));
        c.check(cp.accepted(), || format!("{name}: status {}", cp.status.name()));
    }
    c.finish(format!(
        "levels {:.15}/{:.15}, residuals {:.1e}/{:.1e}",
        slab.level, refined.level, slab.residual, refined.residual
    ))
}

/// The bundled example's equal-split sine-ladder points, as Euclidean radii.
fn ladder_radii(n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let radius = |k, kind| {
        let (a, b): (f64, f64) = example51_ladder_point(k, kind);
        a.hypot(b)
    };
    (
        (1..=n).map(|k| radius(k, WitnessKind::High)).collect(),
        (1..=m).map(|k| radius(k, WitnessKind::Low)).collect(),
    )
}

/// The sub-checks shared by the two desk-scale sweeps.
fn sweep_checks(c: &mut Checks, label: &str, res: &SweepResult, n: usize, m: usize, inst: &ProblemInstance) {
    let accepted = res.rows.iter().filter(|r| r.accepted()).count();
    c.check(res.rows.len() == n + m && accepted == n + m, || {
        let statuses: Vec<String> = res
            .rows
            .iter()
            .map(|r| match &r.point {
                Some(p) => format!("{}{}:{}", r.kind.name(), r.index, p.status.name()),
                None => format!("{}{}:not_run", r.kind.name(), r.index),
            })
            .collect();
        format!("{label}: {accepted}/{} accepted [{}]", n + m, statuses.join(", "))
    });
    if let Some(row) = res.rows.iter().find(|r| r.radius.is_none()) {
        let first = row.note.split("; ").next().unwrap_or_default();
        c.check(false, || format!("{label}: {first}"));
    }
    for row in &res.rows {
        let Some(p) = &row.point else { continue };
        let tag = format!("{label} {}{}", row.kind.name(), row.index);
        c.check(p.residual <= 1e-8, || format!("{tag}: residual {:.2e}", p.residual));
        match row.kind {
            PointKind::Minimax => {
                let sup = p.boundary_sup.unwrap_or(f64::INFINITY);
                c.check(p.level > sup, || format!("{tag}: level {:.4e} ≤ boundary sup {sup:.4e}", p.level));
            }
            _ => c.check(p.interior == Some(true), || format!("{tag}: not interior")),
        }
        if inst.mode() == Mode::Dirichlet {
            let dom = inst.domain().unwrap();
            let outside = (0..inst.len()).filter(|&x| !dom.contains(x));
            let zero = outside.into_iter().all(|x| p.state.u[x] == 0.0 && p.state.v[x] == 0.0);
            c.check(zero, || format!("{tag}: nonzero outside Ω"));
        }
    }
    c.check(res.violations.is_empty(), || format!("{label}: {}", res.violations.join("; ")));
}

fn levels(res: &SweepResult, kind: PointKind) -> String {
    let v: Vec<String> = res
        .levels(kind)
        .iter()
        .map(|x| x.map_or("-".to_string(), |x| format!("{x:.4e}")))
        .collect();
    format!("[{}]", v.join(", "))
}

fn desk_sweep(fixture: &str, n: usize, m: usize) -> Outcome {
    let start = Instant::now();
    let (_, inst) = load(fixture);
    let cfg = SolverConfig::default();
    let mut c = Checks::default();
    let auto = sweep(&inst, n, m, &RadiusSource::Witnesses(SearchPlan::default()), &cfg).unwrap();
    sweep_checks(&mut c, "witness radii", &auto, n, m, &inst);
    let (high, low) = ladder_radii(n, m);
    let ladder = sweep(&inst, n, m, &RadiusSource::Explicit { high, low }, &cfg).unwrap();
    sweep_checks(&mut c, "ladder radii", &ladder, n, m, &inst);
    let t = start.elapsed();
    c.check(t < Duration::from_secs(300), || format!("runtime {t:?}"));
    c.finish(format!(
        "ladder levels minimax {} localmin {}, {:.2}s",
        levels(&ladder, PointKind::Minimax),
        levels(&ladder, PointKind::LocalMin),
        t.as_secs_f64()
    ))
}

fn linking_invariant() -> Outcome {
    let cfg = SolverConfig::default();
    let mut c = Checks::default();
    let mut solves = 0;
    let mut records = 0;
    let mut cases: Vec<(&str, f64)> = vec![("oscillating.json", 1.95), ("oscillating.json", 50.75), ("two_vertex.json", 3.0)];
    let (high, _) = ladder_radii(2, 0);
    cases.extend(high.iter().map(|&r| ("example51.json", r)));
    cases.push(("example52.json", high[0]));
    for (fixture, radius) in cases {
        let (_, inst) = load(fixture);
        let (cp, grid) = minimax_disk_with_grid(&inst, radius, &cfg).unwrap();
        solves += 1;
        for h in cp.history.iter().filter(|h| h.phase == "relax") {
            records += 1;
            c.check(h.winding == Some(1), || {
                format!("{fixture} R={radius}: iteration {} winding {:?}", h.iteration, h.winding)
            });
        }
        c.check(grid.winding(&inst) == Some(1), || {
            format!("{fixture} R={radius}: final winding {:?}", grid.winding(&inst))
        });
    }
    c.finish(format!("{solves} solves, {records} relaxation iterations"))
}

fn run_all_solves() -> Vec<String> {
    let mut out = Vec::new();
    let (_, two) = load("two_vertex.json");
    let cfg = tight();
    let slab = minimize_slab(&two, 10.0, &cfg).unwrap();
    out.push(serde_json::to_string_pretty(&SolutionFile::new(&two, &slab, &cfg)).unwrap());
    let refined = refine_critical(&two, &StatePair::zeros(two.len()), &cfg).unwrap();
    out.push(serde_json::to_string_pretty(&SolutionFile::new(&two, &refined, &cfg)).unwrap());
    let cfg = SolverConfig::default();
    for (fixture, n, m) in [("example51.json", 2, 2), ("example52.json", 1, 1), ("oscillating.json", 2, 2)] {
        let (_, inst) = load(fixture);
        let source = if fixture == "oscillating.json" {
            RadiusSource::Explicit { high: vec![1.95, 50.75], low: vec![10.5, 244.0] }
        } else {
            let (high, low) = ladder_radii(n, m);
            RadiusSource::Explicit { high, low }
        };
        let res = sweep(&inst, n, m, &source, &cfg).unwrap();
        out.push(serde_json::to_string_pretty(&res).unwrap());
        let auto = sweep(&inst, n, m, &RadiusSource::Witnesses(SearchPlan::default()), &cfg).unwrap();
        out.push(serde_json::to_string_pretty(&auto).unwrap());
    }
    out
}

fn determinism() -> Outcome {
    let a = run_all_solves();
    let b = run_all_solves();
    let mut c = Checks::default();
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        c.check(x == y, || format!("result {i} differs between runs"));
    }
    let bytes: usize = a.iter().map(String::len).sum();
    c.finish(format!("{} result documents, {bytes} bytes, compared twice", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("example51 constants", example51_constants),
        ("example52 constants", example52_constants),
        ("gradient correctness", gradient_correctness),
        ("operator identities", operator_identities),
        ("embedding inequalities", embedding_inequalities),
        ("closed-form solve", closed_form_solve),
        ("finite-graph sweep n=2 m=2", || desk_sweep("example51.json", 2, 2)),
        ("Dirichlet sweep n=1 m=1", || desk_sweep("example52.json", 1, 1)),
        ("discrete linking invariant", linking_invariant),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {:<28} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
