//! The `polylap` command-line front end.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 hypotheses not
//! confirmed, 3 solver failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::energy::{Mode, ProblemInstance};
use crate::error::Error;
use crate::graph::{validate, validate_finite};
use crate::hypotheses::{
    check_hypotheses, find_witnesses, rhs_thresholds, HypothesisOptions, HypothesisReport,
    SearchPlan, WitnessKind, WitnessSearch,
};
use crate::io::{level_rows, write_history_csv, write_json, write_sweep, ProblemFile, SolutionFile};
use crate::solvers::{minimax_disk, minimize_slab, sweep, RadiusSource, SolverConfig};
use crate::spaces::{EmbeddingConstants, KVariant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONFIRMED: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "polylap", version, about = "Critical points of poly-Laplacian systems on weighted graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a problem file and check graph and instance invariants.
    Validate { file: PathBuf },
    /// Report embedding constants, thresholds and witness radii.
    Hypotheses(HypothesesArgs),
    /// Compute one critical point.
    Solve(SolveArgs),
    /// Compute minimax and local-minimum levels over a ladder of radii.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct HypothesesArgs {
    pub file: PathBuf,
    /// Number of disk witnesses to search for.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Number of slab witnesses to search for.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Embedding-constant formula.
    #[arg(long, default_value = "example51")]
    pub k_variant: KVariant,
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    /// Also write `hypotheses.json` into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub rings: Option<usize>,
    #[arg(long)]
    pub spokes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with solver settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMode {
    Minimax,
    Localmin,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub mode: SolveMode,
    /// Disk or slab radius; taken from the first witness when omitted.
    #[arg(long)]
    pub radius: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Disk radii, used instead of the witness search (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub high: Option<Vec<f64>>,
    /// Slab radii, used instead of the witness search (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub low: Option<Vec<f64>>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Singular { .. } => EXIT_SOLVER,
            _ => EXIT_INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_INVALID, message: msg.into() }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Output goes to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((code, text)) => {
            print!("{text}");
            code
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Runs a parsed command, returning the exit code and the stdout text.
pub fn execute(cmd: &Command) -> std::result::Result<(i32, String), Failure> {
    match cmd {
        Command::Validate { file } => cmd_validate(file),
        Command::Hypotheses(a) => cmd_hypotheses(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

pub fn cmd_validate(file: &Path) -> std::result::Result<(i32, String), Failure> {
    let pf = ProblemFile::load(file)?;
    let g = pf.graph()?;
    let violations = match pf.problem.mode {
        Mode::Finite => validate_finite(&g),
        Mode::Dirichlet => validate(&g),
    };
    if !violations.is_empty() {
        let mut msg = String::from("validation failed:");
        for v in &violations {
            let _ = write!(msg, "\n  {v}");
        }
        return Err(usage(msg));
    }
    pf.instance()?;
    Ok((EXIT_OK, format!("{}: ok\n", file.display())))
}

fn hypothesis_options(n: usize, m: usize, variant: KVariant) -> HypothesisOptions {
    HypothesisOptions { variant, n, m, ..HypothesisOptions::default() }
}

pub fn cmd_hypotheses(a: &HypothesesArgs) -> std::result::Result<(i32, String), Failure> {
    let pf = ProblemFile::load(&a.file)?;
    let inst = pf.instance()?;
    let report = check_hypotheses(&inst, &hypothesis_options(a.n, a.m, a.k_variant), &pf.claims())?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        write_json(&dir.join("hypotheses.json"), &report)?;
    }
    let text = if a.json {
        let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
        s.push('\n');
        s
    } else {
        format_report(&report)
    };
    let code = if report.confirmed { EXIT_OK } else { EXIT_NOT_CONFIRMED };
    Ok((code, text))
}

fn format_search(out: &mut String, label: &str, s: &WitnessSearch) {
    let _ = writeln!(out, "{label}: {}", s.note);
    for w in &s.witnesses {
        let _ = writeln!(
            out,
            "  radius {:.6e}: value {:.6} vs threshold {:.6} (margin {:.3e}, fine check {:.3e})",
            w.radius, w.value, w.threshold, w.margin, w.verified_margin
        );
    }
}

/// Plain-text rendering of a hypothesis report.
pub fn format_report(r: &HypothesisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode: {}", r.mode);
    match &r.constants {
        Some(EmbeddingConstants::Finite(c)) => {
            let _ = writeln!(
                out,
                "constants ({}): 1/K_q^q = {:.4}, 1/K_p^p = {:.4}, d_p = {:.6}, d_q = {:.6}",
                c.variant, c.inv_k_q, c.inv_k_p, c.d_p, c.d_q
            );
        }
        Some(EmbeddingConstants::Dirichlet(c)) => {
            let _ = writeln!(
                out,
                "constants: 1/C_q^q = {:.4}, 1/C_p^p = {:.4} (mu0 = {:.6e}, mu_max = {:.6e}, w_min = {})",
                c.inv_c_q, c.inv_c_p, c.mu0, c.mu_max, c.w_min
            );
        }
        None => {
            let _ = writeln!(out, "constants: unsupported");
        }
    }
    if let Some(s) = &r.smallness {
        let _ = writeln!(
            out,
            "smallness: {} < {:.4} and {} < {:.4}: {}",
            s.lhs_q,
            s.rhs_q,
            s.lhs_p,
            s.rhs_p,
            if s.pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(out, "integral of F(0,0): {}", r.f_at_origin);
    if let Some(e) = &r.envelope {
        let _ = writeln!(
            out,
            "growth envelope: {} over {} probes (worst ratio {:.6})",
            if e.pass { "pass" } else { "FAIL" },
            e.probes,
            e.worst_ratio
        );
        if let (false, Some(w)) = (e.pass, &e.witness) {
            let _ = writeln!(
                out,
                "  violated by {} at vertex {} (s = {}, t = {}): {} > {}",
                w.component, w.vertex, w.s, w.t, w.lhs, w.rhs
            );
        }
    }
    if let Some(t) = &r.thresholds {
        match t.t_high {
            Some(h) => {
                let _ = writeln!(out, "thresholds: T_high = {h:.6}, T_low = {:.6}", t.t_low);
            }
            None => {
                let _ = writeln!(out, "thresholds: T_low = {:.6}", t.t_low);
            }
        }
    }
    format_search(&mut out, "disk witnesses", &r.high);
    format_search(&mut out, "slab witnesses", &r.low);
    for c in &r.claims {
        let _ = writeln!(
            out,
            "claim {} = {}: computed {:.6} ({})",
            c.name,
            c.claimed,
            c.computed,
            if c.agrees { "agrees" } else { "DISAGREES" }
        );
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(out, "hypotheses: {}", if r.confirmed { "confirmed" } else { "not confirmed" });
    out
}

fn solver_config(pf: &ProblemFile, f: &SolverFlags) -> std::result::Result<SolverConfig, Failure> {
    let mut cfg = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str(&text).map_err(|e| {
                usage(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
            })?
        }
        None => pf.solver.clone().unwrap_or_default(),
    };
    if let Some(v) = f.tol {
        cfg.grad_tol = v;
    }
    if let Some(v) = f.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = f.rings {
        cfg.rings = v;
    }
    if let Some(v) = f.spokes {
        cfg.spokes = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_radius_arg(r: f64) -> std::result::Result<(), Failure> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("radius must be a positive number, got {r}")))
    }
}

fn first_witness(inst: &ProblemInstance, kind: WitnessKind) -> std::result::Result<f64, Failure> {
    let th = rhs_thresholds(inst)?;
    let s = find_witnesses(inst, &th, kind, 1, &SearchPlan::default())?;
    s.witnesses.first().map(|w| w.radius).ok_or_else(|| Failure {
        code: EXIT_NOT_CONFIRMED,
        message: format!("no radius given and {}", s.note),
    })
}

pub fn cmd_solve(a: &SolveArgs) -> std::result::Result<(i32, String), Failure> {
    if let Some(r) = a.radius {
        check_radius_arg(r)?;
    }
    let pf = ProblemFile::load(&a.file)?;
    let inst = pf.instance()?;
    let cfg = solver_config(&pf, &a.solver)?;
    let kind = match a.mode {
        SolveMode::Minimax => WitnessKind::High,
        SolveMode::Localmin => WitnessKind::Low,
    };
    let r = match a.radius {
        Some(r) => r,
        None => first_witness(&inst, kind)?,
    };
    let cp = match a.mode {
        SolveMode::Minimax => minimax_disk(&inst, r, &cfg)?,
        SolveMode::Localmin => minimize_slab(&inst, r, &cfg)?,
    };
    std::fs::create_dir_all(&a.solver.out).map_err(Error::from)?;
    write_json(&a.solver.out.join("solution.json"), &SolutionFile::new(&inst, &cp, &cfg))?;
    write_history_csv(&a.solver.out.join("history.csv"), &cp.history)?;
    let text = format!(
        "{} at radius {r}: level {:.12e}, residual {:.3e}, status {}\n",
        cp.kind.name(),
        cp.level,
        cp.residual,
        cp.status.name()
    );
    Ok((if cp.accepted() { EXIT_OK } else { EXIT_SOLVER }, text))
}

pub fn cmd_sweep(a: &SweepArgs) -> std::result::Result<(i32, String), Failure> {
    for r in a.high.iter().chain(a.low.iter()).flatten() {
        check_radius_arg(*r)?;
    }
    let pf = ProblemFile::load(&a.file)?;
    let inst = pf.instance()?;
    let cfg = solver_config(&pf, &a.solver)?;
    let source = if a.high.is_some() || a.low.is_some() {
        RadiusSource::Explicit {
            high: a.high.clone().unwrap_or_default(),
            low: a.low.clone().unwrap_or_default(),
        }
    } else {
        RadiusSource::Witnesses(SearchPlan::default())
    };
    let res = sweep(&inst, a.n, a.m, &source, &cfg)?;
    write_sweep(&a.solver.out, &res)?;
    let mut text = String::from("n\tkind\tradius\tlevel\tresidual\tstatus\n");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
    for row in level_rows(&res) {
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}\t{}",
            row.n,
            row.kind.name(),
            fmt(row.radius),
            fmt(row.level),
            fmt(row.residual),
            row.status
        );
    }
    for v in &res.violations {
        let _ = writeln!(text, "violation: {v}");
    }
    let mut code = EXIT_OK;
    for row in &res.rows {
        let c = match (&row.radius, row.accepted()) {
            (None, _) => EXIT_NOT_CONFIRMED,
            (Some(_), true) => EXIT_OK,
            (Some(_), false) => EXIT_SOLVER,
        };
        code = code.max(c);
    }
    if !res.violations.is_empty() {
        code = code.max(EXIT_SOLVER);
    }
    Ok((code, text))
}
