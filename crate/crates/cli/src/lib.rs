//! Command-line front end: problem-file loading, orchestration of
//! seed -> monodromy -> trace test, and text/JSON reporting.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use edml_core::critsys::{build_critical_system, randomize_square, CriticalSystem, Objective};
use edml_core::linalg::norm;
use edml_core::monodromy::{collect_fiber, newton_refine, MonodromyConfig, SolutionSet, Termination};
use edml_core::poly::{parse_problem, ObjectiveKind, Problem};
use edml_core::rng::Rng;
use edml_core::tracetest::{certify, TraceError, TraceReport};
use edml_core::track::TrackerConfig;
use edml_core::Complex64;

pub mod args;

pub use args::{Cli, Command};

/// Process exit codes for the failure modes a run can hit.
pub mod exit_codes {
    pub const PARSE_ERROR: i32 = 1;
    pub const SEED_FAILURE: i32 = 2;
    pub const TRACE_INCONCLUSIVE: i32 = 3;
    pub const BUDGET_EXHAUSTED: i32 = 4;
}

/// Error carrying the intended process exit code.
#[derive(Debug)]
pub struct RunError {
    pub exit_code: i32,
    pub message: String,
}

impl RunError {
    fn new(exit_code: i32, message: impl Into<String>) -> Self {
        RunError { exit_code, message: message.into() }
    }
}

fn re_im(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// One critical point in a report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointReport {
    pub x: Vec<[f64; 2]>,
    pub lambda: Vec<[f64; 2]>,
    pub residual: f64,
    pub real: bool,
    pub psi: [f64; 2],
}

/// Trace-test section of the JSON output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceJson {
    pub curve_point_count: usize,
    pub on_l2_count: usize,
    pub traces: [Vec<[f64; 2]>; 3],
    pub second_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<&TraceReport> for TraceJson {
    fn from(r: &TraceReport) -> Self {
        let conv = |v: &Vec<Complex64>| v.iter().map(|&z| re_im(z)).collect::<Vec<_>>();
        TraceJson {
            curve_point_count: r.curve_point_count,
            on_l2_count: r.on_l2_count,
            traces: [conv(&r.traces[0]), conv(&r.traces[1]), conv(&r.traces[2])],
            second_difference: r.second_difference,
            tolerance: r.tolerance,
            passed: r.passed,
        }
    }
}

/// Full run report; field order is the JSON schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub degree: usize,
    pub points: Vec<PointReport>,
    pub loops_used: usize,
    pub trace: Option<TraceJson>,
    pub seed: u64,
    pub termination_reason: String,
    pub u: Vec<[f64; 2]>,
}

/// Parses one complex scalar: decimal or rational real part with an
/// optional imaginary part, e.g. `2`, `-0.5`, `2/5`, `1+2i`, `-3i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty component".into());
    }
    fn parse_real(tok: &str) -> Result<f64, String> {
        let tok = tok.trim();
        if let Some((num, den)) = tok.split_once('/') {
            let n: f64 = num.trim().parse().map_err(|_| format!("bad number `{tok}`"))?;
            let d: f64 = den.trim().parse().map_err(|_| format!("bad number `{tok}`"))?;
            if d == 0.0 {
                return Err(format!("division by zero in `{tok}`"));
            }
            Ok(n / d)
        } else {
            tok.parse().map_err(|_| format!("bad number `{tok}`"))
        }
    }
    // split re/im at the last +/- that is not an exponent sign or leading
    let body = s.strip_suffix('i');
    match body {
        Some(body) => {
            let bytes = body.as_bytes();
            let mut split = None;
            for i in (1..bytes.len()).rev() {
                let c = bytes[i] as char;
                if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
                    split = Some(i);
                    break;
                }
            }
            match split {
                Some(i) => {
                    let re = parse_real(&body[..i])?;
                    let im_str = &body[i..];
                    let im = if im_str == "+" {
                        1.0
                    } else if im_str == "-" {
                        -1.0
                    } else {
                        parse_real(im_str)?
                    };
                    Ok(Complex64::new(re, im))
                }
                None => {
                    let im = match body {
                        "" | "+" => 1.0,
                        "-" => -1.0,
                        _ => parse_real(body)?,
                    };
                    Ok(Complex64::new(0.0, im))
                }
            }
        }
        None => Ok(Complex64::new(parse_real(s)?, 0.0)),
    }
}

/// Parses a comma-separated complex vector.
pub fn parse_u_vector(s: &str) -> Result<Vec<Complex64>, String> {
    s.split(',').map(parse_complex).collect()
}

fn load_problem(path: &str) -> Result<Problem, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::new(exit_codes::PARSE_ERROR, format!("cannot read {path}: {e}")))?;
    let problem = parse_problem(&text)
        .map_err(|e| RunError::new(exit_codes::PARSE_ERROR, format!("{path}: {e}")))?;
    if !problem.system.params().is_empty() {
        return Err(RunError::new(
            exit_codes::PARSE_ERROR,
            format!("{path}: model polynomials must not declare params (u is supplied separately)"),
        ));
    }
    Ok(problem)
}

struct Prepared {
    cs: CriticalSystem,
    u: Vec<Complex64>,
    master_seed: u64,
    tcfg: TrackerConfig,
}

fn prepare(cli: &Cli, path: &str) -> Result<Prepared, RunError> {
    let problem = load_problem(path)?;
    let objective = match problem.objective {
        Some(ObjectiveKind::Euclidean) => Objective::euclidean(problem.system.unknowns().len()),
        Some(ObjectiveKind::Likelihood) => Objective::likelihood(problem.system.unknowns().len()),
        None => {
            return Err(RunError::new(
                exit_codes::PARSE_ERROR,
                format!("{path}: no objective declared (add `objective: euclidean` or `objective: likelihood`)"),
            ))
        }
    };
    let n = problem.system.unknowns().len();
    let codim = problem.codim.unwrap_or_else(|| problem.system.n_polys());
    if codim > n {
        return Err(RunError::new(
            exit_codes::PARSE_ERROR,
            format!("{path}: codimension {codim} exceeds the ambient dimension {n}"),
        ));
    }
    let master_seed = cli.seed;
    let mut rng = Rng::seed_from_u64(master_seed);
    let mut rng_randomizer = rng.fork();
    let mut rng_u = rng.fork();
    let model = randomize_square(&problem.system, codim, None, &mut rng_randomizer)
        .map_err(|e| RunError::new(exit_codes::PARSE_ERROR, format!("{path}: {e}")))?;
    let u = match &cli.u {
        Some(text) => {
            let u = parse_u_vector(text)
                .map_err(|e| RunError::new(exit_codes::PARSE_ERROR, format!("--u: {e}")))?;
            if u.len() != n {
                return Err(RunError::new(
                    exit_codes::PARSE_ERROR,
                    format!("--u has {} components but the model has {} variables", u.len(), n),
                ));
            }
            u
        }
        None => {
            let scale = 1.0
                + model
                    .original()
                    .polys()
                    .iter()
                    .map(|p| p.max_coeff_norm())
                    .fold(0.0f64, f64::max);
            (0..n).map(|_| Complex64::new(scale * rng_u.gaussian(), 0.0)).collect()
        }
    };
    let cs = build_critical_system(model, objective)
        .map_err(|e| RunError::new(exit_codes::PARSE_ERROR, format!("{path}: {e}")))?;
    let mut tcfg = TrackerConfig::default();
    if let Some(tol) = cli.tol_endpoint {
        tcfg.endpoint_tol = tol;
    }
    Ok(Prepared { cs, u, master_seed, tcfg })
}

fn dedup_tol(cli: &Cli) -> f64 {
    cli.tol_dedup.unwrap_or(1e-6)
}

/// True when every coordinate of the point is within 1e-6 of the real axis.
fn is_real_point(coords: &[Complex64]) -> bool {
    coords.iter().all(|z| z.im.abs() <= 1e-6)
}

fn build_point_reports(cs: &CriticalSystem, u: &[Complex64], fiber: &SolutionSet) -> Vec<PointReport> {
    let n = cs.n();
    let u_real = u.iter().all(|z| z.im == 0.0);
    let mut reports: Vec<PointReport> = fiber
        .points()
        .iter()
        .map(|p| {
            let mut coords = p.coords.clone();
            let mut residual = p.residual;
            // reality is a property of the model point x alone: the
            // multipliers lambda pick up complex phases from the randomized
            // combinations even at real critical points
            let real = is_real_point(&coords[..n]);
            if real && u_real && is_real_point(&coords) {
                // fully real coordinates: polish the real part against the
                // real system to strip the numerically-zero imaginary dust
                let real_start: Vec<Complex64> =
                    coords.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
                let (polished, r) = newton_refine(&cs.system, u, &real_start, 1e-14, 10);
                if r <= 1e-8 * (1.0 + norm(&polished)) && is_real_point(&polished) {
                    coords = polished.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
                    residual = r;
                }
            }
            let x = &coords[..n];
            let psi = cs.objective.value(x, u);
            PointReport {
                x: x.iter().map(|&z| re_im(z)).collect(),
                lambda: coords[n..].iter().map(|&z| re_im(z)).collect(),
                residual,
                real,
                psi: re_im(psi),
            }
        })
        .collect();
    // real points first ordered by real psi (global minimizer first), then the
    // complex points in a deterministic coordinate order
    reports.sort_by(|a, b| {
        b.real
            .cmp(&a.real)
            .then_with(|| {
                if a.real && b.real {
                    a.psi[0].partial_cmp(&b.psi[0]).unwrap_or(std::cmp::Ordering::Equal)
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .then_with(|| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal))
    });
    reports
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::BoundReached => "solution-bound-reached",
        Termination::Stalled => "stalled",
        Termination::LoopBudgetExhausted => "loop-budget-exhausted",
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
    pub wall_time_ms: u128,
}

/// Runs solve/degree: seed, populate the fiber, optionally certify.
pub fn run_solve(cli: &Cli, path: &str) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let prep = prepare(cli, path)?;
    let Prepared { cs, u, master_seed, tcfg } = prep;
    let mut rng = Rng::seed_from_u64(master_seed ^ 0xed5eed);
    let seed_pt = edml_core::seed::seed_critical_point(&cs, &u, &mut rng, &tcfg)
        .map_err(|e| RunError::new(exit_codes::SEED_FAILURE, format!("seeding failed: {e}")))?;
    let mcfg = MonodromyConfig {
        max_loops: 100,
        solution_bound: cli.bound,
        stall_limit: 15,
        rng_seed: master_seed,
    };
    let (fiber, diag) = collect_fiber(&cs, &u, &[seed_pt.coords()], &mcfg, &tcfg);

    let mut exit_code = 0;
    if diag.termination == Termination::LoopBudgetExhausted {
        exit_code = exit_codes::BUDGET_EXHAUSTED;
    }

    let mut loops_used = diag.loops_run;
    let trace = if cli.certify {
        // certification gets its own, larger loop budget; the user bound
        // caps the fiber, not the sliced curve, and the curve witness set is
        // bigger than the fiber
        let cert_mcfg = MonodromyConfig { solution_bound: None, max_loops: 300, ..mcfg };
        match certify(&cs, &fiber, &u, &mut rng, &cert_mcfg, &tcfg) {
            Ok((report, _, cert_loops)) => {
                loops_used += cert_loops;
                if !report.passed && exit_code == 0 {
                    exit_code = exit_codes::BUDGET_EXHAUSTED;
                }
                Some(TraceJson::from(&report))
            }
            Err(e @ (TraceError::Inconclusive | TraceError::DegenerateSlice)) => {
                return Err(RunError::new(exit_codes::TRACE_INCONCLUSIVE, format!("{e}")));
            }
        }
    } else {
        None
    };

    let report = RunReport {
        degree: fiber.len(),
        points: build_point_reports(&cs, &u, &fiber),
        loops_used,
        trace,
        seed: master_seed,
        termination_reason: termination_name(diag.termination).to_string(),
        u: u.iter().map(|&z| re_im(z)).collect(),
    };
    Ok(RunOutcome { report, exit_code, wall_time_ms: started.elapsed().as_millis() })
}

/// Runs trace-check: rebuild the critical system, take the fiber from a
/// previous JSON report, and run the trace test on the sliced curve.
pub fn run_trace_check(cli: &Cli, path: &str, fiber_path: &str) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let prep = prepare(cli, path)?;
    let Prepared { cs, u, master_seed, tcfg } = prep;
    let text = std::fs::read_to_string(fiber_path).map_err(|e| {
        RunError::new(exit_codes::PARSE_ERROR, format!("cannot read {fiber_path}: {e}"))
    })?;
    let prior: RunReport = serde_json::from_str(&text).map_err(|e| {
        RunError::new(exit_codes::PARSE_ERROR, format!("{fiber_path}: invalid report JSON: {e}"))
    })?;
    let u = if cli.u.is_none() && !prior.u.is_empty() {
        prior.u.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    } else {
        u
    };
    let mut fiber = SolutionSet::new(cs.n() + cs.k(), dedup_tol(cli));
    for p in &prior.points {
        let coords: Vec<Complex64> = p
            .x
            .iter()
            .chain(p.lambda.iter())
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        let (coords, residual) = newton_refine(&cs.system, &u, &coords, tcfg.endpoint_tol, 10);
        if residual > 1e-8 * (1.0 + norm(&coords)) {
            return Err(RunError::new(
                exit_codes::PARSE_ERROR,
                format!("{fiber_path}: supplied point is not on the critical system (residual {residual:.2e})"),
            ));
        }
        fiber.insert_checked(coords, residual);
    }
    if fiber.is_empty() {
        return Err(RunError::new(exit_codes::PARSE_ERROR, format!("{fiber_path}: no points supplied")));
    }
    let mut rng = Rng::seed_from_u64(master_seed ^ 0x7ace7e57);
    let mcfg = MonodromyConfig { rng_seed: master_seed, max_loops: 300, ..Default::default() };
    let (trace, witness_loops) = match certify(&cs, &fiber, &u, &mut rng, &mcfg, &tcfg) {
        Ok((report, _, loops)) => (report, loops),
        Err(e) => return Err(RunError::new(exit_codes::TRACE_INCONCLUSIVE, format!("{e}"))),
    };
    let exit_code = if trace.passed { 0 } else { exit_codes::BUDGET_EXHAUSTED };
    let report = RunReport {
        degree: fiber.len(),
        points: build_point_reports(&cs, &u, &fiber),
        loops_used: witness_loops,
        trace: Some(TraceJson::from(&trace)),
        seed: master_seed,
        termination_reason: if trace.passed { "trace-passed" } else { "trace-failed" }.to_string(),
        u: u.iter().map(|&z| re_im(z)).collect(),
    };
    Ok(RunOutcome { report, exit_code, wall_time_ms: started.elapsed().as_millis() })
}

fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn fmt_complex(c: [f64; 2]) -> String {
    if c[1].abs() <= 1e-12 {
        sig6(c[0])
    } else if c[1] >= 0.0 {
        format!("{}+{}i", sig6(c[0]), sig6(c[1]))
    } else {
        format!("{}-{}i", sig6(c[0]), sig6(-c[1]))
    }
}

/// Human-readable report.
pub fn format_text(outcome: &RunOutcome, degree_only: bool) -> String {
    let r = &outcome.report;
    let mut s = String::new();
    let _ = writeln!(s, "degree: {}", r.degree);
    let _ = writeln!(
        s,
        "u: ({})",
        r.u.iter().map(|&c| fmt_complex(c)).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(s, "seed: {}", r.seed);
    let _ = writeln!(s, "loops: {}", r.loops_used);
    let _ = writeln!(s, "termination: {}", r.termination_reason);
    if !degree_only {
        for (i, p) in r.points.iter().enumerate() {
            let xs = p.x.iter().map(|&c| fmt_complex(c)).collect::<Vec<_>>().join(", ");
            let ls = p.lambda.iter().map(|&c| fmt_complex(c)).collect::<Vec<_>>().join(", ");
            let _ = writeln!(
                s,
                "point {}: x = ({}) lambda = ({}) psi = {} residual = {:.2e}{}",
                i + 1,
                xs,
                ls,
                fmt_complex(p.psi),
                p.residual,
                if p.real { " [real]" } else { "" }
            );
        }
    }
    if let Some(t) = &r.trace {
        let _ = writeln!(
            s,
            "trace: {} ({} curve points, {} on l2, second difference {:.2e}, tol {:.2e})",
            if t.passed { "passed" } else { "FAILED" },
            t.curve_point_count,
            t.on_l2_count,
            t.second_difference,
            t.tolerance
        );
    }
    let _ = writeln!(s, "wall time: {} ms", outcome.wall_time_ms);
    s
}
