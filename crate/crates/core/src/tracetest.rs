//! Trace test for completeness: slice the critical variety to a curve by
//! freezing all but one degree of freedom of u, sweep a bilinear equation
//! l1(x) * l2(u) + t through three collinear values of t, and check that the
//! coordinate-wise sum of the witness points moves affine-linearly in t.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::critsys::CriticalSystem;
use crate::linalg::{cond_estimate, norm};
use crate::monodromy::{collect_fiber_system, MonodromyConfig, MonodromyDiagnostics, SolutionSet};
use crate::poly::{PolySystem, Polynomial};
use crate::rng::Rng;
use crate::track::{track_many, Homotopy, TrackerConfig};

/// The slicing data for the trace test, expressed over the full variable
/// space (x_1..x_n, lambda_1..lambda_k, u_1..u_n) of the critical system.
#[derive(Clone, Debug)]
pub struct TraceSetup {
    pub n: usize,
    pub k: usize,
    /// n-1 generic linear slices in u through the base point u0.
    pub slice_u: Vec<Polynomial>,
    /// Generic linear form in x (nonzero constant term).
    pub l1: Polynomial,
    /// Generic linear form in u vanishing at u0.
    pub l2: Polynomial,
    /// Three collinear values 0, s, 2s with s = 0.1 * gamma.
    pub t_values: [Complex64; 3],
}

impl TraceSetup {
    /// Draws random slicing data through u0.
    pub fn random(cs: &CriticalSystem, u0: &[Complex64], rng: &mut Rng) -> Self {
        let n = cs.n();
        let k = cs.k();
        let nv = n + k + n;
        let u_slot = |i: usize| n + k + i;
        let lin_u_through = |rng: &mut Rng| {
            let mut terms: Vec<(Vec<u32>, Complex64)> = Vec::new();
            let mut shift = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let c = rng.gaussian_complex();
                let mut e = vec![0u32; nv];
                e[u_slot(i)] = 1;
                terms.push((e, c));
                shift += c * u0[i];
            }
            terms.push((vec![0; nv], -shift));
            Polynomial::from_terms(nv, terms)
        };
        let slice_u: Vec<Polynomial> = (0..n - 1).map(|_| lin_u_through(rng)).collect();
        let l2 = lin_u_through(rng);
        let mut l1_terms: Vec<(Vec<u32>, Complex64)> = Vec::new();
        for i in 0..n {
            let mut e = vec![0u32; nv];
            e[i] = 1;
            l1_terms.push((e, rng.gaussian_complex()));
        }
        l1_terms.push((vec![0; nv], rng.gaussian_complex() + Complex64::new(1.0, 0.0)));
        let l1 = Polynomial::from_terms(nv, l1_terms);
        let gamma = rng.unit_complex();
        let s = gamma * 0.1;
        TraceSetup { n, k, slice_u, l1, l2, t_values: [Complex64::new(0.0, 0.0), s, 2.0 * s] }
    }

    /// Explicit slicing data (the forms must live over the nv = 2n + k
    /// variable space of the critical system).
    pub fn explicit(
        n: usize,
        k: usize,
        slice_u: Vec<Polynomial>,
        l1: Polynomial,
        l2: Polynomial,
        gamma: Complex64,
    ) -> Self {
        assert_eq!(slice_u.len(), n - 1);
        let s = gamma * 0.1;
        TraceSetup { n, k, slice_u, l1, l2, t_values: [Complex64::new(0.0, 0.0), s, 2.0 * s] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceError {
    /// The slice Jacobian is singular at a witness point.
    DegenerateSlice,
    /// A witness path failed to track to one of the test values of t.
    Inconclusive,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::DegenerateSlice => write!(f, "degenerate slice: Jacobian rank drop at a witness point"),
            TraceError::Inconclusive => write!(f, "trace test inconclusive: a witness path failed"),
        }
    }
}

/// The sliced curve system: unknowns (x, lambda, u), one parameter t.
/// Rows are the u-slices, the moving equation l1*l2 + t, and the critical
/// system.
pub fn build_trace_curve(cs: &CriticalSystem, setup: &TraceSetup) -> PolySystem {
    let n = setup.n;
    let k = setup.k;
    let nv_old = n + k + n;
    let nv = nv_old + 1;
    let id_map: Vec<usize> = (0..nv_old).collect();
    let mut rows: Vec<Polynomial> = Vec::with_capacity(2 * n + k);
    for s in &setup.slice_u {
        rows.push(s.lift(nv, &id_map));
    }
    let moving = setup.l1.mul(&setup.l2).lift(nv, &id_map).add(&Polynomial::variable(nv, nv_old));
    rows.push(moving);
    for p in cs.system.polys() {
        rows.push(p.lift(nv, &id_map));
    }
    let mut names = cs.system.var_names().to_vec();
    names.push(alloc::string::String::from("_trace_t"));
    PolySystem::new(rows, names, (0..nv_old).collect(), vec![nv_old]).unwrap()
}

/// Populates the witness set of the sliced curve at t = t_values[0] by
/// monodromy in t. Seeds are fiber points (x, lambda) over u0, extended by
/// the u coordinates.
pub fn collect_curve_points(
    curve: &PolySystem,
    fiber: &SolutionSet,
    u0: &[Complex64],
    mcfg: &MonodromyConfig,
    tcfg: &TrackerConfig,
) -> Result<(SolutionSet, MonodromyDiagnostics), TraceError> {
    let seeds: Vec<Vec<Complex64>> = fiber
        .points()
        .iter()
        .map(|p| {
            let mut z = p.coords.clone();
            z.extend_from_slice(u0);
            z
        })
        .collect();
    let t0 = [Complex64::new(0.0, 0.0)];
    if let Some(first) = seeds.first() {
        let full = curve.assemble(first, &t0);
        let jac = curve.jacobian_rows_eqs(&full, curve.unknowns());
        if cond_estimate(&jac) > 1e12 {
            return Err(TraceError::DegenerateSlice);
        }
    }
    let (set, diag) = collect_fiber_system(curve, &t0, &seeds, mcfg, tcfg);
    Ok((set, diag))
}

/// Result of one trace evaluation.
#[derive(Clone, Debug)]
pub struct TraceReport {
    /// Number of witness points on the sliced curve.
    pub curve_point_count: usize,
    /// Witness points lying on l2 = 0 but not l1 = 0 (they stay fixed as t
    /// moves and carry no trace information).
    pub on_l2_count: usize,
    /// Coordinate-wise traces over (x, u) at the three t values.
    pub traces: [Vec<Complex64>; 3],
    /// Max-norm of the second difference of the traces.
    pub second_difference: f64,
    /// Pass threshold actually used.
    pub tolerance: f64,
    pub passed: bool,
}

fn trace_of(points: &[Vec<Complex64>], n: usize, k: usize) -> Vec<Complex64> {
    // sum the x and u coordinates, dropping lambda
    let mut tr = vec![Complex64::new(0.0, 0.0); 2 * n];
    for p in points {
        for i in 0..n {
            tr[i] += p[i];
            tr[n + i] += p[n + k + i];
        }
    }
    tr
}

/// Tracks the witness set from t_values[0] to the other two test values and
/// evaluates the second difference of the coordinate-wise traces. The trace
/// is affine-linear in t exactly when the witness set is a complete fiber.
pub fn trace_test(
    curve: &PolySystem,
    witness: &SolutionSet,
    setup: &TraceSetup,
    tcfg: &TrackerConfig,
) -> Result<TraceReport, TraceError> {
    let [t0, t1, t2] = setup.t_values;
    let p0: Vec<Vec<Complex64>> = witness.points().iter().map(|p| p.coords.clone()).collect();

    let transport = |from: Complex64, to: Complex64, pts: &[Vec<Complex64>]| -> Result<Vec<Vec<Complex64>>, TraceError> {
        let h = Homotopy::segment(curve, vec![from], vec![to]);
        let results = track_many(&h, pts, tcfg);
        results
            .into_iter()
            .map(|r| if r.is_success() { Ok(r.endpoint) } else { Err(TraceError::Inconclusive) })
            .collect()
    };
    let p1 = transport(t0, t1, &p0)?;
    let p2 = transport(t1, t2, &p1)?;

    let (n, k) = (setup.n, setup.k);
    let traces = [trace_of(&p0, n, k), trace_of(&p1, n, k), trace_of(&p2, n, k)];
    let mut second = 0.0f64;
    for i in 0..2 * n {
        second = second.max((traces[0][i] - 2.0 * traces[1][i] + traces[2][i]).norm());
    }
    let scale = traces.iter().flat_map(|t| t.iter()).fold(0.0f64, |m, v| m.max(v.norm()));
    let tolerance = 1e-8 * (1.0 + scale);

    let mut on_l2_count = 0usize;
    for p in &p0 {
        let l2v = setup.l2.evaluate(p).norm();
        let l1v = setup.l1.evaluate(p).norm();
        if l2v <= 1e-8 * (1.0 + norm(p)) && l1v > 1e-4 {
            on_l2_count += 1;
        }
    }

    Ok(TraceReport {
        curve_point_count: p0.len(),
        on_l2_count,
        traces,
        second_difference: second,
        tolerance,
        passed: second <= tolerance,
    })
}

/// End-to-end certification: slice, populate the curve witness set by
/// t-monodromy, and run the trace test, continuing monodromy while the test
/// fails and loop budget remains. Returns the final report and the witness
/// set (useful for degree attribution).
pub fn certify(
    cs: &CriticalSystem,
    fiber: &SolutionSet,
    u0: &[Complex64],
    rng: &mut Rng,
    mcfg: &MonodromyConfig,
    tcfg: &TrackerConfig,
) -> Result<(TraceReport, SolutionSet, usize), TraceError> {
    let setup = TraceSetup::random(cs, u0, rng);
    let curve = build_trace_curve(cs, &setup);
    let (mut witness, diag) = collect_curve_points(&curve, fiber, u0, mcfg, tcfg)?;
    let mut loops_used = diag.loops_run;
    let mut report = trace_test(&curve, &witness, &setup, tcfg)?;
    let mut loop_rng = Rng::seed_from_u64(mcfg.rng_seed ^ 0x9e3779b97f4a7c15);
    while !report.passed && loops_used < mcfg.max_loops {
        let stats = crate::monodromy::run_loop(
            &curve,
            &[Complex64::new(0.0, 0.0)],
            &mut witness,
            &mut loop_rng,
            tcfg,
        );
        loops_used += 1;
        if stats.new_points > 0 {
            report = trace_test(&curve, &witness, &setup, tcfg)?;
        }
    }
    Ok((report, witness, loops_used))
}
