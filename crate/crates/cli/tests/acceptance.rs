//! Acceptance gate: one test per release criterion, each ending in a single
//! [PASS] line (a panic marks the criterion failed). Reference values come
//! from closed forms and from independent solvers (symbolic resultants and
//! the total-degree start system) frozen into the assertions.

use std::process::Command;
use std::time::Instant;

use edml_core::critsys::{
    build_critical_system, classify_by_component, randomize_square, CriticalSystem, Objective,
};
use edml_core::linalg::{norm, Mat};
use edml_core::monodromy::{collect_fiber, MonodromyConfig, SolutionSet};
use edml_core::poly::{parse_problem, parse_system, ObjectiveKind, Polynomial};
use edml_core::rng::Rng;
use edml_core::seed::seed_critical_point;
use edml_core::track::{total_degree_solve, TrackerConfig};
use edml_core::tracetest::{build_trace_curve, collect_curve_points, trace_test, TraceSetup};
use edml_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_edml")
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run_json(args: &[&str]) -> (serde_json::Value, f64) {
    let started = Instant::now();
    let out = Command::new(bin()).args(args).output().expect("failed to launch solver binary");
    let secs = started.elapsed().as_secs_f64();
    assert!(
        out.status.success(),
        "solver exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    (serde_json::from_slice(&out.stdout).expect("stdout is not valid JSON"), secs)
}

fn build_fixture_cs(name: &str, coeffs: Option<Mat>, rng_seed: u64) -> CriticalSystem {
    let src = std::fs::read_to_string(fixture(name)).unwrap();
    let prob = parse_problem(&src).unwrap();
    let n = prob.system.unknowns().len();
    let codim = prob.codim.unwrap_or(prob.system.n_polys());
    let mut rng = Rng::seed_from_u64(rng_seed);
    let model = randomize_square(&prob.system, codim, coeffs, &mut rng).unwrap();
    let objective = match prob.objective.unwrap_or(ObjectiveKind::Euclidean) {
        ObjectiveKind::Euclidean => Objective::euclidean(n),
        ObjectiveKind::Likelihood => Objective::likelihood(n),
    };
    build_critical_system(model, objective).unwrap()
}

fn fiber_over(cs: &CriticalSystem, u: &[Complex64], seed: u64) -> SolutionSet {
    let tcfg = TrackerConfig::default();
    let mut rng = Rng::seed_from_u64(seed ^ 0x5eed);
    let sp = seed_critical_point(cs, u, &mut rng, &tcfg).expect("seeding failed");
    let mcfg = MonodromyConfig { rng_seed: seed, ..Default::default() };
    let (set, _) = collect_fiber(cs, u, &[sp.coords()], &mcfg, &tcfg);
    set
}

fn cx(v: &serde_json::Value) -> Complex64 {
    c(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

// ---------------------------------------------------------------------------

/// Criterion 1: ED-degree of the ellipse is 4 and the four critical points
/// and their multipliers match the reference values at u = (0.75, -0.29).
#[test]
fn criterion_1_ellipse_ed_degree_and_points() {
    let (report, secs) = run_json(&[
        "solve",
        &fixture("ellipse.txt"),
        "--u",
        "0.75,-0.29",
        "--json",
    ]);
    assert!(secs < 10.0, "runtime {secs:.1}s exceeds 10s");
    assert_eq!(report["degree"].as_u64(), Some(4), "ED-degree must be 4");
    assert!(report["loops_used"].as_u64().unwrap() <= 100, "loop budget exceeded");

    // reference (x1, x2, lambda) triples in the lambda_0 = 1 chart
    let reference = [
        (0.252902, -0.814004, -5.38676),
        (0.598568, -0.0941507, -0.869654),
        (0.83295, -0.00662553, -2.09671),
        (0.844456, -0.333067, -0.346872),
    ];
    let points = report["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    for &(rx1, rx2, rlam) in &reference {
        let best = points
            .iter()
            .map(|p| {
                let x1 = cx(&p["x"][0]);
                let x2 = cx(&p["x"][1]);
                let lam = cx(&p["lambda"][0]);
                let dx = (x1 - c(rx1, 0.0)).norm().max((x2 - c(rx2, 0.0)).norm());
                (dx, (lam - c(rlam, 0.0)).norm())
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        assert!(best.0 <= 1e-3, "point ({rx1}, {rx2}) off by {}", best.0);
        assert!(best.1 <= 1e-4, "multiplier at ({rx1}, {rx2}) off by {}", best.1);
    }
    println!(
        "[PASS] criterion 1: ellipse ED-degree 4, all points and multipliers match ({secs:.1}s)"
    );
}

/// Criterion 2: the trace test on the sliced ellipse curve sees 6 witness
/// points (4 on l2), passes at 1e-8, and fails for every 5-point subset.
#[test]
fn criterion_2_ellipse_trace_certification() {
    let cs = build_fixture_cs("ellipse.txt", None, 7);
    let u0 = [c(0.75, 0.0), c(-0.29, 0.0)];
    let fiber = fiber_over(&cs, &u0, 13);
    assert_eq!(fiber.len(), 4);

    let tcfg = TrackerConfig::default();
    let mut rng = Rng::seed_from_u64(30);
    let setup = TraceSetup::random(&cs, &u0, &mut rng);
    let curve = build_trace_curve(&cs, &setup);
    let mcfg = MonodromyConfig { rng_seed: 37, ..Default::default() };
    let (witness, _) = collect_curve_points(&curve, &fiber, &u0, &mcfg, &tcfg).unwrap();
    assert_eq!(witness.len(), 6, "sliced curve must carry 6 points");

    let report = trace_test(&curve, &witness, &setup, &tcfg).unwrap();
    assert_eq!(report.on_l2_count, 4, "4 witness points lie on l2 at t = 0");
    assert!(
        report.second_difference <= 1e-8,
        "trace second difference {} > 1e-8",
        report.second_difference
    );
    assert!(report.passed);

    // completeness is sharp: dropping any single point breaks linearity
    for skip in 0..witness.len() {
        let mut subset = SolutionSet::new(witness.n_coords(), 1e-6);
        for (i, p) in witness.points().iter().enumerate() {
            if i != skip {
                subset.insert_checked(p.coords.clone(), p.residual);
            }
        }
        let sub = trace_test(&curve, &subset, &setup, &tcfg).unwrap();
        // the verdict must flip for every proper subset; with this slice the
        // deviation also clears the coarse 1e-3 mark (the absolute size of
        // the nonlinearity depends on the slice geometry)
        assert!(!sub.passed, "dropping point {skip} still certifies");
        assert!(
            sub.second_difference > 1e-3,
            "dropping point {skip} deviates only {}",
            sub.second_difference
        );
    }
    println!(
        "[PASS] criterion 2: ellipse trace test, 6 points / 4 on l2, second difference {:.1e}, all 5-point subsets fail",
        report.second_difference
    );
}

/// Criterion 3: closed-form trace of the parabola sliced by a moving line.
/// For x2 = x1^2 cut by 2x1 + 4x2 - 1 + t, the full trace is
/// (-1/2, 3/4 - t/2): Vieta on 4*x1^2 + 2*x1 + (t - 1) = 0 gives
/// x1-trace -1/2 and x2-trace (sum of squares) 1/4 - 2*(t-1)/4 = 3/4 - t/2.
#[test]
fn criterion_3_parabola_trace_closed_form() {
    let curve =
        parse_system("vars: x1 x2\nparams: t\nmodel:\nx1^2 - x2\n2*x1 + 4*x2 - 1 + t").unwrap();
    // witness at t = 0: roots of 4x^2 + 2x - 1
    let disc = 5.0f64.sqrt();
    let roots = [(-1.0 + disc) / 4.0, (-1.0 - disc) / 4.0];
    // layout n = 1, k = 0: x1 is traced as the x block and x2 fills the u
    // block; l1, l2 are inert placeholders
    let setup = TraceSetup::explicit(
        1,
        0,
        Vec::new(),
        Polynomial::constant(2, c(1.0, 0.0)),
        Polynomial::constant(2, c(1.0, 0.0)),
        c(3.0, 0.0), // t values 0, 0.3, 0.6
    );
    let tcfg = TrackerConfig::default();

    let mut full = SolutionSet::new(2, 1e-6);
    for r in roots {
        full.insert_checked(vec![c(r, 0.0), c(r * r, 0.0)], 0.0);
    }
    let report = trace_test(&curve, &full, &setup, &tcfg).unwrap();
    assert!(report.passed);
    for (j, &t) in setup.t_values.iter().enumerate() {
        let expect_x1 = c(-0.5, 0.0);
        let expect_x2 = c(0.75, 0.0) - t * 0.5;
        assert!(
            (report.traces[j][0] - expect_x1).norm() <= 1e-9,
            "trace x1 at t{j}: {} vs {expect_x1}",
            report.traces[j][0]
        );
        assert!(
            (report.traces[j][1] - expect_x2).norm() <= 1e-9,
            "trace x2 at t{j}: {} vs {expect_x2}",
            report.traces[j][1]
        );
    }

    for r in roots {
        let mut single = SolutionSet::new(2, 1e-6);
        single.insert_checked(vec![c(r, 0.0), c(r * r, 0.0)], 0.0);
        let sub = trace_test(&curve, &single, &setup, &tcfg).unwrap();
        assert!(
            sub.second_difference > 1e-2,
            "singleton branch trace nearly affine: {}",
            sub.second_difference
        );
    }
    println!(
        "[PASS] criterion 3: parabola trace equals (-1/2, 3/4 - t/2) to 1e-9; singleton subsets deviate > 1e-2"
    );
}

/// Criterion 4: the 2x3 Hankel surface with the reference randomization
/// (2,3,5; 7,11,13)/100 over u* = (2/5, -2/7, 5/6, 3/7). Independent
/// oracles (a symbolic resultant on the parametrization and the
/// total-degree start system) agree that the on-model fiber has 7 points,
/// not the 6 sometimes quoted; of these, 3 are real. The randomized square
/// system has one extra root on the junk plane
/// 9x2 - x3 - 16x4 = 81x1 - 145x3 - 16x4 = 0.
#[test]
fn criterion_4_hankel_fiber_against_oracles() {
    let started = Instant::now();
    let mut coeffs = Mat::zeros(2, 3);
    for (r, row) in [[2.0, 3.0, 5.0], [7.0, 11.0, 13.0]].iter().enumerate() {
        for (cc, &v) in row.iter().enumerate() {
            coeffs[(r, cc)] = c(v / 100.0, 0.0);
        }
    }
    let cs = build_fixture_cs("hankel.txt", Some(coeffs), 11);
    let u = [c(0.4, 0.0), c(-2.0 / 7.0, 0.0), c(5.0 / 6.0, 0.0), c(3.0 / 7.0, 0.0)];

    let fiber = fiber_over(&cs, &u, 43);
    assert_eq!(fiber.len(), 7, "on-model ED fiber must have 7 points");

    let n = cs.n();
    let is_real = |coords: &[Complex64]| coords.iter().all(|z| z.im.abs() <= 1e-6);
    let mut real_psi: Vec<f64> = fiber
        .points()
        .iter()
        .filter(|p| is_real(&p.coords[..n]))
        .map(|p| cs.objective.value(&p.coords[..n], &u).re)
        .collect();
    real_psi.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(real_psi.len(), 3, "exactly 3 real critical points");
    let expected_psi = [0.568618, 0.717626, 0.981488];
    for (got, want) in real_psi.iter().zip(expected_psi) {
        assert!((got - want).abs() <= 1e-4, "real objective value {got} vs {want}");
    }

    // a spot-check row with independently derived 6-digit coordinates
    let row = [0.365062, 0.0690207, 0.0130495, 0.00246721];
    let hit = fiber.points().iter().any(|p| {
        row.iter()
            .enumerate()
            .all(|(i, &ri)| (p.coords[i] - c(ri, 0.0)).norm() <= 2.5e-4)
    });
    assert!(hit, "reference real point not found in the fiber");

    // total-degree oracle on the specialized square system: 7 + 1 junk root
    let specialized = cs.system.specialize(&u);
    let mut rng = Rng::seed_from_u64(53);
    let (all_roots, _) =
        total_degree_solve(&specialized, &TrackerConfig::default(), &mut rng).unwrap();
    assert_eq!(all_roots.len(), 8, "randomized square system has 8 isolated roots");
    let part = classify_by_component(&all_roots, &cs.model);
    assert_eq!(part.on_model.len(), 7);
    assert_eq!(part.junk.len(), 1, "exactly one root on the junk component");
    let junk = &all_roots.points()[part.junk[0]].coords;
    let plane1 = 9.0 * junk[1] - junk[2] - 16.0 * junk[3];
    let plane2 = 81.0 * junk[0] - 145.0 * junk[2] - 16.0 * junk[3];
    assert!(
        plane1.norm() <= 1e-6 && plane2.norm() <= 1e-6,
        "junk root misses the junk plane: {plane1}, {plane2}"
    );

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "runtime {secs:.1}s exceeds 60s");
    println!(
        "[PASS] criterion 4: Hankel fiber 7 points (3 real, objective values match oracles), total-degree finds 8 with 1 junk on the reference plane ({secs:.1}s)"
    );
}

/// Criterion 5: ML-degree of 3x3 matrices of rank <= 2 with entries summing
/// to 1 is 10.
#[test]
fn criterion_5_ml_degree_3x3_rank2() {
    let (report, secs) = run_json(&[
        "solve",
        &fixture("matrix3x3_rank2.txt"),
        "--seed",
        "1",
        "--json",
    ]);
    assert!(secs < 300.0, "runtime {secs:.1}s exceeds 5 minutes");
    assert_eq!(report["degree"].as_u64(), Some(10), "ML-degree must be 10");
    println!("[PASS] criterion 5: 3x3 rank-2 ML-degree 10 ({secs:.1}s)");
}

/// Stretch (non-gating): ML-degree of 3x4 matrices of rank <= 2 with entries
/// summing to 1 is 26. Run with --ignored when double precision and time
/// permit.
#[test]
#[ignore]
fn criterion_5_stretch_ml_degree_3x4_rank2() {
    let (report, secs) = run_json(&[
        "solve",
        &fixture("matrix3x4_rank2.txt"),
        "--seed",
        "1",
        "--json",
    ]);
    assert_eq!(report["degree"].as_u64(), Some(26), "ML-degree must be 26");
    println!("[PASS] stretch: 3x4 rank-2 ML-degree 26 ({secs:.1}s)");
}

/// Criterion 6: the gating property suites. These mirror the randomized
/// suites in the core crate (tests/properties.rs) in one summary pass:
/// derivatives, fiber residuals, permutation, cardinality invariance,
/// orthogonality, forbidden-locus avoidance, and total-degree agreement.
#[test]
fn criterion_6_property_suites() {
    let tcfg = TrackerConfig::default();

    // 6a. finite-difference derivative agreement on 100 random polynomials
    let mut rng = Rng::seed_from_u64(3);
    for _ in 0..100 {
        let nv = 1 + (rng.uniform() * 4.0) as usize;
        let n_terms = 1 + (rng.uniform() * 6.0) as usize;
        let terms: Vec<(Vec<u32>, Complex64)> = (0..n_terms)
            .map(|_| {
                let e: Vec<u32> = (0..nv).map(|_| (rng.uniform() * 4.0) as u32).collect();
                (e, rng.gaussian_complex())
            })
            .collect();
        let poly = Polynomial::from_terms(nv, terms);
        let point: Vec<Complex64> = (0..nv).map(|_| rng.gaussian_complex()).collect();
        let h = 1e-6;
        for i in 0..nv {
            let sym = poly.differentiate(i).evaluate(&point);
            let mut fwd = point.clone();
            let mut bwd = point.clone();
            fwd[i] += c(h, 0.0);
            bwd[i] -= c(h, 0.0);
            let fd = (poly.evaluate(&fwd) - poly.evaluate(&bwd)) / c(2.0 * h, 0.0);
            assert!(
                (fd - sym).norm() <= 1e-5 * (1.0 + sym.norm()),
                "derivative mismatch: {sym} vs {fd}"
            );
        }
    }

    // 6b-6g over the example problems
    let names = ["circle.txt", "ellipse.txt", "line_likelihood.txt", "det2x2.txt", "hankel.txt"];
    for name in names {
        let cs = build_fixture_cs(name, None, 17);
        let n = cs.n();
        let mut urng = Rng::seed_from_u64(71);
        let u1: Vec<Complex64> = (0..n).map(|_| c(urng.gaussian() * 2.0 + 1.0, 0.0)).collect();
        let u2: Vec<Complex64> = (0..n).map(|_| c(urng.gaussian() * 2.0 + 1.0, 0.0)).collect();

        let mut counts = Vec::new();
        for u in [&u1, &u2] {
            for seed in [101u64, 202u64] {
                let set = fiber_over(&cs, u, seed);
                counts.push(set.len());
                for p in set.points() {
                    // fiber membership residual
                    let full = cs.system.assemble(&p.coords, u);
                    let r = norm(&cs.system.eval_full(&full));
                    assert!(r <= 1e-8 * (1.0 + norm(&p.coords)), "{name}: residual {r}");
                    // forbidden locus
                    if cs.objective.kind == ObjectiveKind::Likelihood {
                        assert!(
                            p.coords[..n].iter().all(|z| z.norm() > 1e-8),
                            "{name}: point on a coordinate hyperplane"
                        );
                    }
                    // ED orthogonality of x - u to the tangent space
                    if cs.objective.kind == ObjectiveKind::Euclidean {
                        let jac = cs.model.squared_jacobian(&p.coords[..n]);
                        for v in edml_core::linalg::nullspace(&jac, 1e-10) {
                            let inner: Complex64 = (0..n)
                                .map(|i| (p.coords[i] - u[i]) * v[i])
                                .sum();
                            assert!(
                                inner.norm()
                                    <= 1e-8 * (1.0 + norm(&p.coords[..n]) + norm(u)) * norm(&v),
                                "{name}: tangency violated by {}",
                                inner.norm()
                            );
                        }
                    }
                }
            }
        }
        // cardinality invariance across seeds and parameters
        assert!(
            counts.iter().all(|&d| d == counts[0]),
            "{name}: fiber cardinality varies: {counts:?}"
        );

        // total-degree oracle agreement where the Bezout bound is small
        let bezout: usize =
            cs.system.polys().iter().map(|p| p.total_degree() as usize).product();
        if cs.system.unknowns().len() <= 6 && bezout <= 200 {
            let specialized = cs.system.specialize(&u1);
            let mut rng = Rng::seed_from_u64(91);
            let (roots, _) = total_degree_solve(&specialized, &tcfg, &mut rng).unwrap();
            let on_model = roots
                .points()
                .iter()
                .filter(|p| cs.model.on_original(&p.coords[..n]))
                .count();
            assert_eq!(
                on_model,
                counts[0],
                "{name}: total-degree on-model count disagrees with monodromy"
            );
        }
    }
    println!("[PASS] criterion 6: all property suites hold on the bundled examples");
}
