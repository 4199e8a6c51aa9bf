//! Predictor-corrector continuation of homotopy paths, plus a total-degree
//! start-system solver used only as a desk-scale verification oracle.
//!
//! The predictor is explicit Euler on the Davidenko ODE, the corrector is
//! Newton at fixed t. Linear solves are dense complex LU with partial
//! pivoting; the systems here have at most a couple dozen unknowns.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{cond_estimate, lu_solve, norm, Mat};
use crate::monodromy::SolutionSet;
use crate::poly::{PolySystem, Polynomial};
use crate::rng::Rng;

/// Solution-norm threshold beyond which a path is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Jacobian condition threshold separating regular from singular endpoints.
pub const SINGULAR_COND: f64 = 1e12;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Step-size control and corrector tolerances for the tracker.
#[derive(Clone, Debug)]
pub struct TrackerConfig {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub step_increase_factor: f64,
    pub step_cut_factor: f64,
    pub successes_before_increase: usize,
    pub endpoint_tol: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            initial_step: 0.05,
            min_step: 1e-7,
            max_step: 0.1,
            newton_tol: 1e-10,
            max_newton_iters: 3,
            step_increase_factor: 2.0,
            step_cut_factor: 0.5,
            successes_before_increase: 5,
            endpoint_tol: 1e-11,
        }
    }
}

/// Outcome of tracking one path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStatus {
    Success,
    Diverged,
    StepTooSmall,
    SingularEndpoint,
    /// The start point failed the residual precondition.
    StartInvalid,
}

#[derive(Clone, Debug)]
pub struct PathResult {
    pub status: PathStatus,
    pub endpoint: Vec<Complex64>,
    pub residual: f64,
    pub steps_taken: usize,
    pub condition_estimate: f64,
}

impl PathResult {
    pub fn is_success(&self) -> bool {
        self.status == PathStatus::Success
    }
}

type DerivTable = Vec<Vec<Polynomial>>;

fn deriv_table(system: &PolySystem, slots: &[usize]) -> DerivTable {
    system
        .polys()
        .iter()
        .map(|p| slots.iter().map(|&s| p.differentiate(s)).collect())
        .collect()
}

enum HomotopyKind<'a> {
    /// Parameters move from `from` to `to` as t goes 0 to 1, along the
    /// Moebius arc u(t) = (w0*(1-t)*from + w1*t*to) / (w0*(1-t) + w1*t).
    /// Weights (1, 1) give the straight segment.
    Segment {
        system: &'a PolySystem,
        from: Vec<Complex64>,
        to: Vec<Complex64>,
        weights: (Complex64, Complex64),
        dz: DerivTable,
        du: DerivTable,
    },
    /// gamma-twisted convex combination of two systems in the same unknowns:
    /// H(z,t) = gamma*(1-t)*start(z) + t*target(z).
    Blend {
        start: &'a PolySystem,
        target: &'a PolySystem,
        gamma: Complex64,
        d_start: DerivTable,
        d_target: DerivTable,
    },
}

/// A square homotopy H(z, t) = 0 with t in [0, 1].
pub struct Homotopy<'a> {
    kind: HomotopyKind<'a>,
}

impl<'a> Homotopy<'a> {
    /// Parameter homotopy along one linear segment in parameter space.
    pub fn segment(system: &'a PolySystem, from: Vec<Complex64>, to: Vec<Complex64>) -> Self {
        assert!(system.is_square(), "homotopy system must be square in the unknowns");
        assert_eq!(from.len(), system.params().len());
        assert_eq!(to.len(), system.params().len());
        assert!(
            from.iter().chain(to.iter()).all(|z| z.re.is_finite() && z.im.is_finite()),
            "segment endpoints must be finite"
        );
        let one = Complex64::new(1.0, 0.0);
        Self::segment_weighted(system, from, to, (one, one))
    }

    /// Parameter homotopy from `from` to `to` along the Moebius arc
    /// determined by nonzero weights (w0, w1); weights (1, 1) recover the
    /// straight segment. Distinct weight ratios trace paths in different
    /// homotopy classes around the branch locus.
    pub fn segment_weighted(
        system: &'a PolySystem,
        from: Vec<Complex64>,
        to: Vec<Complex64>,
        weights: (Complex64, Complex64),
    ) -> Self {
        assert!(system.is_square(), "homotopy system must be square in the unknowns");
        assert_eq!(from.len(), system.params().len());
        assert_eq!(to.len(), system.params().len());
        assert!(
            from.iter().chain(to.iter()).all(|z| z.re.is_finite() && z.im.is_finite()),
            "segment endpoints must be finite"
        );
        assert!(weights.0.norm() > 0.0 && weights.1.norm() > 0.0);
        let dz = deriv_table(system, system.unknowns());
        let du = deriv_table(system, system.params());
        Homotopy { kind: HomotopyKind::Segment { system, from, to, weights, dz, du } }
    }

    /// Gamma-twisted straight-line homotopy between two parameter-free
    /// square systems over the same unknowns.
    pub fn blend(start: &'a PolySystem, target: &'a PolySystem, gamma: Complex64) -> Self {
        assert!(start.params().is_empty() && target.params().is_empty());
        assert_eq!(start.n_polys(), target.n_polys());
        assert_eq!(start.unknowns().len(), target.unknowns().len());
        assert!(target.is_square());
        let d_start = deriv_table(start, start.unknowns());
        let d_target = deriv_table(target, target.unknowns());
        Homotopy { kind: HomotopyKind::Blend { start, target, gamma, d_start, d_target } }
    }

    /// The same path traversed backwards (t -> 1 - t).
    pub fn reversed(&self) -> Homotopy<'a> {
        match &self.kind {
            HomotopyKind::Segment { system, from, to, weights, .. } => {
                Homotopy::segment_weighted(system, to.clone(), from.clone(), (weights.1, weights.0))
            }
            HomotopyKind::Blend { start, target, gamma, .. } => {
                Homotopy::blend(target, start, Complex64::new(1.0, 0.0) / gamma)
            }
        }
    }

    pub fn n_unknowns(&self) -> usize {
        match &self.kind {
            HomotopyKind::Segment { system, .. } => system.unknowns().len(),
            HomotopyKind::Blend { target, .. } => target.unknowns().len(),
        }
    }

    fn params_at(
        from: &[Complex64],
        to: &[Complex64],
        weights: (Complex64, Complex64),
        t: f64,
    ) -> Vec<Complex64> {
        let (w0, w1) = weights;
        let denom = w0 * (1.0 - t) + w1 * t;
        from.iter()
            .zip(to)
            .map(|(a, b)| (w0 * (1.0 - t) * a + w1 * t * b) / denom)
            .collect()
    }

    pub fn eval(&self, z: &[Complex64], t: f64) -> Vec<Complex64> {
        match &self.kind {
            HomotopyKind::Segment { system, from, to, weights, .. } => {
                let u = Self::params_at(from, to, *weights, t);
                system.eval(z, &u)
            }
            HomotopyKind::Blend { start, target, gamma, .. } => {
                let a = start.eval(z, &[]);
                let b = target.eval(z, &[]);
                a.iter()
                    .zip(&b)
                    .map(|(ai, bi)| gamma * (1.0 - t) * ai + t * bi)
                    .collect()
            }
        }
    }

    /// Jacobian with respect to the unknowns at (z, t); rows = equations.
    pub fn jac_z(&self, z: &[Complex64], t: f64) -> Mat {
        match &self.kind {
            HomotopyKind::Segment { system, from, to, weights, dz, .. } => {
                let u = Self::params_at(from, to, *weights, t);
                let full = system.assemble(z, &u);
                let mut m = Mat::zeros(system.n_polys(), system.unknowns().len());
                for (r, row) in dz.iter().enumerate() {
                    for (c, d) in row.iter().enumerate() {
                        m[(r, c)] = d.evaluate(&full);
                    }
                }
                m
            }
            HomotopyKind::Blend { start, target, gamma, d_start, d_target } => {
                let full_s = start.assemble(z, &[]);
                let full_t = target.assemble(z, &[]);
                let n = target.unknowns().len();
                let mut m = Mat::zeros(target.n_polys(), n);
                for r in 0..target.n_polys() {
                    for c in 0..n {
                        m[(r, c)] = gamma * (1.0 - t) * d_start[r][c].evaluate(&full_s)
                            + t * d_target[r][c].evaluate(&full_t);
                    }
                }
                m
            }
        }
    }

    /// dH/dt at (z, t).
    pub fn dt(&self, z: &[Complex64], t: f64) -> Vec<Complex64> {
        match &self.kind {
            HomotopyKind::Segment { system, from, to, weights, du, .. } => {
                let u = Self::params_at(from, to, *weights, t);
                let full = system.assemble(z, &u);
                let (w0, w1) = *weights;
                let denom = w0 * (1.0 - t) + w1 * t;
                let speed = w0 * w1 / (denom * denom);
                let dir: Vec<Complex64> =
                    from.iter().zip(to).map(|(a, b)| speed * (b - a)).collect();
                du.iter()
                    .map(|row| {
                        let mut s = zero();
                        for (d, v) in row.iter().zip(&dir) {
                            s += d.evaluate(&full) * v;
                        }
                        s
                    })
                    .collect()
            }
            HomotopyKind::Blend { start, target, gamma, .. } => {
                let a = start.eval(z, &[]);
                let b = target.eval(z, &[]);
                a.iter().zip(&b).map(|(ai, bi)| bi - gamma * ai).collect()
            }
        }
    }
}

fn vec_is_bad(z: &[Complex64]) -> bool {
    z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) || norm(z) > DIVERGENCE_NORM
}

/// Newton iteration for H(., t) = 0 starting at z. Returns the corrected
/// point when the last update is below tol*(1 + |z|); None otherwise.
fn newton_correct(
    h: &Homotopy<'_>,
    z: &[Complex64],
    t: f64,
    tol: f64,
    max_iters: usize,
) -> Option<Vec<Complex64>> {
    let mut z = z.to_vec();
    for _ in 0..max_iters {
        let r = h.eval(&z, t);
        let j = h.jac_z(&z, t);
        let neg_r: Vec<Complex64> = r.iter().map(|v| -v).collect();
        let delta = lu_solve(&j, &neg_r)?;
        for (zi, d) in z.iter_mut().zip(&delta) {
            *zi += d;
        }
        if vec_is_bad(&z) {
            return None;
        }
        if norm(&delta) <= tol * (1.0 + norm(&z)) {
            return Some(z);
        }
    }
    None
}

/// Tracks one solution path of `h` from t = 0 to t = 1.
pub fn track(h: &Homotopy<'_>, start: &[Complex64], cfg: &TrackerConfig) -> PathResult {
    let fail = |status: PathStatus, z: Vec<Complex64>, steps: usize| {
        let residual = if vec_is_bad(&z) { f64::INFINITY } else { norm(&h.eval(&z, 1.0)) };
        PathResult { status, endpoint: z, residual, steps_taken: steps, condition_estimate: f64::INFINITY }
    };

    let r0 = norm(&h.eval(start, 0.0));
    if r0 > cfg.newton_tol * (1.0 + norm(start)) {
        return fail(PathStatus::StartInvalid, start.to_vec(), 0);
    }

    let mut z = start.to_vec();
    let mut t = 0.0f64;
    let mut step = cfg.initial_step;
    let mut consec = 0usize;
    let mut steps = 0usize;
    let step_cap = 100_000usize;

    while t < 1.0 {
        steps += 1;
        if steps > step_cap {
            return fail(PathStatus::StepTooSmall, z, steps);
        }
        let dt_step = step.min(1.0 - t);
        // explicit Euler predictor on the Davidenko ODE
        let predicted = {
            let j = h.jac_z(&z, t);
            let rhs: Vec<Complex64> = h.dt(&z, t).iter().map(|v| -v).collect();
            lu_solve(&j, &rhs).map(|dzdt| {
                z.iter()
                    .zip(&dzdt)
                    .map(|(zi, di)| zi + di * Complex64::new(dt_step, 0.0))
                    .collect::<Vec<_>>()
            })
        };
        let corrected = predicted.and_then(|zp| {
            if vec_is_bad(&zp) {
                None
            } else {
                newton_correct(h, &zp, t + dt_step, cfg.newton_tol, cfg.max_newton_iters)
            }
        });
        match corrected {
            Some(zc) => {
                z = zc;
                t += dt_step;
                consec += 1;
                if consec >= cfg.successes_before_increase {
                    step = (step * cfg.step_increase_factor).min(cfg.max_step);
                    consec = 0;
                }
                if vec_is_bad(&z) {
                    return fail(PathStatus::Diverged, z, steps);
                }
            }
            None => {
                consec = 0;
                step *= cfg.step_cut_factor;
                if step < cfg.min_step {
                    return fail(PathStatus::StepTooSmall, z, steps);
                }
            }
        }
    }

    // endpoint polish at t = 1 down to the endpoint tolerance
    for _ in 0..20 {
        if norm(&h.eval(&z, 1.0)) <= cfg.endpoint_tol * (1.0 + norm(&z)) {
            break;
        }
        match newton_correct(h, &z, 1.0, cfg.endpoint_tol, 2) {
            Some(zc) => z = zc,
            None => break,
        }
    }
    if vec_is_bad(&z) {
        return fail(PathStatus::Diverged, z, steps);
    }
    let residual = norm(&h.eval(&z, 1.0));
    let cond = cond_estimate(&h.jac_z(&z, 1.0));
    if residual > cfg.endpoint_tol * (1.0 + norm(&z)) {
        return fail(PathStatus::StepTooSmall, z, steps);
    }
    if cond > SINGULAR_COND {
        return PathResult {
            status: PathStatus::SingularEndpoint,
            endpoint: z,
            residual,
            steps_taken: steps,
            condition_estimate: cond,
        };
    }
    PathResult { status: PathStatus::Success, endpoint: z, residual, steps_taken: steps, condition_estimate: cond }
}

/// Tracks a batch of start points; per-path failures are recorded in the
/// results and never abort the batch. Results are in input order.
pub fn track_many(h: &Homotopy<'_>, starts: &[Vec<Complex64>], cfg: &TrackerConfig) -> Vec<PathResult> {
    starts.iter().map(|s| track(h, s, cfg)).collect()
}

/// Errors from the total-degree oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum TotalDegreeError {
    HasParameters,
    NotSquare,
    TooLarge { unknowns: usize, bezout: u64 },
}

impl core::fmt::Display for TotalDegreeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TotalDegreeError::HasParameters => write!(f, "bind parameters before the total-degree solve"),
            TotalDegreeError::NotSquare => write!(f, "total-degree solve needs a square system"),
            TotalDegreeError::TooLarge { unknowns, bezout } => write!(
                f,
                "total-degree oracle is desk-scale only (unknowns {unknowns} > 6 or Bezout {bezout} > 200)"
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TotalDegreeDiagnostics {
    pub paths_tracked: usize,
    pub path_failures: usize,
    pub excessive_failures: bool,
}

/// Solves a square parameter-free system by tracking all Bezout-many paths
/// from the start system {z_i^{d_i} - r_i} along a gamma-twisted straight
/// line. Returns deduplicated finite nonsingular endpoints.
pub fn total_degree_solve(
    system: &PolySystem,
    cfg: &TrackerConfig,
    rng: &mut Rng,
) -> Result<(SolutionSet, TotalDegreeDiagnostics), TotalDegreeError> {
    if !system.params().is_empty() {
        return Err(TotalDegreeError::HasParameters);
    }
    if !system.is_square() {
        return Err(TotalDegreeError::NotSquare);
    }
    let n = system.unknowns().len();
    let degrees: Vec<u32> = system.polys().iter().map(|p| p.total_degree().max(1)).collect();
    let bezout: u64 = degrees.iter().map(|&d| d as u64).product();
    if n > 6 || bezout > 200 {
        return Err(TotalDegreeError::TooLarge { unknowns: n, bezout });
    }

    // start system z_i^{d_i} - r_i with random complex r_i off the origin
    let radii: Vec<Complex64> = (0..n).map(|_| rng.disk_complex() * 2.0 + rng.unit_complex()).collect();
    let start_polys: Vec<Polynomial> = (0..n)
        .map(|i| {
            let mut e = vec![0u32; n];
            e[i] = degrees[i];
            Polynomial::from_terms(n, vec![(e, Complex64::new(1.0, 0.0)), (vec![0; n], -radii[i])])
        })
        .collect();
    let start_sys = PolySystem::new(
        start_polys,
        system.var_names().to_vec(),
        (0..n).collect(),
        Vec::new(),
    )
    .expect("start system is well formed");

    // all roots of the start system: d_i-th roots of r_i per coordinate
    let coord_roots: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let d = degrees[i];
            let r = radii[i];
            let mag = libm::pow(r.norm(), 1.0 / d as f64);
            let arg = r.arg() / d as f64;
            (0..d)
                .map(|k| {
                    let theta = arg + 2.0 * core::f64::consts::PI * k as f64 / d as f64;
                    Complex64::new(mag * libm::cos(theta), mag * libm::sin(theta))
                })
                .collect()
        })
        .collect();
    let mut starts: Vec<Vec<Complex64>> = vec![Vec::new()];
    for roots in &coord_roots {
        let mut next = Vec::with_capacity(starts.len() * roots.len());
        for s in &starts {
            for &r in roots {
                let mut s2 = s.clone();
                s2.push(r);
                next.push(s2);
            }
        }
        starts = next;
    }

    let gamma = rng.unit_complex();
    let h = Homotopy::blend(&start_sys, system, gamma);
    let results = track_many(&h, &starts, cfg);

    let mut set = SolutionSet::new(n, 1e-6);
    let mut failures = 0usize;
    for r in &results {
        match r.status {
            PathStatus::Success => {
                set.insert_checked(r.endpoint.clone(), r.residual);
            }
            PathStatus::Diverged | PathStatus::SingularEndpoint => {}
            _ => failures += 1,
        }
    }
    let diag = TotalDegreeDiagnostics {
        paths_tracked: results.len(),
        path_failures: failures,
        excessive_failures: failures * 5 > results.len(),
    };
    Ok((set, diag))
}
