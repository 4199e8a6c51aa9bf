//! Fiber population by monodromy: deduplicated solution sets and triangular
//! loops through randomized parameter values, with stall/bound/budget
//! stopping rules.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::critsys::CriticalSystem;
use crate::linalg::{lu_solve, norm};
use crate::poly::PolySystem;
use crate::rng::Rng;
use crate::track::{track_many, Homotopy, PathStatus, TrackerConfig};

/// A deduplicated endpoint with its residual at the base parameters.
#[derive(Clone, Debug)]
pub struct SolutionPoint {
    pub coords: Vec<Complex64>,
    pub residual: f64,
}

/// A set of solutions deduplicated by coordinate-wise infinity norm.
/// Membership never shrinks; insertion is the only mutation.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    n_coords: usize,
    dedup_tol: f64,
    points: Vec<SolutionPoint>,
}

fn inf_dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

impl SolutionSet {
    pub fn new(n_coords: usize, dedup_tol: f64) -> Self {
        SolutionSet { n_coords, dedup_tol, points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn points(&self) -> &[SolutionPoint] {
        &self.points
    }

    /// Distance to the nearest stored point, or infinity when empty.
    pub fn nearest_distance(&self, coords: &[Complex64]) -> f64 {
        self.points
            .iter()
            .map(|p| inf_dist(&p.coords, coords))
            .fold(f64::INFINITY, f64::min)
    }

    /// Inserts unless a stored point is within the dedup tolerance. Points
    /// closer than the tight collision tolerance 1e-9 are merged outright;
    /// callers are expected to have Newton-polished candidates first so the
    /// dedup gap is meaningful. Returns true when the point was new.
    pub fn insert_checked(&mut self, coords: Vec<Complex64>, residual: f64) -> bool {
        assert_eq!(coords.len(), self.n_coords);
        if self.nearest_distance(&coords) <= self.dedup_tol {
            return false;
        }
        self.points.push(SolutionPoint { coords, residual });
        true
    }
}

/// Plain Newton iteration on a parameterized square system at fixed
/// parameters. Returns the refined point and its residual.
pub fn newton_refine(
    system: &PolySystem,
    u: &[Complex64],
    z: &[Complex64],
    tol: f64,
    max_iters: usize,
) -> (Vec<Complex64>, f64) {
    let n = system.unknowns().len();
    let mut z = z.to_vec();
    let mut full = system.assemble(&z, u);
    for _ in 0..max_iters {
        let r = system.eval_full(&full);
        let jac = system.jacobian_rows_eqs(&full, system.unknowns());
        let neg: Vec<Complex64> = r.iter().map(|v| -v).collect();
        let Some(dz) = lu_solve(&jac, &neg) else { break };
        for i in 0..n {
            z[i] += dz[i];
            full[system.unknowns()[i]] = z[i];
        }
        if norm(&dz) <= tol * (1.0 + norm(&z)) {
            break;
        }
    }
    let residual = norm(&system.eval_full(&full));
    (z, residual)
}

/// Stopping rules for fiber population.
#[derive(Clone, Copy, Debug)]
pub struct MonodromyConfig {
    /// Hard budget on loops.
    pub max_loops: usize,
    /// Stop as soon as the fiber reaches this many points.
    pub solution_bound: Option<usize>,
    /// Stop after this many consecutive loops without a new point.
    pub stall_limit: usize,
    pub rng_seed: u64,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        MonodromyConfig { max_loops: 100, solution_bound: None, stall_limit: 15, rng_seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    BoundReached,
    Stalled,
    LoopBudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct MonodromyDiagnostics {
    pub loops_run: usize,
    /// New points discovered per loop, in order.
    pub new_points_per_loop: Vec<usize>,
    pub path_failures: usize,
    pub termination: Termination,
}

/// Draws the two intermediate vertices of a triangular loop
/// u0 -> u' -> u'' -> u0. Offsets are complex Gaussian with base scale
/// 1 + |u0|; half the loops inflate that scale by a log-uniform factor in
/// [10^-1, 10^2] so branch points far from the base still get encircled.
pub fn triangular_loop(u0: &[Complex64], rng: &mut Rng) -> [Vec<Complex64>; 2] {
    let factor =
        if rng.uniform() < 0.5 { 1.0 } else { libm::pow(10.0, -1.0 + 3.0 * rng.uniform()) };
    let scale = (1.0 + norm(u0)) * factor;
    let draw = |rng: &mut Rng| -> Vec<Complex64> {
        u0.iter().map(|ui| ui + scale * rng.gaussian_complex()).collect()
    };
    [draw(rng), draw(rng)]
}

/// Draws a random Moebius weight pair for one loop leg. The second weight is
/// a unit complex number with argument limited to (-pi/2, pi/2), which
/// bends the leg into an arc (in a random homotopy class around nearby branch
/// points) while keeping the denominator w0*(1-t) + w1*t away from zero.
pub fn leg_weights(rng: &mut Rng) -> (Complex64, Complex64) {
    let theta = (2.0 * rng.uniform() - 1.0) * core::f64::consts::PI / 2.0;
    (Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, theta))
}

/// Transports a batch of points around an explicit closed loop of parameter
/// vertices (last segment returns to the first vertex). When an rng is given,
/// each leg is bent into a random Moebius arc, which lets repeated loops
/// through the same vertices explore different homotopy classes. Returns one
/// endpoint per input, None where the path failed.
pub fn transport_loop(
    system: &PolySystem,
    points: &[Vec<Complex64>],
    vertices: &[Vec<Complex64>],
    cfg: &TrackerConfig,
    mut twist: Option<&mut Rng>,
) -> (Vec<Option<Vec<Complex64>>>, usize) {
    assert!(vertices.len() >= 2);
    let mut current: Vec<Option<Vec<Complex64>>> = points.iter().cloned().map(Some).collect();
    let mut failures = 0usize;
    let mut legs: Vec<(usize, usize)> = (0..vertices.len() - 1).map(|i| (i, i + 1)).collect();
    legs.push((vertices.len() - 1, 0));
    for (a, b) in legs {
        let weights = match twist.as_deref_mut() {
            Some(rng) => leg_weights(rng),
            None => (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)),
        };
        let hom =
            Homotopy::segment_weighted(system, vertices[a].clone(), vertices[b].clone(), weights);
        let starts: Vec<Vec<Complex64>> = current.iter().flatten().cloned().collect();
        let results = track_many(&hom, &starts, cfg);
        let mut it = results.into_iter();
        for slot in current.iter_mut() {
            if slot.is_some() {
                let r = it.next().unwrap();
                if r.status == PathStatus::Success {
                    *slot = Some(r.endpoint);
                } else {
                    *slot = None;
                    failures += 1;
                }
            }
        }
    }
    (current, failures)
}

/// Outcome of a single triangular loop merged into a set.
#[derive(Clone, Copy, Debug, Default)]
pub struct LoopStats {
    pub new_points: usize,
    pub path_failures: usize,
}

/// Runs one triangular monodromy loop from the base parameters and merges
/// new endpoints into the set. Endpoints are Newton-polished at the base
/// before dedup, and discarded unless their residual passes
/// 1e-8 * (1 + |z|).
pub fn run_loop(
    system: &PolySystem,
    u0: &[Complex64],
    set: &mut SolutionSet,
    rng: &mut Rng,
    cfg: &TrackerConfig,
) -> LoopStats {
    let [u1, u2] = triangular_loop(u0, rng);
    let vertices = [u0.to_vec(), u1, u2];
    let points: Vec<Vec<Complex64>> = set.points().iter().map(|p| p.coords.clone()).collect();
    let (endpoints, path_failures) = transport_loop(system, &points, &vertices, cfg, Some(rng));
    let mut stats = LoopStats { path_failures, ..LoopStats::default() };
    for z in endpoints.into_iter().flatten() {
        let (z, residual) = newton_refine(system, u0, &z, cfg.endpoint_tol, 10);
        if residual > 1e-8 * (1.0 + norm(&z)) {
            stats.path_failures += 1;
            continue;
        }
        if set.insert_checked(z, residual) {
            stats.new_points += 1;
        }
    }
    stats
}

/// Populates the fiber of a parameterized square system over `u0` starting
/// from the given seed points, looping until a stopping rule fires.
pub fn collect_fiber_system(
    system: &PolySystem,
    u0: &[Complex64],
    seeds: &[Vec<Complex64>],
    mcfg: &MonodromyConfig,
    tcfg: &TrackerConfig,
) -> (SolutionSet, MonodromyDiagnostics) {
    let mut set = SolutionSet::new(system.unknowns().len(), 1e-6);
    for s in seeds {
        let (z, residual) = newton_refine(system, u0, s, tcfg.endpoint_tol, 10);
        set.insert_checked(z, residual);
    }
    let mut rng = Rng::seed_from_u64(mcfg.rng_seed);
    let mut diag = MonodromyDiagnostics {
        loops_run: 0,
        new_points_per_loop: Vec::new(),
        path_failures: 0,
        termination: Termination::LoopBudgetExhausted,
    };
    let mut stall = 0usize;
    let bound_hit = |set: &SolutionSet| mcfg.solution_bound.map_or(false, |b| set.len() >= b);
    if bound_hit(&set) {
        diag.termination = Termination::BoundReached;
        return (set, diag);
    }
    while diag.loops_run < mcfg.max_loops {
        let stats = run_loop(system, u0, &mut set, &mut rng, tcfg);
        diag.loops_run += 1;
        diag.new_points_per_loop.push(stats.new_points);
        diag.path_failures += stats.path_failures;
        if bound_hit(&set) {
            diag.termination = Termination::BoundReached;
            return (set, diag);
        }
        if stats.new_points == 0 {
            stall += 1;
            if stall >= mcfg.stall_limit {
                diag.termination = Termination::Stalled;
                return (set, diag);
            }
        } else {
            stall = 0;
        }
    }
    (set, diag)
}

/// Populates the fiber of a critical system over `u0` from seed points
/// (x, lambda) in the chart coordinates.
pub fn collect_fiber(
    cs: &CriticalSystem,
    u0: &[Complex64],
    seeds: &[Vec<Complex64>],
    mcfg: &MonodromyConfig,
    tcfg: &TrackerConfig,
) -> (SolutionSet, MonodromyDiagnostics) {
    collect_fiber_system(&cs.system, u0, seeds, mcfg, tcfg)
}
