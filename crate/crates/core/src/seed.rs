//! Seeding: produce one verified critical point (x*, lambda*) over the base
//! parameters u, without any a-priori start system. A random point on the
//! model is found by intersecting with moving slices; a gradient-descent
//! homotopy in projective lambda-coordinates then deforms the gradient until
//! the point becomes critical.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::critsys::CriticalSystem;
use crate::linalg::norm;
use crate::monodromy::newton_refine;
use crate::poly::{ObjectiveKind, PolySystem, Polynomial};
use crate::rng::Rng;
use crate::track::{track, Homotopy, PathStatus, TrackerConfig};

const RETRIES: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeedError {
    /// No slice attempt produced a point on the model.
    NoModelPoint,
    /// Every gradient-descent attempt failed or landed at lambda_0 = 0.
    NoCriticalPoint,
}

impl fmt::Display for SeedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedError::NoModelPoint => write!(f, "failed to place a start point on the model"),
            SeedError::NoCriticalPoint => write!(f, "failed to deform the start point into a critical point"),
        }
    }
}

/// A verified seed for monodromy: chart coordinates (x, lambda_1..lambda_k)
/// with lambda_0 normalized to 1, plus its critical-system residual at u.
#[derive(Clone, Debug)]
pub struct SeedResult {
    pub x: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub residual: f64,
}

impl SeedResult {
    /// Chart coordinates (x, lambda) as one vector.
    pub fn coords(&self) -> Vec<Complex64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.lambda);
        v
    }
}

fn linear_through(num_vars: usize, coeffs: &[Complex64], point: &[Complex64]) -> Polynomial {
    // sum c_j x_j - c . point
    let mut terms: Vec<(Vec<u32>, Complex64)> = Vec::with_capacity(coeffs.len() + 1);
    let mut shift = Complex64::new(0.0, 0.0);
    for (j, &c) in coeffs.iter().enumerate() {
        let mut e = vec![0u32; num_vars];
        e[j] = 1;
        terms.push((e, c));
        shift += c * point[j];
    }
    terms.push((vec![0; num_vars], -shift));
    Polynomial::from_terms(num_vars, terms)
}

fn generic_linear(num_vars: usize, n_coords: usize, rng: &mut Rng) -> Polynomial {
    let mut terms: Vec<(Vec<u32>, Complex64)> = Vec::with_capacity(n_coords + 1);
    for j in 0..n_coords {
        let mut e = vec![0u32; num_vars];
        e[j] = 1;
        terms.push((e, rng.gaussian_complex()));
    }
    terms.push((vec![0; num_vars], rng.gaussian_complex()));
    Polynomial::from_terms(num_vars, terms)
}

/// Finds a generic point on the zero set of the squared system by a
/// cheater-style homotopy: the start slices pass through a random point
/// x-hat where the shifted equations f_j - f_j(x-hat) vanish, and both the
/// shift and the slices move to the target.
pub fn point_on_model(cs: &CriticalSystem, rng: &mut Rng, cfg: &TrackerConfig) -> Result<Vec<Complex64>, SeedError> {
    let model = &cs.model;
    let squared = model.squared();
    let n = model.ambient_dim();
    let k = model.codim();
    if n == k {
        // zero-dimensional model: nothing generic about the point, solve directly
        // by Newton from random starts
        for _ in 0..RETRIES * 4 {
            let x0: Vec<Complex64> = (0..n).map(|_| rng.gaussian_complex()).collect();
            let (x, r) = newton_refine(squared, &[], &x0, cfg.endpoint_tol, 50);
            if r <= 1e-10 * (1.0 + norm(&x)) {
                return Ok(x);
            }
        }
        return Err(SeedError::NoModelPoint);
    }
    for _ in 0..RETRIES {
        let x_hat: Vec<Complex64> = (0..n).map(|_| rng.gaussian_complex()).collect();
        let alpha = squared.eval_full(&x_hat);
        let mut start_polys: Vec<Polynomial> = squared
            .polys()
            .iter()
            .zip(&alpha)
            .map(|(p, a)| p.sub(&Polynomial::constant(n, *a)))
            .collect();
        let mut target_polys: Vec<Polynomial> = squared.polys().to_vec();
        for _ in 0..n - k {
            let coeffs: Vec<Complex64> = (0..n).map(|_| rng.gaussian_complex()).collect();
            start_polys.push(linear_through(n, &coeffs, &x_hat));
            target_polys.push(generic_linear(n, n, rng));
        }
        let names = squared.var_names()[..n].to_vec();
        let unknowns: Vec<usize> = (0..n).collect();
        let start_sys = PolySystem::new(start_polys, names.clone(), unknowns.clone(), Vec::new()).unwrap();
        let target_sys = PolySystem::new(target_polys, names, unknowns, Vec::new()).unwrap();
        let h = Homotopy::blend(&start_sys, &target_sys, rng.unit_complex());
        let r = track(&h, &x_hat, cfg);
        if r.status != PathStatus::Success {
            continue;
        }
        let x = r.endpoint;
        if norm(&squared.eval_full(&x)) <= 1e-10 * (1.0 + norm(&x)) {
            return Ok(x);
        }
    }
    Err(SeedError::NoModelPoint)
}

/// Builds the patched gradient-descent homotopy system H^a_K in unknowns
/// (x, lambda_0..lambda_k) with n artificial parameters p (the deformation
/// K*(1-t), encoded by moving p from K to 0).
fn gradient_descent_system(cs: &CriticalSystem, u: &[Complex64], a: &[Complex64]) -> PolySystem {
    let n = cs.n();
    let k = cs.k();
    let squared = cs.model.squared();
    let nv = n + (k + 1) + n; // x, lambda_0..lambda_k, p_1..p_n
    let x_map: Vec<usize> = (0..n).collect();
    let lam = |j: usize| n + j; // j in 0..=k
    let p_slot = |i: usize| n + k + 1 + i;

    let mut rows: Vec<Polynomial> = Vec::with_capacity(n + k + 1);
    for f in squared.polys() {
        rows.push(f.lift(nv, &x_map));
    }
    for i in 0..n {
        let mut lag = Polynomial::zero(nv);
        for (j, f) in squared.polys().iter().enumerate() {
            let d = f.differentiate(i).lift(nv, &x_map);
            lag = lag.add(&d.mul(&Polynomial::variable(nv, lam(j + 1))));
        }
        let xi = Polynomial::variable(nv, i);
        let lam0 = Polynomial::variable(nv, lam(0));
        let pi = Polynomial::variable(nv, p_slot(i));
        let row = match cs.objective.kind {
            // lambda_0 (x_i - u_i) + sum lambda_j df_j/dx_i - p_i
            ObjectiveKind::Euclidean => lam0
                .mul(&xi.sub(&Polynomial::constant(nv, u[i])))
                .add(&lag)
                .sub(&pi),
            // cleared: lambda_0 u_i + x_i sum lambda_j df_j/dx_i - p_i x_i
            ObjectiveKind::Likelihood => lam0
                .scale(u[i])
                .add(&xi.mul(&lag))
                .sub(&pi.mul(&xi)),
        };
        rows.push(row);
    }
    // projective patch lambda_0 + sum a_j lambda_j - a_0
    let mut patch = Polynomial::variable(nv, lam(0));
    for j in 1..=k {
        patch = patch.add(&Polynomial::variable(nv, lam(j)).scale(a[j]));
    }
    patch = patch.sub(&Polynomial::constant(nv, a[0]));
    rows.push(patch);

    let mut names: Vec<alloc::string::String> = squared.var_names()[..n].to_vec();
    for j in 0..=k {
        names.push(alloc::format!("_gd_lam{j}"));
    }
    for i in 1..=n {
        names.push(alloc::format!("_gd_p{i}"));
    }
    PolySystem::new(rows, names, (0..n + k + 1).collect(), (n + k + 1..nv).collect()).unwrap()
}

/// Deforms a model point into a critical point over u by the
/// gradient-descent homotopy with a random projective patch.
pub fn gradient_descent_start(
    cs: &CriticalSystem,
    x0: &[Complex64],
    u: &[Complex64],
    rng: &mut Rng,
    cfg: &TrackerConfig,
) -> Result<SeedResult, SeedError> {
    let n = cs.n();
    let k = cs.k();
    for _ in 0..RETRIES {
        // patch coefficients a_0..a_k; the start (x0, a_0, 0..0) satisfies the
        // patch row exactly
        let a: Vec<Complex64> = (0..=k).map(|_| rng.unit_complex() * (1.0 + rng.uniform())).collect();
        let sys = gradient_descent_system(cs, u, &a);
        // deformation K_i chosen so the start is an exact root at t = 0
        let kvec: Vec<Complex64> = match cs.objective.kind {
            ObjectiveKind::Euclidean => (0..n).map(|i| a[0] * (x0[i] - u[i])).collect(),
            ObjectiveKind::Likelihood => (0..n).map(|i| a[0] * u[i] / x0[i]).collect(),
        };
        let h = Homotopy::segment(&sys, kvec, vec![Complex64::new(0.0, 0.0); n]);
        let mut start: Vec<Complex64> = x0.to_vec();
        start.push(a[0]);
        start.extend(core::iter::repeat(Complex64::new(0.0, 0.0)).take(k));
        let r = track(&h, &start, cfg);
        if r.status != PathStatus::Success {
            continue;
        }
        let z = r.endpoint;
        let lam0 = z[n];
        let lam_norm = norm(&z[n..]);
        if lam0.norm() <= 1e-8 * (1.0 + lam_norm) {
            // critical point at infinity in the lambda chart; re-patch
            continue;
        }
        // convert to the chart lambda_0 = 1 and polish on the critical system
        let mut chart: Vec<Complex64> = z[..n].to_vec();
        for j in 1..=k {
            chart.push(z[n + j] / lam0);
        }
        let (chart, residual) = newton_refine(&cs.system, u, &chart, cfg.endpoint_tol, 20);
        if residual <= 1e-10 * (1.0 + norm(&chart)) {
            let lambda = chart[n..].to_vec();
            let x = chart[..n].to_vec();
            if cs.objective.off_forbidden_locus(&x) {
                return Ok(SeedResult { x, lambda, residual });
            }
        }
    }
    Err(SeedError::NoCriticalPoint)
}

/// Seeds by planting the parameters: a generic model point x0 and a random
/// multiplier vector lambda* solve the critical equations exactly over the
/// synthetic parameters u* determined by them (the gradient rows are linear
/// in u). The pair is then carried to the requested u by a parameter
/// homotopy. This avoids the junk attractors of the gradient-descent
/// deformation on models with large singular loci.
pub fn planted_seed(
    cs: &CriticalSystem,
    u: &[Complex64],
    rng: &mut Rng,
    cfg: &TrackerConfig,
) -> Result<SeedResult, SeedError> {
    let n = cs.n();
    let k = cs.k();
    let squared = cs.model.squared();
    for _ in 0..RETRIES {
        let Ok(x0) = point_on_model(cs, rng, cfg) else { continue };
        if !cs.objective.off_forbidden_locus(&x0) {
            continue;
        }
        // with a randomized overdetermined model, plant on the true model so
        // the carried point stays off the junk components
        if cs.model.original().n_polys() > k && !cs.model.on_original(&x0) {
            continue;
        }
        let lambda: Vec<Complex64> = (0..k).map(|_| rng.gaussian_complex()).collect();
        // combination c_i = sum_j lambda_j df_j/dx_i at x0
        let comb: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, f) in squared.polys().iter().enumerate() {
                    s += lambda[j] * f.differentiate(i).evaluate(&x0);
                }
                s
            })
            .collect();
        let u_star: Vec<Complex64> = match cs.objective.kind {
            // (x_i - u_i) + c_i = 0
            ObjectiveKind::Euclidean => (0..n).map(|i| x0[i] + comb[i]).collect(),
            // u_i + x_i c_i = 0
            ObjectiveKind::Likelihood => (0..n).map(|i| -x0[i] * comb[i]).collect(),
        };
        if u_star.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            continue;
        }
        let mut start = x0.clone();
        start.extend_from_slice(&lambda);
        let h = Homotopy::segment(&cs.system, u_star, u.to_vec());
        let r = track(&h, &start, cfg);
        if r.status != PathStatus::Success {
            continue;
        }
        let (chart, residual) = newton_refine(&cs.system, u, &r.endpoint, cfg.endpoint_tol, 20);
        if residual <= 1e-10 * (1.0 + norm(&chart)) && cs.objective.off_forbidden_locus(&chart[..n])
        {
            return Ok(SeedResult {
                x: chart[..n].to_vec(),
                lambda: chart[n..].to_vec(),
                residual,
            });
        }
    }
    Err(SeedError::NoCriticalPoint)
}

/// Produces one verified critical point over u. Retries fresh model points;
/// later attempts perturb u into complex position and track the result back
/// to the requested parameters.
pub fn seed_critical_point(
    cs: &CriticalSystem,
    u: &[Complex64],
    rng: &mut Rng,
    cfg: &TrackerConfig,
) -> Result<SeedResult, SeedError> {
    let mut model_point_failed = false;
    for attempt in 0..RETRIES {
        let Ok(x0) = point_on_model(cs, rng, cfg) else {
            model_point_failed = true;
            continue;
        };
        // with a randomized overdetermined model, insist on the true model
        // (not a junk component) so monodromy explores the right fiber
        if cs.model.original().n_polys() > cs.k() && !cs.model.on_original(&x0) {
            continue;
        }
        // from the third attempt on, seed over a complex perturbation of u and
        // track back, in case u itself is in special position
        let (u_seed, needs_return) = if attempt >= 2 {
            let pert: Vec<Complex64> = u
                .iter()
                .map(|ui| ui + Complex64::new(0.0, 1e-3) * rng.gaussian_complex())
                .collect();
            (pert, true)
        } else {
            (u.to_vec(), false)
        };
        let Ok(seed) = gradient_descent_start(cs, &x0, &u_seed, rng, cfg) else { continue };
        let seed = if needs_return {
            let h = Homotopy::segment(&cs.system, u_seed.clone(), u.to_vec());
            let r = track(&h, &seed.coords(), cfg);
            if r.status != PathStatus::Success {
                continue;
            }
            let (chart, residual) = newton_refine(&cs.system, u, &r.endpoint, cfg.endpoint_tol, 20);
            let n = cs.n();
            SeedResult { x: chart[..n].to_vec(), lambda: chart[n..].to_vec(), residual }
        } else {
            seed
        };
        if seed.residual <= 1e-10 * (1.0 + norm(&seed.coords()))
            && cs.objective.off_forbidden_locus(&seed.x)
        {
            return Ok(seed);
        }
    }
    // the gradient-descent deformation can be swamped by junk attractors
    // (e.g. positive-dimensional loci where all multipliers but one vanish);
    // fall back to planting the parameters around a generic model point
    if let Ok(seed) = planted_seed(cs, u, rng, cfg) {
        return Ok(seed);
    }
    if model_point_failed {
        Err(SeedError::NoModelPoint)
    } else {
        Err(SeedError::NoCriticalPoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critsys::{build_critical_system, randomize_square, Objective};
    use crate::poly::parse_system;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn circle_cs() -> CriticalSystem {
        let sys = parse_system("vars: x1 x2\nmodel: x1^2 + x2^2 - 1").unwrap();
        let mut rng = Rng::seed_from_u64(1);
        let model = randomize_square(&sys, 1, None, &mut rng).unwrap();
        build_critical_system(model, Objective::euclidean(2)).unwrap()
    }

    #[test]
    fn model_point_lands_on_circle() {
        let cs = circle_cs();
        let mut rng = Rng::seed_from_u64(21);
        let x = point_on_model(&cs, &mut rng, &TrackerConfig::default()).unwrap();
        let v = x[0] * x[0] + x[1] * x[1] - c(1.0);
        assert!(v.norm() < 1e-9, "off the circle by {}", v.norm());
    }

    #[test]
    fn circle_seed_is_critical() {
        let cs = circle_cs();
        let u = [c(2.0), c(0.3)];
        let mut rng = Rng::seed_from_u64(7);
        let seed = seed_critical_point(&cs, &u, &mut rng, &TrackerConfig::default()).unwrap();
        assert!(seed.residual <= 1e-10 * (1.0 + norm(&seed.coords())));
        // critical points of distance to the circle from an outside point lie
        // on the line through the origin and u
        let cross = seed.x[0] * c(0.3) - seed.x[1] * c(2.0);
        assert!(cross.norm() < 1e-8, "seed not aligned with u: {cross}");
    }

    #[test]
    fn likelihood_seed_avoids_forbidden_locus() {
        let sys = parse_system("vars: x1 x2\nmodel: x1 + x2 - 1").unwrap();
        let mut rng = Rng::seed_from_u64(2);
        let model = randomize_square(&sys, 1, None, &mut rng).unwrap();
        let cs = build_critical_system(model, Objective::likelihood(2)).unwrap();
        let u = [c(3.0), c(5.0)];
        let mut rng = Rng::seed_from_u64(4);
        let seed = seed_critical_point(&cs, &u, &mut rng, &TrackerConfig::default()).unwrap();
        // the ML-degree of the line is 1: x = (3/8, 5/8), lambda = -8
        assert!((seed.x[0] - c(0.375)).norm() < 1e-8);
        assert!((seed.x[1] - c(0.625)).norm() < 1e-8);
        assert!((seed.lambda[0] - c(-8.0)).norm() < 1e-6);
    }

    #[test]
    fn overdetermined_seed_lies_on_original_model() {
        let sys = parse_system(
            "vars: x1 x2 x3 x4\nmodel:\nx1*x3 - x2^2\nx2*x4 - x3^2\nx1*x4 - x2*x3",
        )
        .unwrap();
        let mut rng = Rng::seed_from_u64(3);
        let model = randomize_square(&sys, 2, None, &mut rng).unwrap();
        let cs = build_critical_system(model, Objective::euclidean(4)).unwrap();
        let u = [c(0.4), c(-2.0 / 7.0), c(5.0 / 6.0), c(3.0 / 7.0)];
        let mut rng = Rng::seed_from_u64(9);
        let seed = seed_critical_point(&cs, &u, &mut rng, &TrackerConfig::default()).unwrap();
        assert!(cs.model.on_original(&seed.x), "seed drifted to a junk component");
        assert!(seed.residual <= 1e-10 * (1.0 + norm(&seed.coords())));
    }
}
