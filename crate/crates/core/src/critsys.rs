//! Construction of the square Lagrange critical system G(x, lambda; u) for a
//! model and an objective: randomization of overdetermined models into
//! regular sequences, denominator clearing for the likelihood objective, and
//! the rank-based critical-conditions residual.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::linalg::{norm, rank, singular_values, Mat};
use crate::monodromy::SolutionSet;
use crate::poly::{ObjectiveKind, PolySystem, Polynomial, SystemError};
use crate::rng::Rng;

/// Objective function family Psi_u: Euclidean squared distance or the
/// likelihood monomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub n: usize,
}

impl Objective {
    pub fn euclidean(n: usize) -> Self {
        Objective { kind: ObjectiveKind::Euclidean, n }
    }

    pub fn likelihood(n: usize) -> Self {
        Objective { kind: ObjectiveKind::Likelihood, n }
    }

    /// Truncated gradient of Psi at (x, u): (x_i - u_i) for Euclidean,
    /// (u_i / x_i) for likelihood.
    pub fn gradient(&self, x: &[Complex64], u: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        assert_eq!(u.len(), self.n);
        match self.kind {
            ObjectiveKind::Euclidean => x.iter().zip(u).map(|(xi, ui)| xi - ui).collect(),
            ObjectiveKind::Likelihood => x.iter().zip(u).map(|(xi, ui)| ui / xi).collect(),
        }
    }

    /// Objective value Psi_u(x). The likelihood monomial uses the principal
    /// branch of the complex logarithm.
    pub fn value(&self, x: &[Complex64], u: &[Complex64]) -> Complex64 {
        match self.kind {
            ObjectiveKind::Euclidean => x.iter().zip(u).map(|(xi, ui)| (xi - ui) * (xi - ui)).sum(),
            ObjectiveKind::Likelihood => {
                let log_sum: Complex64 = x.iter().zip(u).map(|(xi, ui)| ui * xi.ln()).sum();
                log_sum.exp()
            }
        }
    }

    /// True when x avoids the forbidden locus H of the gradient denominators
    /// (the coordinate hyperplanes, for likelihood).
    pub fn off_forbidden_locus(&self, x: &[Complex64]) -> bool {
        match self.kind {
            ObjectiveKind::Euclidean => true,
            ObjectiveKind::Likelihood => {
                // distance to H is per-coordinate: a raw product test would
                // reject legitimate points in high ambient dimension (n
                // coordinates of size ~1/n have a product far below any
                // fixed cutoff)
                x.iter().all(|xi| xi.norm() > 1e-8)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    CodimTooLarge { codim: usize, polys: usize },
    RandomizerShape,
    RandomizerRankDeficient,
    System(SystemError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::CodimTooLarge { codim, polys } => {
                write!(f, "codim {codim} exceeds polynomial count {polys}")
            }
            ModelError::RandomizerShape => write!(f, "randomizer matrix has the wrong shape"),
            ModelError::RandomizerRankDeficient => write!(f, "randomizer matrix is rank deficient"),
            ModelError::System(e) => write!(f, "{e}"),
        }
    }
}

/// A model variety: the original (possibly overdetermined) equations plus a
/// square randomization of exactly `codim` combinations.
#[derive(Clone, Debug)]
pub struct Model {
    original: PolySystem,
    squared: PolySystem,
    codim: usize,
    randomizer: Mat,
}

impl Model {
    /// Ambient dimension n.
    pub fn ambient_dim(&self) -> usize {
        self.original.unknowns().len()
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    /// The unrandomized defining equations (coefficient-normalized).
    pub fn original(&self) -> &PolySystem {
        &self.original
    }

    /// The square system of `codim` random combinations.
    pub fn squared(&self) -> &PolySystem {
        &self.squared
    }

    pub fn randomizer(&self) -> &Mat {
        &self.randomizer
    }

    /// Jacobian of the squared system at x, rows = gradients of the k
    /// combinations.
    pub fn squared_jacobian(&self, x: &[Complex64]) -> Mat {
        self.squared.jacobian_rows_eqs(x, self.squared.unknowns())
    }

    /// max_j |f_hat_j(x)| relative residual of the squared system.
    pub fn squared_residual(&self, x: &[Complex64]) -> f64 {
        norm(&self.squared.eval_full(x))
    }

    /// True when all original polynomials vanish at x within
    /// 1e-8 * (1 + |x|).
    pub fn on_original(&self, x: &[Complex64]) -> bool {
        let tol = 1e-8 * (1.0 + norm(x));
        self.original.eval_full(x).iter().all(|v| v.norm() <= tol)
    }
}

/// Downscales a polynomial so its largest coefficient magnitude is at most 1.
/// Polynomials that are already small are left untouched so externally
/// meaningful scalings (and hence Lagrange multiplier values) survive.
fn normalize_poly(p: &Polynomial) -> Polynomial {
    let m = p.max_coeff_norm();
    if m > 1.0 {
        p.scale(Complex64::new(1.0 / m, 0.0))
    } else {
        p.clone()
    }
}

/// Replaces an overdetermined model by `codim` random combinations of its
/// equations (a regular sequence away from junk components). When `coeffs`
/// is omitted and the system is already square, the identity matrix is used.
pub fn randomize_square(
    original: &PolySystem,
    codim: usize,
    coeffs: Option<Mat>,
    rng: &mut Rng,
) -> Result<Model, ModelError> {
    let m = original.n_polys();
    if codim > m {
        return Err(ModelError::CodimTooLarge { codim, polys: m });
    }
    let normalized: Vec<Polynomial> = original.polys().iter().map(normalize_poly).collect();
    let original_norm = PolySystem::new(
        normalized.clone(),
        original.var_names().to_vec(),
        original.unknowns().to_vec(),
        original.params().to_vec(),
    )
    .map_err(ModelError::System)?;

    let randomizer = match coeffs {
        Some(c) => {
            if c.rows() != codim || c.cols() != m {
                return Err(ModelError::RandomizerShape);
            }
            if rank(&c, 1e-12) < codim {
                return Err(ModelError::RandomizerRankDeficient);
            }
            c
        }
        None if m == codim => Mat::identity(m),
        None => {
            let mut c = Mat::zeros(codim, m);
            for r in 0..codim {
                for j in 0..m {
                    c[(r, j)] = rng.disk_complex();
                }
            }
            c
        }
    };

    let squared_polys: Vec<Polynomial> = (0..codim)
        .map(|r| {
            let mut acc = Polynomial::zero(original.num_vars());
            for (j, p) in normalized.iter().enumerate() {
                acc = acc.add(&p.scale(randomizer[(r, j)]));
            }
            acc
        })
        .collect();
    let squared = PolySystem::new(
        squared_polys,
        original.var_names().to_vec(),
        original.unknowns().to_vec(),
        original.params().to_vec(),
    )
    .map_err(ModelError::System)?;

    Ok(Model { original: original_norm, squared, codim, randomizer })
}

/// The square Lagrange system G(x, lambda; u) in the affine chart
/// lambda_0 = 1: rows F(x) = 0 followed by the n gradient rows
/// grad(Psi)_i + sum_j lambda_j d f_j / d x_i = 0 (likelihood rows cleared
/// by x_i).
#[derive(Clone, Debug)]
pub struct CriticalSystem {
    pub model: Model,
    pub objective: Objective,
    /// Square parameterized system: unknowns (x_1..x_n, lam_1..lam_k),
    /// parameters (u_1..u_n).
    pub system: PolySystem,
}

impl CriticalSystem {
    pub fn n(&self) -> usize {
        self.objective.n
    }

    pub fn k(&self) -> usize {
        self.model.codim()
    }

    /// Splits a solution vector of the critical system into (x, lambda).
    pub fn split<'v>(&self, z: &'v [Complex64]) -> (&'v [Complex64], &'v [Complex64]) {
        z.split_at(self.n())
    }

    /// Residual of the critical system at (x, lambda) over parameters u.
    pub fn residual(&self, z: &[Complex64], u: &[Complex64]) -> f64 {
        norm(&self.system.eval(z, u))
    }
}

fn fresh_name(base: String, taken: &[String]) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// Builds the n+k square critical system for a model and objective.
pub fn build_critical_system(model: Model, objective: Objective) -> Result<CriticalSystem, ModelError> {
    let n = model.ambient_dim();
    assert_eq!(objective.n, n, "objective dimension must match the ambient dimension");
    let k = model.codim();
    let nv = n + k + n; // x, lambda, u

    let mut names: Vec<String> = model.squared().var_names()[..n].to_vec();
    for j in 1..=k {
        let nm = fresh_name(format!("lam{j}"), &names);
        names.push(nm);
    }
    for i in 1..=n {
        let nm = fresh_name(format!("u{i}"), &names);
        names.push(nm);
    }

    // x slots keep their indices; lambda_j at n+j-1; u_i at n+k+i-1
    let x_map: Vec<usize> = (0..n).collect();
    let lam_slot = |j: usize| n + j; // j in 0..k
    let u_slot = |i: usize| n + k + i; // i in 0..n

    let mut rows: Vec<Polynomial> = Vec::with_capacity(n + k);
    for p in model.squared().polys() {
        rows.push(p.lift(nv, &x_map));
    }
    for i in 0..n {
        // sum_j lambda_j * d f_hat_j / d x_i
        let mut lag = Polynomial::zero(nv);
        for (j, p) in model.squared().polys().iter().enumerate() {
            let d = p.differentiate(i).lift(nv, &x_map);
            lag = lag.add(&d.mul(&Polynomial::variable(nv, lam_slot(j))));
        }
        let xi = Polynomial::variable(nv, i);
        let ui = Polynomial::variable(nv, u_slot(i));
        let row = match objective.kind {
            // (x_i - u_i) + sum_j lambda_j df_j/dx_i
            ObjectiveKind::Euclidean => xi.sub(&ui).add(&lag),
            // cleared by x_i: u_i + x_i * sum_j lambda_j df_j/dx_i
            ObjectiveKind::Likelihood => ui.add(&xi.mul(&lag)),
        };
        rows.push(row);
    }

    let system = PolySystem::new(
        rows,
        names,
        (0..n + k).collect(),
        (n + k..nv).collect(),
    )
    .map_err(ModelError::System)?;
    Ok(CriticalSystem { model, objective, system })
}

/// Errors from the critical-conditions residual.
#[derive(Clone, Debug, PartialEq)]
pub enum CriticalConditionsError {
    OnForbiddenLocus,
}

impl fmt::Display for CriticalConditionsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "point lies on the forbidden locus of the objective gradient")
    }
}

/// Rank-based certificate that x is a critical point of Psi_u on the model:
/// max of |F(x)| and singular value number k+1 of the extended matrix
/// [grad Psi, grad f_1, ..., grad f_k]. Near-zero certifies rank <= k.
pub fn critical_conditions_residual(
    model: &Model,
    objective: &Objective,
    x: &[Complex64],
    u: &[Complex64],
) -> Result<f64, CriticalConditionsError> {
    if !objective.off_forbidden_locus(x) {
        return Err(CriticalConditionsError::OnForbiddenLocus);
    }
    let n = model.ambient_dim();
    let k = model.codim();
    let f_res = model.squared_residual(x);
    let grad_psi = objective.gradient(x, u);
    let jac = model.squared_jacobian(x); // k x n, rows = gradients
    let mut ext = Mat::zeros(n, k + 1);
    for i in 0..n {
        ext[(i, 0)] = grad_psi[i];
        for j in 0..k {
            ext[(i, j + 1)] = jac[(j, i)];
        }
    }
    let sv = singular_values(&ext);
    let sigma_next = sv.get(k).copied().unwrap_or(0.0);
    Ok(f_res.max(sigma_next))
}

/// Partition of fiber points into those on the original model and those on
/// junk components introduced by randomization.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComponentPartition {
    pub on_model: Vec<usize>,
    pub junk: Vec<usize>,
}

/// Splits points by whether all original polynomials vanish at their
/// x-coordinates (tolerance 1e-8 * (1 + |x|)).
pub fn classify_by_component(points: &SolutionSet, model: &Model) -> ComponentPartition {
    let n = model.ambient_dim();
    let mut part = ComponentPartition::default();
    for (i, p) in points.points().iter().enumerate() {
        let x = &p.coords[..n];
        if model.on_original(x) {
            part.on_model.push(i);
        } else {
            part.junk.push(i);
        }
    }
    part
}
