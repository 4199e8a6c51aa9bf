//! Dense complex linear algebra for the small square systems that appear in
//! path tracking: LU with partial pivoting for solves, one-sided Jacobi SVD
//! for singular values, condition estimates and numerical null spaces.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..self.cols {
                    s += self[(r, c)] * v[c];
                }
                s
            })
            .collect()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Solves `A x = b` by LU with partial pivoting. Returns `None` when a pivot
/// underflows (numerically singular matrix).
pub fn lu_solve(a: &Mat, b: &[Complex64]) -> Option<Vec<Complex64>> {
    assert_eq!(a.rows, a.cols, "lu_solve needs a square matrix");
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    let mut lu = a.clone();
    let mut x: Vec<Complex64> = b.to_vec();
    for k in 0..n {
        // pivot
        let mut p = k;
        let mut best = lu[(k, k)].norm();
        for r in k + 1..n {
            let v = lu[(r, k)].norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < f64::MIN_POSITIVE * 16.0 {
            return None;
        }
        if p != k {
            for c in 0..n {
                let t = lu[(k, c)];
                lu[(k, c)] = lu[(p, c)];
                lu[(p, c)] = t;
            }
            x.swap(k, p);
        }
        let piv = lu[(k, k)];
        for r in k + 1..n {
            let f = lu[(r, k)] / piv;
            lu[(r, k)] = f;
            for c in k + 1..n {
                let v = lu[(k, c)];
                lu[(r, c)] -= f * v;
            }
            let xk = x[k];
            x[r] -= f * xk;
        }
    }
    // back substitution
    for k in (0..n).rev() {
        for c in k + 1..n {
            let v = x[c];
            x[k] -= lu[(k, c)] * v;
        }
        x[k] /= lu[(k, k)];
    }
    Some(x)
}

/// Singular value decomposition of an `m x n` matrix by one-sided Jacobi
/// rotations on the columns. Returns singular values in descending order and
/// the right singular vectors as columns of `v`.
pub struct Svd {
    pub values: Vec<f64>,
    pub v: Mat,
}

pub fn svd(a: &Mat) -> Svd {
    let m = a.rows;
    let n = a.cols;
    let mut w = a.clone();
    let mut v = Mat::identity(n);
    let eps = 1e-15;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let cp = w[(r, p)];
                    let cq = w[(r, q)];
                    app += cp.norm_sqr();
                    aqq += cq.norm_sqr();
                    apq += cp.conj() * cq;
                }
                let mag = apq.norm();
                if mag <= eps * libm::sqrt(app * aqq) || mag == 0.0 {
                    continue;
                }
                off = true;
                // phase so the 2x2 Gram block becomes real symmetric
                let phase = apq / mag;
                let zeta = (aqq - app) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                // apply the rotation to columns p, q of W and V
                for r in 0..m {
                    let cp = w[(r, p)];
                    let cq = w[(r, q)];
                    w[(r, p)] = cp * c - cq * phase.conj() * s;
                    w[(r, q)] = cp * phase * s + cq * c;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c - vq * phase.conj() * s;
                    v[(r, q)] = vp * phase * s + vq * c;
                }
            }
        }
        if !off {
            break;
        }
    }
    let mut values: Vec<f64> = (0..n)
        .map(|cidx| {
            let mut s = 0.0;
            for r in 0..m {
                s += w[(r, cidx)].norm_sqr();
            }
            libm::sqrt(s)
        })
        .collect();
    // sort columns of V along with the values
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    let mut vs = Mat::zeros(n, n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vs[(r, new_c)] = v[(r, old_c)];
        }
    }
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Svd { values, v: vs }
}

/// Singular values only, descending.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    svd(a).values
}

/// 2-norm condition number estimate; `f64::INFINITY` when the smallest
/// singular value underflows.
pub fn cond_estimate(a: &Mat) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        (Some(_), _) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Orthonormal basis of the numerical null space of `a`: right singular
/// vectors whose singular value is at most `tol * sigma_max`.
pub fn nullspace(a: &Mat, tol: f64) -> Vec<Vec<Complex64>> {
    let d = svd(a);
    let smax = d.values.first().copied().unwrap_or(0.0);
    let thresh = tol * if smax > 0.0 { smax } else { 1.0 };
    (0..a.cols)
        .filter(|&c| d.values[c] <= thresh)
        .map(|c| d.v.col(c))
        .collect()
}

/// Numerical rank at relative tolerance `tol`.
pub fn rank(a: &Mat, tol: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Euclidean norm of a complex vector.
pub fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Max-norm of a complex vector.
pub fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Unconjugated (bilinear) dot product.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = Rng::seed_from_u64(7);
        for n in 1..=8 {
            let mut a = Mat::zeros(n, n);
            for r in 0..n {
                for ci in 0..n {
                    a[(r, ci)] = rng.gaussian_complex();
                }
            }
            let x_true: Vec<Complex64> = (0..n).map(|_| rng.gaussian_complex()).collect();
            let b = a.mul_vec(&x_true);
            let x = lu_solve(&a, &b).unwrap();
            for (xi, ti) in x.iter().zip(&x_true) {
                assert!((xi - ti).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn lu_detects_singular() {
        let mut a = Mat::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        a[(0, 1)] = c(2.0, 0.0);
        a[(1, 0)] = c(2.0, 0.0);
        a[(1, 1)] = c(4.0, 0.0);
        assert!(lu_solve(&a, &[c(1.0, 0.0), c(1.0, 0.0)]).is_none());
    }

    #[test]
    fn svd_recovers_diagonal() {
        let mut a = Mat::zeros(3, 3);
        a[(0, 0)] = c(3.0, 0.0);
        a[(1, 1)] = c(0.0, 2.0);
        a[(2, 2)] = c(-1.0, 0.0);
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 2.0).abs() < 1e-12);
        assert!((sv[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_frobenius_and_orthogonality() {
        let mut rng = Rng::seed_from_u64(11);
        for (m, n) in [(5, 5), (6, 3), (3, 6), (4, 2)] {
            let mut a = Mat::zeros(m, n);
            let mut fro = 0.0;
            for r in 0..m {
                for ci in 0..n {
                    let z = rng.gaussian_complex();
                    fro += z.norm_sqr();
                    a[(r, ci)] = z;
                }
            }
            let d = svd(&a);
            let sum_sq: f64 = d.values.iter().map(|s| s * s).sum();
            assert!((sum_sq - fro).abs() < 1e-9 * (1.0 + fro));
            // A*v_i pairwise orthogonal with norms = sigma_i
            let avs: Vec<Vec<Complex64>> = (0..n).map(|ci| a.mul_vec(&d.v.col(ci))).collect();
            for i in 0..n {
                assert!((norm(&avs[i]) - d.values[i]).abs() < 1e-9 * (1.0 + d.values[i]));
                for j in i + 1..n {
                    let h: Complex64 = avs[i].iter().zip(&avs[j]).map(|(x, y)| x.conj() * y).sum();
                    assert!(h.norm() < 1e-8 * (1.0 + d.values[i] * d.values[j]));
                }
            }
        }
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        // rows (1,0,0) and (0,1,0): null space is span(e3)
        let mut a = Mat::zeros(2, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(1.0, 0.0);
        let ns = nullspace(&a, 1e-10);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert!(v[0].norm() < 1e-12 && v[1].norm() < 1e-12);
        assert!((v[2].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_singular_values_resolved() {
        // diag(1, 1e-12): one-sided Jacobi keeps tiny singular values accurate
        let mut a = Mat::zeros(2, 2);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(1e-12, 0.0);
        let sv = singular_values(&a);
        assert!((sv[1] - 1e-12).abs() < 1e-24);
        assert!(cond_estimate(&a) > 1e11);
    }
}
