//! Small dense linear algebra: fixed 3-vectors and 3×3 matrices, a one-sided
//! Jacobi SVD for tall matrices, minimum-norm least squares and a real
//! eigendecomposition of 3×3 matrices with real spectrum.

use crate::scalar::Real;
use crate::{Error, Result};

pub type Vec3<T> = [T; 3];
/// Row-major: `m[row][col]`.
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn zero3<T: Real>() -> Vec3<T> {
    [T::zero(); 3]
}

#[inline]
pub fn zero33<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

pub fn identity3<T: Real>() -> Mat3<T> {
    let mut m = zero33();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(s: T, a: &Vec3<T>) -> Vec3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

/// `a + s·b`
#[inline]
pub fn axpy<T: Real>(a: &Vec3<T>, s: T, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

pub fn mat_vec<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// `mᵀ·v`
pub fn mat_t_vec<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    let mut out = zero3();
    for (i, row) in m.iter().enumerate() {
        for j in 0..3 {
            out[j] += row[j] * v[i];
        }
    }
    out
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = zero33();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut out = zero33();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[j][i];
        }
    }
    out
}

pub fn mat_add<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn mat_scale<T: Real>(s: T, a: &Mat3<T>) -> Mat3<T> {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|x| *x *= s);
    out
}

/// Outer product `a ⊗ b` (entry `[i][j] = a_i b_j`).
pub fn outer<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Mat3<T> {
    let mut out = zero33();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i] * b[j];
        }
    }
    out
}

pub fn column<T: Real>(m: &Mat3<T>, j: usize) -> Vec3<T> {
    [m[0][j], m[1][j], m[2][j]]
}

/// Builds a matrix whose columns are the given vectors.
pub fn from_columns<T: Real>(c: &[Vec3<T>; 3]) -> Mat3<T> {
    let mut out = zero33();
    for (j, col) in c.iter().enumerate() {
        for i in 0..3 {
            out[i][j] = col[i];
        }
    }
    out
}

pub fn det3<T: Real>(m: &Mat3<T>) -> T {
    dot(&m[0], &cross(&m[1], &m[2]))
}

pub fn frobenius<T: Real>(m: &Mat3<T>) -> T {
    m.iter().flatten().map(|x| *x * *x).sum::<T>().sqrt()
}

pub fn max_abs_diff<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> T {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (*x - *y).abs()).fold(T::zero(), T::max)
}

/// Inverse via the adjugate; fails when `|det|` is below `tol·‖m‖³`.
pub fn inverse3<T: Real>(m: &Mat3<T>, tol: T) -> Option<Mat3<T>> {
    let d = det3(m);
    let s = frobenius(m);
    if !(d.abs() > tol * s * s * s) {
        return None;
    }
    let c0 = cross(&m[1], &m[2]);
    let c1 = cross(&m[2], &m[0]);
    let c2 = cross(&m[0], &m[1]);
    // columns of the inverse are the row cross products / det
    let inv_d = d.recip();
    let mut out = zero33();
    for i in 0..3 {
        out[i][0] = c0[i] * inv_d;
        out[i][1] = c1[i] * inv_d;
        out[i][2] = c2[i] * inv_d;
    }
    Some(out)
}

/// Column-major dense matrix, sized at run time.
#[derive(Clone, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// Matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length mismatch");
            m.data[j * rows..(j + 1) * rows].copy_from_slice(c);
        }
        m
    }

    pub fn from_vec3_columns(columns: &[Vec3<T>]) -> Self {
        let cols: Vec<Vec<T>> = columns.iter().map(|c| c.to_vec()).collect();
        Self::from_columns(3, &cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Numerical rank relative to the largest singular value.
    pub fn rank(&self, rtol: T) -> usize {
        Svd::new(self).rank(rtol)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for (j, xj) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.col(j)) {
                *o += *a * *xj;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

/// Thin singular value decomposition `A = U·diag(σ)·Vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    /// `rows × k` with orthonormal columns (zero columns where σ = 0).
    pub u: Matrix<T>,
    /// Singular values, unsorted, one per column of `v`.
    pub sigma: Vec<T>,
    /// `cols × k`, orthonormal.
    pub v: Matrix<T>,
}

impl<T: Real> Svd<T> {
    /// One-sided Jacobi (Hestenes) SVD. Accurate to working precision for the
    /// small matrices used here.
    pub fn new(a: &Matrix<T>) -> Self {
        if a.rows < a.cols {
            let t = Self::new(&a.transpose());
            return Self { u: t.v, sigma: t.sigma, v: t.u };
        }
        let m = a.rows;
        let n = a.cols;
        let mut u = a.clone();
        let mut v = Matrix::zeros(n, n);
        for j in 0..n {
            v.set(j, j, T::one());
        }
        let eps = T::epsilon();
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..m {
                        let up = u.get(i, p);
                        let uq = u.get(i, q);
                        alpha += up * up;
                        beta += uq * uq;
                        gamma += up * uq;
                    }
                    if gamma.is_zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (gamma + gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = (T::one() + t * t).sqrt().recip();
                    let s = c * t;
                    for i in 0..m {
                        let up = u.get(i, p);
                        let uq = u.get(i, q);
                        u.set(i, p, c * up - s * uq);
                        u.set(i, q, s * up + c * uq);
                    }
                    for i in 0..n {
                        let vp = v.get(i, p);
                        let vq = v.get(i, q);
                        v.set(i, p, c * vp - s * vq);
                        v.set(i, q, s * vp + c * vq);
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sigma = Vec::with_capacity(n);
        for j in 0..n {
            let s = u.col(j).iter().map(|x| *x * *x).sum::<T>().sqrt();
            if s > T::zero() {
                for i in 0..m {
                    let x = u.get(i, j);
                    u.set(i, j, x / s);
                }
            }
            sigma.push(s);
        }
        Self { u, sigma, v }
    }

    pub fn max_singular(&self) -> T {
        self.sigma.iter().copied().fold(T::zero(), T::max)
    }

    pub fn min_singular(&self) -> T {
        self.sigma.iter().copied().fold(T::infinity(), T::min)
    }

    /// Number of singular values above `rtol · σ_max`.
    pub fn rank(&self, rtol: T) -> usize {
        let cut = rtol * self.max_singular();
        self.sigma.iter().filter(|s| **s > cut).count()
    }

    /// Minimum-norm least-squares solution of `A x ≈ b`.
    pub fn solve(&self, b: &[T], rtol: T) -> Vec<T> {
        let cut = rtol * self.max_singular();
        let n = self.v.rows();
        let mut x = vec![T::zero(); n];
        for (k, s) in self.sigma.iter().enumerate() {
            if !(*s > cut) || s.is_zero() {
                continue;
            }
            let proj: T = self.u.col(k).iter().zip(b).map(|(a, b)| *a * *b).sum::<T>() / *s;
            for (xi, vi) in x.iter_mut().zip(self.v.col(k)) {
                *xi += proj * *vi;
            }
        }
        x
    }

    /// Right singular vectors whose singular value is at most `rtol · σ_max`.
    pub fn null_space(&self, rtol: T) -> Vec<Vec<T>> {
        let cut = rtol * self.max_singular();
        self.sigma.iter().enumerate().filter(|(_, s)| **s <= cut).map(|(k, _)| self.v.col(k).to_vec()).collect()
    }
}

/// Minimum-norm least-squares fit with residual.
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    pub solution: Vec<T>,
    /// Euclidean norm of `b − A x`.
    pub residual: T,
    pub rank: usize,
}

pub fn least_squares<T: Real>(a: &Matrix<T>, b: &[T], rtol: T) -> LeastSquares<T> {
    let svd = Svd::new(a);
    let solution = svd.solve(b, rtol);
    let fitted = a.mul_vec(&solution);
    let residual = fitted.iter().zip(b).map(|(f, b)| (*b - *f) * (*b - *f)).sum::<T>().sqrt();
    LeastSquares { solution, residual, rank: svd.rank(rtol) }
}

/// Real roots of `λ³ + aλ² + bλ + c`, ascending. `None` when a complex pair
/// is present beyond rounding.
pub fn real_cubic_roots<T: Real>(a: T, b: T, c: T) -> Option<[T; 3]> {
    let three = T::lit(3.0);
    let p = b - a * a / three;
    let q = T::lit(2.0) * a * a * a / T::lit(27.0) - a * b / three + c;
    let shift = -a / three;
    let d = T::lit(4.0) * p * p * p + T::lit(27.0) * q * q;
    let mag = T::lit(4.0) * p.abs() * p.abs() * p.abs() + T::lit(27.0) * q * q;
    let scale_sq = (a * a + b.abs() + c.abs().powf(T::lit(2.0 / 3.0))).max(T::min_positive_value());
    let mut roots = if mag <= T::epsilon() * T::epsilon() * scale_sq * scale_sq * scale_sq {
        // triple root
        [shift; 3]
    } else {
        if d > T::lit(1e-9) * mag {
            return None;
        }
        if !(p < T::zero()) {
            [shift; 3]
        } else {
            let m = T::lit(2.0) * (-p / three).sqrt();
            let arg = (three * q / (p * m)).max(-T::one()).min(T::one());
            let theta = arg.acos() / three;
            let two_pi_3 = T::lit(2.0) * T::PI() / three;
            [m * theta.cos() + shift, m * (theta - two_pi_3).cos() + shift, m * (theta - two_pi_3 - two_pi_3).cos() + shift]
        }
    };
    // Newton polish
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*r + a) * *r + b) * *r + c;
            let df = (three * *r + a + a) * *r + b;
            if df.abs() <= T::epsilon() * (T::one() + r.abs() * r.abs()) {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Some(roots)
}

/// Real diagonalization `M = R·diag(λ)·L` with `L = R⁻¹`.
#[derive(Clone, Debug)]
pub struct Eigen3<T> {
    pub values: [T; 3],
    /// Columns are right eigenvectors.
    pub right: Mat3<T>,
    /// Rows are left eigenvectors, normalized so that `L·R = I`.
    pub left: Mat3<T>,
}

/// Eigendecomposition of a real 3×3 matrix with real eigenvalues.
pub fn eigen3<T: Real>(m: &Mat3<T>) -> Result<Eigen3<T>> {
    let off: T =
        (0..3).flat_map(|i| (0..3).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j].abs()).fold(T::zero(), T::max);
    if off.is_zero() {
        return Ok(Eigen3 { values: [m[0][0], m[1][1], m[2][2]], right: identity3(), left: identity3() });
    }
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let mut values = real_cubic_roots(-tr, minors, -det3(m)).ok_or(Error::ComplexSpectrum)?;
    let scale = frobenius(m).max(T::min_positive_value());
    // a double root of the characteristic cubic is only resolved to about √ε
    let cluster_tol = T::lit(1e-6) * scale;

    let mut right = [zero3::<T>(); 3];
    let mut k = 0;
    while k < 3 {
        let lam = values[k];
        let mut size = 1;
        while k + size < 3 && (values[k + size] - lam).abs() <= cluster_tol {
            size += 1;
        }
        if size > 1 {
            // the trace fixes a repeated root more accurately than the cubic
            let others: T = (0..3).filter(|i| *i < k || *i >= k + size).map(|i| values[i]).sum();
            let mean = (tr - others) / T::from_usize(size).unwrap();
            values[k..k + size].iter_mut().for_each(|v| *v = mean);
        }
        let lam = values[k];
        let shifted = {
            let mut s = *m;
            for (i, row) in s.iter_mut().enumerate() {
                row[i] -= lam;
            }
            s
        };
        if size == 1 {
            // null vector of a rank-2 matrix: largest cross product of its rows
            let cands = [cross(&shifted[0], &shifted[1]), cross(&shifted[1], &shifted[2]), cross(&shifted[2], &shifted[0])];
            let best = cands
                .iter()
                .max_by(|a, b| norm(a).partial_cmp(&norm(b)).unwrap_or(std::cmp::Ordering::Equal))
                .copied()
                .unwrap_or_else(zero3);
            let nb = norm(&best);
            if !(nb > T::zero()) {
                return Err(Error::NotDiagonalizable);
            }
            right[k] = scale_vec_unit(&best, nb);
        } else {
            let svd = Svd::new(&Matrix::from_vec3_columns(&[column(&shifted, 0), column(&shifted, 1), column(&shifted, 2)]));
            let mut idx: Vec<usize> = (0..3).collect();
            idx.sort_by(|a, b| svd.sigma[*a].partial_cmp(&svd.sigma[*b]).unwrap_or(std::cmp::Ordering::Equal));
            for (slot, &j) in idx.iter().take(size).enumerate() {
                if svd.sigma[j] > T::lit(1e-5) * scale {
                    return Err(Error::NotDiagonalizable);
                }
                let c = svd.v.col(j);
                right[k + slot] = [c[0], c[1], c[2]];
            }
        }
        k += size;
    }
    let r = from_columns(&right);
    let left = inverse3(&r, T::lit(1e-12)).ok_or(Error::NotDiagonalizable)?;
    Ok(Eigen3 { values, right: r, left })
}

fn scale_vec_unit<T: Real>(v: &Vec3<T>, n: T) -> Vec3<T> {
    scale(n.recip(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_tall_matrix() {
        let a = Matrix::from_columns(4, &[vec![1.0, 2.0, 0.0, 1.0], vec![0.0, 1.0, 3.0, -1.0], vec![2.0, 0.0, 1.0, 5.0]]);
        let svd = Svd::new(&a);
        for i in 0..4 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| svd.u.get(i, k) * svd.sigma[k] * svd.v.get(j, k)).sum();
                assert!((r - a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn least_squares_min_norm_on_rank_deficient() {
        // two identical columns: min-norm splits the weight evenly
        let a = Matrix::from_vec3_columns(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let ls = least_squares::<f64>(&a, &[2.0, 0.0, 0.0], 1e-10);
        assert_eq!(ls.rank, 1);
        assert!((ls.solution[0] - 1.0).abs() < 1e-12 && (ls.solution[1] - 1.0).abs() < 1e-12);
        assert!(ls.residual < 1e-12);
    }

    #[test]
    fn least_squares_residual_is_orthogonal_remainder() {
        let a = Matrix::from_vec3_columns(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let ls = least_squares::<f64>(&a, &[1.0, 2.0, 3.0], 1e-10);
        assert!((ls.residual - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_roots_distinct_and_repeated() {
        // (λ-4)(λ-1)(λ+2) = λ³ - 3λ² - 6λ + 8
        let r = real_cubic_roots(-3.0f64, -6.0, 8.0).unwrap();
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12 && (r[2] - 4.0).abs() < 1e-12);
        // (λ-1)²(λ-2)
        let r = real_cubic_roots(-4.0f64, 5.0, -2.0).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-7 && (r[2] - 2.0).abs() < 1e-12);
        // λ³ + λ has a complex pair
        assert!(real_cubic_roots(0.0f64, 1.0, 0.0).is_none());
    }

    #[test]
    fn eigen3_reconstructs() {
        let m = [[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 1.0, 0.0]];
        let e = eigen3(&m).unwrap();
        let recon = mat_mul(&mat_mul(&e.right, &[[e.values[0], 0.0, 0.0], [0.0, e.values[1], 0.0], [0.0, 0.0, e.values[2]]]), &e.left);
        assert!(max_abs_diff(&recon, &m) < 1e-12);
    }

    #[test]
    fn eigen3_rejects_jordan_block() {
        let m = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        assert!(eigen3(&m).is_err());
    }

    #[test]
    fn eigen3_handles_repeated_diagonalizable() {
        let m: Mat3<f64> = [[2.0, 0.0, 1.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]];
        let e = eigen3(&m).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-9 && (e.values[2] - 3.0).abs() < 1e-12, "{:?}", e.values);
        let lr = mat_mul(&e.left, &e.right);
        assert!(max_abs_diff(&lr, &identity3()) < 1e-9);
    }
}
