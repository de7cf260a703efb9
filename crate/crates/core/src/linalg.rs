//! Small dense linear algebra for the few-mode systems handled here, plus a
//! symmetric tridiagonal eigensolver for the 1D grid problems.
//!
//! Matrices are at most a few dozen rows, so everything is plain row-major
//! storage with cyclic Jacobi rotations and partial-pivoting elimination.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Parameter("ragged matrix rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "dimension mismatch in mul_vec");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a real symmetric matrix. `vectors` holds the
/// normalized eigenvectors as columns, in the same order as `values`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigenvalue iteration. Output is unsorted.
pub fn symmetric_eigen<T: Real>(m: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if !m.is_square() {
        return Err(Error::Parameter("eigen-decomposition needs a square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    const MAX_SWEEPS: usize = 100;
    let scale = a.max_abs().max(T::min_positive_value());
    let eps = T::epsilon();
    for sweep in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= eps * eps * scale || n < 2 {
            let values = (0..n).map(|i| a[(i, i)]).collect();
            return Ok(SymmetricEigen { values, vectors: v });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= eps * eps * scale {
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if sweep + 1 == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigenvalue iteration did not converge in {MAX_SWEEPS} sweeps \
                 (off-diagonal norm {:e})",
                off.as_f64()
            )));
        }
    }
    unreachable!()
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    /// Smallest pivot magnitude relative to the largest input entry.
    pub min_pivot_ratio: T,
}

impl<T: Real> Lu<T> {
    /// Fails when a pivot drops below `singular_tol` relative to the
    /// largest matrix entry; the error carries that relative pivot.
    pub fn factor(m: &Matrix<T>, singular_tol: T) -> std::result::Result<Self, T> {
        assert!(m.is_square(), "LU needs a square matrix");
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.max_abs().max(T::min_positive_value());
        let mut min_ratio = T::infinity();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            let ratio = pmax / scale;
            min_ratio = min_ratio.min(ratio);
            if ratio <= singular_tol {
                return Err(ratio);
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm, min_pivot_ratio: min_ratio })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Sign of the determinant of the factored matrix.
    pub fn det_sign(&self) -> T {
        let n = self.lu.rows();
        let mut sign = T::one();
        for i in 0..n {
            if self.lu[(i, i)] < T::zero() {
                sign = -sign;
            }
        }
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.perm[j];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        sign
    }
}

/// Singular values (descending) by one-sided Jacobi; accurate for the small
/// singular values that flag bifurcation points.
pub fn singular_values<T: Real>(m: &Matrix<T>) -> Vec<T> {
    // Work on columns of the taller orientation.
    let a = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let (rows, cols) = (a.rows(), a.cols());
    let mut colv: Vec<Vec<T>> = (0..cols).map(|j| a.column(j)).collect();
    let eps = T::epsilon();
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&colv[p], &colv[p]);
                let beta = dot(&colv[q], &colv[q]);
                let gamma = dot(&colv[p], &colv[q]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let xp = colv[p][k];
                    let xq = colv[q][k];
                    colv[p][k] = c * xp - s * xq;
                    colv[q][k] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = colv.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Symmetric tridiagonal matrix given by its diagonal and first off-diagonal.
#[derive(Debug, Clone)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Parameter(format!(
                "tridiagonal shape mismatch: {} diagonal vs {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: T) -> usize {
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / q;
            }
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { T::zero() }
                + if i + 1 < n { self.off[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> T {
        let (mut lo, mut hi) = self.gershgorin();
        let two = T::lit(2.0);
        for _ in 0..200 {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) / two
    }

    /// Lowest `k` eigenpairs: bisection for the values, inverse iteration
    /// (re-orthogonalized within near-degenerate clusters) for the vectors.
    /// Vectors are unit-norm in the Euclidean inner product.
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::Parameter(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
        }
        let values: Vec<T> = (0..k).map(|i| self.eigenvalue(i)).collect();
        let (glo, ghi) = self.gershgorin();
        let spread = (ghi - glo).max(T::one());
        let mut vectors: Vec<Vec<T>> = Vec::with_capacity(k);
        for (i, &lam) in values.iter().enumerate() {
            let shift = lam + spread * T::epsilon() * T::lit(10.0);
            let lu = TridiagonalLu::factor(self, shift);
            // deterministic, non-symmetric start vector
            let mut x: Vec<T> = (0..n)
                .map(|j| T::one() + T::lit(0.37) * T::from_usize_lossy(j % 7) / T::lit(7.0))
                .collect();
            let cluster: Vec<usize> = (0..i)
                .filter(|&j| (values[j] - lam).abs() <= T::lit(1e-3) * spread)
                .collect();
            for _ in 0..6 {
                x = lu.solve(&x);
                for &j in &cluster {
                    let c = dot(&x, &vectors[j]);
                    for (xi, vi) in x.iter_mut().zip(&vectors[j]) {
                        *xi -= c * *vi;
                    }
                }
                let nrm = norm2(&x);
                if !(nrm > T::zero()) || !nrm.is_finite() {
                    return Err(Error::Numeric(format!(
                        "inverse iteration broke down for eigenvalue {i} ({})",
                        lam.as_f64()
                    )));
                }
                for xi in x.iter_mut() {
                    *xi /= nrm;
                }
            }
            vectors.push(x);
        }
        Ok((values, vectors))
    }
}

/// LU of a shifted tridiagonal matrix with partial pivoting (one extra
/// superdiagonal of fill-in).
struct TridiagonalLu<T> {
    // u0: diagonal, u1: first superdiag, u2: second superdiag, l: multipliers
    u0: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
    l: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Real> TridiagonalLu<T> {
    fn factor(t: &SymTridiagonal<T>, shift: T) -> Self {
        let n = t.len();
        let tiny = T::epsilon() * T::epsilon();
        let mut d: Vec<T> = t.diag.iter().map(|&x| x - shift).collect();
        let mut du: Vec<T> = t.off.clone();
        let dl: Vec<T> = t.off.clone();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut l = vec![T::zero(); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                let f = if d[i] == T::zero() { T::zero() } else { dl[i] / d[i] };
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                l[i] = f;
                swapped[i] = true;
                d[i] = dl[i];
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
            }
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < T::zero() { -tiny } else { tiny };
            }
        }
        Self { u0: d, u1: du, u2: du2, l, swapped }
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.u0.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
                let xi = x[i];
                x[i + 1] -= self.l[i] * xi;
            } else {
                let xi = x[i];
                x[i + 1] -= self.l[i] * xi;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_small_symmetric() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]])
            .unwrap();
        let e = symmetric_eigen(&m).unwrap();
        let mut vals = e.values.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s = 2f64.sqrt();
        for (got, want) in vals.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-13);
        }
        for j in 0..3 {
            let v = e.vectors.column(j);
            let mv = m.mul_vec(&v);
            for k in 0..3 {
                assert!((mv[k] - e.values[j] * v[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lu_solves_and_flags_singular() {
        let m = Matrix::<f64>::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let lu = Lu::factor(&m, 1e-14).unwrap();
        let x = lu.solve(&[4.0, 5.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
        assert_eq!(lu.det_sign(), -1.0);
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(Lu::factor(&s, 1e-14).is_err());
    }

    #[test]
    fn singular_values_of_diagonal_and_rank_deficient() {
        let m = Matrix::<f64>::from_rows(&[vec![3.0, 0.0], vec![0.0, -0.5]]).unwrap();
        let sv = singular_values(&m);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 0.5).abs() < 1e-14);
        let r = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert!(singular_values(&r)[1] < 1e-14);
    }

    #[test]
    fn tridiagonal_matches_closed_form_toeplitz() {
        let n = 40;
        let t = SymTridiagonal::new(vec![0.0; n], vec![-1.0; n - 1]).unwrap();
        let (vals, vecs) = t.lowest_eigenpairs(5).unwrap();
        for (j, v) in vals.iter().enumerate() {
            let want = -2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
            let r = t.mul_vec(&vecs[j]);
            let res = r.iter().zip(&vecs[j]).map(|(a, b)| (a - v * b).abs()).fold(0.0, f64::max);
            assert!(res < 1e-10);
        }
    }
}
