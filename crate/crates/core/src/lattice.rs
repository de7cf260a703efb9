//! Linear coupling between wells: the tridiagonal Toeplitz matrix of a
//! chain of wells, its closed-form spectrum, and the generalization to an
//! arbitrary coupling graph.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Real;

/// Physical and reduced-model parameters of an N-well lattice.
///
/// `eta` is the effective nonlinearity `eps * C / beta`; the product
/// `eps * C` is recovered through [`ModelParams::nonlinear_strength`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Number of wells.
    pub n: usize,
    /// Power of the nonlinearity `|psi|^(2 sigma)`.
    pub sigma: T,
    /// Ground energy of a single well.
    pub lambda_d: T,
    /// Hopping between adjacent wells.
    pub beta: T,
    pub eta: T,
    pub hbar: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(n: usize, sigma: T, lambda_d: T, beta: T, eta: T, hbar: T) -> Result<Self> {
        let p = Self { n, sigma, lambda_d, beta, eta, hbar };
        p.validate()?;
        Ok(p)
    }

    /// Unit hopping, zero on-site energy, `hbar = 1`.
    pub fn reduced(n: usize, sigma: T, eta: T) -> Result<Self> {
        Self::new(n, sigma, T::zero(), T::one(), eta, T::one())
    }

    /// Builds parameters from the bare nonlinear strength `eps * C`.
    pub fn from_strength(
        n: usize,
        sigma: T,
        lambda_d: T,
        beta: T,
        strength: T,
        hbar: T,
    ) -> Result<Self> {
        if !(beta > T::zero()) {
            return param("beta must be > 0 to define eta = eps*C/beta");
        }
        Self::new(n, sigma, lambda_d, beta, strength / beta, hbar)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return param(format!("well count N must be >= 2, got {}", self.n));
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return param(format!("sigma must be > 0, got {}", self.sigma));
        }
        if !(self.hbar > T::zero()) || !self.hbar.is_finite() {
            return param(format!("hbar must be > 0, got {}", self.hbar));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return param(format!("beta must be >= 0, got {}", self.beta));
        }
        if !self.lambda_d.is_finite() || !self.eta.is_finite() {
            return param("lambda_D and eta must be finite");
        }
        Ok(())
    }

    /// The product `eps * C = eta * beta` (energy units).
    pub fn nonlinear_strength(&self) -> T {
        self.eta * self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingStructure {
    Line,
    Graph,
}

/// Symmetric matrix of the linear part of the N-mode system.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix<T> {
    pub entries: Matrix<T>,
    pub structure: CouplingStructure,
}

impl<T: Real> CouplingMatrix<T> {
    pub fn n(&self) -> usize {
        self.entries.rows()
    }
}

/// Eigenvalues `mu` (ascending) and the mode matrix whose rows are the
/// corresponding normalized eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis<T> {
    pub modes: Matrix<T>,
    pub mu: Vec<T>,
}

impl<T: Real> ModeBasis<T> {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mode(&self, j: usize) -> &[T] {
        self.modes.row(j)
    }

    /// Rebuilds `A^T diag(mu) A`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, k| (0..n).map(|j| self.modes[(j, i)] * self.mu[j] * self.modes[(j, k)]).sum())
    }
}

/// `T = -beta * Tri + lambda_D * I` for wells on a line.
pub fn build_line_coupling<T: Real>(params: &ModelParams<T>) -> Result<CouplingMatrix<T>> {
    params.validate()?;
    let n = params.n;
    let entries = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            params.lambda_d
        } else if i.abs_diff(j) == 1 {
            -params.beta
        } else {
            T::zero()
        }
    });
    Ok(CouplingMatrix { entries, structure: CouplingStructure::Line })
}

/// Closed-form spectrum of the chain:
/// `mu_j = lambda_D - 2 beta cos(j pi / (N+1))`,
/// `alpha_{j,k} = sqrt(2/(N+1)) sin(k j pi / (N+1))`.
pub fn closed_form_spectrum<T: Real>(params: &ModelParams<T>) -> Result<ModeBasis<T>> {
    params.validate()?;
    let n = params.n;
    let np1 = T::from_usize_lossy(n + 1);
    let norm = (T::lit(2.0) / np1).sqrt();
    let angle = |m: usize| T::PI() * T::from_usize_lossy(m) / np1;
    let mu = (1..=n)
        .map(|j| params.lambda_d - T::lit(2.0) * params.beta * angle(j).cos())
        .collect();
    let modes = Matrix::from_fn(n, n, |j, k| norm * angle((j + 1) * (k + 1)).sin());
    Ok(ModeBasis { modes, mu })
}

/// Coupling on an arbitrary graph: `lambda_D` on the diagonal, `-beta` on
/// every edge of the 0/1 adjacency matrix.
pub fn build_graph_coupling<T: Real>(
    adjacency: &[Vec<u8>],
    params: &ModelParams<T>,
) -> Result<CouplingMatrix<T>> {
    let n = adjacency.len();
    if adjacency.iter().any(|row| row.len() != n) {
        return param("adjacency must be square");
    }
    if n != params.n {
        return param(format!("adjacency is {n}x{n} but N = {}", params.n));
    }
    params.validate()?;
    for i in 0..n {
        if adjacency[i][i] != 0 {
            return param(format!("adjacency diagonal entry ({i},{i}) must be 0"));
        }
        for j in 0..n {
            let a = adjacency[i][j];
            if a > 1 {
                return param(format!("adjacency entry ({i},{j}) = {a} is not 0/1"));
            }
            if a != adjacency[j][i] {
                return param(format!("adjacency is not symmetric at ({i},{j})"));
            }
        }
    }
    let entries = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            params.lambda_d
        } else if adjacency[i][j] == 1 {
            -params.beta
        } else {
            T::zero()
        }
    });
    Ok(CouplingMatrix { entries, structure: CouplingStructure::Graph })
}

/// Numerical eigen-decomposition of a coupling matrix.
///
/// Eigenpairs come out in ascending order with each vector's first nonzero
/// component positive; within a degenerate group vectors are ordered
/// lexicographically.
pub fn diagonalize_symmetric<T: Real>(matrix: &CouplingMatrix<T>) -> Result<ModeBasis<T>> {
    let m = &matrix.entries;
    let scale = m.max_abs();
    if !m.is_symmetric(T::tolerance(1e-14) * scale.max(T::one())) {
        return param("coupling matrix is not symmetric");
    }
    let n = m.rows();
    let eig = symmetric_eigen(m)?;
    let zero_tol = T::tolerance(1e-12);
    let mut pairs: Vec<(T, Vec<T>)> = (0..n)
        .map(|j| {
            let mut v = eig.vectors.column(j);
            if let Some(first) = v.iter().find(|x| x.abs() > zero_tol).copied() {
                if first < T::zero() {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (eig.values[j], v)
        })
        .collect();
    let degenerate = T::tolerance(1e-10) * scale.max(T::one());
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= degenerate {
            lexicographic(&a.1, &b.1, zero_tol)
        } else {
            a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)
        }
    });

    let tol = T::tolerance(1e-10) * scale.max(T::min_positive_value());
    for (mu, v) in &pairs {
        let tv = m.mul_vec(v);
        let res = tv.iter().zip(v).map(|(a, b)| (*a - *mu * *b).abs()).fold(T::zero(), T::max);
        if res > tol {
            return Err(Error::Numeric(format!(
                "eigenpair residual {:e} exceeds {:e} for eigenvalue {}",
                res.as_f64(),
                tol.as_f64(),
                mu
            )));
        }
    }
    let mu = pairs.iter().map(|p| p.0).collect();
    let modes = Matrix::from_fn(n, n, |j, k| pairs[j].1[k]);
    Ok(ModeBasis { modes, mu })
}

fn lexicographic<T: Real>(a: &[T], b: &[T], tol: T) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (*x - *y).abs() > tol {
            return x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal);
        }
    }
    std::cmp::Ordering::Equal
}

/// Adjacency of the four wells at the corners of a square
/// (edges 1-2, 1-3, 2-4, 3-4).
pub fn square_adjacency() -> Vec<Vec<u8>> {
    vec![vec![0, 1, 1, 0], vec![1, 0, 0, 1], vec![1, 0, 0, 1], vec![0, 1, 1, 0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, lambda_d: f64, beta: f64) -> ModelParams<f64> {
        ModelParams::new(n, 1.0, lambda_d, beta, 0.0, 1.0).unwrap()
    }

    #[test]
    fn line_coupling_entries() {
        let t = build_line_coupling(&p(2, 0.0, 1.0)).unwrap();
        assert_eq!(t.entries.to_rows(), vec![vec![0.0, -1.0], vec![-1.0, 0.0]]);
        let t = build_line_coupling(&p(4, 5.0, 2.0)).unwrap();
        for i in 0..4usize {
            for j in 0..4usize {
                let want = match i.abs_diff(j) {
                    0 => 5.0,
                    1 => -2.0,
                    _ => 0.0,
                };
                assert_eq!(t.entries[(i, j)], want);
            }
        }
    }

    #[test]
    fn line_coupling_square_diagonal() {
        // independent oracle: explicit product of the matrix with itself
        let t = build_line_coupling(&p(3, 0.0, 1.0)).unwrap().entries;
        let mut diag = [0.0; 3];
        for (i, d) in diag.iter_mut().enumerate() {
            for k in 0..3 {
                *d += t[(i, k)] * t[(k, i)];
            }
        }
        assert_eq!(diag, [1.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_single_well() {
        let bad = ModelParams { n: 1, sigma: 1.0, lambda_d: 0.0, beta: 1.0, eta: 0.0, hbar: 1.0 };
        assert!(matches!(build_line_coupling(&bad), Err(Error::Parameter(_))));
        assert!(ModelParams::new(3, 1.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(3, -1.0, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn two_and_three_well_mode_matrices() {
        let h = 0.5f64.sqrt();
        let b = closed_form_spectrum(&p(2, 0.3, 0.7)).unwrap();
        assert!((b.mu[0] - (0.3 - 0.7)).abs() < 1e-15 && (b.mu[1] - 1.0).abs() < 1e-15);
        let want = [[h, h], [h, -h]];
        for j in 0..2 {
            for k in 0..2 {
                assert!((b.modes[(j, k)] - want[j][k]).abs() < 1e-15);
            }
        }
        let b = closed_form_spectrum(&p(3, 0.0, 1.0)).unwrap();
        let s = 2f64.sqrt();
        assert!((b.mu[0] + s).abs() < 1e-15 && b.mu[1].abs() < 1e-15 && (b.mu[2] - s).abs() < 1e-15);
        let want = [[0.5, s / 2.0, 0.5], [s / 2.0, 0.0, -s / 2.0], [0.5, -s / 2.0, 0.5]];
        for j in 0..3 {
            for k in 0..3 {
                assert!((b.modes[(j, k)] - want[j][k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn decoupled_wells_are_degenerate() {
        let b = closed_form_spectrum(&p(5, 2.5, 0.0)).unwrap();
        assert!(b.mu.iter().all(|&m| m == 2.5));
    }

    #[test]
    fn square_graph_spectrum() {
        let params = p(4, 1.0, 0.5);
        let t = build_graph_coupling(&square_adjacency(), &params).unwrap();
        let expected = [
            [1.0, -0.5, -0.5, 0.0],
            [-0.5, 1.0, 0.0, -0.5],
            [-0.5, 0.0, 1.0, -0.5],
            [0.0, -0.5, -0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(t.entries[(i, j)], expected[i][j]);
            }
        }
        let b = diagonalize_symmetric(&t).unwrap();
        let want = [0.0, 1.0, 1.0, 2.0];
        for (m, w) in b.mu.iter().zip(want) {
            assert!((m - w).abs() < 1e-12, "{m} vs {w}");
        }
        assert!(b.modes.row(0).iter().all(|x| (x - 0.5).abs() < 1e-12));
        let top = b.modes.row(3);
        for (x, w) in top.iter().zip([0.5, -0.5, -0.5, 0.5]) {
            assert!((x - w).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_validation() {
        let params = p(2, 0.0, 1.0);
        assert!(build_graph_coupling(&[vec![0, 1], vec![0, 0]], &params).is_err());
        assert!(build_graph_coupling(&[vec![0, 2], vec![2, 0]], &params).is_err());
        assert!(build_graph_coupling(&[vec![1, 1], vec![1, 0]], &params).is_err());
        let empty = build_graph_coupling(&[vec![0, 0], vec![0, 0]], &params).unwrap();
        assert_eq!(empty.entries, Matrix::zeros(2, 2));
        let params = p(3, 2.0, 1.0);
        let e = build_graph_coupling(&vec![vec![0; 3]; 3], &params).unwrap();
        assert_eq!(e.entries.max_abs_diff(&Matrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 })), 0.0);
    }

    #[test]
    fn identity_diagonalizes_to_ones() {
        let c = CouplingMatrix { entries: Matrix::<f64>::identity(5), structure: CouplingStructure::Graph };
        let b = diagonalize_symmetric(&c).unwrap();
        assert!(b.mu.iter().all(|m| (m - 1.0).abs() < 1e-15));
    }

    #[test]
    fn single_precision_closed_form() {
        let params = ModelParams::<f32>::new(4, 1.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        let b = closed_form_spectrum(&params).unwrap();
        let num = diagonalize_symmetric(&build_line_coupling(&params).unwrap()).unwrap();
        for (a, c) in b.mu.iter().zip(&num.mu) {
            assert!((a - c).abs() < 1e-5);
        }
    }
}
