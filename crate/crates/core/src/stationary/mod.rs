//! Stationary states of the N-mode system on a chain of wells.
//!
//! Stationary phases differ by 0 or pi between neighbouring wells, so every
//! stationary state is a real vector `a` (with `q_k = a_k^2`) solving
//!
//! ```text
//! R_k = Omega a_k + (a_{k-1} + a_{k+1}) - eta |a_k|^(2 sigma) a_k = 0,   a_0 = a_{N+1} = 0
//! sum_k a_k^2 = 1
//! ```
//!
//! with `Omega = -(lambda_D + hbar omega) / beta`.

mod census;
mod fourwell;

pub use census::{enumerate_solutions, Census, SeedStrategy, SignFilter, AMBIGUITY_TOL, DEDUP_TOL, DEFAULT_SEED};
pub use fourwell::{
    symmetric_amplitudes, symmetric_family_fourwell, symmetric_folds, symmetric_point,
    symmetric_point_at_eta, sweep_symmetric, FoldPoint, SignPattern, SymmetricFamily,
};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::scalar::{max_abs, Real};

/// Amplitudes treated as vanishing by the admissibility checks.
pub const ZERO_AMPLITUDE: f64 = 1e-15;

/// A stationary state: signed real amplitudes and the scaled frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSolution<T> {
    pub a: Vec<T>,
    pub omega: T,
    pub eta: T,
    pub sigma: T,
    /// Max-norm of the residual vector, normalization row included.
    pub residual_norm: T,
}

impl<T: Real> AmplitudeSolution<T> {
    /// Unsolved guess; `residual_norm` is evaluated on construction.
    pub fn guess(a: Vec<T>, omega: T, eta: T, sigma: T) -> Self {
        let mut s = Self { a, omega, eta, sigma, residual_norm: T::zero() };
        s.refresh_residual();
        s
    }

    /// Seed from well actions and a sign pattern (`signs[k]` is +-1).
    pub fn from_actions(q: &[T], signs: &[i8], omega: T, eta: T, sigma: T) -> Result<Self> {
        if q.len() != signs.len() {
            return param("actions and signs differ in length");
        }
        let a = q
            .iter()
            .zip(signs)
            .map(|(q, s)| if *s < 0 { -q.max(T::zero()).sqrt() } else { q.max(T::zero()).sqrt() })
            .collect();
        Ok(Self::guess(a, omega, eta, sigma))
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn actions(&self) -> Vec<T> {
        self.a.iter().map(|x| *x * *x).collect()
    }

    pub fn signs(&self) -> Vec<i8> {
        self.a.iter().map(|x| if *x < T::zero() { -1 } else { 1 }).collect()
    }

    pub fn residual(&self) -> (Vec<T>, T) {
        stationary_residual(&self.a, self.omega, self.eta, self.sigma)
    }

    pub fn refresh_residual(&mut self) {
        let (r, defect) = self.residual();
        self.residual_norm = max_abs(&r).max(defect.abs());
    }

    /// Hamiltonian per unit norm with `beta = 1`, `lambda_D = 0`:
    /// `-2 sum a_k a_(k+1) + eta / (sigma + 1) sum |a_k|^(2 sigma + 2)`.
    pub fn scaled_energy(&self) -> T {
        let hop: T = self.a.windows(2).map(|w| w[0] * w[1]).sum();
        let p = T::lit(2.0) * self.sigma + T::lit(2.0);
        let local: T = self.a.iter().map(|x| x.abs().powf(p)).sum();
        -T::lit(2.0) * hop + self.eta / (self.sigma + T::one()) * local
    }

    /// `a -> -a`: same state up to a global phase.
    pub fn negated(&self) -> Self {
        let mut s = self.clone();
        s.a.iter_mut().for_each(|x| *x = -*x);
        s.refresh_residual();
        s
    }

    /// Reverses the well order `k -> N + 1 - k`.
    pub fn mirrored(&self) -> Self {
        let mut s = self.clone();
        s.a.reverse();
        s.refresh_residual();
        s
    }

    /// `b_k = (-1)^k a_k` with `(eta, Omega) -> (-eta, -Omega)`.
    pub fn staggered(&self) -> Self {
        let mut s = self.clone();
        for (k, x) in s.a.iter_mut().enumerate() {
            if k % 2 == 1 {
                *x = -*x;
            }
        }
        s.eta = -s.eta;
        s.omega = -s.omega;
        s.refresh_residual();
        s
    }

    /// Fixes the global sign so the first non-vanishing amplitude is positive.
    pub fn gauge_fixed(mut self) -> Self {
        let zero = T::lit(ZERO_AMPLITUDE);
        if let Some(first) = self.a.iter().find(|x| x.abs() > zero).copied() {
            if first < T::zero() {
                self.a.iter_mut().for_each(|x| *x = -*x);
            }
        }
        self
    }

    /// Mirror parity: `Some(1)` if `a` is mirror-even, `Some(-1)` if odd.
    pub fn mirror_parity(&self, tol: T) -> Option<i8> {
        let n = self.n();
        let even = (0..n).all(|k| (self.a[k] - self.a[n - 1 - k]).abs() <= tol);
        let odd = (0..n).all(|k| (self.a[k] + self.a[n - 1 - k]).abs() <= tol);
        match (even, odd) {
            (true, _) => Some(1),
            (false, true) => Some(-1),
            _ => None,
        }
    }

    /// Endpoint amplitudes never vanish; for even N no amplitude does.
    pub fn check_admissible(&self) -> Result<()> {
        let n = self.n();
        let zero = T::lit(ZERO_AMPLITUDE);
        if self.a[0].abs() <= zero || self.a[n - 1].abs() <= zero {
            return Err(Error::State("endpoint amplitude vanishes; not an admissible stationary state".into()));
        }
        if n.is_multiple_of(2) {
            if let Some(k) = self.a.iter().position(|x| x.abs() <= zero) {
                return Err(Error::State(format!(
                    "interior amplitude a_{} vanishes, impossible for an even number of wells",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn nonlinear_term<T: Real>(a: T, sigma: T) -> T {
    if a == T::zero() {
        T::zero()
    } else {
        a.abs().powf(T::lit(2.0) * sigma) * a
    }
}

/// Residual `R_k` and normalization defect `sum a_k^2 - 1`.
pub fn stationary_residual<T: Real>(a: &[T], omega: T, eta: T, sigma: T) -> (Vec<T>, T) {
    let n = a.len();
    let r = (0..n)
        .map(|k| {
            let left = if k > 0 { a[k - 1] } else { T::zero() };
            let right = if k + 1 < n { a[k + 1] } else { T::zero() };
            omega * a[k] + left + right - eta * nonlinear_term(a[k], sigma)
        })
        .collect();
    let defect = a.iter().map(|x| *x * *x).sum::<T>() - T::one();
    (r, defect)
}

/// Residual vector with the normalization row appended.
pub(crate) fn full_residual<T: Real>(a: &[T], omega: T, eta: T, sigma: T) -> Vec<T> {
    let (mut r, d) = stationary_residual(a, omega, eta, sigma);
    r.push(d);
    r
}

/// `L = Omega I + Tri - eta (2 sigma + 1) diag(|a|^(2 sigma))`, the
/// derivative of `R` with respect to `a` at fixed `(Omega, eta)`.
pub fn linearization<T: Real>(a: &[T], omega: T, eta: T, sigma: T) -> Matrix<T> {
    let n = a.len();
    let two_s = T::lit(2.0) * sigma;
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            omega - eta * (two_s + T::one()) * a[i].abs().powf(two_s)
        } else if i.abs_diff(j) == 1 {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// `(N+1) x (N+1)` Jacobian in the unknowns `(a, Omega)`.
pub fn residual_jacobian<T: Real>(a: &[T], omega: T, eta: T, sigma: T) -> Matrix<T> {
    let n = a.len();
    let l = linearization(a, omega, eta, sigma);
    Matrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => l[(i, j)],
        (true, false) => a[i],
        (false, true) => T::lit(2.0) * a[j],
        (false, false) => T::zero(),
    })
}

/// Derivative of the full residual with respect to `eta`.
pub fn eta_derivative<T: Real>(a: &[T], sigma: T) -> Vec<T> {
    let mut d: Vec<T> = a.iter().map(|x| -nonlinear_term(*x, sigma)).collect();
    d.push(T::zero());
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    pub max_iterations: usize,
    /// Converged when the max-norm of the full residual drops below this.
    pub tolerance: T,
    /// Relative pivot below which the Jacobian counts as singular.
    pub singular_tolerance: T,
    /// Run the admissibility checks on the result.
    pub check_admissible: bool,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: T::tolerance(1e-11),
            singular_tolerance: T::lit(1e-14),
            check_admissible: true,
        }
    }
}

/// Damped Newton iteration on `(a, Omega)` at the seed's `eta`.
pub fn newton_solve<T: Real>(seed: &AmplitudeSolution<T>) -> Result<AmplitudeSolution<T>> {
    newton_solve_with(seed, &NewtonOptions::default())
}

pub fn newton_solve_with<T: Real>(seed: &AmplitudeSolution<T>, opts: &NewtonOptions<T>) -> Result<AmplitudeSolution<T>> {
    let n = seed.n();
    if n < 2 {
        return param("stationary problem needs N >= 2");
    }
    let (eta, sigma) = (seed.eta, seed.sigma);
    let mut x: Vec<T> = seed.a.iter().copied().chain(std::iter::once(seed.omega)).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return param("seed has non-finite entries");
    }
    let nrm = x[..n].iter().map(|v| *v * *v).sum::<T>().sqrt();
    if nrm > T::zero() {
        x[..n].iter_mut().for_each(|v| *v /= nrm);
    }
    let eval = |x: &[T]| full_residual(&x[..n], x[n], eta, sigma);
    let mut f = eval(&x);
    let mut res = max_abs(&f);
    let mut iterations = 0;
    let mut polished = false;
    loop {
        if res <= opts.tolerance {
            if polished {
                break;
            }
            polished = true;
        } else if iterations >= opts.max_iterations {
            return Err(Error::NotConverged { iterations, residual: res.as_f64() });
        }
        iterations += 1;
        let jac = residual_jacobian(&x[..n], x[n], eta, sigma);
        let lu = match Lu::factor(&jac, opts.singular_tolerance) {
            Ok(lu) => lu,
            Err(pivot) if !polished => {
                return Err(Error::NearBifurcation { eta: eta.as_f64(), pivot: pivot.as_f64() })
            }
            Err(_) => break,
        };
        let step = lu.solve(&f);
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = x.iter().zip(&step).map(|(xi, si)| *xi - lambda * *si).collect();
            let ft = eval(&trial);
            let rt = max_abs(&ft);
            if rt.is_finite() && (rt < res || (polished && rt <= res)) {
                x = trial;
                f = ft;
                res = rt;
                accepted = true;
                break;
            }
            if polished {
                break;
            }
            lambda /= T::lit(2.0);
        }
        if !accepted {
            if polished {
                break;
            }
            return Err(Error::NotConverged { iterations, residual: res.as_f64() });
        }
    }
    let sol = AmplitudeSolution { a: x[..n].to_vec(), omega: x[n], eta, sigma, residual_norm: res }.gauge_fixed();
    if opts.check_admissible {
        sol.check_admissible()?;
    }
    Ok(sol)
}

/// Smallest singular value of the `(a, Omega)` Jacobian.
pub fn min_singular_value<T: Real>(sol: &AmplitudeSolution<T>) -> T {
    let j = residual_jacobian(&sol.a, sol.omega, sol.eta, sol.sigma);
    crate::linalg::singular_values(&j).last().copied().unwrap_or(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ground4() -> AmplitudeSolution<f64> {
        let a = (1..=4).map(|k| (0.4f64).sqrt() * (k as f64 * PI / 5.0).sin()).collect();
        AmplitudeSolution::guess(a, -2.0 * (PI / 5.0).cos(), 0.0, 1.0)
    }

    #[test]
    fn linear_ground_state_has_zero_residual() {
        assert!(ground4().residual_norm < 1e-12);
    }

    #[test]
    fn residual_is_odd_in_amplitudes() {
        let a = vec![0.3, -0.7, 0.5, 0.2];
        let (r, _) = stationary_residual(&a, -1.3, 2.5, 1.5);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let (rn, _) = stationary_residual(&neg, -1.3, 2.5, 1.5);
        for (x, y) in r.iter().zip(&rn) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let a = vec![0.6, -0.3, 0.5, 0.4, 0.2];
        let (om, eta, sigma) = (-1.1, -3.0, 1.5);
        let j = residual_jacobian(&a, om, eta, sigma);
        let h = 1e-6;
        let mut x: Vec<f64> = a.iter().copied().chain([om]).collect();
        for c in 0..6 {
            let x0 = x[c];
            x[c] = x0 + h;
            let fp = full_residual(&x[..5], x[5], eta, sigma);
            x[c] = x0 - h;
            let fm = full_residual(&x[..5], x[5], eta, sigma);
            x[c] = x0;
            for r in 0..6 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - j[(r, c)]).abs() < 1e-7, "({r},{c}) {fd} vs {}", j[(r, c)]);
            }
        }
        let de = eta_derivative(&a, sigma);
        let fp = full_residual(&a, om, eta + h, sigma);
        let fm = full_residual(&a, om, eta - h, sigma);
        for r in 0..6 {
            assert!(((fp[r] - fm[r]) / (2.0 * h) - de[r]).abs() < 1e-7);
        }
    }

    #[test]
    fn newton_keeps_linear_eigenvectors() {
        for j in 1..=4 {
            let a: Vec<f64> = (1..=4).map(|k| (0.4f64).sqrt() * ((k * j) as f64 * PI / 5.0).sin()).collect();
            let om = -2.0 * (j as f64 * PI / 5.0).cos();
            let seed = AmplitudeSolution::guess(a.clone(), om + 0.05, 0.0, 1.0);
            let sol = newton_solve(&seed).unwrap();
            assert!((sol.omega - om).abs() < 1e-12);
            for (x, y) in sol.a.iter().zip(&a) {
                assert!((x - y).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn newton_reports_non_convergence_and_bad_seeds() {
        let seed = AmplitudeSolution::guess(vec![f64::NAN, 1.0], 0.0, 0.0, 1.0);
        assert!(matches!(newton_solve(&seed), Err(Error::Parameter(_))));
        let opts = NewtonOptions { max_iterations: 1, ..NewtonOptions::default() };
        let seed = AmplitudeSolution::guess(vec![1.0, 0.2, 0.7, 0.1], -3.0, -12.0, 1.0);
        assert!(matches!(newton_solve_with(&seed, &opts), Err(Error::NotConverged { .. })));
    }

    #[test]
    fn gauge_and_symmetry_maps() {
        let s = ground4();
        let neg = s.negated();
        assert!(neg.residual_norm < 1e-12);
        assert!(neg.gauge_fixed().a[0] > 0.0);
        assert_eq!(s.mirror_parity(1e-12), Some(1));
        let st = s.staggered();
        assert!(st.residual_norm < 1e-12);
        assert_eq!(st.signs(), vec![1, -1, 1, -1]);
        assert_eq!(st.mirror_parity(1e-12), Some(-1));
    }

    #[test]
    fn admissibility_rejects_vanishing_endpoint() {
        let s = AmplitudeSolution::guess(vec![0.0, 1.0, 0.0], 0.0, 0.0, 1.0);
        assert!(s.check_admissible().is_err());
        let s = AmplitudeSolution::guess(vec![0.5, 0.0, 0.5, 0.7], 0.0, 0.0, 1.0);
        assert!(s.check_admissible().is_err());
        // interior zero is admissible for odd N
        let s = AmplitudeSolution::guess(vec![0.7, 0.0, -0.7], 0.0, 0.0, 1.0);
        assert!(s.check_admissible().is_ok());
    }
}
