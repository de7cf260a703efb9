//! Single-well localized states for large negative `eta`.
//!
//! With `q_site = 1 + s1 / eta^2` and `Omega = eta (1 + Gamma / eta^2)`, a
//! state localized on an end well has `s1 -> -1`, `Gamma -> 1 - sigma`.
//! An interior well has two neighbours feeding it, which doubles both
//! limits: `s1 -> -2`, `Gamma -> 2 (1 - sigma)`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::scalar::Real;
use crate::stationary::{newton_solve, AmplitudeSolution};

/// Most negative `eta` outside the asymptotic regime.
pub const ASYMPTOTIC_ETA_MAX: f64 = -8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport<T> {
    /// 1-based well index.
    pub site: usize,
    pub neighbours: usize,
    pub s1_measured: T,
    pub gamma_measured: T,
    pub s1_expected: T,
    pub gamma_expected: T,
    pub q_site: T,
    /// Lower bound `1 - (neighbours + 1) / eta^2` on `q_site`.
    pub q_bound: T,
    /// `q_site` is the largest action and respects `q_bound`.
    pub localized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedState<T> {
    pub guess: AmplitudeSolution<T>,
    pub solution: AmplitudeSolution<T>,
    pub report: AsymptoticReport<T>,
}

/// Builds the asymptotic seed for a state localized on `site` (1-based),
/// refines it by Newton and measures `(s1, Gamma)` on the result.
pub fn asymptotic_localized_seed<T: Real>(eta: T, sigma: T, n: usize, site: usize) -> Result<LocalizedState<T>> {
    if !(eta <= T::lit(ASYMPTOTIC_ETA_MAX)) {
        return param(format!("asymptotic seeds need eta <= {ASYMPTOTIC_ETA_MAX}"));
    }
    if n < 2 || site == 0 || site > n {
        return param(format!("site {site} out of range for N = {n}"));
    }
    if !(sigma > T::zero()) {
        return param("sigma must be positive");
    }
    let k0 = site - 1;
    let neighbours = usize::from(k0 > 0) + usize::from(k0 + 1 < n);
    let nb = T::from_usize_lossy(neighbours);
    let inv2 = (eta * eta).recip();
    let s1_expected = -nb;
    let gamma_expected = nb * (T::one() - sigma);

    // q at distance d from the site scales like eta^(-2d); signs all positive for eta < 0.
    let mut q: Vec<T> = (0..n).map(|k| inv2.powi(k.abs_diff(k0) as i32)).collect();
    let rest: T = q.iter().enumerate().filter(|(k, _)| *k != k0).map(|(_, v)| *v).sum();
    q[k0] = T::one() - rest;
    let omega = eta + gamma_expected / eta;
    let guess = AmplitudeSolution::from_actions(&q, &vec![1; n], omega, eta, sigma)?;
    let solution = newton_solve(&guess).map_err(|e| {
        Error::Numeric(format!(
            "localized state at eta={eta} did not converge ({e}); continue from a more negative eta instead"
        ))
    })?;

    let qs = solution.actions();
    let total: T = qs.iter().copied().sum();
    let off: T = qs.iter().enumerate().filter(|(k, _)| *k != k0).map(|(_, v)| *v).sum::<T>() / total;
    let q_site = qs[k0] / total;
    let q_bound = T::one() - (nb + T::one()) * inv2;
    let argmax = (0..n).max_by(|&i, &j| qs[i].partial_cmp(&qs[j]).unwrap_or(std::cmp::Ordering::Equal));
    let report = AsymptoticReport {
        site,
        neighbours,
        s1_measured: -off * eta * eta,
        gamma_measured: (solution.omega - eta) * eta,
        s1_expected,
        gamma_expected,
        q_site,
        q_bound,
        localized: argmax == Some(k0) && q_site >= q_bound,
    };
    Ok(LocalizedState { guess, solution, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn end_site_limits() {
        let st = asymptotic_localized_seed(-1000.0f64, 2.0, 4, 1).unwrap();
        assert!((st.report.s1_measured + 1.0).abs() < 0.01);
        assert!((st.report.gamma_measured + 1.0).abs() < 0.01);
        assert!(st.report.localized);
    }

    #[test]
    fn interior_site_limits_double() {
        let st = asymptotic_localized_seed(-400.0f64, 2.0, 4, 2).unwrap();
        assert_eq!(st.report.neighbours, 2);
        assert!((st.report.s1_measured + 2.0).abs() < 0.01);
        assert!((st.report.gamma_measured + 2.0).abs() < 0.01);
        assert!(st.report.localized);
    }

    #[test]
    fn every_site_localizes_at_minus_twelve() {
        for site in 1..=4 {
            let st = asymptotic_localized_seed(-12.0f64, 1.0, 4, site).unwrap();
            assert!(st.report.localized, "site {site}: {:?}", st.report);
            assert!((st.solution.omega + 12.0).abs() < 2e-3);
        }
    }

    #[test]
    fn rejects_weak_nonlinearity_and_bad_site() {
        assert!(matches!(asymptotic_localized_seed(-5.0f64, 1.0, 4, 1), Err(Error::Parameter(_))));
        assert!(matches!(asymptotic_localized_seed(-12.0f64, 1.0, 4, 0), Err(Error::Parameter(_))));
        assert!(matches!(asymptotic_localized_seed(-12.0f64, 1.0, 4, 5), Err(Error::Parameter(_))));
    }
}
