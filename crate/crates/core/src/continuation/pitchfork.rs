//! Symmetry-breaking bifurcations of mirror-symmetric branches.
//!
//! For a mirror-symmetric state the Jacobian splits into a block acting on
//! symmetry-preserving perturbations and a block acting on perturbations
//! that break the symmetry. Only the second block can vanish at a
//! pitchfork, which separates these points from folds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bisect_along, continue_branch, correct, jacobian_min_singular, BifurcationEvent, Branch, Classification,
    Direction, EventKind, StepControl,
};
use crate::error::{param, Error, Result};
use crate::linalg::{symmetric_eigen, Lu, Matrix};
use crate::scalar::Real;
use crate::stationary::{linearization, AmplitudeSolution};

/// Relative tolerance used to decide that a state is mirror symmetric.
const PARITY_TOL: f64 = 1e-8;

/// Arclength offsets tried, in order, when switching onto the asymmetric branch.
const SWITCH_OFFSETS: [f64; 4] = [1e-2, 5e-3, 1e-3, 1e-4];

/// Basis (columns, length `N`) of the perturbations with `M v = -parity v`.
fn breaking_basis<T: Real>(n: usize, parity: i8) -> Vec<Vec<T>> {
    let half = T::lit(0.5).sqrt();
    let p = if parity < 0 { -T::one() } else { T::one() };
    let mut basis = Vec::new();
    for k in 0..n / 2 {
        let mut v = vec![T::zero(); n];
        v[k] = half;
        v[n - 1 - k] = -p * half;
        basis.push(v);
    }
    if n % 2 == 1 && parity < 0 {
        let mut v = vec![T::zero(); n];
        v[n / 2] = T::one();
        basis.push(v);
    }
    basis
}

/// Eigenvalues (ascending) and full-space eigenvectors of the
/// symmetry-breaking block of the linearization.
pub fn breaking_block_eigen<T: Real>(
    a: &[T],
    omega: T,
    eta: T,
    sigma: T,
    parity: i8,
) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let n = a.len();
    let basis = breaking_basis::<T>(n, parity);
    if basis.is_empty() {
        return Ok((vec![], vec![]));
    }
    let l = linearization(a, omega, eta, sigma);
    let r = basis.len();
    let lb: Vec<Vec<T>> = basis.iter().map(|v| l.mul_vec(v)).collect();
    let block = Matrix::from_fn(r, r, |i, j| crate::scalar::dot(&basis[i], &lb[j]));
    let eig = symmetric_eigen(&block)?;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| eig.values[i].partial_cmp(&eig.values[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| eig.values[i]).collect();
    let vectors = order
        .iter()
        .map(|&c| {
            (0..n).map(|k| (0..r).map(|i| basis[i][k] * eig.vectors[(i, c)]).sum()).collect()
        })
        .collect();
    Ok((values, vectors))
}

fn parity_of<T: Real>(a: &[T]) -> Option<i8> {
    let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    AmplitudeSolution::guess(a.to_vec(), T::zero(), T::zero(), T::one()).mirror_parity(T::lit(PARITY_TOL) * scale)
}

fn block_det<T: Real>(x: &[T], sigma: T, parity: i8) -> T {
    let n = x.len() - 2;
    breaking_block_eigen(&x[..n], x[n], x[n + 1], sigma, parity)
        .map(|(v, _)| v.iter().fold(T::one(), |p, l| p * *l))
        .unwrap_or(T::nan())
}

fn positive_count<T: Real>(values: &[T]) -> usize {
    values.iter().filter(|v| **v > T::zero()).count()
}

/// Sign carrier of the squared frequency of the critical breaking mode.
///
/// With `L+` the linearization and `L- = Omega + T - eta |a|^(2 sigma)` its
/// phase counterpart, the small eigenvalue `lambda` of `L+` on the breaking
/// subspace (eigenvector `phi`) moves a frequency squared through zero as
/// `lambda / <phi, L-^-1 phi>`. A negative value marks an exponentially
/// growing perturbation. Staggering flips the sign of both operators, so
/// the indicator is invariant under it.
fn critical_frequency_sign<T: Real>(a: &[T], omega: T, eta: T, sigma: T, parity: i8) -> Option<T> {
    let n = a.len();
    let basis = breaking_basis::<T>(n, parity);
    let (vals, vecs) = breaking_block_eigen(a, omega, eta, sigma, parity).ok()?;
    let k = (0..vals.len()).min_by(|&i, &j| vals[i].abs().partial_cmp(&vals[j].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
    let two_s = T::lit(2.0) * sigma;
    let mut lm = linearization(a, omega, eta, sigma);
    for i in 0..n {
        lm[(i, i)] += eta * two_s * a[i].abs().powf(two_s);
    }
    let r = basis.len();
    let lb: Vec<Vec<T>> = basis.iter().map(|v| lm.mul_vec(v)).collect();
    let block = Matrix::from_fn(r, r, |i, j| crate::scalar::dot(&basis[i], &lb[j]));
    let lu = Lu::factor(&block, T::tolerance(1e-12)).ok()?;
    let phi: Vec<T> = basis.iter().map(|b| crate::scalar::dot(b, &vecs[k])).collect();
    let g = crate::scalar::dot(&phi, &lu.solve(&phi));
    Some(vals[k] * g)
}

/// Pitchforks on the mirror-symmetric stretches of `branch`, each switched
/// onto its asymmetric branch and classified.
///
/// The symmetric state loses stability on the side where the critical
/// breaking mode acquires an imaginary frequency. The event is supercritical when the
/// asymmetric branch emerges on that side and subcritical otherwise; when no
/// asymmetric point can be converged the classification is `None`.
pub fn detect_pitchfork_and_classify<T: Real>(branch: &Branch<T>) -> Vec<BifurcationEvent<T>> {
    let sigma = branch.sigma;
    let info: Vec<Option<(i8, Vec<T>)>> = branch
        .points
        .iter()
        .map(|p| {
            let par = parity_of(&p.a)?;
            let (vals, _) = breaking_block_eigen(&p.a, p.omega, p.eta, sigma, par).ok()?;
            (!vals.is_empty()).then_some((par, vals))
        })
        .collect();
    let mut events = Vec::new();
    for i in 0..branch.points.len().saturating_sub(1) {
        let (Some((p0, v0)), Some((p1, v1))) = (&info[i], &info[i + 1]) else { continue };
        if p0 != p1 {
            continue;
        }
        let (c0, c1) = (positive_count(v0), positive_count(v1));
        if c0 == c1 {
            continue;
        }
        let (p, q) = (&branch.points[i], &branch.points[i + 1]);
        let parity = *p0;
        let Some((xc, _)) = bisect_along(p, q, sigma, |x, _| block_det(x, sigma, parity)) else { continue };
        let n = p.a.len();
        let eta_c = xc[n + 1];
        let indicator = |b: &super::BranchPoint<T>| critical_frequency_sign(&b.a, b.omega, b.eta, sigma, parity);
        let unstable_eta = match (indicator(p), indicator(q)) {
            (Some(s0), Some(s1)) if (s0 < T::zero()) != (s1 < T::zero()) => {
                if s1 < T::zero() {
                    q.eta
                } else {
                    p.eta
                }
            }
            // degenerate phase block: fall back to the side that gains a positive eigenvalue
            _ if c1 > c0 => q.eta,
            _ => p.eta,
        };
        let unstable_side = unstable_eta - eta_c;
        let (classification, seed) = switch_branch(&xc, sigma, parity, unstable_side)
            .unwrap_or_else(|| {
                (Classification::None, AmplitudeSolution::guess(xc[..n].to_vec(), xc[n], eta_c, sigma).gauge_fixed())
            });
        events.push(BifurcationEvent {
            kind: EventKind::Pitchfork,
            eta_c,
            classification,
            seed,
            min_singular_value: jacobian_min_singular(&xc[..n], xc[n], eta_c, sigma),
            family_label: branch.family_label.clone(),
        });
    }
    events
}

/// Steps off the symmetric branch along the critical breaking eigenvector.
fn switch_branch<T: Real>(
    xc: &[T],
    sigma: T,
    parity: i8,
    unstable_side: T,
) -> Option<(Classification, AmplitudeSolution<T>)> {
    let n = xc.len() - 2;
    let (vals, vecs) = breaking_block_eigen(&xc[..n], xc[n], xc[n + 1], sigma, parity).ok()?;
    let k = (0..vals.len()).min_by(|&i, &j| {
        vals[i].abs().partial_cmp(&vals[j].abs()).unwrap_or(std::cmp::Ordering::Equal)
    })?;
    let mut dir = vecs[k].clone();
    dir.extend([T::zero(), T::zero()]);
    for h in SWITCH_OFFSETS {
        let h = T::lit(h);
        let anchor: Vec<T> = xc.iter().zip(&dir).map(|(x, d)| *x + h * *d).collect();
        let Some((x, _)) = correct(&anchor, &dir, sigma, T::tolerance(1e-12), 30) else { continue };
        let d_eta = x[n + 1] - xc[n + 1];
        if d_eta.abs() <= T::lit(1e-10) || parity_of(&x[..n]).is_some() {
            continue;
        }
        let class = if unstable_side == T::zero() {
            Classification::None
        } else if (d_eta > T::zero()) == (unstable_side > T::zero()) {
            Classification::Supercritical
        } else {
            Classification::Subcritical
        };
        let seed = AmplitudeSolution::guess(x[..n].to_vec(), x[n], x[n + 1], sigma).gauge_fixed();
        return Some((class, seed));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRow<T> {
    pub n: usize,
    pub sigma: T,
    pub eta_bif: T,
    pub omega_bif: T,
    pub classification: Classification,
}

/// Lowest `eta` searched for the ground-state pitchfork.
const GROUND_SEARCH_LIMIT: f64 = -60.0;
const GROUND_CHUNK: f64 = 5.0;

/// First pitchfork met when the symmetric ground state is continued from
/// `eta = 0` towards negative `eta`, for each `N` (evaluated in parallel).
pub fn ground_state_bifurcation_table<T: Real>(n_list: &[usize], sigma: T) -> Result<Vec<BifurcationRow<T>>> {
    if !(sigma > T::zero()) {
        return param("sigma must be positive");
    }
    if let Some(n) = n_list.iter().find(|n| **n < 2 || **n % 2 == 1) {
        return param(format!("bifurcation table needs even N >= 2, got {n}"));
    }
    n_list.par_iter().map(|&n| ground_state_pitchfork(n, sigma)).collect()
}

fn ground_state_pitchfork<T: Real>(n: usize, sigma: T) -> Result<BifurcationRow<T>> {
    let np1 = T::from_usize_lossy(n + 1);
    let c = (T::lit(2.0) / np1).sqrt();
    let a = (1..=n).map(|k| c * (T::from_usize_lossy(k) * T::PI() / np1).sin()).collect();
    let omega = -T::lit(2.0) * (T::PI() / np1).cos();
    let mut seed = AmplitudeSolution::guess(a, omega, T::zero(), sigma);
    let ctl = StepControl { direction: Direction::Decreasing, ..StepControl::default() };
    let mut top = T::zero();
    while top > T::lit(GROUND_SEARCH_LIMIT) {
        let bottom = top - T::lit(GROUND_CHUNK);
        let mut branch = continue_branch(&seed, (bottom, top), &ctl)?;
        branch.family_label = format!("ground N={n}");
        if let Some(ev) = detect_pitchfork_and_classify(&branch).into_iter().next() {
            let n_ = ev.seed.n();
            debug_assert_eq!(n_, n);
            let omega_bif = branch
                .points
                .windows(2)
                .find(|w| (w[0].eta - ev.eta_c) * (w[1].eta - ev.eta_c) <= T::zero())
                .map(|w| {
                    let f = (ev.eta_c - w[0].eta) / (w[1].eta - w[0].eta);
                    w[0].omega + f * (w[1].omega - w[0].omega)
                })
                .unwrap_or(T::nan());
            return Ok(BifurcationRow { n, sigma, eta_bif: ev.eta_c, omega_bif, classification: ev.classification });
        }
        let last = branch.points.last().expect("branch has its seed");
        if (last.eta - bottom).abs() > T::lit(1e-9) {
            return Err(Error::Numeric(format!(
                "ground-state continuation for N={n} stopped at eta={} before any bifurcation",
                last.eta
            )));
        }
        seed = last.solution(sigma);
        top = bottom;
    }
    Err(Error::Numeric(format!(
        "no symmetry-breaking bifurcation of the N={n} ground state above eta={GROUND_SEARCH_LIMIT}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breaking_basis_is_orthonormal_and_odd() {
        for n in 2..7 {
            for parity in [1i8, -1] {
                let b = breaking_basis::<f64>(n, parity);
                let expected = if parity > 0 { n / 2 } else { n - n / 2 };
                assert_eq!(b.len(), expected);
                for (i, u) in b.iter().enumerate() {
                    for k in 0..n {
                        assert!((u[n - 1 - k] + parity as f64 * u[k]).abs() < 1e-15);
                    }
                    for (j, v) in b.iter().enumerate() {
                        let d = crate::scalar::dot(u, v);
                        assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn dimer_breaking_eigenvalue_is_linear_in_eta() {
        // On a = (1,1)/sqrt2 the breaking block is -eta - 2 for sigma = 1.
        for eta in [-3.0, -2.0, 0.5] {
            let a = vec![0.5f64.sqrt(); 2];
            let (v, _) = breaking_block_eigen(&a, eta / 2.0 - 1.0, eta, 1.0, 1).unwrap();
            assert!((v[0] + eta + 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn dimer_pitchfork_is_supercritical_at_minus_two() {
        let rows = ground_state_bifurcation_table(&[2], 1.0f64).unwrap();
        assert!((rows[0].eta_bif + 2.0).abs() < 1e-9);
        assert!((rows[0].omega_bif + 2.0).abs() < 1e-6);
        assert_eq!(rows[0].classification, Classification::Supercritical);
    }

    #[test]
    fn table_rejects_odd_sizes() {
        assert!(ground_state_bifurcation_table(&[3], 1.0f64).is_err());
        assert!(ground_state_bifurcation_table(&[4], 0.0f64).is_err());
    }
}
