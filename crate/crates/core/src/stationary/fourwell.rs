//! Closed-form mirror-symmetric stationary states for four wells.
//!
//! A sign pattern `(j, l, m)` fixes the phase jumps between neighbouring
//! wells: `cos(theta_{k+1} - theta_k) = (-1)^index`. Mirror-symmetric states
//! have `m = j` and actions `(q, p, p, q)` with `p = 1/2 - q`; reducing the
//! four equations to two gives `eta` and `Omega` explicitly as functions of `q`.

use serde::{Deserialize, Serialize};

use super::{newton_solve, AmplitudeSolution};
use crate::continuation::{Branch, BranchPoint, Termination};
use crate::error::{param, Result};
use crate::scalar::Real;

/// Phase-jump indices of a four-well sign pattern, each in `{1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignPattern {
    pub j: u8,
    pub l: u8,
    pub m: u8,
}

fn jump(index: u8) -> i8 {
    if index.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl SignPattern {
    pub fn new(j: u8, l: u8, m: u8) -> Result<Self> {
        if [j, l, m].iter().all(|i| *i == 1 || *i == 2) {
            Ok(Self { j, l, m })
        } else {
            param("sign-pattern indices must be 1 or 2")
        }
    }

    /// All eight patterns, `(1,1,1)` first.
    pub fn all() -> Vec<Self> {
        let mut v = Vec::with_capacity(8);
        for j in 1..=2 {
            for l in 1..=2 {
                for m in 1..=2 {
                    v.push(Self { j, l, m });
                }
            }
        }
        v
    }

    /// Amplitude signs with `a_1 > 0`.
    pub fn signs(&self) -> [i8; 4] {
        let s2 = jump(self.j);
        let s3 = s2 * jump(self.l);
        [1, s2, s3, s3 * jump(self.m)]
    }

    pub fn from_signs(signs: &[i8]) -> Option<Self> {
        if signs.len() != 4 || signs.contains(&0) {
            return None;
        }
        let idx = |a: i8, b: i8| if a == b { 2 } else { 1 };
        Some(Self { j: idx(signs[0], signs[1]), l: idx(signs[1], signs[2]), m: idx(signs[2], signs[3]) })
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        self.j == self.m
    }
}

impl std::fmt::Display for SignPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.j, self.l, self.m)
    }
}

/// Mirror-symmetric family `(j, l)`, i.e. the pattern `(j, l, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetricFamily {
    pub j: u8,
    pub l: u8,
}

impl SymmetricFamily {
    pub fn new(j: u8, l: u8) -> Result<Self> {
        SignPattern::new(j, l, j).map(|_| Self { j, l })
    }

    pub fn all() -> [Self; 4] {
        [Self { j: 1, l: 1 }, Self { j: 1, l: 2 }, Self { j: 2, l: 1 }, Self { j: 2, l: 2 }]
    }

    pub fn pattern(&self) -> SignPattern {
        SignPattern { j: self.j, l: self.l, m: self.j }
    }

    pub fn label(&self) -> String {
        format!("({},{})", self.j, self.l)
    }
}

/// Distance from `q = 1/4` below which the closed form is refused.
const QUARTER_EXCLUSION: f64 = 1e-12;

fn check_q<T: Real>(q: T) -> Result<()> {
    if !(q > T::zero() && q < T::lit(0.5)) {
        return param(format!("outer-well action q={q} must lie in (0, 1/2)"));
    }
    if (q - T::lit(0.25)).abs() <= T::lit(QUARTER_EXCLUSION) {
        return param("q = 1/4 is a singular point of the symmetric family");
    }
    Ok(())
}

/// `(eta, Omega)` of the symmetric state with outer-well action `q`.
pub fn symmetric_family_fourwell<T: Real>(q: T, sigma: T, family: SymmetricFamily) -> Result<(T, T)> {
    check_q(q)?;
    if !(sigma > T::zero()) {
        return param("sigma must be positive");
    }
    Ok(eta_omega(q, sigma, family))
}

fn eta_omega<T: Real>(q: T, sigma: T, family: SymmetricFamily) -> (T, T) {
    let p = T::lit(0.5) - q;
    let sj = T::from_i8(jump(family.j)).unwrap();
    let sl = T::from_i8(jump(family.l)).unwrap();
    let r = (p / q).sqrt();
    let eta = (sj * r - sj / r - sl) / (q.powf(sigma) - p.powf(sigma));
    let omega = eta * q.powf(sigma) - sj * r;
    (eta, omega)
}

/// Amplitudes `(sqrt q, s2 sqrt p, s3 sqrt p, s4 sqrt q)` of the family.
pub fn symmetric_amplitudes<T: Real>(q: T, family: SymmetricFamily) -> Vec<T> {
    let p = T::lit(0.5) - q;
    let mag = [q.sqrt(), p.sqrt(), p.sqrt(), q.sqrt()];
    family
        .pattern()
        .signs()
        .iter()
        .zip(mag)
        .map(|(s, v)| if *s < 0 { -v } else { v })
        .collect()
}

/// The exact stationary state of the family at `q`.
pub fn symmetric_point<T: Real>(q: T, sigma: T, family: SymmetricFamily) -> Result<AmplitudeSolution<T>> {
    let (eta, omega) = symmetric_family_fourwell(q, sigma, family)?;
    Ok(AmplitudeSolution::guess(symmetric_amplitudes(q, family), omega, eta, sigma))
}

/// Samples of `q` on `(lo, hi)` clustered towards both ends.
fn clustered_grid<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    (1..count)
        .map(|i| {
            let u = T::from_usize_lossy(i) / T::from_usize_lossy(count);
            lo + (hi - lo) * (T::one() - (T::PI() * u).cos()) / T::lit(2.0)
        })
        .collect()
}

const ROOT_SAMPLES: usize = 4000;

/// All states of the family at the given `eta`, Newton-refined, ordered by `q`.
pub fn symmetric_point_at_eta<T: Real>(eta: T, sigma: T, family: SymmetricFamily) -> Result<Vec<AmplitudeSolution<T>>> {
    if !(sigma > T::zero()) || !eta.is_finite() {
        return param("need positive sigma and finite eta");
    }
    let quarter = T::lit(0.25);
    let mut out = Vec::new();
    for (lo, hi) in [(T::zero(), quarter), (quarter, T::lit(0.5))] {
        let grid = clustered_grid(lo, hi, ROOT_SAMPLES);
        let f = |q: T| eta_omega(q, sigma, family).0 - eta;
        for w in grid.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (f(a), f(b));
            if !(fa.is_finite() && fb.is_finite()) || (fa < T::zero()) == (fb < T::zero()) {
                continue;
            }
            let sa = fa < T::zero();
            for _ in 0..200 {
                let mid = (a + b) / T::lit(2.0);
                if mid <= a || mid >= b {
                    break;
                }
                if (f(mid) < T::zero()) == sa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let q = (a + b) / T::lit(2.0);
            let omega = eta_omega(q, sigma, family).1;
            let guess = AmplitudeSolution::guess(symmetric_amplitudes(q, family), omega, eta, sigma);
            out.push(newton_solve(&guess)?);
        }
    }
    Ok(out)
}

/// Closed-form curve of the family sampled at `q_grid`.
///
/// The grid must be strictly monotone and keep at least `1e-6` away from
/// `q = 1/4`, where `eta` diverges; sample each side of it separately.
pub fn sweep_symmetric<T: Real>(q_grid: &[T], sigma: T, family: SymmetricFamily) -> Result<Branch<T>> {
    if q_grid.len() < 2 {
        return param("sweep needs at least two q values");
    }
    let inc = q_grid[1] > q_grid[0];
    if q_grid.windows(2).any(|w| (w[1] > w[0]) != inc || w[1] == w[0]) {
        return param("q grid must be strictly monotone");
    }
    for q in q_grid {
        if (*q - T::lit(0.25)).abs() < T::lit(1e-6) {
            return param(format!("q={q} is within 1e-6 of the singular point 1/4"));
        }
    }
    let sols = q_grid.iter().map(|q| symmetric_point(*q, sigma, family)).collect::<Result<Vec<_>>>()?;
    let mut points: Vec<BranchPoint<T>> = Vec::with_capacity(sols.len());
    let mut s = T::zero();
    for (i, sol) in sols.iter().enumerate() {
        if i > 0 {
            s += extended_distance(&sols[i - 1], sol);
        }
        points.push(BranchPoint {
            eta: sol.eta,
            omega: sol.omega,
            a: sol.a.clone(),
            min_singular_value: super::min_singular_value(sol),
            arclength: s,
            tangent_eta: T::zero(),
            residual_norm: sol.residual_norm,
        });
    }
    for i in 0..points.len() {
        let (l, r) = (i.saturating_sub(1), (i + 1).min(points.len() - 1));
        let ds = points[r].arclength - points[l].arclength;
        points[i].tangent_eta = if ds > T::zero() { (points[r].eta - points[l].eta) / ds } else { T::zero() };
    }
    Ok(Branch {
        points,
        events: vec![],
        family_label: format!("symmetric {}", family.label()),
        sigma,
        termination: vec![Termination::Sampled],
    })
}

fn extended_distance<T: Real>(x: &AmplitudeSolution<T>, y: &AmplitudeSolution<T>) -> T {
    let mut d2 = (x.eta - y.eta).powi(2) + (x.omega - y.omega).powi(2);
    for (a, b) in x.a.iter().zip(&y.a) {
        d2 += (*a - *b).powi(2);
    }
    d2.sqrt()
}

/// Turning point of `eta(q)` on one side of `q = 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldPoint<T> {
    pub q: T,
    pub eta: T,
    pub omega: T,
}

const FOLD_SAMPLES: usize = 2000;

/// Local extrema of `eta(q)` on `(0, 1/4)` and `(1/4, 1/2)`, located by
/// sampling and refined by golden-section search.
pub fn symmetric_folds<T: Real>(sigma: T, family: SymmetricFamily) -> Result<Vec<FoldPoint<T>>> {
    if !(sigma > T::zero()) {
        return param("sigma must be positive");
    }
    let quarter = T::lit(0.25);
    let eta = |q: T| eta_omega(q, sigma, family).0;
    let mut out = Vec::new();
    for (lo, hi) in [(T::zero(), quarter), (quarter, T::lit(0.5))] {
        // Stay clear of the divergences at the interval ends.
        let margin = (hi - lo) * T::lit(1e-6);
        let grid = clustered_grid(lo + margin, hi - margin, FOLD_SAMPLES);
        let vals: Vec<T> = grid.iter().map(|q| eta(*q)).collect();
        for i in 1..grid.len() - 1 {
            let is_max = vals[i] > vals[i - 1] && vals[i] >= vals[i + 1];
            let is_min = vals[i] < vals[i - 1] && vals[i] <= vals[i + 1];
            if !(is_max || is_min) {
                continue;
            }
            let sgn = if is_max { T::one() } else { -T::one() };
            let q = golden_max(|q| sgn * eta(q), grid[i - 1], grid[i + 1]);
            let (e, o) = eta_omega(q, sigma, family);
            out.push(FoldPoint { q, eta: e, omega: o });
        }
    }
    Ok(out)
}

fn golden_max<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon() * T::lit(4.0) * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const GROUND: SymmetricFamily = SymmetricFamily { j: 2, l: 2 };

    #[test]
    fn pattern_signs_round_trip() {
        for p in SignPattern::all() {
            assert_eq!(SignPattern::from_signs(&p.signs()), Some(p));
        }
        assert_eq!(SignPattern { j: 2, l: 2, m: 2 }.signs(), [1, 1, 1, 1]);
        assert_eq!(SignPattern { j: 1, l: 1, m: 1 }.signs(), [1, -1, 1, -1]);
        assert!(SignPattern::new(3, 1, 1).is_err());
    }

    #[test]
    fn linear_ground_state_lies_on_the_family() {
        let q = 0.4 * (PI / 5.0).sin().powi(2);
        let (eta, om) = symmetric_family_fourwell(q, 1.0, GROUND).unwrap();
        assert!(eta.abs() < 1e-12);
        assert!((om + 2.0 * (PI / 5.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_points_solve_the_stationary_problem() {
        for fam in SymmetricFamily::all() {
            for q in [0.01, 0.1, 0.2, 0.3, 0.45] {
                for sigma in [1.0, 2.5] {
                    let s = symmetric_point(q, sigma, fam).unwrap();
                    assert!(s.residual_norm < 1e-12, "{fam:?} q={q}: {}", s.residual_norm);
                }
            }
        }
    }

    #[test]
    fn staggered_family_negates_eta() {
        let other = SymmetricFamily { j: 1, l: 1 };
        for q in [0.05f64, 0.3] {
            let (e1, o1) = symmetric_family_fourwell(q, 1.0, GROUND).unwrap();
            let (e2, o2) = symmetric_family_fourwell(q, 1.0, other).unwrap();
            assert!((e1 + e2).abs() < 1e-12 && (o1 + o2).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_is_excluded() {
        assert!(symmetric_family_fourwell(0.25, 1.0, GROUND).is_err());
        assert!(symmetric_family_fourwell(0.0, 1.0, GROUND).is_err());
        assert!(sweep_symmetric(&[0.2, 0.2499999], 1.0, GROUND).is_err());
        assert!(sweep_symmetric(&[0.3, 0.3], 1.0, GROUND).is_err());
    }

    #[test]
    fn fold_on_the_upper_interval() {
        let folds = symmetric_folds(1.0f64, GROUND).unwrap();
        assert_eq!(folds.len(), 1);
        assert!((folds[0].eta + 8.324).abs() < 0.01);
        assert!((folds[0].q - 0.405).abs() < 1e-3);
    }

    #[test]
    fn roots_at_minus_twelve() {
        let sols = symmetric_point_at_eta(-12.0, 1.0, GROUND).unwrap();
        let q: Vec<f64> = sols.iter().map(|s| s.a[0] * s.a[0]).collect();
        assert_eq!(q.len(), 3);
        assert!((q[0] - 0.010).abs() < 1e-3 && (q[1] - 0.314).abs() < 1e-3 && (q[2] - 0.478).abs() < 1e-3);
    }

    #[test]
    fn sweep_tracks_monotone_grid() {
        let grid: Vec<f64> = (1..50).map(|i| 0.25 + 0.25 * i as f64 / 50.0).collect();
        let b = sweep_symmetric(&grid, 1.0, GROUND).unwrap();
        assert_eq!(b.len(), grid.len());
        let max_eta = b.points.iter().map(|p| p.eta).fold(f64::NEG_INFINITY, f64::max);
        assert!(max_eta < -8.3 && max_eta > -8.33);
        assert!(b.points.windows(2).all(|w| w[1].arclength > w[0].arclength));
    }
}
