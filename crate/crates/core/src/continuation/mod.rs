//! Branches of stationary states traced in `eta`.
//!
//! Points live in the extended space `x = (a, Omega, eta)` of dimension
//! `N + 2`; the stationary residual plus normalization gives `N + 1`
//! equations, so solution sets are curves parameterized by arclength.

mod asymptotic;
mod pitchfork;

pub use asymptotic::{asymptotic_localized_seed, AsymptoticReport, LocalizedState, ASYMPTOTIC_ETA_MAX};
pub use pitchfork::{
    breaking_block_eigen, detect_pitchfork_and_classify, ground_state_bifurcation_table, BifurcationRow,
};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{singular_values, Lu, Matrix};
use crate::scalar::{dot, max_abs, norm2, Real};
use crate::stationary::{eta_derivative, full_residual, residual_jacobian, AmplitudeSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Fold,
    Pitchfork,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Supercritical,
    Subcritical,
    None,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Supercritical => "supercritical",
            Self::Subcritical => "subcritical",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationEvent<T> {
    pub kind: EventKind,
    pub eta_c: T,
    pub classification: Classification,
    /// Solution at the critical point (fold) or on the emanating branch (pitchfork).
    pub seed: AmplitudeSolution<T>,
    /// Smallest singular value of the `(a, Omega)` Jacobian at `eta_c`.
    pub min_singular_value: T,
    pub family_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint<T> {
    pub eta: T,
    pub omega: T,
    pub a: Vec<T>,
    pub min_singular_value: T,
    pub arclength: T,
    /// `d eta / d s` along the traversal direction.
    pub tangent_eta: T,
    pub residual_norm: T,
}

impl<T: Real> BranchPoint<T> {
    pub fn solution(&self, sigma: T) -> AmplitudeSolution<T> {
        AmplitudeSolution {
            a: self.a.clone(),
            omega: self.omega,
            eta: self.eta,
            sigma,
            residual_norm: self.residual_norm,
        }
    }

    pub fn actions(&self) -> Vec<T> {
        self.a.iter().map(|x| *x * *x).collect()
    }

    fn extended(&self) -> Vec<T> {
        let mut x = self.a.clone();
        x.push(self.omega);
        x.push(self.eta);
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached an end of the requested `eta` range.
    RangeEnd,
    MaxPoints,
    /// Corrector kept failing down to the minimum step.
    StepTooSmall { eta: f64, reason: String },
    /// Points supplied directly (closed-form sweeps).
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch<T> {
    pub points: Vec<BranchPoint<T>>,
    pub events: Vec<BifurcationEvent<T>>,
    pub family_label: String,
    pub sigma: T,
    pub termination: Vec<Termination>,
}

impl<T: Real> Branch<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n(&self) -> usize {
        self.points.first().map_or(0, |p| p.a.len())
    }

    /// Solutions where the branch crosses `eta` (linear interpolation between
    /// samples, then Newton at fixed `eta`).
    pub fn crossings(&self, eta: T) -> Vec<AmplitudeSolution<T>> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            let hit = if p.eta == eta {
                Some(T::zero())
            } else if (p.eta - eta) * (q.eta - eta) < T::zero() {
                Some((eta - p.eta) / (q.eta - p.eta))
            } else {
                None
            };
            if let Some(f) = hit {
                let a = p.a.iter().zip(&q.a).map(|(x, y)| *x + f * (*y - *x)).collect();
                let om = p.omega + f * (q.omega - p.omega);
                let guess = AmplitudeSolution::guess(a, om, eta, self.sigma);
                if let Ok(s) = crate::stationary::newton_solve(&guess) {
                    out.push(s);
                }
            }
        }
        if let Some(last) = self.points.last() {
            if last.eta == eta {
                out.push(last.solution(self.sigma).gauge_fixed());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    pub initial: T,
    pub min: T,
    pub max: T,
    /// Largest `|eta|` change between stored points.
    pub max_eta_step: T,
    pub max_points: usize,
    pub tolerance: T,
    pub direction: Direction,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            initial: T::lit(1e-2),
            min: T::lit(1e-5),
            max: T::lit(0.5),
            max_eta_step: T::lit(0.05),
            max_points: 20_000,
            tolerance: T::tolerance(1e-11),
            direction: Direction::Both,
        }
    }
}

impl<T: Real> StepControl<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min > T::zero()
            && self.min <= self.initial
            && self.initial <= self.max
            && self.max_eta_step > T::zero()
            && self.max_points >= 2
            && self.tolerance > T::zero();
        if ok {
            Ok(())
        } else {
            param("step control needs 0 < min <= initial <= max, positive eta step and tolerance")
        }
    }
}

/// Jacobian of the `N + 1` equations in the `N + 2` extended unknowns.
fn extended_jacobian<T: Real>(x: &[T], sigma: T) -> Matrix<T> {
    let n = x.len() - 2;
    let j = residual_jacobian(&x[..n], x[n], x[n + 1], sigma);
    let de = eta_derivative(&x[..n], sigma);
    Matrix::from_fn(n + 1, n + 2, |r, c| if c <= n { j[(r, c)] } else { de[r] })
}

fn extended_residual<T: Real>(x: &[T], sigma: T) -> Vec<T> {
    let n = x.len() - 2;
    full_residual(&x[..n], x[n], x[n + 1], sigma)
}

/// Unit null vector of the extended Jacobian, oriented along `reference`.
fn tangent<T: Real>(x: &[T], sigma: T, reference: &[T]) -> Option<Vec<T>> {
    let m = x.len();
    let jac = extended_jacobian(x, sigma);
    let mut candidates = vec![reference.to_vec()];
    candidates.extend((0..m).rev().map(|i| (0..m).map(|k| if k == i { T::one() } else { T::zero() }).collect()));
    for r in candidates {
        let bordered = Matrix::from_fn(m, m, |i, j| if i + 1 < m { jac[(i, j)] } else { r[j] });
        let Ok(lu) = Lu::factor(&bordered, T::lit(1e-13)) else { continue };
        let mut rhs = vec![T::zero(); m];
        rhs[m - 1] = T::one();
        let mut t = lu.solve(&rhs);
        let nrm = norm2(&t);
        if !nrm.is_finite() || nrm == T::zero() {
            continue;
        }
        t.iter_mut().for_each(|v| *v /= nrm);
        if dot(&t, reference) < T::zero() {
            t.iter_mut().for_each(|v| *v = -*v);
        }
        return Some(t);
    }
    None
}

/// Newton on the residual plus the hyperplane `dir . (x - anchor) = 0`.
fn correct<T: Real>(anchor: &[T], dir: &[T], sigma: T, tol: T, max_iter: usize) -> Option<(Vec<T>, T)> {
    let m = anchor.len();
    let mut x = anchor.to_vec();
    let mut f = extended_residual(&x, sigma);
    let mut res = max_abs(&f);
    for it in 0..=max_iter {
        if res <= tol && it > 0 {
            return Some((x, res));
        }
        if it == max_iter {
            break;
        }
        let jac = extended_jacobian(&x, sigma);
        let bordered = Matrix::from_fn(m, m, |i, j| if i + 1 < m { jac[(i, j)] } else { dir[j] });
        let lu = Lu::factor(&bordered, T::lit(1e-15)).ok()?;
        let mut rhs = f.clone();
        rhs.push(dot(dir, &x.iter().zip(anchor).map(|(a, b)| *a - *b).collect::<Vec<_>>()));
        let step = lu.solve(&rhs);
        x.iter_mut().zip(&step).for_each(|(xi, si)| *xi -= *si);
        let fnew = extended_residual(&x, sigma);
        let rnew = max_abs(&fnew);
        if !rnew.is_finite() || (rnew > res && rnew > tol) {
            return None;
        }
        f = fnew;
        res = rnew;
    }
    (res <= tol).then_some((x, res))
}

fn jacobian_min_singular<T: Real>(a: &[T], omega: T, eta: T, sigma: T) -> T {
    let j = residual_jacobian(a, omega, eta, sigma);
    singular_values(&j).last().copied().unwrap_or(T::zero())
}

fn make_point<T: Real>(x: &[T], t: &[T], sigma: T, arclength: T, res: T) -> BranchPoint<T> {
    let n = x.len() - 2;
    BranchPoint {
        eta: x[n + 1],
        omega: x[n],
        a: x[..n].to_vec(),
        min_singular_value: jacobian_min_singular(&x[..n], x[n], x[n + 1], sigma),
        arclength,
        tangent_eta: t[n + 1],
        residual_norm: res,
    }
}

/// Pseudo-arclength continuation of `seed` within `eta_range`.
///
/// The seed must already solve the stationary problem. Steps adapt between
/// `min` and `max`, halving on corrector failure; the branch is truncated
/// (with the reason recorded) when the step underflows.
pub fn continue_branch<T: Real>(
    seed: &AmplitudeSolution<T>,
    eta_range: (T, T),
    control: &StepControl<T>,
) -> Result<Branch<T>> {
    control.validate()?;
    let (lo, hi) = (eta_range.0.min(eta_range.1), eta_range.0.max(eta_range.1));
    if !(lo.is_finite() && hi.is_finite()) || seed.eta < lo || seed.eta > hi {
        return param("seed eta must lie inside the continuation range");
    }
    let seed_tol = control.tolerance * T::lit(10.0);
    let (r, d) = seed.residual();
    let seed_res = max_abs(&r).max(d.abs());
    if !(seed_res <= seed_tol) {
        return Err(Error::State(format!(
            "continuation seed is not a converged stationary state (residual {})",
            seed_res
        )));
    }
    let label = String::new();
    let run = |sign: T| trace(seed, sign, lo, hi, control);
    let branch = match control.direction {
        Direction::Increasing => {
            let (pts, term) = run(T::one())?;
            Branch { points: pts, events: vec![], family_label: label, sigma: seed.sigma, termination: vec![term] }
        }
        Direction::Decreasing => {
            let (pts, term) = run(-T::one())?;
            Branch { points: pts, events: vec![], family_label: label, sigma: seed.sigma, termination: vec![term] }
        }
        Direction::Both => {
            let (mut back, t0) = run(-T::one())?;
            let (fwd, t1) = run(T::one())?;
            back.reverse();
            for p in back.iter_mut() {
                p.tangent_eta = -p.tangent_eta;
            }
            back.extend(fwd.into_iter().skip(1));
            let mut s = T::zero();
            for i in 0..back.len() {
                if i > 0 {
                    s += dist(&back[i - 1], &back[i]);
                }
                back[i].arclength = s;
            }
            Branch { points: back, events: vec![], family_label: label, sigma: seed.sigma, termination: vec![t0, t1] }
        }
    };
    Ok(branch)
}

fn dist<T: Real>(p: &BranchPoint<T>, q: &BranchPoint<T>) -> T {
    let d: Vec<T> = p.extended().iter().zip(q.extended()).map(|(a, b)| *a - b).collect();
    norm2(&d)
}

/// One-directional trace; `sign` picks the initial `eta` direction.
fn trace<T: Real>(
    seed: &AmplitudeSolution<T>,
    sign: T,
    lo: T,
    hi: T,
    c: &StepControl<T>,
) -> Result<(Vec<BranchPoint<T>>, Termination)> {
    let sigma = seed.sigma;
    let n = seed.n();
    let m = n + 2;
    let mut x: Vec<T> = seed.a.iter().copied().chain([seed.omega, seed.eta]).collect();
    let mut e_eta = vec![T::zero(); m];
    e_eta[m - 1] = sign;
    let mut t = tangent(&x, sigma, &e_eta)
        .ok_or_else(|| Error::Numeric("cannot compute a tangent at the continuation seed".into()))?;
    let mut res = seed.residual_norm;
    let mut points = vec![make_point(&x, &t, sigma, T::zero(), res)];
    let mut h = c.initial;
    let mut s = T::zero();
    let at_end = |eta: T| (sign > T::zero() && eta >= hi) || (sign < T::zero() && eta <= lo);
    if at_end(x[m - 1]) {
        return Ok((points, Termination::RangeEnd));
    }
    while points.len() < c.max_points {
        let eta_rate = t[m - 1].abs();
        let mut step = h;
        if eta_rate * step > c.max_eta_step {
            step = c.max_eta_step / eta_rate;
        }
        let pred: Vec<T> = x.iter().zip(&t).map(|(xi, ti)| *xi + step * *ti).collect();
        let accepted = correct(&pred, &t, sigma, c.tolerance, 12).and_then(|(xn, rn)| {
            let tn = tangent(&xn, sigma, &t)?;
            let dx: Vec<T> = xn.iter().zip(&x).map(|(a, b)| *a - *b).collect();
            let ok_turn = dot(&tn, &t) > T::lit(0.9);
            let ok_eta = (xn[m - 1] - x[m - 1]).abs() <= c.max_eta_step * T::lit(1.0001);
            let ok_dist = norm2(&dx) <= T::lit(2.0) * step;
            (ok_turn && ok_eta && ok_dist).then_some((xn, tn, rn, norm2(&dx)))
        });
        match accepted {
            Some((xn, tn, rn, ds)) => {
                let eta_new = xn[m - 1];
                if eta_new > hi || eta_new < lo {
                    let bound = if eta_new > hi { hi } else { lo };
                    if let Some(pt) = land_on_boundary(&x, &xn, bound, sigma, &tn, s) {
                        points.push(pt);
                    }
                    return Ok((points, Termination::RangeEnd));
                }
                s += ds;
                x = xn;
                t = tn;
                res = rn;
                points.push(make_point(&x, &t, sigma, s, res));
                if at_end(x[m - 1]) {
                    return Ok((points, Termination::RangeEnd));
                }
                h = (h * T::lit(1.3)).min(c.max);
            }
            None => {
                h /= T::lit(2.0);
                if h < c.min {
                    let eta = x[m - 1].as_f64();
                    return Ok((
                        points,
                        Termination::StepTooSmall { eta, reason: "corrector failed at minimum step".into() },
                    ));
                }
            }
        }
    }
    Ok((points, Termination::MaxPoints))
}

/// Newton at fixed `eta = bound`, seeded between two bracketing points.
fn land_on_boundary<T: Real>(x0: &[T], x1: &[T], bound: T, sigma: T, t: &[T], s0: T) -> Option<BranchPoint<T>> {
    let m = x0.len();
    let n = m - 2;
    let f = (bound - x0[m - 1]) / (x1[m - 1] - x0[m - 1]);
    let xi: Vec<T> = x0.iter().zip(x1).map(|(a, b)| *a + f * (*b - *a)).collect();
    let guess = AmplitudeSolution::guess(xi[..n].to_vec(), xi[n], bound, sigma);
    let opts = crate::stationary::NewtonOptions { check_admissible: false, ..Default::default() };
    let sol = crate::stationary::newton_solve_with(&guess, &opts).ok()?;
    // Keep the sign convention of the branch rather than the gauge.
    let flip = dot(&sol.a, &xi[..n]) < T::zero();
    let a: Vec<T> = sol.a.iter().map(|v| if flip { -*v } else { *v }).collect();
    let mut x = a;
    x.push(sol.omega);
    x.push(bound);
    let dx: Vec<T> = x.iter().zip(x0).map(|(a, b)| *a - *b).collect();
    let tn = tangent(&x, sigma, t)?;
    Some(make_point(&x, &tn, sigma, s0 + norm2(&dx), sol.residual_norm))
}

/// Bisection on the arclength offset from `p` until `g` changes sign,
/// where `g` is evaluated at curve points. Returns the refined extended
/// point and its tangent.
pub(crate) fn bisect_along<T: Real>(
    p: &BranchPoint<T>,
    q: &BranchPoint<T>,
    sigma: T,
    g: impl Fn(&[T], &[T]) -> T,
) -> Option<(Vec<T>, Vec<T>)> {
    let x0 = p.extended();
    let m = x0.len();
    let mut e = vec![T::zero(); m];
    e[m - 1] = if p.tangent_eta < T::zero() { -T::one() } else { T::one() };
    let t0 = tangent(&x0, sigma, &e)?;
    let xq = q.extended();
    let span = dot(&t0, &xq.iter().zip(&x0).map(|(a, b)| *a - *b).collect::<Vec<_>>());
    if span <= T::zero() {
        return None;
    }
    let at = |h: T| -> Option<(Vec<T>, Vec<T>)> {
        let pred: Vec<T> = x0.iter().zip(&t0).map(|(a, b)| *a + h * *b).collect();
        let (x, _) = correct(&pred, &t0, sigma, T::tolerance(1e-12), 30)?;
        let t = tangent(&x, sigma, &t0)?;
        Some((x, t))
    };
    let g0 = g(&x0, &t0);
    let (mut a, mut b) = (T::zero(), span);
    let mut best = None;
    for _ in 0..200 {
        if b - a <= T::epsilon() * T::lit(8.0) * span.max(T::one()) {
            break;
        }
        let mid = (a + b) / T::lit(2.0);
        // The bordered system degenerates right at a branch point.
        let Some((x, t)) = at(mid) else { break };
        let gm = g(&x, &t);
        if gm == T::zero() {
            return Some((x, t));
        }
        if (gm < T::zero()) == (g0 < T::zero()) {
            a = mid;
        } else {
            b = mid;
        }
        best = Some((x, t));
    }
    best.or_else(|| at((a + b) / T::lit(2.0)))
}

fn solution_from_extended<T: Real>(x: &[T], sigma: T) -> AmplitudeSolution<T> {
    let n = x.len() - 2;
    AmplitudeSolution::guess(x[..n].to_vec(), x[n], x[n + 1], sigma)
}

/// Folds: sign changes of `d eta / d s`, refined by arclength bisection.
pub fn detect_folds<T: Real>(branch: &Branch<T>) -> Vec<BifurcationEvent<T>> {
    let sigma = branch.sigma;
    let mut events = Vec::new();
    if branch.points.len() < 3 {
        return events;
    }
    for w in branch.points.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        if p.tangent_eta == T::zero() || (p.tangent_eta < T::zero()) == (q.tangent_eta < T::zero()) {
            continue;
        }
        let n = p.a.len();
        let refined = bisect_along(p, q, sigma, |_, t| t[n + 1]);
        let Some((x, _)) = refined else { continue };
        let sol = solution_from_extended(&x, sigma).gauge_fixed();
        events.push(BifurcationEvent {
            kind: EventKind::Fold,
            eta_c: x[n + 1],
            classification: Classification::None,
            min_singular_value: jacobian_min_singular(&x[..n], x[n], x[n + 1], sigma),
            seed: sol,
            family_label: branch.family_label.clone(),
        });
    }
    events
}

/// Median of the stored minimum singular values (scale for event checks).
pub fn median_singular_value<T: Real>(branch: &Branch<T>) -> T {
    let mut v: Vec<T> = branch.points.iter().map(|p| p.min_singular_value).collect();
    if v.is_empty() {
        return T::zero();
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v[v.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::newton_solve;
    use std::f64::consts::PI;

    fn ground(n: usize, sigma: f64) -> AmplitudeSolution<f64> {
        let c = (2.0 / (n as f64 + 1.0)).sqrt();
        let a = (1..=n).map(|k| c * (k as f64 * PI / (n as f64 + 1.0)).sin()).collect();
        let om = -2.0 * (PI / (n as f64 + 1.0)).cos();
        AmplitudeSolution::guess(a, om, 0.0, sigma)
    }

    #[test]
    fn dimer_symmetric_branch_is_explicit() {
        // a = (1,1)/sqrt2 solves with Omega = eta/2 - 1 for every eta.
        let ctl = StepControl { direction: Direction::Decreasing, ..Default::default() };
        let b = continue_branch(&ground(2, 1.0), (-3.0, 0.0), &ctl).unwrap();
        assert_eq!(b.termination, vec![Termination::RangeEnd]);
        assert!((b.points.last().unwrap().eta + 3.0).abs() < 1e-12);
        for p in &b.points {
            assert!((p.omega - (p.eta / 2.0 - 1.0)).abs() < 1e-10);
            assert!(p.residual_norm <= 1e-10);
        }
        for w in b.points.windows(2) {
            assert!((w[1].eta - w[0].eta).abs() <= 0.05 + 1e-9);
            assert!(w[1].arclength > w[0].arclength);
        }
    }

    #[test]
    fn both_directions_join_at_the_seed() {
        let b = continue_branch(&ground(3, 1.0), (-1.0, 1.0), &StepControl::default()).unwrap();
        assert!((b.points[0].eta + 1.0).abs() < 1e-12);
        assert!((b.points.last().unwrap().eta - 1.0).abs() < 1e-12);
        assert!(b.points.windows(2).all(|w| w[1].eta > w[0].eta));
        assert_eq!(b.points[0].arclength, 0.0);
    }

    #[test]
    fn crossings_recover_newton_solutions() {
        let b = continue_branch(&ground(4, 1.0), (-2.0, 0.0), &StepControl::default()).unwrap();
        let hits = b.crossings(-1.234);
        assert_eq!(hits.len(), 1);
        let direct = newton_solve(&AmplitudeSolution { eta: -1.234, ..ground(4, 1.0) }).unwrap();
        assert!((hits[0].omega - direct.omega).abs() < 1e-10);
    }

    #[test]
    fn no_folds_on_the_dimer_ground_branch() {
        let b = continue_branch(&ground(2, 1.0), (-1.0, 1.0), &StepControl::default()).unwrap();
        assert!(detect_folds(&b).is_empty());
    }

    #[test]
    fn rejects_unconverged_seed_and_bad_range() {
        let mut s = ground(4, 1.0);
        s.omega += 0.1;
        assert!(continue_branch(&s, (-1.0, 1.0), &StepControl::default()).is_err());
        assert!(matches!(
            continue_branch(&ground(4, 1.0), (1.0, 2.0), &StepControl::default()),
            Err(Error::Parameter(_))
        ));
        let bad = StepControl { min: 1.0, ..StepControl::default() };
        assert!(continue_branch(&ground(4, 1.0), (-1.0, 1.0), &bad).is_err());
    }
}
