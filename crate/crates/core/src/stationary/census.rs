//! Enumeration of all stationary states at a fixed `eta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fourwell::{symmetric_point_at_eta, SymmetricFamily};
use super::{newton_solve, newton_solve_with, AmplitudeSolution, NewtonOptions};
use crate::continuation::{continue_branch, Direction, StepControl};
use crate::error::{param, Result};
use crate::scalar::Real;

/// Seed of the random multistart unless overridden.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Solutions closer than this (max-norm on gauge-fixed `a` and `Omega`) are merged.
pub const DEDUP_TOL: f64 = 1e-6;
/// Distinct solutions closer than this are kept but reported.
pub const AMBIGUITY_TOL: f64 = 1e-4;

/// `|eta|` used for anticontinuum seeds before continuing back.
const ANTICONTINUUM_ETA: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignFilter {
    Any,
    /// Every amplitude positive after gauge fixing.
    AllPositive,
    /// A fixed gauge-fixed sign vector.
    Pattern(Vec<i8>),
}

impl SignFilter {
    fn admits(&self, signs: &[i8]) -> bool {
        match self {
            Self::Any => true,
            Self::AllPositive => signs.iter().all(|s| *s > 0),
            Self::Pattern(p) => p.as_slice() == signs,
        }
    }

    fn forced_signs(&self, n: usize) -> Option<Vec<i8>> {
        match self {
            Self::Any => None,
            Self::AllPositive => Some(vec![1; n]),
            Self::Pattern(p) => Some(p.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedStrategy {
    /// Continue every linear eigenvector from `eta = 0`.
    pub linear_continuation: bool,
    /// Single-magnitude states on each subset of wells at large `|eta|`,
    /// continued back to the target.
    pub anticontinuum: bool,
    /// Closed-form symmetric points (four wells only).
    pub symmetric_family: bool,
    /// Random Newton starts; 0 disables.
    pub random_starts: usize,
    pub seed: u64,
    pub sign_filter: SignFilter,
}

impl Default for SeedStrategy {
    fn default() -> Self {
        Self {
            linear_continuation: true,
            anticontinuum: true,
            symmetric_family: true,
            random_starts: 2000,
            seed: DEFAULT_SEED,
            sign_filter: SignFilter::Any,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census<T> {
    /// Distinct solutions ordered by `Omega`.
    pub solutions: Vec<AmplitudeSolution<T>>,
    pub warnings: Vec<String>,
}

enum Seed<T> {
    Solved(AmplitudeSolution<T>),
    Guess(AmplitudeSolution<T>),
    /// Converged at another `eta`; continue to the target.
    Far(AmplitudeSolution<T>),
}

/// All stationary states at `eta` reachable from the configured seeds.
///
/// Seeds are generated deterministically, solved in parallel and merged in
/// seed order, so the result depends only on the arguments.
pub fn enumerate_solutions<T: Real>(eta: T, sigma: T, n: usize, strategy: &SeedStrategy) -> Result<Census<T>> {
    if n < 2 {
        return param("census needs N >= 2");
    }
    if !(sigma > T::zero()) || !eta.is_finite() {
        return param("census needs positive sigma and finite eta");
    }
    if let SignFilter::Pattern(p) = &strategy.sign_filter {
        if p.len() != n || p[0] != 1 || p.iter().any(|s| s.abs() != 1) {
            return param("sign pattern must have N entries of +-1 starting with +1");
        }
    }
    let seeds = build_seeds(eta, sigma, n, strategy)?;
    let solved: Vec<Vec<AmplitudeSolution<T>>> = seeds.into_par_iter().map(|s| resolve(s, eta)).collect();

    let mut kept: Vec<AmplitudeSolution<T>> = Vec::new();
    let mut warnings = Vec::new();
    let (dup, amb) = (T::lit(DEDUP_TOL), T::lit(AMBIGUITY_TOL));
    for sol in solved.into_iter().flatten() {
        if !strategy.sign_filter.admits(&sol.signs()) || sol.check_admissible().is_err() {
            continue;
        }
        let mut duplicate = false;
        for k in &kept {
            let d = distance(k, &sol);
            if d <= dup {
                duplicate = true;
                break;
            }
            if d <= amb {
                warnings.push(format!(
                    "solutions with Omega={} and Omega={} differ by only {}; both retained",
                    k.omega, sol.omega, d
                ));
            }
        }
        if !duplicate {
            kept.push(sol);
        }
    }
    kept.sort_by(|x, y| {
        x.omega
            .partial_cmp(&y.omega)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| x.a.partial_cmp(&y.a).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(Census { solutions: kept, warnings })
}

fn distance<T: Real>(x: &AmplitudeSolution<T>, y: &AmplitudeSolution<T>) -> T {
    x.a.iter().zip(&y.a).fold((x.omega - y.omega).abs(), |m, (a, b)| m.max((*a - *b).abs()))
}

fn build_seeds<T: Real>(eta: T, sigma: T, n: usize, st: &SeedStrategy) -> Result<Vec<Seed<T>>> {
    let mut seeds = Vec::new();
    let np1 = T::from_usize_lossy(n + 1);
    if st.linear_continuation {
        let c = (T::lit(2.0) / np1).sqrt();
        for j in 1..=n {
            let jt = T::from_usize_lossy(j);
            let a = (1..=n).map(|k| c * (T::from_usize_lossy(k) * jt * T::PI() / np1).sin()).collect();
            let om = -T::lit(2.0) * (jt * T::PI() / np1).cos();
            seeds.push(Seed::Far(AmplitudeSolution::guess(a, om, T::zero(), sigma)));
        }
    }
    if st.anticontinuum && eta != T::zero() {
        let far = if eta < T::zero() { -T::one() } else { T::one() } * eta.abs().max(T::lit(ANTICONTINUUM_ETA));
        let forced = st.sign_filter.forced_signs(n);
        for mask in 1u64..(1u64 << n) {
            let support: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let count = support.len();
            let sign_sets: Vec<Vec<i8>> = match &forced {
                Some(s) => vec![s.clone()],
                None => (0u64..(1u64 << (count - 1)))
                    .map(|bits| {
                        let mut s = vec![1i8; n];
                        for (i, k) in support.iter().enumerate().skip(1) {
                            if bits >> (i - 1) & 1 == 1 {
                                s[*k] = -1;
                            }
                        }
                        s
                    })
                    .collect(),
            };
            let amp = (T::one() / T::from_usize_lossy(count)).sqrt();
            for signs in sign_sets {
                let a = (0..n)
                    .map(|k| if mask >> k & 1 == 1 { T::from_i8(signs[k]).unwrap() * amp } else { T::zero() })
                    .collect();
                let guess = AmplitudeSolution::guess(a, far / T::from_usize_lossy(count), far, sigma);
                let opts = NewtonOptions { check_admissible: false, ..NewtonOptions::default() };
                if let Ok(s) = newton_solve_with(&guess, &opts) {
                    seeds.push(if far == eta { Seed::Solved(s) } else { Seed::Far(s) });
                }
            }
        }
    }
    if st.symmetric_family && n == 4 {
        for fam in SymmetricFamily::all() {
            for s in symmetric_point_at_eta(eta, sigma, fam).unwrap_or_default() {
                seeds.push(Seed::Solved(s));
            }
        }
    }
    if st.random_starts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
        let span = eta.abs().as_f64() + 2.5;
        let positive = matches!(st.sign_filter, SignFilter::AllPositive);
        for _ in 0..st.random_starts {
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if positive {
                a.iter_mut().for_each(|v| *v = v.abs());
            }
            let om: f64 = rng.gen_range(-span..span);
            let a = a.into_iter().map(T::lit).collect();
            seeds.push(Seed::Guess(AmplitudeSolution::guess(a, T::lit(om), eta, sigma)));
        }
    }
    Ok(seeds)
}

fn resolve<T: Real>(seed: Seed<T>, eta: T) -> Vec<AmplitudeSolution<T>> {
    match seed {
        Seed::Solved(s) => vec![s],
        Seed::Guess(g) => newton_solve(&g).into_iter().collect(),
        Seed::Far(s) => {
            if s.eta == eta {
                return newton_solve(&s).into_iter().collect();
            }
            let range = (s.eta.min(eta), s.eta.max(eta));
            let dir = if eta > s.eta { Direction::Increasing } else { Direction::Decreasing };
            let ctl = StepControl { direction: dir, ..StepControl::default() };
            match continue_branch(&s, range, &ctl) {
                Ok(b) => b.crossings(eta),
                Err(_) => vec![],
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_limit_gives_the_eigenvectors() {
        let st = SeedStrategy { random_starts: 300, ..SeedStrategy::default() };
        let c = enumerate_solutions(0.0f64, 1.0, 5, &st).unwrap();
        assert_eq!(c.solutions.len(), 5);
        for (j, s) in c.solutions.iter().enumerate() {
            let mu = -2.0 * ((j + 1) as f64 * std::f64::consts::PI / 6.0).cos();
            assert!((s.omega - mu).abs() < 1e-10);
        }
    }

    #[test]
    fn census_is_deterministic() {
        let st = SeedStrategy { random_starts: 200, ..SeedStrategy::default() };
        let a = enumerate_solutions(-3.0f64, 1.0, 3, &st).unwrap();
        let b = enumerate_solutions(-3.0f64, 1.0, 3, &st).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pattern_filter_is_validated() {
        let st = SeedStrategy { sign_filter: SignFilter::Pattern(vec![-1, 1]), ..SeedStrategy::default() };
        assert!(enumerate_solutions(-1.0f64, 1.0, 2, &st).is_err());
    }
}
