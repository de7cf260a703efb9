#![allow(clippy::needless_range_loop)]

use multiwell::dynamics::{reduce, ActionAngleState, Complex, IntegrateOptions, SplittingOrder};
use multiwell::io::format_number;
use multiwell::stationary::{symmetric_point, SymmetricFamily};
use multiwell::{
    build_line_coupling, closed_form_spectrum, continue_branch, enumerate_solutions, newton_solve,
    AmplitudeSolution64, Direction, ModeState64, ModelParams64, NModeSystem64, SeedStrategy, SignFilter, StepControl,
};
use proptest::prelude::*;

fn full_residual(s: &AmplitudeSolution64) -> f64 {
    let (r, d) = s.residual();
    r.iter().fold(d.abs(), |m, x| m.max(x.abs()))
}

fn family() -> impl Strategy<Value = SymmetricFamily> {
    (1u8..=2, 1u8..=2).prop_map(|(j, l)| SymmetricFamily::new(j, l).unwrap())
}

/// `q` away from the excluded points 0, 1/4 and 1/2.
fn family_q() -> impl Strategy<Value = f64> {
    prop_oneof![0.01f64..0.24, 0.26f64..0.49]
}

fn unit_state(n: usize) -> impl Strategy<Value = ModeState64> {
    prop::collection::vec((0.05f64..1.0, 0.0f64..std::f64::consts::TAU), n).prop_map(|v| {
        let norm = v.iter().map(|(r, _)| r * r).sum::<f64>().sqrt();
        ModeState64::new(v.iter().map(|(r, th)| Complex::from_polar(r / norm, *th)).collect(), 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_matrix_is_symmetric_orthogonal_eigenbasis(n in 2usize..60, ld in -3.0f64..3.0, beta in 0.1f64..4.0) {
        let p = ModelParams64::new(n, 1.0, ld, beta, 0.0, 1.0).unwrap();
        let basis = closed_form_spectrum(&p).unwrap();
        let t = build_line_coupling(&p).unwrap();
        for j in 0..n {
            let tv = t.entries.mul_vec(basis.mode(j));
            for k in 0..n {
                prop_assert!((basis.modes[(j, k)] - basis.modes[(k, j)]).abs() <= 1e-14);
                prop_assert!((tv[k] - basis.mu[j] * basis.mode(j)[k]).abs() <= 1e-12 * (1.0 + beta));
                let dot: f64 = (0..n).map(|i| basis.modes[(j, i)] * basis.modes[(k, i)]).sum();
                prop_assert!((dot - f64::from(u8::from(j == k))).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn symmetry_maps_preserve_solutions(q in family_q(), sigma in 0.5f64..3.0, fam in family()) {
        let s = newton_solve(&symmetric_point(q, sigma, fam).unwrap()).unwrap();
        prop_assert!(full_residual(&s) <= 1e-11);
        for image in [s.negated(), s.mirrored(), s.staggered()] {
            prop_assert!(full_residual(&image) <= 1e-12);
        }
        let st = s.staggered();
        prop_assert_eq!(st.eta, -s.eta);
        prop_assert_eq!(st.omega, -s.omega);
    }

    #[test]
    fn newton_keeps_closed_form_points(q in family_q(), sigma in 0.5f64..3.0, fam in family()) {
        let seed = symmetric_point(q, sigma, fam).unwrap();
        let s = newton_solve(&seed).unwrap();
        prop_assert!((s.eta - seed.eta).abs() <= 1e-10 * seed.eta.abs().max(1.0));
        prop_assert!((s.omega - seed.omega).abs() <= 1e-10 * seed.omega.abs().max(1.0));
        prop_assert!((s.actions()[0] - q).abs() <= 1e-10);
    }

    #[test]
    fn action_angle_round_trip(state in unit_state(5)) {
        let aa = ActionAngleState::from_mode_state(&state).unwrap();
        prop_assert!((aa.q.iter().sum::<f64>() - 1.0).abs() <= 1e-13);
        let back = aa.to_mode_state(state.t);
        for (a, b) in back.d.iter().zip(&state.d) {
            prop_assert!((a - b).norm() <= 1e-14);
        }
        let reduced = reduce(&aa).unwrap();
        let cumulative = &reduced.cumulative;
        prop_assert!(cumulative.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(cumulative.iter().all(|c| (0.0..=1.0 + 1e-14).contains(c)));
    }

    #[test]
    fn integration_is_reversible_and_conservative(state in unit_state(4), eta in -3.0f64..3.0) {
        let sys = NModeSystem64::line(ModelParams64::reduced(4, 1.0, eta).unwrap()).unwrap();
        let opts = IntegrateOptions { stride: 100, order: SplittingOrder::Sixth };
        let fwd = sys.integrate(&state, 5.0, 0.01, opts).unwrap();
        let end = fwd.samples.last().unwrap().clone();
        prop_assert!(fwd.report.max_norm_drift <= 1e-12);
        prop_assert!(fwd.report.max_energy_drift <= 1e-9);
        let back = sys.integrate(&end, 0.0, 0.01, opts).unwrap();
        let start = back.samples.last().unwrap();
        for (a, b) in start.d.iter().zip(&state.d) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn exported_numbers_round_trip(x in prop::num::f64::NORMAL) {
        let y: f64 = format_number(x).parse().unwrap();
        prop_assert!((x - y).abs() <= 1e-11 * x.abs());
    }
}

#[test]
fn newton_reproduces_closed_form_on_a_grid() {
    let fam = SymmetricFamily::new(2, 2).unwrap();
    for i in 0..100 {
        // 50 points on each side of the excluded q = 1/4
        let q = if i < 50 { 0.005 + 0.24 * i as f64 / 49.0 } else { 0.255 + 0.24 * (i - 50) as f64 / 49.0 };
        let seed = symmetric_point(q, 1.0, fam).unwrap();
        let s = newton_solve(&seed).unwrap();
        assert!((s.eta - seed.eta).abs() <= 1e-10 * seed.eta.abs().max(1.0), "q = {q}");
        assert!((s.omega - seed.omega).abs() <= 1e-10 * seed.omega.abs().max(1.0), "q = {q}");
        assert!((s.actions()[0] - q).abs() <= 1e-10, "q = {q}");
    }
}

#[test]
fn census_has_no_interior_zeros_and_localized_ground_states() {
    let strategy = SeedStrategy { sign_filter: SignFilter::Any, random_starts: 500, ..SeedStrategy::default() };
    let census = enumerate_solutions(-12.0f64, 1.0, 4, &strategy).unwrap();
    assert!(census.solutions.len() >= 15);
    for s in &census.solutions {
        assert!(s.a.iter().all(|x| x.abs() > 1e-15));
        assert!(s.a[0] > 0.0);
        assert!(full_residual(s) <= 1e-10);
    }
    // the four single-well states sit at the bottom of the spectrum in Omega and energy
    let mut by_energy: Vec<&AmplitudeSolution64> = census.solutions.iter().collect();
    by_energy.sort_by(|a, b| a.scaled_energy().total_cmp(&b.scaled_energy()));
    for s in &by_energy[..4] {
        assert!(s.actions().iter().any(|q| *q > 0.98));
        assert!(s.omega < -11.99);
    }
    assert!(by_energy[4].actions().iter().all(|q| *q < 0.6));
}

#[test]
fn census_at_zero_nonlinearity_is_the_linear_basis() {
    let strategy = SeedStrategy { random_starts: 200, ..SeedStrategy::default() };
    for n in [3usize, 4, 6] {
        let census = enumerate_solutions(0.0f64, 1.0, n, &strategy).unwrap();
        let basis = closed_form_spectrum(&ModelParams64::reduced(n, 1.0, 0.0).unwrap()).unwrap();
        let admissible: Vec<usize> = (0..n)
            .filter(|&j| {
                let m = basis.mode(j);
                let interior_zero = m.iter().any(|x| x.abs() <= 1e-12);
                m[0].abs() > 1e-12 && m[n - 1].abs() > 1e-12 && !(n % 2 == 0 && interior_zero)
            })
            .collect();
        assert_eq!(census.solutions.len(), admissible.len(), "N = {n}");
        for (s, &j) in census.solutions.iter().zip(&admissible) {
            assert!((s.omega - basis.mu[j]).abs() <= 1e-10);
        }
    }
}

#[test]
fn continuation_commutes_with_staggering() {
    let basis = closed_form_spectrum(&ModelParams64::reduced(4, 1.0, 0.0).unwrap()).unwrap();
    let seed = newton_solve(&AmplitudeSolution64::guess(basis.mode(0).to_vec(), basis.mu[0], 0.0, 1.0)).unwrap();
    let control = StepControl { direction: Direction::Both, ..StepControl::default() };
    let branch = continue_branch(&seed, (-6.0, 6.0), &control).unwrap();
    let image = continue_branch(&seed.staggered(), (-6.0, 6.0), &control).unwrap();
    for p in branch.points.iter().chain(&image.points) {
        assert!(p.residual_norm <= 1e-10);
    }
    for eta in [-5.0, -2.0, -0.5, 1.0, 4.5] {
        let ours: Vec<AmplitudeSolution64> = branch.crossings(eta).iter().map(|s| newton_solve(s).unwrap()).collect();
        let theirs: Vec<AmplitudeSolution64> =
            image.crossings(-eta).iter().map(|s| newton_solve(s).unwrap()).collect();
        assert_eq!(ours.len(), theirs.len(), "eta = {eta}");
        for s in &ours {
            let mapped = s.staggered().gauge_fixed();
            let hit = theirs.iter().any(|t| {
                let t = t.clone().gauge_fixed();
                (t.omega - mapped.omega).abs() <= 1e-9
                    && t.a.iter().zip(&mapped.a).all(|(x, y)| (x - y).abs() <= 1e-9)
            });
            assert!(hit, "no staggered partner at eta = {eta}");
        }
    }
}
