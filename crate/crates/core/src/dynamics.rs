//! Time evolution of the N-mode system
//! `i hbar d'_k = (T d)_k + g_k |d_k|^(2 sigma) d_k` with `g_k = eps * C_k`,
//! together with its Hamiltonian in action-angle and reduced coordinates.

pub use num_complex::Complex;

use crate::error::{param, Error, Result};
use crate::lattice::{
    build_line_coupling, closed_form_spectrum, diagonalize_symmetric, CouplingMatrix,
    CouplingStructure, ModeBasis, ModelParams,
};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Smallest action for which the action-angle chart is defined.
pub const MIN_ACTION: f64 = 1e-12;

/// Complex amplitudes on the well-localized basis at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState<T> {
    pub d: Vec<Complex<T>>,
    pub t: T,
}

impl<T: Real> ModeState<T> {
    pub fn new(d: Vec<Complex<T>>, t: T) -> Self {
        Self { d, t }
    }

    /// Real amplitudes at `t = 0`, rescaled to unit norm.
    pub fn from_real_normalized(a: &[T]) -> Result<Self> {
        let n2: T = a.iter().map(|x| *x * *x).sum();
        if !(n2 > T::zero()) {
            return Err(Error::State("zero state cannot be normalized".into()));
        }
        let s = n2.sqrt();
        Ok(Self { d: a.iter().map(|x| Complex::new(*x / s, T::zero())).collect(), t: T::zero() })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn norm_sqr(&self) -> T {
        self.d.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_normalized(&self, tol: T) -> Result<()> {
        let defect = (self.norm_sqr() - T::one()).abs();
        if defect > tol {
            return Err(Error::State(format!(
                "state is not normalized: |sum |d_k|^2 - 1| = {:e}",
                defect.as_f64()
            )));
        }
        Ok(())
    }
}

/// Actions `q_k = |d_k|^2` and angles `theta_k = arg d_k` in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAngleState<T> {
    pub q: Vec<T>,
    pub theta: Vec<T>,
}

impl<T: Real> ActionAngleState<T> {
    /// Fails when some `q_k` is below [`MIN_ACTION`], where the chart is singular.
    pub fn from_mode_state(state: &ModeState<T>) -> Result<Self> {
        let min = T::lit(MIN_ACTION);
        let mut q = Vec::with_capacity(state.n());
        let mut theta = Vec::with_capacity(state.n());
        for (k, z) in state.d.iter().enumerate() {
            let qk = z.norm_sqr();
            if qk < min {
                return Err(Error::State(format!(
                    "action q_{} = {:e} is below {MIN_ACTION:e}; angle undefined",
                    k + 1,
                    qk.as_f64()
                )));
            }
            q.push(qk);
            theta.push(wrap_angle(z.arg()));
        }
        Ok(Self { q, theta })
    }

    pub fn to_mode_state(&self, t: T) -> ModeState<T> {
        let d = self.q.iter().zip(&self.theta).map(|(q, th)| Complex::from_polar(q.sqrt(), *th)).collect();
        ModeState { d, t }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Canonical chart with the cyclic coordinate removed:
/// `Q_h = q_1 + ... + q_h` and `Theta_h = theta_h - theta_{h+1}`, `h < N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState<T> {
    pub cumulative: Vec<T>,
    pub phase_diff: Vec<T>,
}

impl<T: Real> ReducedState<T> {
    /// Validates `0 <= Q_1 <= ... <= Q_{N-1} <= 1`.
    pub fn new(cumulative: Vec<T>, phase_diff: Vec<T>) -> Result<Self> {
        if cumulative.len() != phase_diff.len() || cumulative.is_empty() {
            return Err(Error::State("reduced state needs N-1 >= 1 actions and angles".into()));
        }
        let tol = T::tolerance(1e-12);
        let mut prev = T::zero();
        for (h, &qh) in cumulative.iter().enumerate() {
            if qh < prev - tol || qh > T::one() + tol {
                return Err(Error::State(format!(
                    "cumulative actions must be nondecreasing within [0, 1]; Q_{} = {}",
                    h + 1,
                    qh
                )));
            }
            prev = qh;
        }
        Ok(Self { cumulative, phase_diff })
    }

    /// Individual actions `q_1..q_N`, with `Q_N = 1`.
    pub fn actions(&self) -> Vec<T> {
        let mut q = Vec::with_capacity(self.cumulative.len() + 1);
        let mut prev = T::zero();
        for &c in &self.cumulative {
            q.push(c - prev);
            prev = c;
        }
        q.push(T::one() - prev);
        q
    }
}

/// Maps a normalized action-angle state to the reduced chart.
pub fn reduce<T: Real>(state: &ActionAngleState<T>) -> Result<ReducedState<T>> {
    let total: T = state.q.iter().copied().sum();
    if (total - T::one()).abs() > T::tolerance(1e-9) {
        return Err(Error::State(format!("actions sum to {total}, expected 1")));
    }
    let n = state.n();
    let mut acc = T::zero();
    let cumulative = state.q[..n - 1]
        .iter()
        .map(|q| {
            acc += *q;
            acc
        })
        .collect();
    let phase_diff = (0..n - 1).map(|h| state.theta[h] - state.theta[h + 1]).collect();
    ReducedState::new(cumulative, phase_diff)
}

/// Which symmetric composition of the Strang step the integrator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingOrder {
    Second,
    Fourth,
    #[default]
    Sixth,
}

impl SplittingOrder {
    fn weights(self) -> Vec<f64> {
        match self {
            SplittingOrder::Second => vec![1.0],
            SplittingOrder::Fourth => {
                let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
                vec![w1, 1.0 - 2.0 * w1, w1]
            }
            SplittingOrder::Sixth => {
                // Yoshida's solution A
                let w = [-1.17767998417887, 0.235573213359357, 0.784513610477560];
                let w0 = 1.0 - 2.0 * (w[0] + w[1] + w[2]);
                vec![w[2], w[1], w[0], w0, w[0], w[1], w[2]]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Keep every `stride`-th step (the final state is always kept).
    pub stride: usize,
    pub order: SplittingOrder,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { stride: 1, order: SplittingOrder::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport<T> {
    /// `max_t |N(t) - N(0)| / N(0)` with `N = sum |d_k|^2`.
    pub max_norm_drift: T,
    /// `max_t |H(t) - H(0)| / max(1, |H(0)|)`.
    pub max_energy_drift: T,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub samples: Vec<ModeState<T>>,
    /// Energy at each sample.
    pub energies: Vec<T>,
    pub report: ConservationReport<T>,
}

/// An N-mode model: linear coupling, per-site nonlinear strengths, and the
/// spectral data used by the linear propagator.
#[derive(Debug, Clone)]
pub struct NModeSystem<T> {
    pub params: ModelParams<T>,
    pub coupling: CouplingMatrix<T>,
    /// `g_k = eps * C_k` for each site.
    pub strengths: Vec<T>,
    basis: ModeBasis<T>,
}

impl<T: Real> NModeSystem<T> {
    /// Chain of wells with the uniform strength `eta * beta` on every site.
    pub fn line(params: ModelParams<T>) -> Result<Self> {
        let g = params.nonlinear_strength();
        Self::line_with_strengths(params, vec![g; params.n])
    }

    pub fn line_with_strengths(params: ModelParams<T>, strengths: Vec<T>) -> Result<Self> {
        let coupling = build_line_coupling(&params)?;
        let basis = closed_form_spectrum(&params)?;
        Self::assemble(params, coupling, strengths, basis)
    }

    /// General coupling (e.g. from a graph adjacency).
    pub fn with_coupling(params: ModelParams<T>, coupling: CouplingMatrix<T>, strengths: Vec<T>) -> Result<Self> {
        let basis = diagonalize_symmetric(&coupling)?;
        Self::assemble(params, coupling, strengths, basis)
    }

    fn assemble(params: ModelParams<T>, coupling: CouplingMatrix<T>, strengths: Vec<T>, basis: ModeBasis<T>) -> Result<Self> {
        params.validate()?;
        if coupling.n() != params.n || strengths.len() != params.n {
            return param(format!(
                "dimension mismatch: N = {}, coupling {}x{}, {} strengths",
                params.n,
                coupling.n(),
                coupling.n(),
                strengths.len()
            ));
        }
        if strengths.iter().any(|g| !g.is_finite()) {
            return param("nonlinear strengths must be finite");
        }
        Ok(Self { params, coupling, strengths, basis })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn basis(&self) -> &ModeBasis<T> {
        &self.basis
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::State(format!("state has {len} components, model has {}", self.n())));
        }
        Ok(())
    }

    /// `d'_k = (1 / (i hbar)) [ (T d)_k + g_k |d_k|^(2 sigma) d_k ]`.
    pub fn rhs(&self, state: &ModeState<T>) -> Vec<Complex<T>> {
        let n = self.n();
        let t = &self.coupling.entries;
        let minus_i_over_hbar = Complex::new(T::zero(), -T::one() / self.params.hbar);
        (0..n)
            .map(|k| {
                let mut f = Complex::new(T::zero(), T::zero());
                for j in 0..n {
                    f += state.d[j] * t[(k, j)];
                }
                let qk = state.d[k].norm_sqr();
                f += state.d[k] * (self.strengths[k] * qk.powf(self.params.sigma));
                f * minus_i_over_hbar
            })
            .collect()
    }

    /// `<d, T d> + sum_k g_k / (sigma + 1) |d_k|^(2 sigma + 2)`.
    pub fn energy(&self, state: &ModeState<T>) -> T {
        let n = self.n();
        let t = &self.coupling.entries;
        let mut e = T::zero();
        for k in 0..n {
            for j in 0..n {
                e += (state.d[k].conj() * state.d[j]).re * t[(k, j)];
            }
        }
        e + self.nonlinear_energy(state.d.iter().map(|z| z.norm_sqr()))
    }

    fn nonlinear_energy(&self, q: impl Iterator<Item = T>) -> T {
        let sp1 = self.params.sigma + T::one();
        q.zip(&self.strengths).map(|(qk, g)| *g / sp1 * qk.powf(sp1)).sum()
    }

    /// Hamiltonian in action-angle variables.
    pub fn hamiltonian(&self, state: &ActionAngleState<T>) -> T {
        let n = self.n();
        let t = &self.coupling.entries;
        let mut h = T::zero();
        for k in 0..n {
            h += t[(k, k)] * state.q[k];
            for j in 0..n {
                if j != k {
                    h += t[(k, j)] * (state.theta[j] - state.theta[k]).cos() * (state.q[j] * state.q[k]).sqrt();
                }
            }
        }
        h + self.nonlinear_energy(state.q.iter().copied())
    }

    /// Analytic `(dH/dq_k, dH/dtheta_k)`.
    pub fn hamiltonian_gradient(&self, state: &ActionAngleState<T>) -> (Vec<T>, Vec<T>) {
        let n = self.n();
        let t = &self.coupling.entries;
        let two = T::lit(2.0);
        let mut dq = vec![T::zero(); n];
        let mut dtheta = vec![T::zero(); n];
        for k in 0..n {
            let qk = state.q[k];
            let mut gq = t[(k, k)] + self.strengths[k] * qk.powf(self.params.sigma);
            let mut gt = T::zero();
            for j in 0..n {
                if j == k || t[(k, j)] == T::zero() {
                    continue;
                }
                let dth = state.theta[j] - state.theta[k];
                gq += t[(k, j)] * dth.cos() * (state.q[j] / qk).sqrt();
                gt += two * t[(k, j)] * dth.sin() * (state.q[j] * qk).sqrt();
            }
            dq[k] = gq;
            dtheta[k] = gt;
        }
        (dq, dtheta)
    }

    /// Hamilton's equations `hbar q' = dH/dtheta`, `hbar theta' = -dH/dq`.
    pub fn action_angle_rhs(&self, state: &ActionAngleState<T>) -> (Vec<T>, Vec<T>) {
        let (dq, dtheta) = self.hamiltonian_gradient(state);
        let hb = self.params.hbar;
        (dtheta.iter().map(|x| *x / hb).collect(), dq.iter().map(|x| -*x / hb).collect())
    }

    /// Hamiltonian on the reduced chart (chain coupling only).
    pub fn reduced_hamiltonian(&self, state: &ReducedState<T>) -> Result<T> {
        if self.coupling.structure != CouplingStructure::Line {
            return param("the reduced chart is defined for wells on a line");
        }
        self.check_dim(state.cumulative.len() + 1)?;
        let q = state.actions();
        let p = &self.params;
        let mut h = p.lambda_d;
        for (k, th) in state.phase_diff.iter().enumerate() {
            h -= T::lit(2.0) * p.beta * th.cos() * (q[k] * q[k + 1]).max(T::zero()).sqrt();
        }
        Ok(h + self.nonlinear_energy(q.iter().map(|x| x.max(T::zero()))))
    }

    /// Evolves `initial` to `t_end` (forward or backward) with a symmetric
    /// split-step scheme: exact nonlinear phase rotation composed with the
    /// exact linear propagator. `dt` is the step magnitude.
    pub fn integrate(
        &self,
        initial: &ModeState<T>,
        t_end: T,
        dt: T,
        opts: IntegrateOptions,
    ) -> Result<Trajectory<T>> {
        self.check_dim(initial.n())?;
        if !(dt > T::zero()) || !dt.is_finite() {
            return param(format!("time step must be > 0, got {dt}"));
        }
        if opts.stride == 0 {
            return param("sampling stride must be >= 1");
        }
        initial.check_normalized(T::lit(1e-6))?;
        let span = t_end - initial.t;
        let steps_f = (span.abs() / dt).ceil();
        let steps = steps_f.to_usize().filter(|&s| s <= 1 << 32).ok_or_else(|| {
            Error::Parameter(format!("integration span {span} with dt {dt} needs too many steps"))
        })?;

        let h = if steps == 0 { T::zero() } else { span / T::from_usize_lossy(steps) };
        let stages = self.stages(h, opts.order);

        let norm0 = initial.norm_sqr();
        let e0 = self.energy(initial);
        let e_scale = e0.abs().max(T::one());
        let mut report = ConservationReport { max_norm_drift: T::zero(), max_energy_drift: T::zero(), steps };
        let mut samples = vec![initial.clone()];
        let mut energies = vec![e0];
        let mut d = initial.d.clone();
        for step in 1..=steps {
            for (half, prop) in &stages {
                self.nonlinear_phase(&mut d, *half);
                d = apply_complex(prop, &d);
                self.nonlinear_phase(&mut d, *half);
            }
            let t = if step == steps { t_end } else { initial.t + h * T::from_usize_lossy(step) };
            if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numeric(format!(
                    "state became non-finite at t = {} after {step} steps",
                    t.as_f64()
                )));
            }
            let s = ModeState { d: d.clone(), t };
            let e = self.energy(&s);
            report.max_norm_drift = report.max_norm_drift.max((s.norm_sqr() - norm0).abs() / norm0);
            report.max_energy_drift = report.max_energy_drift.max((e - e0).abs() / e_scale);
            if step % opts.stride == 0 || step == steps {
                samples.push(s);
                energies.push(e);
            }
        }
        Ok(Trajectory { samples, energies, report })
    }

    /// Per-stage (half nonlinear time, linear propagator) pairs.
    fn stages(&self, h: T, order: SplittingOrder) -> Vec<(T, Matrix<Complex<T>>)> {
        order
            .weights()
            .into_iter()
            .map(|w| {
                let tau = h * T::lit(w);
                (tau / T::lit(2.0), self.linear_propagator(tau))
            })
            .collect()
    }

    /// `exp(-i T tau / hbar)` from the spectral decomposition of `T`.
    pub fn linear_propagator(&self, tau: T) -> Matrix<Complex<T>> {
        let n = self.n();
        let a = &self.basis.modes;
        let phases: Vec<Complex<T>> = self
            .basis
            .mu
            .iter()
            .map(|mu| Complex::from_polar(T::one(), -*mu * tau / self.params.hbar))
            .collect();
        let mut u = Matrix::from_fn(n, n, |_, _| Complex::new(T::zero(), T::zero()));
        for i in 0..n {
            for k in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..n {
                    acc += phases[j] * (a[(j, i)] * a[(j, k)]);
                }
                u[(i, k)] = acc;
            }
        }
        u
    }

    fn nonlinear_phase(&self, d: &mut [Complex<T>], tau: T) {
        if tau == T::zero() {
            return;
        }
        for (z, g) in d.iter_mut().zip(&self.strengths) {
            let rate = *g * z.norm_sqr().powf(self.params.sigma) / self.params.hbar;
            *z *= Complex::from_polar(T::one(), -rate * tau);
        }
    }
}

fn apply_complex<T: Real>(m: &Matrix<Complex<T>>, v: &[Complex<T>]) -> Vec<Complex<T>> {
    (0..m.rows())
        .map(|i| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (j, x) in v.iter().enumerate() {
                acc += m[(i, j)] * *x;
            }
            acc
        })
        .collect()
}

fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let r = x % two_pi;
    if r < T::zero() {
        r + two_pi
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(n: usize, eta: f64) -> NModeSystem<f64> {
        NModeSystem::line(ModelParams::new(n, 1.0, 0.0, 1.0, eta, 1.0).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn rhs_of_first_site_excitation() {
        let s = sys(4, 0.0);
        let mut d = vec![c(0.0, 0.0); 4];
        d[0] = c(1.0, 0.0);
        let r = s.rhs(&ModeState::new(d, 0.0));
        // -(i/hbar) T e1 = -(i)(0, -1, 0, 0)
        let want = [c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rhs_symmetric_dimer_eigenstate() {
        let p = ModelParams::new(2, 1.0, 0.4, 1.3, 0.0, 0.7).unwrap();
        let s = NModeSystem::line(p).unwrap();
        let h = 0.5f64.sqrt();
        let st = ModeState::new(vec![c(h, 0.0), c(h, 0.0)], 0.0);
        let r = s.rhs(&st);
        let factor = c(0.0, -(0.4 - 1.3) / 0.7);
        for (a, z) in r.iter().zip(&st.d) {
            assert!((a - factor * z).norm() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let s = sys(4, 0.0);
        let uniform = ActionAngleState { q: vec![0.25; 4], theta: vec![0.3; 4] };
        assert!((s.hamiltonian(&uniform) + 1.5).abs() < 1e-14);
        let r = reduce(&uniform).unwrap();
        assert!((s.reduced_hamiltonian(&r).unwrap() + 1.5).abs() < 1e-14);

        let basis = closed_form_spectrum(&s.params).unwrap();
        let q: Vec<f64> = basis.mode(0).iter().map(|a| a * a).collect();
        let gs = ActionAngleState { q, theta: vec![0.0; 4] };
        let want = -2.0 * (std::f64::consts::PI / 5.0).cos();
        assert!((s.hamiltonian(&gs) - want).abs() < 1e-14);

        let p = ModelParams::<f64>::new(3, 2.0, 0.5, 0.0, 0.0, 1.0).unwrap();
        let s = NModeSystem::line_with_strengths(p, vec![3.0, 1.0, 1.0]).unwrap();
        let single = ActionAngleState { q: vec![1.0, 0.0, 0.0], theta: vec![0.0; 3] };
        assert!((s.hamiltonian(&single) - (0.5 + 3.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn dimer_reduced_hamiltonian_formula() {
        let p = ModelParams::new(2, 1.5, 0.2, 0.8, 2.0, 1.0).unwrap();
        let s = NModeSystem::line_with_strengths(p, vec![1.1, 0.6]).unwrap();
        let (q1, th) = (0.3f64, 0.9f64);
        let r = ReducedState::new(vec![q1], vec![th]).unwrap();
        let want = 0.2 - 2.0 * 0.8 * th.cos() * ((1.0 - q1) * q1).sqrt()
            + (1.1 * q1.powf(2.5) + 0.6 * (1.0 - q1).powf(2.5)) / 2.5;
        assert!((s.reduced_hamiltonian(&r).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn reduced_state_rejects_decreasing_actions() {
        assert!(matches!(ReducedState::new(vec![0.5, 0.3], vec![0.0, 0.0]), Err(Error::State(_))));
        let bad = ActionAngleState { q: vec![0.5, 0.6], theta: vec![0.0, 0.0] };
        assert!(reduce(&bad).is_err());
    }

    #[test]
    fn chart_rejects_empty_site() {
        let st = ModeState::new(vec![c(1.0, 0.0), c(0.0, 0.0)], 0.0);
        assert!(matches!(ActionAngleState::from_mode_state(&st), Err(Error::State(_))));
    }

    #[test]
    fn linear_eigenstate_rotates_at_its_frequency() {
        let p = ModelParams::new(5, 1.0, 0.3, 1.0, 0.0, 1.0).unwrap();
        let s = NModeSystem::line(p).unwrap();
        let b = closed_form_spectrum(&p).unwrap();
        let j = 2;
        let init: ModeState<f64> = ModeState::from_real_normalized(b.mode(j)).unwrap();
        let tr = s.integrate(&init, 10.0, 0.01, IntegrateOptions { stride: 100, ..Default::default() }).unwrap();
        for smp in &tr.samples {
            let phase = Complex::from_polar(1.0, -b.mu[j] * smp.t);
            for (z, a) in smp.d.iter().zip(&init.d) {
                assert!((z.norm() - a.norm()).abs() < 1e-9);
                assert!((z - a * phase).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn integrator_validates_inputs() {
        let s = sys(2, 1.0);
        let init = ModeState::from_real_normalized(&[1.0, 1.0]).unwrap();
        assert!(s.integrate(&init, 1.0, 0.0, IntegrateOptions::default()).is_err());
        let unnormalized = ModeState::new(vec![c(1.0, 0.0), c(1.0, 0.0)], 0.0);
        assert!(matches!(
            s.integrate(&unnormalized, 1.0, 0.01, IntegrateOptions::default()),
            Err(Error::State(_))
        ));
        let three = ModeState::from_real_normalized(&[1.0, 1.0, 1.0]).unwrap();
        assert!(s.integrate(&three, 1.0, 0.01, IntegrateOptions::default()).is_err());
    }

    #[test]
    fn splitting_orders_converge() {
        let s = sys(3, 2.0);
        let init = ModeState::from_real_normalized(&[1.0, 0.4, 0.2]).unwrap();
        let opts = |order| IntegrateOptions { stride: 1_000_000, order };
        let reference = s.integrate(&init, 2.0, 0.001, opts(SplittingOrder::Sixth)).unwrap();
        let last = |t: &Trajectory<f64>| t.samples.last().unwrap().d.clone();
        let r = last(&reference);
        let err = |order, dt| {
            let tr = s.integrate(&init, 2.0, dt, opts(order)).unwrap();
            last(&tr).iter().zip(&r).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        };
        let e2 = err(SplittingOrder::Second, 0.02) / err(SplittingOrder::Second, 0.01);
        assert!((e2 - 4.0).abs() < 0.4, "second-order ratio {e2}");
        let e4 = err(SplittingOrder::Fourth, 0.04) / err(SplittingOrder::Fourth, 0.02);
        assert!((e4 - 16.0).abs() < 3.0, "fourth-order ratio {e4}");
    }
}
