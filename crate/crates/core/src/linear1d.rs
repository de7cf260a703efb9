//! Finite-difference check of the mode basis on a 1D chain of bump wells.
//!
//! Discretizes `-hbar^2 d^2/dx^2 + V` with second-order central differences
//! on a uniform grid with Dirichlet ends; the resulting symmetric
//! tridiagonal problem is solved by bisection and inverse iteration.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::linalg::{Matrix, SymTridiagonal};
use crate::scalar::Real;

pub const MIN_GRID_POINTS: usize = 1000;
/// Eigenvalue shift between `n` and `2n` points above which a grid counts as coarse.
pub const GRID_SHIFT_WARNING: f64 = 1e-6;

/// Smooth compactly supported well `v(x) = -V0 exp(1 / ((x/r)^2 - 1))` on `|x| < r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Well1D<T> {
    pub depth: T,
    pub radius: T,
    /// Distance between neighbouring well centres.
    pub spacing: T,
}

impl<T: Real> Well1D<T> {
    pub fn new(depth: T, radius: T, spacing: T) -> Result<Self> {
        let w = Self { depth, radius, spacing };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth > T::zero() && self.radius > T::zero()) {
            return param("well depth and radius must be positive");
        }
        if !(self.spacing > T::lit(2.0) * self.radius) {
            return param("well spacing must exceed twice the radius");
        }
        Ok(())
    }

    /// Single-well profile centred at the origin.
    pub fn profile(&self, x: T) -> T {
        let u = x / self.radius;
        if u.abs() >= T::one() {
            T::zero()
        } else {
            -self.depth * (T::one() / (u * u - T::one())).exp()
        }
    }

    /// `v''(0) = 2 V0 / (e r^2)`.
    pub fn curvature_at_center(&self) -> T {
        T::lit(2.0) * self.depth / (T::E() * self.radius * self.radius)
    }

    /// Harmonic estimate `v(0) + hbar sqrt(v''(0) / 2)` of the ground level.
    pub fn harmonic_ground_level(&self, hbar: T) -> T {
        self.profile(T::zero()) + hbar * (self.curvature_at_center() / T::lit(2.0)).sqrt()
    }

    /// Centres of `n` wells placed symmetrically about the origin.
    pub fn centers(&self, n: usize) -> Vec<T> {
        let mid = T::from_usize_lossy(n + 1) / T::lit(2.0);
        (1..=n).map(|j| (T::from_usize_lossy(j) - mid) * self.spacing).collect()
    }

    /// Default domain half-width `n spacing / 2 + 3 r`.
    pub fn default_half_width(&self, n: usize) -> T {
        T::from_usize_lossy(n) * self.spacing / T::lit(2.0) + T::lit(3.0) * self.radius
    }

    pub fn chain_potential(&self, n: usize, x: T) -> T {
        self.centers(n).into_iter().map(|c| self.profile(x - c)).sum()
    }
}

impl Default for Well1D<f64> {
    fn default() -> Self {
        Self { depth: 5.0, radius: 1.0, spacing: 2.5 }
    }
}

pub const DEFAULT_HBAR: f64 = 0.3;
pub const DEFAULT_POINTS: usize = 4000;

/// Interior nodes `x_i = -W + (i + 1) h`, `h = 2W / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D<T> {
    pub half_width: T,
    pub n_points: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(half_width: T, n_points: usize) -> Result<Self> {
        if n_points < MIN_GRID_POINTS {
            return param(format!("grid needs at least {MIN_GRID_POINTS} points, got {n_points}"));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return param("grid half-width must be positive");
        }
        Ok(Self { half_width, n_points })
    }

    pub fn step(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize_lossy(self.n_points + 1)
    }

    pub fn nodes(&self) -> Vec<T> {
        let h = self.step();
        (0..self.n_points).map(|i| -self.half_width + T::from_usize_lossy(i + 1) * h).collect()
    }

    /// Linear interpolation of nodal `values` (zero at the Dirichlet ends).
    pub fn interpolate(&self, values: &[T], x: T) -> T {
        let h = self.step();
        let s = (x + self.half_width) / h - T::one();
        if s <= -T::one() || s >= T::from_usize_lossy(self.n_points) {
            return T::zero();
        }
        let i = s.floor();
        let f = s - i;
        let at = |k: isize| -> T {
            if k < 0 || k as usize >= self.n_points {
                T::zero()
            } else {
                values[k as usize]
            }
        };
        let k = i.to_isize().unwrap_or(-1);
        at(k) * (T::one() - f) + at(k + 1) * f
    }
}

fn hamiltonian<T: Real>(grid: &Grid1D<T>, hbar: T, potential: impl Fn(T) -> T) -> Result<SymTridiagonal<T>> {
    let h = grid.step();
    let k = hbar * hbar / (h * h);
    let diag = grid.nodes().into_iter().map(|x| T::lit(2.0) * k + potential(x)).collect();
    SymTridiagonal::new(diag, vec![-k; grid.n_points - 1])
}

/// Lowest eigenpairs with vectors normalized in the grid inner product.
fn lowest_states<T: Real>(
    grid: &Grid1D<T>,
    hbar: T,
    count: usize,
    potential: impl Fn(T) -> T,
) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let ham = hamiltonian(grid, hbar, potential)?;
    let (vals, mut vecs) = ham.lowest_eigenpairs(count)?;
    let scale = grid.step().sqrt().recip();
    for v in vecs.iter_mut() {
        v.iter_mut().for_each(|x| *x *= scale);
        // positive lobe on the left
        if let Some(first) = v.iter().find(|x| x.abs() > T::lit(1e-8)).copied() {
            if first < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    Ok((vals, vecs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState<T> {
    pub grid: Grid1D<T>,
    pub lambda_d: T,
    /// Samples of the ground state, unit norm in `h sum psi^2`, positive.
    pub psi: Vec<T>,
    /// `|lambda(n) - lambda(2n)|`.
    pub grid_shift: T,
    pub warnings: Vec<String>,
}

/// Dirichlet ground state of a single well centred at the origin.
pub fn dirichlet_ground_state<T: Real>(
    well: &Well1D<T>,
    hbar: T,
    half_width: T,
    n_points: usize,
) -> Result<GroundState<T>> {
    well.validate()?;
    if !(hbar > T::zero()) {
        return param("hbar must be positive");
    }
    if !(half_width > well.radius) {
        return param("domain half-width must exceed the well radius");
    }
    let grid = Grid1D::new(half_width, n_points)?;
    let (vals, vecs) = lowest_states(&grid, hbar, 1, |x| well.profile(x))?;
    let fine = Grid1D::new(half_width, 2 * n_points + 1)?;
    let (fine_vals, _) = lowest_states(&fine, hbar, 1, |x| well.profile(x))?;
    let grid_shift = (vals[0] - fine_vals[0]).abs();
    let mut warnings = Vec::new();
    if grid_shift > T::lit(GRID_SHIFT_WARNING) {
        warnings.push(format!(
            "ground level moves by {grid_shift} when the grid is doubled; results may be grid-limited"
        ));
    }
    Ok(GroundState { grid, lambda_d: vals[0], psi: vecs[0].clone(), grid_shift, warnings })
}

/// Observed convergence order of the ground level from grids with
/// `n`, `2n + 1` and `4n + 3` interior points (mesh halving each time).
pub fn grid_convergence_order<T: Real>(well: &Well1D<T>, hbar: T, half_width: T, n_points: usize) -> Result<T> {
    let level = |n: usize| -> Result<T> {
        let g = Grid1D::new(half_width, n)?;
        Ok(lowest_states(&g, hbar, 1, |x| well.profile(x))?.0[0])
    };
    let (a, b, c) = (level(n_points)?, level(2 * n_points + 1)?, level(4 * n_points + 3)?);
    Ok(((a - b) / (b - c)).abs().log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingEstimate<T> {
    /// `2 hbar^2 psi(l/2) psi'(l/2)` with its sign.
    pub raw: T,
    /// Its magnitude, used as the hopping strength.
    pub beta: T,
}

/// Hopping strength `|2 hbar^2 psi_D(l/2) psi_D'(l/2)|` from the single-well state.
pub fn hopping_beta_formula<T: Real>(ground: &GroundState<T>, ell: T, hbar: T) -> Result<HoppingEstimate<T>> {
    let g = &ground.grid;
    let h = g.step();
    let x = ell / T::lit(2.0);
    let s = (x + g.half_width) / h - T::one();
    let i = s.floor();
    if !(i >= T::one() && i + T::lit(2.0) < T::from_usize_lossy(g.n_points)) {
        return param(format!("l/2 = {x} lies outside the computed grid"));
    }
    let i = i.to_usize().unwrap();
    let f = s - T::from_usize_lossy(i);
    let psi = &ground.psi;
    let d = |k: usize| (psi[k + 1] - psi[k - 1]) / (T::lit(2.0) * h);
    let p = psi[i] * (T::one() - f) + psi[i + 1] * f;
    let dp = d(i) * (T::one() - f) + d(i + 1) * f;
    let raw = T::lit(2.0) * hbar * hbar * p * dp;
    Ok(HoppingEstimate { raw, beta: raw.abs() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NWellSpectrum<T> {
    pub grid: Grid1D<T>,
    pub n_wells: usize,
    pub centers: Vec<T>,
    /// Lowest `n_wells + 1` levels.
    pub eigenvalues: Vec<T>,
    /// The lowest `n_wells` eigenfunctions, grid-normalized.
    pub eigenfunctions: Vec<Vec<T>>,
}

impl<T: Real> NWellSpectrum<T> {
    pub fn cluster(&self) -> &[T] {
        &self.eigenvalues[..self.n_wells]
    }

    pub fn width(&self) -> T {
        self.eigenvalues[self.n_wells - 1] - self.eigenvalues[0]
    }
}

/// Lowest levels of the chain of `n_wells` wells.
pub fn nwell_spectrum_direct<T: Real>(
    well: &Well1D<T>,
    n_wells: usize,
    hbar: T,
    half_width: T,
    n_points: usize,
) -> Result<NWellSpectrum<T>> {
    well.validate()?;
    if n_wells == 0 {
        return param("need at least one well");
    }
    if !(hbar > T::zero()) {
        return param("hbar must be positive");
    }
    let centers = well.centers(n_wells);
    let reach = centers.last().copied().unwrap_or(T::zero()) + well.radius;
    if !(half_width > reach) {
        return param(format!("domain half-width {half_width} does not contain all wells (need > {reach})"));
    }
    let grid = Grid1D::new(half_width, n_points)?;
    let (vals, vecs) = lowest_states(&grid, hbar, n_wells + 1, |x| well.chain_potential(n_wells, x))?;
    Ok(NWellSpectrum {
        grid,
        n_wells,
        centers,
        eigenvalues: vals,
        eigenfunctions: vecs.into_iter().take(n_wells).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosinePatternFit<T> {
    pub lambda_d_fit: T,
    pub beta_fit: T,
    /// Max fit deviation over the cluster spread.
    pub residual: T,
    /// Gap to the next level exceeds the fitted spread `4 beta_fit`.
    pub separated: bool,
    pub warnings: Vec<String>,
}

/// Least-squares fit `lambda_j = lambda_D - 2 beta cos(j pi / (N+1))`.
pub fn compare_lemma2<T: Real>(spectrum: &NWellSpectrum<T>) -> Result<CosinePatternFit<T>> {
    let n = spectrum.n_wells;
    if n < 2 {
        return param("the cosine fit needs at least two wells");
    }
    let np1 = T::from_usize_lossy(n + 1);
    let c: Vec<T> = (1..=n).map(|j| -T::lit(2.0) * (T::from_usize_lossy(j) * T::PI() / np1).cos()).collect();
    let y = spectrum.cluster();
    let nn = T::from_usize_lossy(n);
    let (sc, scc) = (c.iter().copied().sum::<T>(), c.iter().map(|v| *v * *v).sum::<T>());
    let (sy, scy) = (y.iter().copied().sum::<T>(), c.iter().zip(y).map(|(a, b)| *a * *b).sum::<T>());
    let det = nn * scc - sc * sc;
    let lambda_d_fit = (scc * sy - sc * scy) / det;
    let beta_fit = (nn * scy - sc * sy) / det;
    let dev = c
        .iter()
        .zip(y)
        .fold(T::zero(), |m, (cj, yj)| m.max((lambda_d_fit + beta_fit * *cj - *yj).abs()));
    let width = spectrum.width();
    let residual = if width > T::zero() { dev / width } else { T::infinity() };
    let gap = spectrum.eigenvalues[n] - spectrum.eigenvalues[n - 1];
    let separated = gap > T::lit(4.0) * beta_fit.abs();
    let mut warnings = Vec::new();
    if !separated {
        warnings.push(format!(
            "lowest cluster is not separated from level {} (gap {gap}, fitted spread {}); not in the tunnelling regime",
            n + 1,
            T::lit(4.0) * beta_fit.abs()
        ));
    }
    Ok(CosinePatternFit { lambda_d_fit, beta_fit, residual, separated, warnings })
}

/// Overlaps `<psi_D(. - c_k), u_j>` of each cluster eigenfunction with the
/// shifted single-well states, rows normalized and oriented so the first
/// sizeable entry is positive (row `j` is eigenfunction `j`).
pub fn project_onto_wells<T: Real>(spectrum: &NWellSpectrum<T>, ground: &GroundState<T>) -> Matrix<T> {
    let nodes = spectrum.grid.nodes();
    let h = spectrum.grid.step();
    let shifted: Vec<Vec<T>> = spectrum
        .centers
        .iter()
        .map(|c| nodes.iter().map(|x| ground.grid.interpolate(&ground.psi, *x - *c)).collect())
        .collect();
    let n = spectrum.n_wells;
    let mut m = Matrix::from_fn(n, n, |j, k| {
        spectrum.eigenfunctions[j].iter().zip(&shifted[k]).map(|(u, p)| *u * *p).sum::<T>() * h
    });
    for j in 0..n {
        let row: Vec<T> = m.row(j).to_vec();
        let nrm = row.iter().map(|v| *v * *v).sum::<T>().sqrt();
        let lead = row.iter().copied().find(|v| v.abs() > T::lit(1e-6) * nrm).unwrap_or(T::one());
        let s = if lead < T::zero() { -nrm.recip() } else { nrm.recip() };
        for k in 0..n {
            m[(j, k)] = row[k] * s;
        }
    }
    m
}
