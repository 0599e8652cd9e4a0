//! Finite-bath oracle: the reservoir is replaced by `N` discrete modes and the
//! whole linear system (probe, bath, counter-term and drive) is propagated with
//! a matrix exponential. Valid until the discrete spectrum rephases at
//! `2π/Δω`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::model::{
    init_gaussian_state, spectral_density, GaussianState, ProbeSpec, ReservoirSpec,
};

/// Default number of bath modes; keeps the recurrence time above `12.5/ω₀`
/// at the default `ω_max = 20Ω` with `Ω = 10ω₀`.
pub const DEFAULT_MODES: usize = 500;

/// Default bandwidth in units of the cutoff.
pub const DEFAULT_BANDWIDTH: f64 = 20.0;

/// Usable fraction of the recurrence time.
pub const RECURRENCE_SAFETY: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedBath {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub spacing: f64,
}

impl DiscretizedBath {
    /// `2π/Δω`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// `Σ c_k²/ω_k`, the midpoint estimate of `∫₀^{ω_max} J(ω) dω`.
    pub fn spectral_weight(&self) -> f64 {
        self.omegas
            .iter()
            .zip(&self.couplings)
            .map(|(w, c)| c * c / w)
            .sum()
    }

    /// Counter-term coefficient `Σ c_k²/ω_k²`.
    pub fn counter_term(&self) -> f64 {
        self.omegas
            .iter()
            .zip(&self.couplings)
            .map(|(w, c)| c * c / (w * w))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Midpoint discretization: `ω_k = (k − ½)Δω`, `c_k² = ω_k J(ω_k) Δω`.
pub fn discretize_bath(res: &ReservoirSpec, n: usize, omega_max: f64) -> Result<DiscretizedBath> {
    res.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "modes",
            value: n as f64,
            reason: "need at least two bath modes",
        });
    }
    crate::error::ensure_positive("omega_max", omega_max)?;
    let dw = omega_max / n as f64;
    let mut omegas = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n);
    for k in 1..=n {
        let w = (k as f64 - 0.5) * dw;
        omegas.push(w);
        couplings.push((w * spectral_density(w, res)? * dw).sqrt());
    }
    Ok(DiscretizedBath {
        omegas,
        couplings,
        spacing: dw,
    })
}

/// Mean and covariance of `(x, p, x₁, p₁, …, x_N, p_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Probe state times independent thermal modes:
/// `⟨{Δx_k, Δx_k}⟩ = coth(βω_k/2)/ω_k`, `⟨{Δp_k, Δp_k}⟩ = ω_k coth(βω_k/2)`.
pub fn initial_full_state(
    probe: &ProbeSpec,
    bath: &DiscretizedBath,
    temperature: f64,
) -> Result<FullGaussianState> {
    crate::error::ensure_positive("temperature", temperature)?;
    let dim = 2 * bath.len() + 2;
    let probe_state = init_gaussian_state(probe);
    let mut mean = DVector::zeros(dim);
    mean[0] = probe_state.d[0];
    mean[1] = probe_state.d[1];
    let mut cov = DMatrix::zeros(dim, dim);
    for i in 0..2 {
        for j in 0..2 {
            cov[(i, j)] = probe_state.sigma[(i, j)];
        }
    }
    for (k, &w) in bath.omegas.iter().enumerate() {
        let coth = 1.0 / (0.5 * w / temperature).tanh();
        cov[(2 + 2 * k, 2 + 2 * k)] = coth / w;
        cov[(3 + 2 * k, 3 + 2 * k)] = w * coth;
    }
    Ok(FullGaussianState { mean, cov })
}

/// Drift matrix of `H = p²/2 + ω₀²x²/2 + Σ_k [p_k²/2 + ω_k²x_k²/2 + c_k x_k S] + K S²/2`
/// with `S = x cos θ + p sin θ` and `K = Σ c_k²/ω_k²`, in the ordering of
/// [`FullGaussianState`]. A drive adds two rows generating `y = sin(ω_f t)`
/// and its derivative, with `F₀ y` feeding `ṗ`.
pub fn drift_matrix(probe: &ProbeSpec, bath: &DiscretizedBath) -> DMatrix<f64> {
    let n = bath.len();
    let dim = 2 * n + 2 + if probe.drive.is_some() { 2 } else { 0 };
    let (s, c) = probe.theta.sin_cos();
    let k = bath.counter_term();
    let mut a = DMatrix::zeros(dim, dim);
    // ẋ = ∂H/∂p = p + sinθ (Σ c_k x_k + K S)
    a[(0, 1)] = 1.0 + k * s * s;
    a[(0, 0)] = k * s * c;
    // ṗ = −∂H/∂x = −ω₀²x − cosθ (Σ c_k x_k + K S)
    a[(1, 0)] = -probe.omega0 * probe.omega0 - k * c * c;
    a[(1, 1)] = -k * s * c;
    for (j, (&w, &ck)) in bath.omegas.iter().zip(&bath.couplings).enumerate() {
        let (xi, pi) = (2 + 2 * j, 3 + 2 * j);
        a[(0, xi)] = s * ck;
        a[(1, xi)] = -c * ck;
        a[(xi, pi)] = 1.0;
        a[(pi, xi)] = -w * w;
        a[(pi, 0)] = -ck * c;
        a[(pi, 1)] = -ck * s;
    }
    if let Some(drive) = probe.drive {
        let (y, v) = (2 * n + 2, 2 * n + 3);
        a[(y, v)] = 1.0;
        a[(v, y)] = -drive.frequency * drive.frequency;
        a[(1, y)] = drive.amplitude;
    }
    a
}

/// Largest entry of `Φ J Φᵀ − J` over the Hamiltonian block.
fn symplectic_residual(phi: &DMatrix<f64>, dim: usize) -> f64 {
    let block = phi.view((0, 0), (dim, dim));
    // (Φ J)[:, 2m] = −Φ[:, 2m+1], (Φ J)[:, 2m+1] = Φ[:, 2m]
    let mut phij = DMatrix::zeros(dim, dim);
    for m in 0..dim / 2 {
        phij.set_column(2 * m, &(-block.column(2 * m + 1)));
        phij.set_column(2 * m + 1, &block.column(2 * m));
    }
    let mut r = phij * block.transpose();
    for m in 0..dim / 2 {
        r[(2 * m, 2 * m + 1)] -= 1.0;
        r[(2 * m + 1, 2 * m)] += 1.0;
    }
    r.abs().max()
}

/// Oracle settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub modes: usize,
    /// bandwidth ω_max in units of the cutoff Ω
    pub bandwidth: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            modes: DEFAULT_MODES,
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }
}

/// Probe moments of the finite-bath model on a uniform time grid `k·dt`,
/// `k = 0..steps`. One propagator `e^{A dt}` is built and applied to the
/// probe rows only, so each step costs `O(N²)`.
pub fn oracle_trajectory(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    config: OracleConfig,
    dt: f64,
    steps: usize,
) -> Result<Vec<GaussianState>> {
    probe.validate()?;
    crate::error::ensure_positive("dt", dt)?;
    let bath = discretize_bath(res, config.modes, config.bandwidth * res.cutoff)?;
    let horizon = dt * steps as f64;
    let recurrence = bath.recurrence_time();
    if horizon > RECURRENCE_SAFETY * recurrence {
        return Err(Error::Recurrence {
            horizon,
            recurrence,
        });
    }
    let init = initial_full_state(probe, &bath, res.temperature)?;
    let a = drift_matrix(probe, &bath);
    let dim = a.nrows();
    let ham = 2 * bath.len() + 2;
    let phi = (a * dt).exp();
    let residual = symplectic_residual(&phi, ham);
    if !(residual <= 1e-8) {
        return Err(Error::Symplectic(residual));
    }

    let mut mean0 = DVector::zeros(dim);
    mean0.rows_mut(0, ham).copy_from(&init.mean);
    if let Some(drive) = probe.drive {
        mean0[ham + 1] = drive.frequency;
    }
    // rows of e^{A t} belonging to x and p
    let mut rows = DMatrix::zeros(2, dim);
    rows[(0, 0)] = 1.0;
    rows[(1, 1)] = 1.0;
    let mut out = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            rows = &rows * &phi;
        }
        let d = &rows * &mean0;
        let r = rows.columns(0, ham);
        let cov = r * &init.cov * r.transpose();
        out.push(GaussianState {
            d: Vector2::new(d[0], d[1]),
            sigma: Matrix2::new(cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]),
        });
    }
    Ok(out)
}

/// Probe moments at a single time, from a direct exponential `e^{A t}`.
pub fn evolve_full_system(
    state: &FullGaussianState,
    probe: &ProbeSpec,
    bath: &DiscretizedBath,
    t: f64,
) -> Result<GaussianState> {
    let a = drift_matrix(probe, bath);
    let ham = 2 * bath.len() + 2;
    let phi = (a * t).exp();
    let residual = symplectic_residual(&phi, ham);
    if !(residual <= 1e-8) {
        return Err(Error::Symplectic(residual));
    }
    let mut mean0 = DVector::zeros(phi.nrows());
    mean0.rows_mut(0, ham).copy_from(&state.mean);
    if let Some(drive) = probe.drive {
        mean0[ham + 1] = drive.frequency;
    }
    let rows = phi.rows(0, 2);
    let d = rows * mean0;
    let r = rows.columns(0, ham);
    let cov = r * &state.cov * r.transpose();
    Ok(GaussianState {
        d: Vector2::new(d[0], d[1]),
        sigma: Matrix2::new(cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]),
    })
}

/// Largest deviation between two trajectories: relative in `σ` (against
/// the larger diagonal entry for `σxp`) and absolute in `d`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Deviation {
    pub sigma_rel: f64,
    pub d_abs: f64,
}

pub fn compare_states(reference: &[GaussianState], other: &[GaussianState]) -> Deviation {
    let mut dev = Deviation::default();
    for (a, b) in reference.iter().zip(other) {
        let scale_xp = a.sigma[(0, 0)].max(a.sigma[(1, 1)]);
        let rel = [
            (a.sigma[(0, 0)] - b.sigma[(0, 0)]).abs() / a.sigma[(0, 0)].abs(),
            (a.sigma[(1, 1)] - b.sigma[(1, 1)]).abs() / a.sigma[(1, 1)].abs(),
            (a.sigma[(0, 1)] - b.sigma[(0, 1)]).abs() / scale_xp,
        ];
        dev.sigma_rel = rel.iter().fold(dev.sigma_rel, |m, &x| m.max(x));
        dev.d_abs = dev.d_abs.max((a.d - b.d).abs().max());
    }
    dev
}
