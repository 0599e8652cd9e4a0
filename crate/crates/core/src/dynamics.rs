//! First and second moments of the probe under the exact dynamics and under
//! the Markovian (damped oscillator) approximation.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{init_gaussian_state, Drive, GaussianState, ProbeSpec, ReservoirSpec, SimGrid};
use crate::noise::{noise_integrals, stationary_noise_integrals, NoiseBackend, NoiseIntegrals};
use crate::propagators::{
    build_propagators, damped_basis, markovian_propagators, G6Form, PropagatorSet,
};
use crate::quadrature::integrate;

/// Coefficient of `σxp(0)` in the deterministic part of `σxp(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossTerm {
    /// `G₁G₅ + G₂G₄`, from `Φ σ(0) Φᵀ`
    #[default]
    Consistent,
    /// `2 (G₁G₅ + G₂G₄)`, kept for comparison
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    pub noise: NoiseBackend,
    /// fixed Matsubara cutoff; `None` chooses it per time point
    pub matsubara_terms: Option<usize>,
    pub g6: G6Form,
    pub cross: CrossTerm,
}

/// Moments sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
}

/// Exact Gaussian evolution for one probe and reservoir.
#[derive(Debug, Clone)]
pub struct MomentSolver {
    pub probe: ProbeSpec,
    pub reservoir: ReservoirSpec,
    pub propagators: PropagatorSet,
    pub options: SolverOptions,
    initial: GaussianState,
}

impl MomentSolver {
    pub fn new(probe: &ProbeSpec, res: &ReservoirSpec, options: SolverOptions) -> Result<Self> {
        let propagators = build_propagators(probe, res, options.g6)?;
        Ok(Self {
            probe: *probe,
            reservoir: *res,
            propagators,
            options,
            initial: init_gaussian_state(probe),
        })
    }

    pub fn state_at(&self, t: f64) -> Result<GaussianState> {
        self.state_at_with_terms(t, self.options.matsubara_terms)
    }

    /// Like [`Self::state_at`] with an explicit Matsubara cutoff.
    pub fn state_at_with_terms(&self, t: f64, n_terms: Option<usize>) -> Result<GaussianState> {
        let noise = noise_integrals(
            &self.propagators,
            &self.reservoir,
            t,
            self.options.noise,
            n_terms,
        )?;
        let g = self.propagators.eval(t);
        let mut d = transfer(&g) * self.initial.d;
        if let Some(drive) = self.probe.drive {
            d += drive_response(&self.propagators, &drive, t);
        }
        let sigma =
            deterministic_part(&g, &self.initial.sigma, self.options.cross) + noise_matrix(&noise);
        Ok(GaussianState { d, sigma })
    }

    pub fn trajectory(&self, grid: &SimGrid) -> Result<MomentTrajectory> {
        grid.validate()?;
        let times = grid.times();
        let states = times
            .par_iter()
            .map(|&t| self.state_at(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentTrajectory { times, states })
    }

    /// Long-time state from the analytic `t → ∞` noise integrals.
    ///
    /// Cross-checked against the finite-time solution at `t∞ = 50/min|Re z|`;
    /// a relative drift above `1e-6` is reported as [`Error::NotStationary`].
    pub fn steady_state(&self) -> Result<GaussianState> {
        self.steady_state_with_terms(self.options.matsubara_terms)
    }

    pub fn steady_state_with_terms(&self, n_terms: Option<usize>) -> Result<GaussianState> {
        if self.probe.drive.is_some_and(|d| d.amplitude > 0.0) {
            return Err(Error::Unsupported(
                "a driven probe has no stationary state".into(),
            ));
        }
        let noise = stationary_noise_integrals(&self.propagators, &self.reservoir, n_terms);
        let sigma = noise_matrix(&noise);
        let t_inf = 50.0 / self.propagators.slowest_rate();
        let check = noise_integrals(
            &self.propagators,
            &self.reservoir,
            t_inf,
            NoiseBackend::ExpSum,
            None,
        )?;
        let scale = sigma.abs().max();
        let drift = noise
            .iter()
            .zip(check.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        if drift > 1e-6 {
            return Err(Error::NotStationary { drift, t: t_inf });
        }
        Ok(GaussianState {
            d: Vector2::zeros(),
            sigma,
        })
    }
}

fn transfer(g: &[f64; 6]) -> Matrix2<f64> {
    Matrix2::new(g[0], g[1], g[3], g[4])
}

fn deterministic_part(g: &[f64; 6], s0: &Matrix2<f64>, cross: CrossTerm) -> Matrix2<f64> {
    let mut out = transfer(g) * s0 * transfer(g).transpose();
    if cross == CrossTerm::Literal {
        let extra = (g[0] * g[4] + g[1] * g[3]) * s0[(0, 1)];
        out[(0, 1)] += extra;
        out[(1, 0)] += extra;
    }
    out
}

fn noise_matrix(n: &NoiseIntegrals) -> Matrix2<f64> {
    Matrix2::new(n[0], n[1], n[1], n[2])
}

/// Mean displacement caused by the drive `F₀ sin(ω_f t)`, which enters the
/// equations of motion like a momentum kick and so propagates with `G₂, G₅`.
pub fn drive_response(set: &PropagatorSet, drive: &Drive, t: f64) -> Vector2<f64> {
    let w = Complex64::new(0.0, drive.frequency);
    let (eiw, emiw) = ((w * t).exp(), (-w * t).exp());
    let mut out = [0.0; 2];
    for (slot, alpha) in out.iter_mut().zip([1usize, 4]) {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            let z = set.roots.z[i];
            let ezt = (z * t).exp();
            // ∫₀ᵗ e^{z(t−τ)} sin(ω τ) dτ
            let conv = ((eiw - ezt) / (w - z) - (emiw - ezt) / (-w - z)) / Complex64::new(0.0, 2.0);
            acc += set.coeff[alpha][i] * conv;
        }
        *slot = drive.amplitude * acc.re;
    }
    Vector2::new(out[0], out[1])
}

pub fn evolve_moments(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    grid: &SimGrid,
    options: SolverOptions,
) -> Result<MomentTrajectory> {
    MomentSolver::new(probe, res, options)?.trajectory(grid)
}

pub fn steady_state_moments(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    options: SolverOptions,
) -> Result<GaussianState> {
    MomentSolver::new(probe, res, options)?.steady_state()
}

/// Diffusion constant of the Markovian master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkovNoise {
    /// `2γω₀ coth(ω₀/2T)`, relaxes to the Gibbs state of the probe
    #[default]
    Quantum,
    /// `4γT`, the high-temperature limit
    Classical,
}

impl MarkovNoise {
    pub fn diffusion(self, probe: &ProbeSpec, res: &ReservoirSpec) -> f64 {
        match self {
            Self::Quantum => {
                let w0 = probe.omega0;
                2.0 * res.gamma * w0 / (w0 / (2.0 * res.temperature)).tanh()
            }
            Self::Classical => 4.0 * res.gamma * res.temperature,
        }
    }
}

/// Stationary covariance of the Markovian model: `diag(D/(2γω₀²), D/(2γ))`.
pub fn markovian_steady_state(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    noise: MarkovNoise,
) -> Result<GaussianState> {
    probe.validate()?;
    res.validate()?;
    if probe.theta != 0.0 {
        return Err(Error::Unsupported(
            "Markovian moments are only available at theta = 0".into(),
        ));
    }
    let spp = noise.diffusion(probe, res) / (2.0 * res.gamma);
    Ok(GaussianState {
        d: Vector2::zeros(),
        sigma: Matrix2::new(spp / (probe.omega0 * probe.omega0), 0.0, 0.0, spp),
    })
}

/// Markovian moments `σ(t) = Φ (σ(0) − σ∞) Φᵀ + σ∞` with `Φ = e^{At}`.
pub fn markovian_moments(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    t: f64,
    noise: MarkovNoise,
) -> Result<GaussianState> {
    let stationary = markovian_steady_state(probe, res, noise)?;
    let g = markovian_propagators(probe, res, t)?;
    let phi = transfer(&g);
    let init = init_gaussian_state(probe);
    let sigma = phi * (init.sigma - stationary.sigma) * phi.transpose() + stationary.sigma;
    let mut d = phi * init.d;
    if let Some(drive) = probe.drive {
        let kappa = 0.5 * res.gamma;
        let lambda_sq = probe.omega0 * probe.omega0 - kappa * kappa;
        let kernel = |tau: f64| {
            let (u, v) = damped_basis(kappa, lambda_sq, t - tau);
            let f = drive.amplitude * (drive.frequency * tau).sin();
            (v * f, (u - kappa * v) * f)
        };
        let x = integrate(|tau| kernel(tau).0, 0.0, t, 1e-13, 1e-11, 2000)?;
        let p = integrate(|tau| kernel(tau).1, 0.0, t, 1e-13, 1e-11, 2000)?;
        d += Vector2::new(x.value, p.value);
    }
    Ok(GaussianState { d, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn gibbs(w0: f64, temp: f64) -> Matrix2<f64> {
        let c = 1.0 / (w0 / (2.0 * temp)).tanh();
        Matrix2::new(c / w0, 0.0, 0.0, c * w0)
    }

    #[test]
    fn initial_state_is_reproduced() {
        let probe = ProbeSpec::default()
            .with_alpha(Complex64::new(0.7, -0.2))
            .with_squeeze(0.4)
            .with_theta(0.9);
        let res = ReservoirSpec::new(1.0, 10.0, 1.0).unwrap();
        let solver = MomentSolver::new(&probe, &res, SolverOptions::default()).unwrap();
        let s = solver.state_at(0.0).unwrap();
        let init = init_gaussian_state(&probe);
        assert!((s.sigma - init.sigma).abs().max() < 1e-12);
        assert!((s.d - init.d).abs().max() < 1e-12);
    }

    #[test]
    fn markovian_closed_form_reference() {
        // ω₀ = 0.5, T = 2.5: Gibbs diag(coth(0.1)/0.5, 0.5 coth(0.1))
        let probe = ProbeSpec {
            omega0: 0.5,
            ..ProbeSpec::default()
        };
        let res = ReservoirSpec::new(0.2, 10.0, 2.5).unwrap();
        let s = markovian_steady_state(&probe, &res, MarkovNoise::Quantum).unwrap();
        assert_relative_eq!(s.sigma[(0, 0)], 20.066_622_264_507_98, max_relative = 1e-12);
        assert_relative_eq!(s.sigma[(1, 1)], 5.016_655_566_126_995, max_relative = 1e-12);
        let late = markovian_moments(&probe, &res, 400.0, MarkovNoise::Quantum).unwrap();
        assert!((late.sigma - s.sigma).abs().max() < 1e-10);
        let classical = markovian_steady_state(&probe, &res, MarkovNoise::Classical).unwrap();
        assert_relative_eq!(classical.sigma[(1, 1)], 5.0, max_relative = 1e-14);
    }

    #[test]
    fn markovian_moments_obey_lyapunov_equation() {
        let probe = ProbeSpec::default().with_squeeze(0.5);
        let res = ReservoirSpec::new(0.4, 10.0, 1.0).unwrap();
        let dsig = |t: f64| {
            markovian_moments(&probe, &res, t, MarkovNoise::Quantum)
                .unwrap()
                .sigma
        };
        let a = Matrix2::new(0.0, 1.0, -1.0, -0.4);
        let d = MarkovNoise::Quantum.diffusion(&probe, &res);
        for &t in &[0.3, 1.7, 5.0] {
            let h = 1e-5;
            let numeric = (dsig(t + h) - dsig(t - h)) / (2.0 * h);
            let s = dsig(t);
            let rhs = a * s + s * a.transpose() + Matrix2::new(0.0, 0.0, 0.0, d);
            assert!((numeric - rhs).abs().max() < 1e-7);
        }
    }

    #[test]
    fn exact_dynamics_thermalizes_weakly_coupled_probe() {
        let probe = ProbeSpec::default().with_squeeze(0.3);
        let res = ReservoirSpec::new(0.05, 10.0, 1.0).unwrap();
        let st = steady_state_moments(&probe, &res, SolverOptions::default()).unwrap();
        let target = gibbs(1.0, 1.0);
        assert!((st.sigma - target).abs().max() < 0.02 * target.max());
        let late = MomentSolver::new(&probe, &res, SolverOptions::default())
            .unwrap()
            .state_at(600.0)
            .unwrap();
        assert!((late.sigma - st.sigma).abs().max() < 1e-8);
    }

    #[test]
    fn drive_response_matches_quadrature() {
        let drive = Drive {
            amplitude: 1.3,
            frequency: 2.0,
        };
        let res = ReservoirSpec::new(1.0, 10.0, 1.0).unwrap();
        let probe = ProbeSpec::default().with_theta(0.8).with_drive(Some(drive));
        let set = build_propagators(&probe, &res, G6Form::Consistent).unwrap();
        let t = 3.7;
        let closed = drive_response(&set, &drive, t);
        for (k, alpha) in [(0, 1), (1, 4)] {
            let f = |tau: f64| {
                set.eval(t - tau)[alpha] * drive.amplitude * (drive.frequency * tau).sin()
            };
            let numeric = integrate(f, 0.0, t, 1e-14, 1e-12, 500).unwrap().value;
            assert!((closed[k] - numeric).abs() < 1e-11);
        }
    }

    #[test]
    fn driven_steady_state_is_rejected() {
        let probe = ProbeSpec::default().with_drive(Some(Drive {
            amplitude: 1.0,
            frequency: 1.0,
        }));
        let res = ReservoirSpec::new(1.0, 10.0, 1.0).unwrap();
        assert!(matches!(
            steady_state_moments(&probe, &res, SolverOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn trajectory_states_are_physical() {
        let probe = ProbeSpec::default().with_squeeze(1.0).with_theta(0.5);
        let res = ReservoirSpec::new(3.0, 10.0, 0.5).unwrap();
        let traj = evolve_moments(
            &probe,
            &res,
            &SimGrid::uniform(10.0, 41),
            SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.times.len(), 41);
        for s in &traj.states {
            assert!(s.is_physical(1e-9), "{s:?}");
        }
    }
}
