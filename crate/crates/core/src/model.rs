//! Domain types and reservoir functions.
//!
//! All quantities are in units of the probe frequency scale: times in `1/ω₀`,
//! frequencies, energies and temperatures in `ω₀` (with `ħ = k_B = m = 1`).
//!
//! Bath normalization: the coupling constants obey
//! `J(ω) = Σ_k c_k²/ω_k δ(ω − ω_k)` with the Lorentz-Drude form
//! `J(ω) = (2γω/π) Ω²/(ω² + Ω²)`. With this convention the damping kernel is
//! `Z(t) = γΩ e^{−Ωt}`, the Markovian friction rate is `γ` and the noise
//! correlation `C(t) = ⟨{R(t), R(0)}⟩ = ∫ J(ω) coth(βω/2) cos(ωt) dω`
//! integrates to `4γT`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};

/// Lowest supported reservoir temperature.
pub const MIN_TEMPERATURE: f64 = 0.01;

/// Relative distance of `βΩ/2π` from an integer below which the Matsubara
/// decomposition is treated as resonant.
pub const RESONANCE_EPS: f64 = 1e-6;

/// Hard cap on the number of Matsubara terms.
pub const MAX_MATSUBARA_TERMS: usize = 100_000;

/// Spectral-density parameters and temperature of the reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirSpec {
    /// coupling strength γ
    pub gamma: f64,
    /// Lorentz-Drude cutoff Ω
    pub cutoff: f64,
    pub temperature: f64,
}

impl ReservoirSpec {
    pub fn new(gamma: f64, cutoff: f64, temperature: f64) -> Result<Self> {
        let spec = Self {
            gamma,
            cutoff,
            temperature,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("gamma", self.gamma)?;
        ensure_positive("cutoff", self.cutoff)?;
        if !(self.temperature >= MIN_TEMPERATURE) || !self.temperature.is_finite() {
            return Err(Error::InvalidParameter {
                name: "temperature",
                value: self.temperature,
                reason: "must be >= 0.01 (zero-temperature branch not supported)",
            });
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// `n`-th Matsubara frequency `2πn/β`.
    pub fn matsubara_frequency(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 * self.temperature
    }

    /// `βΩ/2π`, the position of the cutoff on the Matsubara ladder.
    pub fn matsubara_ratio(&self) -> f64 {
        self.cutoff / (2.0 * PI * self.temperature)
    }

    /// Index `n` with `ν_n ≈ Ω` when the decomposition is resonant.
    pub fn resonance(&self) -> Option<u64> {
        let a = self.matsubara_ratio();
        let n = a.round();
        (n >= 1.0 && (a - n).abs() < RESONANCE_EPS * n).then_some(n as u64)
    }
}

/// Classical drive `H_f = −F₀ sin(ω_f t) x` acting on the probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub amplitude: f64,
    pub frequency: f64,
}

/// Probe oscillator, its coupling angle, initial state and optional drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub omega0: f64,
    /// coupling angle θ in `S = x cos θ + p sin θ`
    pub theta: f64,
    /// coherent displacement of the initial state
    pub alpha: Complex64,
    /// squeeze parameter r
    pub squeeze: f64,
    pub drive: Option<Drive>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            theta: 0.0,
            alpha: Complex64::new(0.0, 0.0),
            squeeze: 0.0,
            drive: None,
        }
    }
}

impl ProbeSpec {
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_alpha(mut self, alpha: Complex64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_squeeze(mut self, r: f64) -> Self {
        self.squeeze = r;
        self
    }

    pub fn with_drive(mut self, drive: Option<Drive>) -> Self {
        self.drive = drive;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("omega0", self.omega0)?;
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: self.theta,
                reason: "must lie in [0, pi]",
            });
        }
        if !self.squeeze.is_finite() || !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(Error::Domain(
                "initial-state parameters must be finite".into(),
            ));
        }
        if let Some(drive) = self.drive {
            if !(drive.amplitude >= 0.0) || !drive.amplitude.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "drive.amplitude",
                    value: drive.amplitude,
                    reason: "must be finite and non-negative",
                });
            }
            ensure_positive("drive.frequency", drive.frequency)?;
        }
        Ok(())
    }
}

/// First and second moments of a single-mode Gaussian state.
///
/// `sigma[(i, j)] = ⟨{ΔQ_i, ΔQ_j}⟩` with `Q = (x, p)`, so the vacuum has
/// `sigma = I` and pure states have `det sigma = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub d: Vector2<f64>,
    pub sigma: Matrix2<f64>,
}

impl GaussianState {
    pub fn det(&self) -> f64 {
        self.sigma.determinant()
    }

    /// Symmetric, positive definite and `det σ ≥ 1 − tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let s = &self.sigma;
        (s[(0, 1)] - s[(1, 0)]).abs() <= 1e-12 * s.abs().max()
            && s[(0, 0)] > 0.0
            && self.det() >= 1.0 - tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Uniform,
    /// `t = 0` followed by geometric spacing from `t_max/1000` to `t_max`
    Log,
}

/// Sampling of the encoding time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    pub t_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl SimGrid {
    pub fn uniform(t_max: f64, n_points: usize) -> Self {
        Self {
            t_max,
            n_points,
            spacing: Spacing::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("t_max", self.t_max)?;
        if self.n_points < 2 {
            return Err(Error::InvalidParameter {
                name: "n_points",
                value: self.n_points as f64,
                reason: "need at least two samples",
            });
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_points;
        match self.spacing {
            Spacing::Uniform => (0..n)
                .map(|i| self.t_max * i as f64 / (n - 1) as f64)
                .collect(),
            Spacing::Log => {
                let mut out = vec![0.0];
                let lo = self.t_max * 1e-3;
                let m = n - 1;
                for i in 0..m {
                    let frac = if m == 1 {
                        1.0
                    } else {
                        i as f64 / (m - 1) as f64
                    };
                    out.push(lo * (self.t_max / lo).powf(frac));
                }
                out
            }
        }
    }
}

/// Lorentz-Drude spectral density `(2γω/π) Ω²/(ω² + Ω²)`.
pub fn spectral_density(omega: f64, res: &ReservoirSpec) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!(
            "spectral density needs omega >= 0, got {omega}"
        )));
    }
    let w2 = res.cutoff * res.cutoff;
    Ok(2.0 * res.gamma * omega / PI * w2 / (omega * omega + w2))
}

/// Damping kernel `Z(t) = γΩ e^{−Ωt}`.
pub fn damping_kernel(t: f64, res: &ReservoirSpec) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "damping kernel needs t >= 0, got {t}"
        )));
    }
    Ok(res.gamma * res.cutoff * (-res.cutoff * t).exp())
}

/// How to evaluate the bath correlation function pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationBackend {
    /// closed form with two Lerch transcendents
    Lerch,
    /// explicit Matsubara sum; `None` picks the term count adaptively
    Matsubara(Option<usize>),
}

/// Smallest time the Lerch closed form accepts (`C` diverges like `ln t`).
pub const LERCH_T_MIN: f64 = 1e-8;

/// Symmetrized noise correlation `C(t) = ⟨{R(t), R(0)}⟩` for `t > 0`.
pub fn correlation_function(
    t: f64,
    res: &ReservoirSpec,
    backend: CorrelationBackend,
) -> Result<f64> {
    match backend {
        CorrelationBackend::Lerch => correlation_lerch(t, res),
        CorrelationBackend::Matsubara(n) => {
            if !(t >= 0.0) {
                return Err(Error::Domain(format!("correlation needs t >= 0, got {t}")));
            }
            let n = match n {
                Some(n) => n,
                None => adaptive_matsubara_terms(t, res),
            };
            Ok(correlation_matsubara(t, res, n))
        }
    }
}

fn correlation_lerch(t: f64, res: &ReservoirSpec) -> Result<f64> {
    if !(t >= LERCH_T_MIN) {
        return Err(Error::Domain(format!(
            "Lerch form of C(t) requires t >= {LERCH_T_MIN}, got {t}"
        )));
    }
    if let Some(n) = res.resonance() {
        return Err(Error::MatsubaraResonance {
            ratio: res.matsubara_ratio(),
            n,
        });
    }
    let (g, w) = (res.gamma, res.cutoff);
    let beta = res.beta();
    let a = res.matsubara_ratio();
    let q = (-2.0 * PI * t / beta).exp();
    let cot = 1.0 / (0.5 * beta * w).tan();
    let lerch = crate::special::lerch_phi(q, 1.0 - a)? + crate::special::lerch_phi(q, 1.0 + a)?;
    Ok(g * w * w * cot * (-w * t).exp() + g * w * w / PI * q * lerch)
}

/// Term `(ν e^{−νt} − Ω e^{−Ωt})/(ν² − Ω²)` with its `ν → Ω` limit.
fn matsubara_term(nu: f64, omega: f64, t: f64, resonant: bool) -> f64 {
    if resonant {
        let m = 0.5 * (nu + omega);
        (1.0 - m * t) * (-m * t).exp() / (nu + omega)
    } else {
        (nu * (-nu * t).exp() - omega * (-omega * t).exp()) / (nu * nu - omega * omega)
    }
}

fn correlation_matsubara(t: f64, res: &ReservoirSpec, n_terms: usize) -> f64 {
    let (g, w) = (res.gamma, res.cutoff);
    let beta = res.beta();
    let resonant = res.resonance();
    if resonant.is_some() {
        log::warn!(
            "Matsubara resonance at beta*Omega/2pi = {}; using the regularized term",
            res.matsubara_ratio()
        );
    }
    let mut sum = 0.0;
    for n in 1..=n_terms {
        let nu = res.matsubara_frequency(n);
        sum += matsubara_term(nu, w, t, resonant == Some(n as u64));
    }
    2.0 * g * w / beta * (-w * t).exp() + 4.0 * g * w * w / beta * sum
}

/// Upper bound on the magnitude of the Matsubara terms `n > n_terms`.
///
/// Valid once `ν_{N+1} ≥ √2 Ω`; returns `+∞` otherwise or at `t = 0`.
pub fn matsubara_tail_bound(t: f64, res: &ReservoirSpec, n_terms: usize) -> f64 {
    let (g, w) = (res.gamma, res.cutoff);
    let beta = res.beta();
    let kappa = 2.0 * PI * res.temperature;
    let nu_next = res.matsubara_frequency(n_terms + 1);
    if nu_next < std::f64::consts::SQRT_2 * w || t <= 0.0 || n_terms == 0 {
        return f64::INFINITY;
    }
    let decaying = 2.0 / nu_next * (-nu_next * t).exp() / (-(-kappa * t).exp_m1());
    let constant = w * (-w * t).exp() * 2.0 / (kappa * kappa * n_terms as f64);
    4.0 * g * w * w / beta * (decaying + constant)
}

/// Term count for the pointwise Matsubara sum: doubles from 64 until the
/// tail bound is below `1e-8 |C|`, capped at [`MAX_MATSUBARA_TERMS`].
pub fn adaptive_matsubara_terms(t: f64, res: &ReservoirSpec) -> usize {
    let mut n = 64;
    while n < MAX_MATSUBARA_TERMS {
        let value = correlation_matsubara(t, res, n);
        if matsubara_tail_bound(t, res, n) < 1e-8 * value.abs() {
            return n;
        }
        n *= 2;
    }
    MAX_MATSUBARA_TERMS
}

/// Initial state `S(r) D(α) |0⟩` with `a = (x + ip)/√2`.
pub fn init_gaussian_state(probe: &ProbeSpec) -> GaussianState {
    let r = probe.squeeze;
    let s2 = std::f64::consts::SQRT_2;
    GaussianState {
        d: Vector2::new(
            s2 * probe.alpha.re * (-r).exp(),
            s2 * probe.alpha.im * r.exp(),
        ),
        sigma: Matrix2::new((-2.0 * r).exp(), 0.0, 0.0, (2.0 * r).exp()),
    }
}

/// Photon number `n̄ = |α|² + sinh² r` and squeezing ratio `ζ = sinh² r / n̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resources {
    pub n_bar: f64,
    pub zeta: f64,
}

pub fn resource_count(probe: &ProbeSpec) -> Resources {
    let squeezed = probe.squeeze.sinh().powi(2);
    let n_bar = probe.alpha.norm_sqr() + squeezed;
    let zeta = if n_bar > 0.0 { squeezed / n_bar } else { 0.0 };
    Resources { n_bar, zeta }
}

/// Real displacement and squeeze reproducing `(n̄, ζ)`.
pub fn inverse_state_params(n_bar: f64, zeta: f64) -> Result<(f64, f64)> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_bar",
            value: n_bar,
            reason: "must be finite and non-negative",
        });
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidParameter {
            name: "zeta",
            value: zeta,
            reason: "must lie in [0, 1]",
        });
    }
    let alpha = ((1.0 - zeta) * n_bar).sqrt();
    let r = (zeta * n_bar).sqrt().asinh();
    Ok((alpha, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fig2(t: f64) -> ReservoirSpec {
        ReservoirSpec::new(3.0, 10.0, t).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let res = fig2(5.0);
        assert_eq!(spectral_density(0.0, &res).unwrap(), 0.0);
        assert_relative_eq!(
            spectral_density(10.0, &res).unwrap(),
            3.0 * 10.0 / PI,
            max_relative = 1e-15
        );
        // (6/π)·100/101, evaluated at 30 digits
        assert_relative_eq!(
            spectral_density(1.0, &res).unwrap(),
            1.890_949_818_913_607_9,
            max_relative = 1e-14
        );
        assert!(spectral_density(-1.0, &res).is_err());
    }

    #[test]
    fn spectral_density_peaks_at_cutoff() {
        let res = ReservoirSpec::new(1.3, 4.0, 1.0).unwrap();
        let (argmax, _) = (0..=20_000)
            .map(|i| i as f64 * 1e-3)
            .map(|w| (w, spectral_density(w, &res).unwrap()))
            .fold((0.0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((argmax - 4.0).abs() <= 1e-3);
    }

    #[test]
    fn damping_kernel_values() {
        let res = ReservoirSpec::new(1.0, 10.0, 1.0).unwrap();
        assert_eq!(damping_kernel(0.0, &res).unwrap(), 10.0);
        assert_relative_eq!(
            damping_kernel(0.1, &res).unwrap(),
            3.678_794_411_714_423,
            max_relative = 1e-14
        );
        assert!(damping_kernel(100.0, &res).unwrap() < 1e-300);
        assert!(damping_kernel(-0.1, &res).is_err());
    }

    #[test]
    fn matsubara_zero_terms_at_origin() {
        let res = fig2(5.0);
        let c = correlation_function(0.0, &res, CorrelationBackend::Matsubara(Some(0))).unwrap();
        assert_relative_eq!(
            c,
            2.0 * res.gamma * res.cutoff / res.beta(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn lerch_and_matsubara_agree_within_tail_bound() {
        let res = fig2(5.0);
        let n = 10_000;
        let lerch = correlation_function(1.0, &res, CorrelationBackend::Lerch).unwrap();
        let mats = correlation_function(1.0, &res, CorrelationBackend::Matsubara(Some(n))).unwrap();
        let bound = matsubara_tail_bound(1.0, &res, n);
        assert!((lerch - mats).abs() <= bound, "{lerch} {mats} {bound}");
        assert!(bound < 1e-3);
    }

    #[test]
    fn correlation_integrates_to_four_gamma_t() {
        // ∫_{-∞}^{∞} C(|t|) dt = π lim_{ω→0} J(ω) coth(βω/2) = 4γT
        let res = ReservoirSpec::new(1.0, 10.0, 2.0).unwrap();
        let c = |t: f64| correlation_function(t, &res, CorrelationBackend::Lerch).unwrap();
        let mut total = 0.0;
        let mut hi = 40.0;
        // geometric panels towards the logarithmic singularity at t = 0
        while hi > 2e-8 {
            let lo = hi / 2.0;
            total += crate::quadrature::integrate(c, lo, hi, 1e-13, 1e-12, 200)
                .unwrap()
                .value;
            hi = lo;
        }
        assert_relative_eq!(
            2.0 * total,
            4.0 * res.gamma * res.temperature,
            max_relative = 1e-4
        );
    }

    #[test]
    fn lerch_rejects_resonance_and_small_t() {
        // βΩ/2π = 1 exactly
        let res = ReservoirSpec::new(1.0, 2.0 * PI, 1.0).unwrap();
        assert_eq!(res.resonance(), Some(1));
        assert!(matches!(
            correlation_function(1.0, &res, CorrelationBackend::Lerch),
            Err(Error::MatsubaraResonance { n: 1, .. })
        ));
        let ok = ReservoirSpec::new(1.0, 2.0, 1.0).unwrap();
        assert!(correlation_function(0.0, &ok, CorrelationBackend::Lerch).is_err());
    }

    #[test]
    fn resonant_matsubara_is_continuous() {
        let t = 0.7;
        let at = |w: f64| {
            let res = ReservoirSpec::new(1.0, w, 1.0).unwrap();
            correlation_function(t, &res, CorrelationBackend::Matsubara(Some(20_000))).unwrap()
        };
        let centre = at(2.0 * PI);
        let left = at(2.0 * PI * (1.0 - 1e-4));
        let right = at(2.0 * PI * (1.0 + 1e-4));
        assert!((centre - 0.5 * (left + right)).abs() < 1e-6 * centre.abs());
    }

    #[test]
    fn initial_states() {
        let vac = init_gaussian_state(&ProbeSpec::default());
        assert_eq!(vac.d, Vector2::zeros());
        assert_eq!(vac.sigma, Matrix2::identity());

        let sq = init_gaussian_state(&ProbeSpec::default().with_squeeze(1.0));
        assert_relative_eq!(sq.sigma[(0, 0)], (-2.0f64).exp());
        assert_relative_eq!(sq.sigma[(1, 1)], 2.0f64.exp());
        assert_relative_eq!(sq.det(), 1.0, epsilon = 1e-12);

        let coh = init_gaussian_state(&ProbeSpec::default().with_alpha(Complex64::new(1.0, 0.0)));
        assert_relative_eq!(coh.d[0], 2f64.sqrt());
        assert_eq!(coh.d[1], 0.0);
        assert_eq!(coh.sigma, Matrix2::identity());
    }

    #[test]
    fn resources() {
        let r = resource_count(&ProbeSpec::default());
        assert_eq!((r.n_bar, r.zeta), (0.0, 0.0));
        let r = resource_count(&ProbeSpec::default().with_alpha(Complex64::new(1.0, 0.0)));
        assert_eq!((r.n_bar, r.zeta), (1.0, 0.0));
        let r = resource_count(&ProbeSpec::default().with_squeeze(1.0));
        assert_relative_eq!(r.n_bar, 1.381_097_845_541_815_7, max_relative = 1e-14);
        assert_eq!(r.zeta, 1.0);
    }

    #[test]
    fn inverse_params_examples() {
        assert_eq!(inverse_state_params(0.0, 0.3).unwrap(), (0.0, 0.0));
        let (a, r) = inverse_state_params(1.0, 1.0).unwrap();
        assert_eq!(a, 0.0);
        assert_relative_eq!(r, 0.881_373_587_019_543, max_relative = 1e-14);
        let (a, r) = inverse_state_params(4.0, 0.5).unwrap();
        assert_relative_eq!(a, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(r, 1.146_215_834_780_588_8, max_relative = 1e-14);
        assert!(inverse_state_params(1.0, 1.5).is_err());
    }

    #[test]
    fn temperature_floor() {
        assert!(ReservoirSpec::new(1.0, 1.0, 0.0).is_err());
        assert!(ReservoirSpec::new(1.0, 1.0, 0.01).is_ok());
    }

    proptest! {
        #[test]
        fn initial_state_is_pure(re in -3.0..3.0f64, im in -3.0..3.0f64, r in -2.0..2.0f64) {
            let st = init_gaussian_state(&ProbeSpec::default().with_alpha(Complex64::new(re, im)).with_squeeze(r));
            prop_assert!((st.det() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn resource_round_trip(n_bar in 0.0..50.0f64, zeta in 0.0..=1.0f64) {
            let (alpha, r) = inverse_state_params(n_bar, zeta).unwrap();
            let probe = ProbeSpec::default().with_alpha(Complex64::new(alpha, 0.0)).with_squeeze(r);
            let back = resource_count(&probe);
            prop_assert!((back.n_bar - n_bar).abs() < 1e-12 * n_bar.max(1.0));
            if n_bar > 0.0 {
                prop_assert!((back.zeta - zeta).abs() < 1e-12);
            }
        }

        #[test]
        fn spectral_density_nonnegative(w in 0.0..1e3f64, g in 0.01..5.0f64, c in 0.1..50.0f64) {
            let res = ReservoirSpec::new(g, c, 1.0).unwrap();
            prop_assert!(spectral_density(w, &res).unwrap() >= 0.0);
        }
    }
}
