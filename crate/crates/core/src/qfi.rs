//! Quantum Fisher information of the probe about γ or Ω.
//!
//! Parameter derivatives of the moments come from a five-point stencil and
//! feed a closed single-mode Gaussian QFI formula.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::dynamics::{
    markovian_moments, markovian_steady_state, MarkovNoise, MomentSolver, SolverOptions,
};
use crate::error::{Error, Result};
use crate::model::{inverse_state_params, GaussianState, ProbeSpec, ReservoirSpec, SimGrid};
use crate::noise::matsubara_cutoff;

/// Default relative stencil step `δ/λ`.
pub const DEFAULT_DELTA_REL: f64 = 1e-6;

/// Reservoir parameter being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Gamma,
    Omega,
}

impl Target {
    pub fn value(self, res: &ReservoirSpec) -> f64 {
        match self {
            Self::Gamma => res.gamma,
            Self::Omega => res.cutoff,
        }
    }

    pub fn with_value(self, res: &ReservoirSpec, v: f64) -> ReservoirSpec {
        match self {
            Self::Gamma => ReservoirSpec { gamma: v, ..*res },
            Self::Omega => ReservoirSpec { cutoff: v, ..*res },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gamma => "gamma",
            Self::Omega => "Omega",
        }
    }
}

/// Which dynamics the moments come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pipeline {
    Exact(SolverOptions),
    Markovian(MarkovNoise),
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::Exact(SolverOptions::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiSettings {
    pub delta_rel: f64,
    pub pipeline: Pipeline,
}

impl Default for QfiSettings {
    fn default() -> Self {
        Self {
            delta_rel: DEFAULT_DELTA_REL,
            pipeline: Pipeline::default(),
        }
    }
}

/// QFI sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub target: Target,
    pub delta_rel: f64,
}

/// Five-point central difference `(−f(λ+2δ) + 8f(λ+δ) − 8f(λ−δ) + f(λ−2δ))/(12δ)`
/// with `δ = delta_rel·λ`.
pub fn finite_difference<T, F>(f: F, lambda: f64, delta_rel: f64) -> Result<T>
where
    T: Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: Fn(f64) -> Result<T>,
{
    let h = delta_rel * lambda;
    if !(h != 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "finite difference needs a nonzero step, got lambda = {lambda}, delta_rel = {delta_rel}"
        )));
    }
    let (p2, p1, m1, m2) = (
        f(lambda + 2.0 * h)?,
        f(lambda + h)?,
        f(lambda - h)?,
        f(lambda - 2.0 * h)?,
    );
    Ok(((p1 - m1) * 8.0 + m2 - p2) * (1.0 / (12.0 * h)))
}

/// Single-mode Gaussian QFI with vacuum `σ = I`:
///
/// `F = tr[(σ⁻¹∂σ)²] / (2(1+P²)) + (∂det)² / (2 det (det² − 1)) + 2 ∂dᵀ σ⁻¹ ∂d`,
/// with purity `P = det^{-1/2}` and `∂det = tr(adj σ ∂σ)` taken exactly from `∂σ`.
/// This equals `½ vec(∂σ)ᵀ (σ⊗σ − ϖ⊗ϖ)⁺ vec(∂σ)` but needs no eigenvalue cutoff,
/// so strongly squeezed, barely mixed states keep their purity term.
///
/// When `det − 1` is at round-off level the purity term is dropped, and
/// [`Error::IllConditioned`] is raised unless `∂det` is negligible too.
/// Round-off negatives down to `−1e−9` are clipped.
pub fn gaussian_qfi(
    state: &GaussianState,
    d_deriv: &Vector2<f64>,
    sigma_deriv: &Matrix2<f64>,
) -> Result<f64> {
    let sigma = &state.sigma;
    let det = state.det();
    let inv = sigma
        .try_inverse()
        .filter(|_| sigma[(0, 0)] > 0.0 && det > 0.0)
        .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
    let displacement = 2.0 * (d_deriv.transpose() * inv * d_deriv)[(0, 0)];

    let r = inv * sigma_deriv;
    let shape = (r * r).trace() / (2.0 * (1.0 + 1.0 / det));

    let adj = Matrix2::new(sigma[(1, 1)], -sigma[(0, 1)], -sigma[(1, 0)], sigma[(0, 0)]);
    let ddet = (adj * sigma_deriv).trace();
    let scale = sigma.norm_squared();
    let excess = det - 1.0;
    let purity = if excess > 64.0 * f64::EPSILON * scale {
        ddet * ddet / (2.0 * det * excess * (det + 1.0))
    } else {
        let bound = adj.norm() * sigma_deriv.norm();
        if ddet.abs() > 1e-6 * bound {
            return Err(Error::IllConditioned {
                residual: ddet.abs() / bound,
            });
        }
        0.0
    };
    if excess < -64.0 * f64::EPSILON * scale {
        return Err(Error::Unphysical { det });
    }

    let f = shape + purity + displacement;
    if f < 0.0 {
        if f < -1e-9 {
            return Err(Error::Domain(format!("negative QFI {f}")));
        }
        log::debug!("clipping QFI round-off {f} to zero");
        return Ok(0.0);
    }
    Ok(f)
}

/// Quantum Cramér-Rao bound `1/(νF)` on the variance of an unbiased estimator.
pub fn cramer_rao_bound(f: f64, nu: u64) -> Result<f64> {
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::InvalidParameter {
            name: "F",
            value: f,
            reason: "QFI must be positive",
        });
    }
    if nu == 0 {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: 0.0,
            reason: "need at least one repetition",
        });
    }
    Ok(1.0 / (nu as f64 * f))
}

/// Reusable evaluator of `F_λ(t)` for fixed probe, reservoir and target.
#[derive(Debug, Clone)]
pub struct QfiEvaluator {
    pub probe: ProbeSpec,
    pub reservoir: ReservoirSpec,
    pub target: Target,
    pub settings: QfiSettings,
    /// solvers at λ+2δ, λ+δ, λ, λ−δ, λ−2δ (exact pipeline only)
    solvers: Option<Vec<MomentSolver>>,
}

const OFFSETS: [f64; 5] = [2.0, 1.0, 0.0, -1.0, -2.0];

impl QfiEvaluator {
    pub fn new(
        probe: &ProbeSpec,
        res: &ReservoirSpec,
        target: Target,
        settings: QfiSettings,
    ) -> Result<Self> {
        probe.validate()?;
        res.validate()?;
        let lambda = target.value(res);
        let h = settings.delta_rel * lambda;
        if !(h > 0.0) || !(lambda - 2.0 * h > 0.0) {
            return Err(Error::Domain(format!(
                "stencil step {h} leaves the parameter domain around {lambda}"
            )));
        }
        let solvers = match settings.pipeline {
            Pipeline::Exact(opts) => Some(
                OFFSETS
                    .iter()
                    .map(|k| {
                        MomentSolver::new(probe, &target.with_value(res, lambda + k * h), opts)
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Pipeline::Markovian(_) => None,
        };
        Ok(Self {
            probe: *probe,
            reservoir: *res,
            target,
            settings,
            solvers,
        })
    }

    fn step(&self) -> f64 {
        self.settings.delta_rel * self.target.value(&self.reservoir)
    }

    fn stencil<F>(&self, state: F) -> Result<(GaussianState, Vector2<f64>, Matrix2<f64>)>
    where
        F: Fn(usize) -> Result<GaussianState>,
    {
        let s: Vec<GaussianState> = (0..5).map(&state).collect::<Result<_>>()?;
        let h = self.step();
        let dd = ((s[1].d - s[3].d) * 8.0 + s[4].d - s[0].d) / (12.0 * h);
        let ds = ((s[1].sigma - s[3].sigma) * 8.0 + s[4].sigma - s[0].sigma) / (12.0 * h);
        Ok((s[2], dd, ds))
    }

    /// Central state together with `∂d` and `∂σ` at time `t`.
    ///
    /// At `t = 0` the state does not depend on the reservoir, so the
    /// derivatives are zero by construction rather than stencil round-off.
    pub fn derivatives_at(&self, t: f64) -> Result<(GaussianState, Vector2<f64>, Matrix2<f64>)> {
        if t == 0.0 {
            let init = crate::model::init_gaussian_state(&self.probe);
            return Ok((init, Vector2::zeros(), Matrix2::zeros()));
        }
        match (&self.solvers, self.settings.pipeline) {
            (Some(solvers), Pipeline::Exact(opts)) => {
                // one Matsubara cutoff for the whole stencil keeps the difference smooth
                let central = &solvers[2];
                let n = opts.matsubara_terms.unwrap_or_else(|| {
                    matsubara_cutoff(&central.propagators, &central.reservoir, Some(t))
                });
                self.stencil(|k| solvers[k].state_at_with_terms(t, Some(n)))
            }
            (_, Pipeline::Markovian(noise)) => {
                let lambda = self.target.value(&self.reservoir);
                let h = self.step();
                self.stencil(|k| {
                    let res = self
                        .target
                        .with_value(&self.reservoir, lambda + OFFSETS[k] * h);
                    markovian_moments(&self.probe, &res, t, noise)
                })
            }
            _ => unreachable!("exact pipeline always carries solvers"),
        }
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        let (state, dd, ds) = self.derivatives_at(t)?;
        gaussian_qfi(&state, &dd, &ds)
    }

    /// `F_λ(∞)` from the stationary states.
    pub fn stationary(&self) -> Result<f64> {
        let (state, dd, ds) = match (&self.solvers, self.settings.pipeline) {
            (Some(solvers), Pipeline::Exact(opts)) => {
                let central = &solvers[2];
                let n = opts.matsubara_terms.unwrap_or_else(|| {
                    matsubara_cutoff(&central.propagators, &central.reservoir, None)
                });
                self.stencil(|k| solvers[k].steady_state_with_terms(Some(n)))?
            }
            (_, Pipeline::Markovian(noise)) => {
                let lambda = self.target.value(&self.reservoir);
                let h = self.step();
                self.stencil(|k| {
                    let res = self
                        .target
                        .with_value(&self.reservoir, lambda + OFFSETS[k] * h);
                    markovian_steady_state(&self.probe, &res, noise)
                })?
            }
            _ => unreachable!("exact pipeline always carries solvers"),
        };
        gaussian_qfi(&state, &dd, &ds)
    }

    /// `F_λ` on a grid. The Markovian generator does not preserve positivity, so
    /// on that pipeline points whose moments leave the physical set become NaN.
    pub fn curve(&self, grid: &SimGrid) -> Result<QfiCurve> {
        grid.validate()?;
        let times = grid.times();
        let markov = matches!(self.settings.pipeline, Pipeline::Markovian(_));
        let values = times
            .par_iter()
            .map(|&t| match self.at(t) {
                Err(Error::Unphysical { .. } | Error::IllConditioned { .. }) if markov => {
                    Ok(f64::NAN)
                }
                other => other,
            })
            .collect::<Result<Vec<_>>>()?;
        let dropped = values.iter().filter(|v| v.is_nan()).count();
        if dropped > 0 {
            log::warn!(
                "Markovian moments violate the uncertainty relation at {dropped} of {} times; QFI set to NaN there",
                values.len()
            );
        }
        Ok(QfiCurve {
            times,
            values,
            target: self.target,
            delta_rel: self.settings.delta_rel,
        })
    }
}

pub fn qfi_trajectory(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    grid: &SimGrid,
    settings: QfiSettings,
) -> Result<QfiCurve> {
    QfiEvaluator::new(probe, res, target, settings)?.curve(grid)
}

/// Maximum of `F_λ(t)` over the encoding time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMax {
    pub t_star: f64,
    pub f_star: f64,
    /// interior strict local maxima on the grid
    pub local_maxima: usize,
    /// the grid maximum sat at the last sample
    pub on_boundary: bool,
}

/// Grid maximum refined by golden-section search on the bracketing
/// interval, to `1e−6` relative in `t`. Never returns less than
/// the best grid value.
pub fn max_qfi<F>(times: &[f64], values: &[f64], f: F) -> Result<QfiMax>
where
    F: Fn(f64) -> Result<f64>,
{
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::Domain("max_qfi needs a non-empty curve".into()));
    }
    let (k, &best) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Domain("max_qfi: every sample is NaN".into()))?;
    let local_maxima = (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .count();
    let n = times.len();
    let on_boundary = k == n - 1;
    if on_boundary {
        log::warn!(
            "QFI maximum on the horizon t = {}; horizon too short",
            times[k]
        );
    }
    if k == 0 || k == n - 1 {
        return Ok(QfiMax {
            t_star: times[k],
            f_star: best,
            local_maxima,
            on_boundary,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (times[k - 1], times[k + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut best_t = times[k];
    let mut best_f = best;
    for _ in 0..80 {
        if b - a <= 1e-6 * times[k] {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v > best_f {
                best_f = v;
                best_t = t;
            }
        }
    }
    Ok(QfiMax {
        t_star: best_t,
        f_star: best_f,
        local_maxima,
        on_boundary,
    })
}

/// `max_t F_λ(t)` on `grid` with refinement.
pub fn max_qfi_over_time(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    grid: &SimGrid,
    settings: QfiSettings,
) -> Result<QfiMax> {
    let eval = QfiEvaluator::new(probe, res, target, settings)?;
    let curve = eval.curve(grid)?;
    max_qfi(&curve.times, &curve.values, |t| eval.at(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSweep {
    pub thetas: Vec<f64>,
    pub maxima: Vec<QfiMax>,
    pub best_theta: f64,
    pub best: f64,
}

pub fn theta_sweep(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    thetas: &[f64],
    grid: &SimGrid,
    settings: QfiSettings,
) -> Result<ThetaSweep> {
    if thetas.is_empty() {
        return Err(Error::Domain("theta sweep needs at least one angle".into()));
    }
    let maxima = thetas
        .par_iter()
        .map(|&th| max_qfi_over_time(&probe.with_theta(th), res, target, grid, settings))
        .collect::<Result<Vec<_>>>()?;
    let (k, best) = maxima
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.f_star.total_cmp(&b.1.f_star))
        .map(|(k, m)| (k, m.f_star))
        .expect("non-empty");
    Ok(ThetaSweep {
        thetas: thetas.to_vec(),
        maxima,
        best_theta: thetas[k],
        best,
    })
}

/// One row of an SQL scan: `max_t F` against `n̄` at fixed `ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub zeta: f64,
    pub n_bar: Vec<f64>,
    pub maxima: Vec<QfiMax>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line `y = slope·x + intercept` and its `R²`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// `max_t F` over `n̄` for each squeezing ratio, in increasing-`ζ` order.
/// The initial state is the real displacement and squeeze reproducing `(n̄, ζ)`.
pub fn scaling_scan(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    n_bars: &[f64],
    zetas: &[f64],
    grid: &SimGrid,
    settings: QfiSettings,
) -> Result<Vec<ScalingFit>> {
    let mut zetas = zetas.to_vec();
    zetas.sort_by(f64::total_cmp);
    zetas
        .iter()
        .map(|&zeta| {
            let maxima = n_bars
                .par_iter()
                .map(|&n| {
                    let (alpha, r) = inverse_state_params(n, zeta)?;
                    let p = probe.with_alpha(alpha.into()).with_squeeze(r);
                    max_qfi_over_time(&p, res, target, grid, settings)
                })
                .collect::<Result<Vec<_>>>()?;
            let y: Vec<f64> = maxima.iter().map(|m| m.f_star).collect();
            let (slope, intercept, r_squared) = linear_fit(n_bars, &y);
            Ok(ScalingFit {
                zeta,
                n_bar: n_bars.to_vec(),
                maxima,
                slope,
                intercept,
                r_squared,
            })
        })
        .collect()
}

/// `ΔF = max_t F(F₀, ω_f) − max_t F(0, 0)`; exactly zero for a vanishing drive.
pub fn delta_qfi(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    target: Target,
    grid: &SimGrid,
    settings: QfiSettings,
) -> Result<f64> {
    let driven = max_qfi_over_time(probe, res, target, grid, settings)?;
    let bare = max_qfi_over_time(&probe.with_drive(None), res, target, grid, settings)?;
    Ok(driven.f_star - bare.f_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Fidelity between Gaussian states with covariance `σ/2` in the `ħ = 1` convention.
    fn fidelity(a: &GaussianState, b: &GaussianState) -> f64 {
        let (v1, v2) = (a.sigma * 0.5, b.sigma * 0.5);
        let sum = v1 + v2;
        let delta = sum.determinant();
        let lam = 4.0 * (v1.determinant() - 0.25) * (v2.determinant() - 0.25);
        let dd = b.d - a.d;
        let exponent = -0.5 * (dd.transpose() * sum.try_inverse().unwrap() * dd)[(0, 0)];
        exponent.exp() / ((delta + lam).sqrt() - lam.sqrt())
    }

    fn fidelity_qfi(state: &GaussianState, dd: &Vector2<f64>, ds: &Matrix2<f64>) -> f64 {
        let h = 1e-4;
        let plus = GaussianState {
            d: state.d + dd * h,
            sigma: state.sigma + ds * h,
        };
        let minus = GaussianState {
            d: state.d - dd * h,
            sigma: state.sigma - ds * h,
        };
        8.0 * (1.0 - fidelity(&minus, &plus).sqrt()) / (2.0 * h).powi(2)
    }

    #[test]
    fn displacement_only_examples() {
        let vac = GaussianState {
            d: Vector2::zeros(),
            sigma: Matrix2::identity(),
        };
        assert_eq!(
            gaussian_qfi(&vac, &Vector2::zeros(), &Matrix2::zeros()).unwrap(),
            0.0
        );
        assert_relative_eq!(
            gaussian_qfi(&vac, &Vector2::new(1.0, 0.0), &Matrix2::zeros()).unwrap(),
            2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn isotropic_thermal_state() {
        // σ = sI, ∂σ = cI reduces to c²/(s² − 1), i.e. (∂n)²/(n(n+1)) for s = 2n+1
        let (s, c) = (3.0, 0.7);
        let st = GaussianState {
            d: Vector2::zeros(),
            sigma: Matrix2::identity() * s,
        };
        let f = gaussian_qfi(&st, &Vector2::zeros(), &(Matrix2::identity() * c)).unwrap();
        assert_relative_eq!(f, c * c / (s * s - 1.0), max_relative = 1e-12);
        let oracle = fidelity_qfi(&st, &Vector2::zeros(), &(Matrix2::identity() * c));
        assert_relative_eq!(f, oracle, max_relative = 1e-5);
    }

    #[test]
    fn pure_state_tangent_direction_is_accepted() {
        // squeezing a vacuum: ∂σ = diag(−2, 2) lies in the range of M
        let vac = GaussianState {
            d: Vector2::zeros(),
            sigma: Matrix2::identity(),
        };
        let f = gaussian_qfi(&vac, &Vector2::zeros(), &Matrix2::new(-2.0, 0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(f, 2.0, max_relative = 1e-10);
        let err = gaussian_qfi(&vac, &Vector2::zeros(), &Matrix2::identity());
        assert!(matches!(err, Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn finite_difference_examples() {
        let cube = finite_difference(|x: f64| Ok(x * x * x), 1.0, 1e-2).unwrap();
        assert_relative_eq!(cube, 3.0, max_relative = 1e-13);
        let sin = finite_difference(|x: f64| Ok(x.sin()), 1.0, 1e-3).unwrap();
        assert_relative_eq!(sin, 1f64.cos(), max_relative = 1e-11);
        let exp = finite_difference(|x: f64| Ok(x.exp()), 0.5, 1e-3).unwrap();
        assert_relative_eq!(exp, 0.5f64.exp(), max_relative = 1e-10);
        let mat = finite_difference(
            |x: f64| Ok(Matrix2::new(x, x * x, 0.0, x.powi(3))),
            2.0,
            1e-3,
        )
        .unwrap();
        assert!((mat - Matrix2::new(1.0, 4.0, 0.0, 12.0)).abs().max() < 1e-9);
        assert!(finite_difference(|x: f64| Ok(x), 0.0, 1e-6).is_err());
    }

    #[test]
    fn cramer_rao_examples() {
        assert_eq!(cramer_rao_bound(2.0, 1).unwrap(), 0.5);
        assert_eq!(cramer_rao_bound(2.0, 100).unwrap(), 0.005);
        assert!(cramer_rao_bound(0.0, 1).is_err());
    }

    #[test]
    fn golden_section_on_synthetic_curve() {
        let f = |t: f64| Ok(t * (2.0 - t));
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.0937).collect();
        let values: Vec<f64> = times.iter().map(|&t| f(t).unwrap()).collect();
        let m = max_qfi(&times, &values, f).unwrap();
        assert!((m.t_star - 1.0).abs() < 1e-4);
        assert!((m.f_star - 1.0).abs() < 1e-8);
        let grid_best = values.iter().cloned().fold(f64::MIN, f64::max);
        assert!(m.f_star >= grid_best);
        assert_eq!(m.local_maxima, 1);
    }

    #[test]
    fn linear_fit_exact_line() {
        let (s, i, r2) = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert_relative_eq!(s, 2.0);
        assert_relative_eq!(i, 1.0);
        assert_relative_eq!(r2, 1.0);
    }

    #[test]
    fn qfi_vanishes_initially_and_is_positive_later() {
        let probe = ProbeSpec::default().with_squeeze(0.5);
        let res = ReservoirSpec::new(1.0, 10.0, 1.0).unwrap();
        let eval = QfiEvaluator::new(&probe, &res, Target::Gamma, QfiSettings::default()).unwrap();
        assert_eq!(eval.at(0.0).unwrap(), 0.0);
        assert!(eval.at(1.0).unwrap() > 0.0);
    }

    #[test]
    fn markovian_stationary_qfi_vanishes() {
        let res = ReservoirSpec::new(0.5, 10.0, 1.0).unwrap();
        let settings = QfiSettings {
            pipeline: Pipeline::Markovian(MarkovNoise::Quantum),
            ..Default::default()
        };
        let eval = QfiEvaluator::new(&ProbeSpec::default(), &res, Target::Gamma, settings).unwrap();
        assert!(eval.stationary().unwrap() < 1e-12);
    }

    #[test]
    fn drive_with_zero_amplitude_changes_nothing() {
        use crate::model::Drive;
        let res = ReservoirSpec::new(1.0, 10.0, 1.0).unwrap();
        let probe = ProbeSpec::default()
            .with_squeeze(0.3)
            .with_drive(Some(Drive {
                amplitude: 0.0,
                frequency: 2.0,
            }));
        let grid = SimGrid::uniform(5.0, 21);
        assert_eq!(
            delta_qfi(&probe, &res, Target::Omega, &grid, QfiSettings::default()).unwrap(),
            0.0
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_fidelity_oracle(
            a in 0.2..2.0f64, b in -0.5..0.5f64, c in 0.2..2.0f64,
            d0 in -1.0..1.0f64, d1 in -1.0..1.0f64,
            s0 in -1.0..1.0f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64,
        ) {
            // mixed state: σ = LLᵀ scaled so det σ ≥ 1.5
            let l = Matrix2::new(a, 0.0, b, c);
            let mut sigma = l * l.transpose();
            let det = sigma.determinant();
            if det < 1.5 {
                sigma *= (1.5 / det).sqrt();
            }
            let st = GaussianState { d: Vector2::zeros(), sigma };
            let dd = Vector2::new(d0, d1);
            let ds = Matrix2::new(s0, s1, s1, s2);
            let f = gaussian_qfi(&st, &dd, &ds).unwrap();
            let oracle = fidelity_qfi(&st, &dd, &ds);
            prop_assert!(f >= 0.0);
            prop_assert!((f - oracle).abs() < 1e-5 * (1.0 + f), "{} {}", f, oracle);
        }

        #[test]
        fn displacement_path_when_covariance_is_fixed(
            a in 0.5..3.0f64, c in 0.5..3.0f64, d0 in -2.0..2.0f64, d1 in -2.0..2.0f64,
        ) {
            let sigma = Matrix2::new(a, 0.0, 0.0, c.max(1.0 / a));
            let st = GaussianState { d: Vector2::zeros(), sigma };
            let dd = Vector2::new(d0, d1);
            let direct = 2.0 * (dd.transpose() * sigma.try_inverse().unwrap() * dd)[(0, 0)];
            prop_assert!((gaussian_qfi(&st, &dd, &Matrix2::zeros()).unwrap() - direct).abs() < 1e-12 * (1.0 + direct));
        }
    }
}
