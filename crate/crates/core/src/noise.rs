//! Noise contribution to the probe covariance,
//! `I_ab(t) = ∫₀ᵗ∫₀ᵗ G_a(u) G_b(v) C(|u − v|) du dv` for `a, b ∈ {3, 6}`.
//!
//! The primary backend writes both `G_a` and `C` as exponential sums, which
//! turns each double integral into closed form. `C` is split as
//! `(2γΩ/β) e^{−Ωt} + (4γΩ²/β) Σ_n (ν_n e^{−ν_n t} − Ω e^{−Ωt})/(ν_n² − Ω²)`;
//! the first `N` Matsubara terms are kept explicitly and the remainder is
//! summed asymptotically through Hurwitz zeta values.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ReservoirSpec, LERCH_T_MIN, MAX_MATSUBARA_TERMS};
use crate::propagators::PropagatorSet;
use crate::quadrature::integrate;
use crate::special::{hurwitz_zeta, phi1, phi1_divided};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseBackend {
    /// closed-form exponential sums (fast, default)
    #[default]
    ExpSum,
    /// adaptive quadrature against the Lerch form of `C`; slow, for validation
    Quad2d,
}

/// `[I₃₃, I₃₆, I₆₆]`, the noise parts of `σxx`, `σxp` and `σpp`.
pub type NoiseIntegrals = [f64; 3];

/// Orders kept in the asymptotic Matsubara remainder.
const TAIL_ORDER: u32 = 4;

const PAIRS: [(usize, usize); 3] = [(2, 2), (2, 5), (5, 5)];

/// Explicit Matsubara terms needed at time `t` (`None` for `t = ∞`).
///
/// `ν_N` must exceed `40/t` so the dropped terms have relaxed, and
/// `30 max(|z|, Ω, 1)` so their asymptotic expansion is accurate.
pub fn matsubara_cutoff(set: &PropagatorSet, res: &ReservoirSpec, t: Option<f64>) -> usize {
    let kappa = 2.0 * PI * res.temperature;
    let scale = set.max_root_modulus().max(res.cutoff).max(1.0);
    let mut nu = 30.0 * scale;
    if let Some(t) = t {
        if t > 0.0 {
            nu = nu.max(40.0 / t);
        }
    }
    let a = res.matsubara_ratio();
    let n = (nu / kappa).ceil().max((4.0 * a + 10.0).ceil());
    if n > MAX_MATSUBARA_TERMS as f64 {
        log::debug!("Matsubara cutoff {n} capped at {MAX_MATSUBARA_TERMS}");
        MAX_MATSUBARA_TERMS
    } else {
        n as usize
    }
}

/// `∫₀ᵗ∫₀ᵗ e^{pu + qv} e^{−μ|u−v|} du dv`; `t = None` is the `t → ∞` limit.
fn pair_kernel(p: C64, q: C64, mu: f64, t: Option<f64>) -> C64 {
    let s = p + q;
    match t {
        Some(t) => {
            let a = s * t;
            t * t * (phi1_divided(a, (p - mu) * t) + phi1_divided(a, (q - mu) * t))
        }
        None => (1.0 / (p - mu) + 1.0 / (q - mu)) / s,
    }
}

/// `∫₀ᵗ e^{su} du`.
fn exp_integral(s: C64, t: Option<f64>) -> C64 {
    match t {
        Some(t) => phi1(s * t) * t,
        None => -1.0 / s,
    }
}

/// `Σ_{n>N} n^{-extra} / (n² − a²)` via `Σ_k a^{2k} ζ(2k + 2 + extra, N + 1)`.
fn tail_series(a: f64, n: usize, extra: u32) -> f64 {
    let q = n as f64 + 1.0;
    let a2 = a * a;
    let mut sum = 0.0;
    let mut apow = 1.0;
    for k in 0..200u32 {
        let term = apow * hurwitz_zeta(2 * k + 2 + extra, q);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        apow *= a2;
    }
    sum
}

/// `S(p, q) = ∫∫ e^{pu + qv} C(|u − v|)` with `n_terms` explicit Matsubara terms.
fn correlated_pair(p: C64, q: C64, res: &ReservoirSpec, t: Option<f64>, n_terms: usize) -> C64 {
    let (g, w) = (res.gamma, res.cutoff);
    let beta = res.beta();
    let amp = 4.0 * g * w * w / beta;
    let k_cut = pair_kernel(p, q, w, t);
    let weighted = |m: f64| pair_kernel(p, q, m, t) * m;

    let sum = k_cut * (2.0 * g * w / beta);
    let mut ladder = C64::new(0.0, 0.0);
    for n in 1..=n_terms {
        let nu = res.matsubara_frequency(n);
        let h = nu - w;
        if h.abs() > 1e-6 * nu {
            ladder += (weighted(nu) - k_cut * w) / (h * (nu + w));
        } else {
            // (νK(ν) − ΩK(Ω))/(ν² − Ω²) → d/dm[m K(m)] / (2m)
            let m = 0.5 * (nu + w);
            let d = 1e-3 * m;
            let central = |d: f64| (weighted(m + d) - weighted(m - d)) / (2.0 * d);
            let deriv = (central(0.5 * d) * 4.0 - central(d)) / 3.0;
            ladder += deriv / (nu + w);
        }
    }

    // Remainder n > N. Up to terms of order e^{−νt},
    // νK(ν) = 2ν²E/(ν² − q²) − ν/((ν − p)(ν + q)) − ν e^{(p+q)t}/((ν + p)(ν − q)),
    // expanded in powers of 1/ν against the moments Σ 1/((ν² − Ω²) νʲ).
    let kappa = 2.0 * PI * res.temperature;
    let a = res.matsubara_ratio();
    let moment = |j: u32| tail_series(a, n_terms, j) / kappa.powi(2 + j as i32);
    let growth = match t {
        Some(t) => ((p + q) * t).exp(),
        None => C64::new(0.0, 0.0),
    };
    let e = exp_integral(p + q, t);
    let mut tail = -k_cut * (w * moment(0));
    let mut q2k = C64::new(1.0, 0.0);
    for k in 0..TAIL_ORDER {
        tail += e * q2k * (2.0 * moment(2 * k));
        q2k *= q * q;
    }
    for k in 0..2 * TAIL_ORDER {
        let (mut h_plus, mut h_minus) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for j in 0..=k {
            let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            let term = p.powu(j) * q.powu(k - j);
            h_plus += term * sign;
            h_minus += term * if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        tail -= (h_plus + growth * h_minus) * moment(k + 1);
    }
    sum + (ladder + tail) * amp
}

fn expsum_integrals(
    set: &PropagatorSet,
    res: &ReservoirSpec,
    t: Option<f64>,
    n_terms: usize,
) -> NoiseIntegrals {
    let z = set.roots.z;
    let mut s = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            s[i][j] = correlated_pair(z[i], z[j], res, t, n_terms);
            s[j][i] = s[i][j];
        }
    }
    PAIRS.map(|(a, b)| {
        let cb = &set.coeff[b];
        set.coeff[a]
            .iter()
            .zip(&s)
            .map(|(x, row)| x * cb.iter().zip(row).map(|(y, v)| y * v).sum::<C64>())
            .sum::<C64>()
            .re
    })
}

/// Noise integrals at time `t`. `n_terms` overrides the Matsubara cutoff of
/// the exponential-sum backend (ignored by the quadrature backend).
pub fn noise_integrals(
    set: &PropagatorSet,
    res: &ReservoirSpec,
    t: f64,
    backend: NoiseBackend,
    n_terms: Option<usize>,
) -> Result<NoiseIntegrals> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "noise integrals need finite t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok([0.0; 3]);
    }
    let res = &ReservoirSpec {
        cutoff: set.cutoff,
        ..*res
    };
    match backend {
        NoiseBackend::ExpSum => {
            let n = n_terms.unwrap_or_else(|| matsubara_cutoff(set, res, Some(t)));
            Ok(expsum_integrals(set, res, Some(t), n))
        }
        NoiseBackend::Quad2d => quad2d_integrals(set, res, t),
    }
}

/// `t → ∞` limit of the noise integrals.
pub fn stationary_noise_integrals(
    set: &PropagatorSet,
    res: &ReservoirSpec,
    n_terms: Option<usize>,
) -> NoiseIntegrals {
    let res = &ReservoirSpec {
        cutoff: set.cutoff,
        ..*res
    };
    let n = n_terms.unwrap_or_else(|| matsubara_cutoff(set, res, None));
    expsum_integrals(set, res, None, n)
}

/// `I_ab = ∫₀ᵗ C(s) [H_ab(s) + H_ba(s)] ds` with `H_ab(s) = ∫_s^t G_a(u) G_b(u − s) du`.
fn quad2d_integrals(set: &PropagatorSet, res: &ReservoirSpec, t: f64) -> Result<NoiseIntegrals> {
    let g = |a: usize, u: f64| {
        let e = set.exponentials(u);
        (0..3).map(|i| set.coeff[a][i] * e[i]).sum::<C64>().re
    };
    let inner = |a: usize, b: usize, s: f64| -> Result<f64> {
        let f = |u: f64| g(a, u) * g(b, u - s) + g(b, u) * g(a, u - s);
        Ok(integrate(f, s, t, 1e-15, 1e-12, 2000)?.value)
    };
    let corr = |s: f64| {
        crate::model::correlation_function(s, res, crate::model::CorrelationBackend::Lerch)
    };
    let log_slope = 2.0 * res.gamma * res.cutoff * res.cutoff / PI;
    let floor = (t * 2f64.powi(-40)).max(2.0 * LERCH_T_MIN);

    let mut out = [0.0; 3];
    for (slot, &(a, b)) in out.iter_mut().zip(PAIRS.iter()) {
        let mut failure = None;
        let mut outer = |s: f64| match corr(s).and_then(|c| Ok(c * inner(a, b, s)?)) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let mut total = 0.0;
        let mut hi = t;
        while hi > floor {
            let lo = (0.5 * hi).max(floor);
            total += integrate(&mut outer, lo, hi, 1e-15, 1e-11, 500)?.value;
            hi = lo;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        // ∫₀^floor C ≈ floor (C(floor) + 2γΩ²/π) from the logarithmic singularity
        total += floor * (corr(floor)? + log_slope) * inner(a, b, 0.0)?;
        *slot = total;
    }
    Ok(out)
}
