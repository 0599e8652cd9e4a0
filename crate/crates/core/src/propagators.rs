//! Green's functions of the probe quadratures.
//!
//! With `W(z) = z Z̃(z)`, `Z̃(z) = γΩ/(z + Ω)` the Laplace images are
//! rational functions over `ζ(z) = z² + ω₀² + W(z)(cos²θ + ω₀² sin²θ)`.
//! Multiplying through by `z + Ω` gives the cubic
//! `z³ + Ωz² + [ω₀² + γΩ(cos²θ + ω₀² sin²θ)] z + ω₀²Ω` whose three simple roots
//! yield every propagator as a three-term exponential sum.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ProbeSpec, ReservoirSpec};

type C64 = Complex64;

/// Which numerator polynomial to use for `G₆`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum G6Form {
    /// `−(z+Ω)(ω₀² sinθ + z cosθ)`, consistent with the equations of motion
    #[default]
    Consistent,
    /// `−(z+Ω)(ω₀ sinθ + z cosθ)`, kept for comparison
    Literal,
}

/// Roots of the characteristic cubic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoots {
    pub z: [C64; 3],
    pub degenerate: bool,
}

/// Monic coefficients `[1, c2, c1, c0]` of the characteristic cubic.
pub fn characteristic_coefficients(probe: &ProbeSpec, res: &ReservoirSpec) -> [f64; 4] {
    let (s, c) = probe.theta.sin_cos();
    let w0sq = probe.omega0 * probe.omega0;
    let (g, om) = (res.gamma, res.cutoff);
    [1.0, om, w0sq + g * om * (c * c + w0sq * s * s), w0sq * om]
}

fn cubic_eval(coef: &[f64; 4], z: C64) -> (C64, C64) {
    let p = ((z + coef[1]) * z + coef[2]) * z + coef[3];
    let dp = (z * 3.0 + coef[1] * 2.0) * z + coef[2];
    (p, dp)
}

fn min_separation(z: &[C64; 3]) -> f64 {
    (z[0] - z[1])
        .norm()
        .min((z[0] - z[2]).norm())
        .min((z[1] - z[2]).norm())
}

/// Roots via companion-matrix eigenvalues, polished by two Newton steps.
pub fn characteristic_roots(probe: &ProbeSpec, res: &ReservoirSpec) -> Result<CubicRoots> {
    probe.validate()?;
    res.validate()?;
    Ok(roots_of(&characteristic_coefficients(probe, res)))
}

fn roots_of(coef: &[f64; 4]) -> CubicRoots {
    let companion = Matrix3::new(
        -coef[1], -coef[2], -coef[3], //
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0,
    );
    let eig = companion.complex_eigenvalues();
    let mut z = [eig[0], eig[1], eig[2]];
    for root in z.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = cubic_eval(coef, *root);
            if dp.norm() > 0.0 {
                *root -= p / dp;
            }
        }
    }
    let scale = z.iter().map(|r| r.norm()).fold(1.0, f64::max);
    // Order: real roots (ascending), then the conjugate pair with Im > 0 first.
    z.sort_by(|a, b| {
        let ra = a.im.abs() < 1e-12 * scale;
        let rb = b.im.abs() < 1e-12 * scale;
        rb.cmp(&ra)
            .then(a.re.total_cmp(&b.re))
            .then(b.im.total_cmp(&a.im))
    });
    let n_real = z.iter().filter(|r| r.im.abs() < 1e-12 * scale).count();
    if n_real == 3 {
        for r in z.iter_mut() {
            r.im = 0.0;
        }
    } else {
        z[0].im = 0.0;
        let pair = C64::new(
            0.5 * (z[1].re + z[2].re),
            0.5 * (z[1].im.abs() + z[2].im.abs()),
        );
        z[1] = pair;
        z[2] = pair.conj();
    }
    let degenerate = min_separation(&z) < 1e-6 * scale;
    CubicRoots { z, degenerate }
}

/// Residue representation `G_α(t) = Σ_i coeff[α][i] e^{z_i t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSet {
    pub roots: CubicRoots,
    pub coeff: [[C64; 3]; 6],
    pub theta: f64,
    /// cutoff actually used (differs from the input by 1e-9 relative when
    /// the roots had to be separated)
    pub cutoff: f64,
}

fn numerators(probe: &ProbeSpec, gamma: f64, om: f64, form: G6Form, z: C64) -> [C64; 6] {
    let (s, c) = probe.theta.sin_cos();
    let w0sq = probe.omega0 * probe.omega0;
    let zo = z + om;
    let go = gamma * om;
    let g6_freq = match form {
        G6Form::Consistent => w0sq,
        G6Form::Literal => probe.omega0,
    };
    [
        z * zo + z * go * c * s,
        zo + z * go * s * s,
        zo * (z * s - c),
        -zo * w0sq - z * go * c * c,
        z * zo - z * go * c * s,
        -zo * (z * c + g6_freq * s),
    ]
}

pub fn build_propagators(
    probe: &ProbeSpec,
    res: &ReservoirSpec,
    form: G6Form,
) -> Result<PropagatorSet> {
    probe.validate()?;
    res.validate()?;
    let mut cutoff = res.cutoff;
    let mut coef = characteristic_coefficients(probe, res);
    let mut roots = roots_of(&coef);
    if roots.degenerate {
        log::warn!("near-degenerate characteristic roots; perturbing the cutoff by 1e-9 relative");
        cutoff *= 1.0 + 1e-9;
        let shifted = ReservoirSpec { cutoff, ..*res };
        coef = characteristic_coefficients(probe, &shifted);
        roots = roots_of(&coef);
    }
    if let Some(bad) = roots.z.iter().find(|r| r.re >= 0.0) {
        return Err(Error::Unstable {
            re: bad.re,
            im: bad.im,
        });
    }
    let z = roots.z;
    let mut coeff = [[C64::new(0.0, 0.0); 3]; 6];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let denom = (z[i] - z[j]) * (z[i] - z[k]);
        let num = numerators(probe, res.gamma, cutoff, form, z[i]);
        for (alpha, n) in num.iter().enumerate() {
            coeff[alpha][i] = n / denom;
        }
    }
    Ok(PropagatorSet {
        roots,
        coeff,
        theta: probe.theta,
        cutoff,
    })
}

impl PropagatorSet {
    /// `(G₁, …, G₆)(t)`.
    pub fn eval(&self, t: f64) -> [f64; 6] {
        let e = self.exponentials(t);
        let mut out = [0.0; 6];
        for (alpha, slot) in out.iter_mut().enumerate() {
            let sum: C64 = (0..3).map(|i| self.coeff[alpha][i] * e[i]).sum();
            debug_assert!(sum.im.abs() <= 1e-8 * (1.0 + self.magnitude(alpha, &e)));
            *slot = sum.re;
        }
        out
    }

    /// Largest imaginary part left over after summing the residues at `t`.
    pub fn imag_residual(&self, t: f64) -> f64 {
        let e = self.exponentials(t);
        (0..6)
            .map(|alpha| {
                (0..3)
                    .map(|i| self.coeff[alpha][i] * e[i])
                    .sum::<C64>()
                    .im
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    fn magnitude(&self, alpha: usize, e: &[C64; 3]) -> f64 {
        (0..3).map(|i| (self.coeff[alpha][i] * e[i]).norm()).sum()
    }

    pub fn exponentials(&self, t: f64) -> [C64; 3] {
        let z = self.roots.z;
        [(z[0] * t).exp(), (z[1] * t).exp(), (z[2] * t).exp()]
    }

    /// Slowest decay rate `−max Re z_i`.
    pub fn slowest_rate(&self) -> f64 {
        -self
            .roots
            .z
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_root_modulus(&self) -> f64 {
        self.roots.z.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Damped-oscillator approximants at `θ = 0`: friction rate `γ`,
/// `κ = γ/2`, `Λ² = ω₀² − κ²`.
///
/// Written through the entire functions `cos(Λt)` and `sin(Λt)/Λ` of `Λ²`,
/// so the overdamped (`Λ² < 0`) and critical cases are continuous
/// continuations of the underdamped formulas.
pub fn markovian_propagators(probe: &ProbeSpec, res: &ReservoirSpec, t: f64) -> Result<[f64; 6]> {
    if probe.theta != 0.0 {
        return Err(Error::Unsupported(
            "Markovian propagators are only available at theta = 0".into(),
        ));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("propagators need t >= 0, got {t}")));
    }
    let kappa = 0.5 * res.gamma;
    let w0sq = probe.omega0 * probe.omega0;
    let (u, v) = damped_basis(kappa, w0sq - kappa * kappa, t);
    let g1 = u + kappa * v;
    let g5 = u - kappa * v;
    Ok([g1, v, -v, -w0sq * v, g5, -g5])
}

/// `(e^{−κt} cos Λt, e^{−κt} sin(Λt)/Λ)` for any sign of `Λ²`.
pub(crate) fn damped_basis(kappa: f64, lambda_sq: f64, t: f64) -> (f64, f64) {
    let decay = (-kappa * t).exp();
    let x = lambda_sq * t * t;
    let (c, s) = if x.abs() < 1e-4 {
        // series in Λ²t²
        (
            1.0 - x / 2.0 + x * x / 24.0,
            t * (1.0 - x / 6.0 + x * x / 120.0),
        )
    } else if lambda_sq > 0.0 {
        let l = lambda_sq.sqrt();
        ((l * t).cos(), (l * t).sin() / l)
    } else {
        let l = (-lambda_sq).sqrt();
        ((l * t).cosh(), (l * t).sinh() / l)
    };
    (decay * c, decay * s)
}
