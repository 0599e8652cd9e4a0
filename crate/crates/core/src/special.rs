//! Special functions: the Lerch transcendent at unit order, the exponential
//! integral, Hurwitz zeta at integer arguments, and the `phi`-function
//! moments used by the closed-form exponential double integrals.

use num_complex::Complex64;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// B_2, B_4, ..., B_14 divided by (2j)!.
const BERNOULLI_OVER_FACTORIAL: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
];

/// Exponential integral `E1(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
pub fn expint_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Hurwitz zeta `ζ(s, q) = Σ_{n≥0} (n+q)^{-s}` for integer `s ≥ 2` and `q > 0`.
pub fn hurwitz_zeta(s: u32, q: f64) -> f64 {
    assert!(s >= 2, "hurwitz_zeta requires s >= 2");
    let sf = s as f64;
    let mut head = 0.0;
    let mut q = q;
    while q < 16.0 {
        head += q.powf(-sf);
        q += 1.0;
    }
    let mut tail = q.powf(1.0 - sf) / (sf - 1.0) + 0.5 * q.powf(-sf);
    // rising factorial s (s+1) ... (s+2j-2)
    let mut rising = sf;
    let mut qpow = q.powf(-sf - 1.0);
    for (j, b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let k = 2.0 * j as f64;
            rising *= (sf + k - 1.0) * (sf + k);
            qpow /= q * q;
        }
        tail += b * rising * qpow;
    }
    head + tail
}

/// Lerch transcendent `Φ(z, 1, a) = Σ_{n≥0} zⁿ/(n+a)` for `0 ≤ z < 1`.
///
/// Small `z` is summed directly. For `z > 1/2` the series converges too
/// slowly, so the terms beyond `M` are replaced by their Euler-Maclaurin
/// expansion: the integral `e^{wa} E1(w(M+a))` with `w = -ln z`, the
/// half-endpoint term and six Bernoulli corrections. Relative accuracy is
/// ~1e-13 across the whole range.
pub fn lerch_phi(z: f64, a: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "lerch_phi requires 0 <= z < 1, got {z}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::Domain(format!(
            "lerch_phi requires finite a, got {a}"
        )));
    }
    if a <= 0.0 && a == a.round() {
        return Err(Error::LerchPole(a));
    }
    if z == 0.0 {
        return Ok(1.0 / a);
    }
    if z <= 0.5 {
        let mut sum = 0.0;
        let mut zn = 1.0;
        let mut n = 0.0;
        loop {
            let term = zn / (n + a);
            sum += term;
            if zn < 1e-17 * sum.abs().max(1e-300) && n + a > 0.0 {
                break;
            }
            zn *= z;
            n += 1.0;
        }
        return Ok(sum);
    }

    let w = -z.ln();
    let m = (30.0_f64).max((-a).ceil() + 30.0);
    let mut head = 0.0;
    let mut zn = 1.0;
    let mut n = 0.0;
    while n < m {
        head += zn / (n + a);
        zn *= z;
        n += 1.0;
    }
    let x0 = m + a;
    let zm = zn;
    let integral = (w * a).exp() * expint_e1(w * x0);

    // f(x) = e^{-w x} / (x + a); derivatives at x = m via Leibniz.
    let derivative = |k: usize| -> f64 {
        let mut acc = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for j in 0..=k {
            if j > 0 {
                binom *= (k - j + 1) as f64 / j as f64;
                fact *= j as f64;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += binom * (-w).powi((k - j) as i32) * sign * fact / x0.powi(j as i32 + 1);
        }
        acc * zm
    };
    let mut corr = 0.0;
    for (j, b) in BERNOULLI_OVER_FACTORIAL.iter().enumerate().take(6) {
        corr -= b * derivative(2 * j + 1);
    }
    Ok(head + integral + 0.5 * zm / x0 + corr)
}

/// `m_k(w) = ∫_0^1 s^k e^{s w} ds` for `k = 0..=K`, complex `w`.
pub(crate) fn phi_moments<const K: usize>(w: Complex64) -> [Complex64; K] {
    let mut out = [Complex64::new(0.0, 0.0); K];
    if w.norm() < 1.0 {
        for (k, slot) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(1.0 / (k as f64 + 1.0), 0.0);
            for j in 1..40 {
                term *= w / j as f64;
                let add = term / (j as f64 + k as f64 + 1.0);
                sum += add;
                if add.norm() < 1e-18 {
                    break;
                }
            }
            *slot = sum;
        }
    } else {
        let ew = w.exp();
        let mut prev = (ew - 1.0) / w;
        out[0] = prev;
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            prev = (ew - prev * k as f64) / w;
            *slot = prev;
        }
    }
    out
}

/// `φ1(w) = (e^w - 1)/w`, analytic at 0.
pub(crate) fn phi1(w: Complex64) -> Complex64 {
    phi_moments::<1>(w)[0]
}

/// Divided difference `(φ1(w1) - φ1(w2)) / (w1 - w2)`, stable for close arguments.
pub(crate) fn phi1_divided(w1: Complex64, w2: Complex64) -> Complex64 {
    let dw = w1 - w2;
    let scale = 1f64.max(w1.norm()).max(w2.norm());
    if dw.norm() > 1e-3 * scale {
        (phi1(w1) - phi1(w2)) / dw
    } else {
        let mid = (w1 + w2) * 0.5;
        let h = dw * 0.5;
        let m = phi_moments::<6>(mid);
        let h2 = h * h;
        m[1] + m[3] * h2 / 6.0 + m[5] * h2 * h2 / 120.0
    }
}
