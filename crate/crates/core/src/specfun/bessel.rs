//! Normalized Bessel kernel 𝒥_μ(z) = C_μ z^{−μ} J_μ(z), C_μ = 2^μ Γ(μ+1), so 𝒥_μ(0) = 1.

use crate::numeric::gamma::ln_gamma_real;
use crate::numeric::quad::ComplexSum;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Below this modulus the power series is used, above it the Hankel expansion.
pub const SERIES_RADIUS: f64 = 12.0;

fn series(mu: f64, z: Complex64) -> Complex64 {
    let q = -z * z / 4.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = ComplexSum::default();
    sum.add(term);
    for k in 1..400 {
        let k = k as f64;
        term = term * q / (k * (mu + k));
        sum.add(term);
        if term.norm() < 1e-18 * sum.value().norm().max(1e-300) && k > z.norm() {
            break;
        }
    }
    sum.value()
}

/// e^{−|Im z|}·𝒥_μ(z) from the Hankel asymptotic expansion (Re z ≥ 0, |z| large).
fn hankel_scaled(mu: f64, z: Complex64) -> Complex64 {
    let four_mu2 = 4.0 * mu * mu;
    let mut p = ComplexSum::default();
    let mut q = ComplexSum::default();
    let mut a = Complex64::new(1.0, 0.0);
    p.add(a);
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a = a * (four_mu2 - odd * odd) / (kf * 8.0) / z;
        let mag = a.norm();
        if mag > prev && kf > mu {
            break;
        }
        // a_k/z^k enters P (k even) or Q (k odd) with sign (−1)^{⌊k/2⌋}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p.add(a * sign);
        } else {
            q.add(a * sign);
        }
        prev = mag;
        if mag < 1e-17 {
            break;
        }
    }
    let omega = z - (mu / 2.0 + 0.25) * PI;
    let i = Complex64::i();
    let s = z.im.abs();
    let e_plus = (i * omega - s).exp();
    let e_minus = (-i * omega - s).exp();
    let cos_w = (e_plus + e_minus) / 2.0;
    let sin_w = (e_plus - e_minus) / (2.0 * i);
    let j = (2.0 / (PI * z)).sqrt() * (p.value() * cos_w - q.value() * sin_w);
    let log_c = mu * 2f64.ln() + ln_gamma_real(mu + 1.0);
    j * log_c.exp() * z.powf(-mu)
}

/// e^{−|Im z|}·𝒥_μ(z); finite for all z.
pub fn bessel_cj_scaled(mu: f64, z: Complex64) -> Complex64 {
    assert!(mu >= -0.5, "order must be at least -1/2");
    let z = if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) { -z } else { z };
    if z.norm() <= SERIES_RADIUS {
        series(mu, z) * (-z.im.abs()).exp()
    } else {
        hankel_scaled(mu, z)
    }
}

/// 𝒥_μ(z), even and entire in z.
pub fn bessel_cj(mu: f64, z: Complex64) -> Complex64 {
    assert!(mu >= -0.5, "order must be at least -1/2");
    let z = if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) { -z } else { z };
    if z.norm() <= SERIES_RADIUS {
        series(mu, z)
    } else {
        hankel_scaled(mu, z) * z.im.abs().exp()
    }
}

pub fn bessel_cj_real(mu: f64, x: f64) -> f64 {
    bessel_cj(mu, Complex64::new(x, 0.0)).re
}

/// Series value regardless of |z|; exposed for the switchover check.
pub fn bessel_cj_series(mu: f64, z: Complex64) -> Complex64 {
    series(mu, z)
}

/// Hankel-expansion value regardless of |z| (Re z ≥ 0).
pub fn bessel_cj_asymptotic(mu: f64, z: Complex64) -> Complex64 {
    hankel_scaled(mu, z) * z.im.abs().exp()
}
