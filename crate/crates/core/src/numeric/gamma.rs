//! Complex Gamma function by the Lanczos approximation (g = 671/128, 14 terms)
//! with reflection into the right half-plane.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 671.0 / 128.0;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

fn ln_gamma_right(z: Complex64) -> Complex64 {
    let base = z + LANCZOS_G;
    let head = (z + 0.5) * base.ln() - base;
    let mut ser = Complex64::new(LANCZOS_C0, 0.0);
    let mut y = z;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    head + (ser * SQRT_2PI / z).ln()
}

/// sin(πz), exact zero at real integers.
pub fn sin_pi(z: Complex64) -> Complex64 {
    let (s, c) = sin_cos_pi_real(z.re);
    let y = PI * z.im;
    Complex64::new(s * y.cosh(), c * y.sinh())
}

fn sin_cos_pi_real(x: f64) -> (f64, f64) {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 {
        return (0.0, 1.0);
    }
    if r.abs() == 1.0 {
        return (0.0, -1.0);
    }
    if r.abs() == 0.5 {
        return (r.signum(), 0.0);
    }
    ((PI * r).sin(), (PI * r).cos())
}

/// A branch of log sin(πz) that stays finite for large |Im z|.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 40.0 {
        return sin_pi(z).ln();
    }
    let i = Complex64::i();
    if z.im > 0.0 {
        -i * PI * z + Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0) + (1.0 - (i * 2.0 * PI * z).exp()).ln()
    } else {
        i * PI * z - Complex64::new(2.0, 0.0).ln() - i * (PI / 2.0) + (1.0 - (-i * 2.0 * PI * z).exp()).ln()
    }
}

/// True when z is a pole of Γ (a nonpositive integer).
pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Some branch of log Γ(z); only meaningful through `exp`. Poles give `None`.
pub fn ln_gamma(z: Complex64) -> Option<Complex64> {
    if is_gamma_pole(z) {
        return None;
    }
    if z.re >= 0.5 {
        Some(ln_gamma_right(z))
    } else {
        Some(Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_right(1.0 - z))
    }
}

pub fn gamma(z: Complex64) -> Option<Complex64> {
    ln_gamma(z).map(|l| l.exp())
}

/// 1/Γ(z), entire; exact zero at the poles of Γ.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_gamma_pole(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    }
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).map_or(f64::NAN, |g| g.re)
}

pub fn ln_gamma_real(x: f64) -> f64 {
    assert!(x > 0.0);
    ln_gamma_right(Complex64::new(x, 0.0)).re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_integer_values() {
        assert!((gamma_real(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_real(1.5) - 0.5 * PI.sqrt()).abs() < 1e-14);
        assert!((gamma_real(5.0) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn matches_statrs_on_real_axis() {
        for k in 1..200 {
            let x = 0.05 * k as f64;
            let ours = ln_gamma_real(x);
            let theirs = statrs::function::gamma::ln_gamma(x);
            assert!((ours - theirs).abs() < 1e-13 * (1.0 + theirs.abs()), "x={x}");
        }
    }

    #[test]
    fn recurrence_and_reflection_off_axis() {
        for &(a, b) in &[(0.3, 1.7), (2.5, -3.0), (-1.7, 0.4), (0.0, 8.0), (-4.2, -2.2)] {
            let z = c(a, b);
            let g = gamma(z).unwrap();
            let g1 = gamma(z + 1.0).unwrap();
            assert!((g1 - z * g).norm() < 1e-12 * g1.norm(), "z={z}");
            let refl = g * gamma(1.0 - z).unwrap() * sin_pi(z);
            assert!((refl - PI).norm() < 1e-12 * PI, "z={z}");
        }
    }

    #[test]
    fn modulus_on_imaginary_axis() {
        // |Γ(iy)|² = π / (y sinh πy)
        for &y in &[0.1, 1.0, 3.0, 10.0] {
            let g = gamma(c(0.0, y)).unwrap();
            let exact = PI / (y * (PI * y).sinh());
            assert!((g.norm_sqr() / exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_sine_far_from_axis() {
        for &z in &[c(0.3, 45.0), c(-2.7, -60.0), c(1.1, 100.0)] {
            let direct = (sin_pi(z).ln() - ln_sin_pi(z)).exp();
            assert!((direct - 1.0).norm() < 1e-12, "z={z}");
        }
        let far = gamma(c(0.5, 300.0)).unwrap();
        assert!(far.norm().is_finite());
    }

    #[test]
    fn reciprocal_is_entire() {
        assert_eq!(rgamma(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(rgamma(c(-3.0, 0.0)), c(0.0, 0.0));
        let z = c(-2.999_999, 0.0);
        assert!(rgamma(z).norm() < 1e-4);
        assert!((rgamma(c(4.0, 0.0)).re - 1.0 / 6.0).abs() < 1e-15);
    }
}
