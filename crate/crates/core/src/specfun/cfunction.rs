//! Harish-Chandra c-function of a rank-one space and the Plancherel density.
//!
//! c(λ) = 2^{ρ−iλ} Γ(n/2) Γ(iλ) / (Γ((iλ+ρ)/2) Γ((iλ + m_α/2 + 1)/2)).

use crate::error::{Error, Result};
use crate::numeric::gamma::{is_gamma_pole, ln_gamma, ln_gamma_real};
use crate::space::RankOneSpace;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CSource {
    ClosedForm,
    AsymptoticFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFunctionValue {
    pub lambda: Complex64,
    pub value: Complex64,
    pub source: CSource,
    /// Relative misfit of the asymptotic model at a held-out point (fits only).
    pub fit_residual: Option<f64>,
}

fn denominators(space: &RankOneSpace, lambda: Complex64) -> (Complex64, Complex64) {
    let il = Complex64::i() * lambda;
    ((il + space.rho()) / 2.0, (il + space.m_alpha() as f64 / 2.0 + 1.0) / 2.0)
}

/// Closed-form c(λ). Poles (iλ a nonpositive integer) are reported as `Error::Pole`.
pub fn c_function(space: &RankOneSpace, lambda: Complex64) -> Result<CFunctionValue> {
    let il = Complex64::i() * lambda;
    let lg = ln_gamma(il).ok_or(Error::Pole { what: "c-function", lambda })?;
    let (a, b) = denominators(space, lambda);
    // zeros of c: 1/Γ vanishes at poles of the denominator factors
    if is_gamma_pole(a) || is_gamma_pole(b) {
        return Ok(CFunctionValue { lambda, value: Complex64::new(0.0, 0.0), source: CSource::ClosedForm, fit_residual: None });
    }
    let log = (space.rho() - il) * 2f64.ln() + ln_gamma_real(space.n() as f64 / 2.0) + lg
        - ln_gamma(a).expect("checked")
        - ln_gamma(b).expect("checked");
    Ok(CFunctionValue { lambda, value: log.exp(), source: CSource::ClosedForm, fit_residual: None })
}

/// 1/c(λ); entire except at the poles λ = i(ρ+2k), i(m_α/2+1+2k) of the numerator.
pub fn c_inverse(space: &RankOneSpace, lambda: Complex64) -> Result<Complex64> {
    let il = Complex64::i() * lambda;
    let (a, b) = denominators(space, lambda);
    let la = ln_gamma(a).ok_or(Error::Pole { what: "inverse c-function", lambda })?;
    let lb = ln_gamma(b).ok_or(Error::Pole { what: "inverse c-function", lambda })?;
    let lg = match ln_gamma(il) {
        Some(l) => l,
        None => return Ok(Complex64::new(0.0, 0.0)),
    };
    let log = -(space.rho() - il) * 2f64.ln() - ln_gamma_real(space.n() as f64 / 2.0) + la + lb - lg;
    Ok(log.exp())
}

/// č^{−1}(λ) := c(−λ)^{−1}, holomorphic for Im λ > −ρ.
pub fn c_check_inverse(space: &RankOneSpace, lambda: Complex64) -> Result<Complex64> {
    c_inverse(space, -lambda)
}

/// |c(λ)|^{−2} for real λ.
pub fn plancherel_density(space: &RankOneSpace, lambda: f64) -> f64 {
    c_inverse(space, Complex64::new(lambda, 0.0)).expect("real lambda is never a pole of 1/c").norm_sqr()
}

/// The constant C_ν in ℋ⁻¹m(t) = C_ν ∫_ℝ m(λ) φ_λ(t) |c(λ)|^{−2} dλ for the density δ and c_G = 1.
pub fn plancherel_constant(space: &RankOneSpace) -> f64 {
    2f64.powf(2.0 * space.rho()) / (4.0 * std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn h3_is_one_over_i_lambda() {
        for &l in &[0.3, 1.0, 7.0] {
            let v = c_function(&RankOneSpace::H3, c(l, 0.0)).unwrap().value;
            assert!((v - 1.0 / c(0.0, l)).norm() < 1e-13);
        }
    }

    #[test]
    fn h2_density_is_pi_lambda_tanh() {
        for &l in &[0.1, 1.0, 5.0, 30.0] {
            let d = plancherel_density(&RankOneSpace::H2, l);
            let exact = PI * l * (PI * l).tanh();
            assert!((d / exact - 1.0).abs() < 1e-12, "l={l}");
        }
        assert_eq!(plancherel_density(&RankOneSpace::H2, 0.0), 0.0);
    }

    #[test]
    fn value_one_at_minus_i_rho() {
        for s in [RankOneSpace::H2, RankOneSpace::H3, RankOneSpace::CH2] {
            let v = c_function(&s, c(0.0, -s.rho())).unwrap().value;
            assert!((v - 1.0).norm() < 1e-13, "{s}");
        }
    }

    #[test]
    fn pole_at_origin_is_reported() {
        assert!(matches!(c_function(&RankOneSpace::H2, c(0.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn modulus_is_even_on_real_axis() {
        for s in [RankOneSpace::H2, RankOneSpace::CH2] {
            for &l in &[0.5, 2.0, 9.0] {
                let a = c_function(&s, c(l, 0.0)).unwrap().value.norm();
                let b = c_function(&s, c(-l, 0.0)).unwrap().value.norm();
                assert!((a - b).abs() < 1e-14 * a);
            }
        }
    }

    #[test]
    fn h3_density_scaling() {
        let r = plancherel_density(&RankOneSpace::H3, 10.0) / plancherel_density(&RankOneSpace::H3, 5.0);
        assert!((r - 4.0).abs() < 0.2);
    }

    #[test]
    fn inverse_is_reciprocal() {
        for s in [RankOneSpace::H2, RankOneSpace::CH2, RankOneSpace::new(3, 2).unwrap()] {
            for &z in &[c(1.3, 0.2), c(-4.0, 0.0), c(0.7, -0.3)] {
                let a = c_function(&s, z).unwrap().value * c_inverse(&s, z).unwrap();
                assert!((a - 1.0).norm() < 1e-12);
            }
        }
    }
}
