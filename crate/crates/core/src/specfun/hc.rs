//! Coefficients Γ_ℓ of the Harish-Chandra series and the asymptotic-fit
//! extraction of c(λ) from the radial ODE.
//!
//! Substituting e^{(iλ−ρ)t} Σ Γ_ℓ e^{−2ℓt} into u″ + (m_α coth t + 2m_2α coth 2t)u′ + (λ²+ρ²)u = 0,
//! with m_α coth t + 2m_2α coth 2t = 2ρ + Σ_{j≥1} d_j e^{−2jt}, d_j = 2m_α + 4m_2α·[j even],
//! gives 4ℓ(ℓ − iλ)Γ_ℓ = −Σ_{j=1}^{ℓ} d_j (iλ − ρ − 2(ℓ−j)) Γ_{ℓ−j}.

use super::cfunction::{CFunctionValue, CSource};
use crate::error::{domain, Error, Result};
use crate::space::RankOneSpace;
use crate::sphfn::{radial_solution, OracleOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCoefficients {
    pub lambda: Complex64,
    pub values: Vec<Complex64>,
    pub space: RankOneSpace,
}

fn d_coefficient(space: &RankOneSpace, j: usize) -> f64 {
    2.0 * space.m_alpha() as f64 + if j % 2 == 0 { 4.0 * space.m_2alpha() as f64 } else { 0.0 }
}

/// Γ_0..Γ_L at λ.
pub fn gamma_ell(space: &RankOneSpace, lambda: Complex64, big_l: usize) -> Result<GammaCoefficients> {
    let il = Complex64::i() * lambda;
    let rho = space.rho();
    let mut g = Vec::with_capacity(big_l + 1);
    g.push(Complex64::new(1.0, 0.0));
    for ell in 1..=big_l {
        let lead = (ell as f64 - il) * (4.0 * ell as f64);
        if lead.norm() < 1e-12 * ell as f64 {
            return Err(Error::Resonance { ell });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=ell {
            acc += (il - rho - 2.0 * (ell - j) as f64) * g[ell - j] * d_coefficient(space, j);
        }
        g.push(-acc / lead);
    }
    Ok(GammaCoefficients { lambda, values: g, space: *space })
}

impl GammaCoefficients {
    /// ω_L(λ,t) = Σ_{ℓ=1}^{L} Γ_ℓ e^{−2(ℓ−1)t} (L capped by the stored length).
    pub fn omega(&self, t: f64, big_l: usize) -> Complex64 {
        let q = (-2.0 * t).exp();
        let top = big_l.min(self.values.len() - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        // Horner in q
        for ell in (1..=top).rev() {
            acc = acc * q + self.values[ell];
        }
        acc
    }
}

/// ω_L(λ,t) for t ≥ 1/2.
pub fn omega_partial(space: &RankOneSpace, lambda: Complex64, t: f64, big_l: usize) -> Result<Complex64> {
    if t < 0.5 {
        return Err(domain("omega_partial", "series is evaluated only for t >= 1/2"));
    }
    if big_l == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(gamma_ell(space, lambda, big_l)?.omega(t, big_l))
}

/// Extract c(λ) for real λ > 0 from the ODE solution at large t:
/// e^{ρt}φ_λ(t) ≈ c(λ)e^{iλt} + c(−λ)e^{−iλt}, solved at two points a quarter period apart.
pub fn hc_fit(space: &RankOneSpace, lambda: f64) -> Result<CFunctionValue> {
    if !(lambda > 0.0) {
        return Err(domain("hc_fit", "lambda must be real and positive"));
    }
    let t1 = 15.0;
    let quarter = std::f64::consts::FRAC_PI_2 / lambda;
    let t2 = t1 + quarter;
    let t3 = t1 + 0.5 * quarter;
    let lam = Complex64::new(lambda, 0.0);
    let opts = OracleOptions { rtol: 1e-13, atol: 1e-15, ..OracleOptions::default() };
    let mut ts = [t1, t3, t2];
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sol = radial_solution(space, lam, &ts, opts)?;
    let rho = space.rho();
    let v: Vec<Complex64> = ts.iter().zip(&sol).map(|(t, s)| s.0 * (rho * t).exp()).collect();
    let (v1, v3, v2) = (v[0], v[1], v[2]);
    let e = |t: f64| Complex64::new(0.0, lambda * t).exp();
    // [e(t1) 1/e(t1); e(t2) 1/e(t2)] (c+, c−)ᵀ = (v1, v2)ᵀ
    let (a11, a12, a21, a22) = (e(t1), 1.0 / e(t1), e(t2), 1.0 / e(t2));
    let det = a11 * a22 - a12 * a21;
    let c_plus = (v1 * a22 - a12 * v2) / det;
    let c_minus = (a11 * v2 - a21 * v1) / det;
    let model = c_plus * e(t3) + c_minus / e(t3);
    let residual = (model - v3).norm() / v3.norm().max(c_plus.norm());
    Ok(CFunctionValue { lambda: lam, value: c_plus, source: CSource::AsymptoticFit, fit_residual: Some(residual) })
}
