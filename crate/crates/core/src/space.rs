//! Rank-one spaces described by their root multiplicities, products of two of
//! them, and the exponent data δ(p) = |2/p − 1|.
//!
//! Radial quantities are written in the coordinate t = α(log a), with α(H₀) = 1.

use crate::error::{domain, Error, Result};
use num_traits::Float;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u32, u32)", into = "(u32, u32)")]
pub struct RankOneSpace {
    m_alpha: u32,
    m_2alpha: u32,
}

impl TryFrom<(u32, u32)> for RankOneSpace {
    type Error = Error;
    fn try_from(m: (u32, u32)) -> Result<Self> {
        RankOneSpace::new(m.0, m.1)
    }
}

impl From<RankOneSpace> for (u32, u32) {
    fn from(s: RankOneSpace) -> Self {
        (s.m_alpha, s.m_2alpha)
    }
}

fn cast<F: Float>(x: f64) -> F {
    F::from(x).expect("scalar type must represent f64 constants")
}

impl RankOneSpace {
    /// Real hyperbolic plane.
    pub const H2: RankOneSpace = RankOneSpace { m_alpha: 1, m_2alpha: 0 };
    /// Real hyperbolic 3-space.
    pub const H3: RankOneSpace = RankOneSpace { m_alpha: 2, m_2alpha: 0 };
    /// Complex hyperbolic plane.
    pub const CH2: RankOneSpace = RankOneSpace { m_alpha: 2, m_2alpha: 1 };

    pub fn new(m_alpha: u32, m_2alpha: u32) -> Result<Self> {
        if m_alpha < 1 {
            return Err(domain("RankOneSpace::new", "m_alpha must be at least 1"));
        }
        Ok(RankOneSpace { m_alpha, m_2alpha })
    }

    pub fn m_alpha(&self) -> u32 {
        self.m_alpha
    }

    pub fn m_2alpha(&self) -> u32 {
        self.m_2alpha
    }

    /// Dimension n = m_α + m_2α + 1.
    pub fn n(&self) -> u32 {
        self.m_alpha + self.m_2alpha + 1
    }

    /// 2ρ = m_α + 2m_2α, an integer.
    pub fn two_rho(&self) -> u32 {
        self.m_alpha + 2 * self.m_2alpha
    }

    pub fn rho(&self) -> f64 {
        self.two_rho() as f64 / 2.0
    }

    pub fn rho_as<F: Float>(&self) -> F {
        cast::<F>(self.two_rho() as f64) / cast::<F>(2.0)
    }

    /// Jacobi parameters (α, β) with φ_λ = φ_λ^{(α,β)}.
    pub fn jacobi_params(&self) -> (f64, f64) {
        ((self.n() as f64 - 2.0) / 2.0, (self.m_2alpha as f64 - 1.0) / 2.0)
    }

    /// Bessel order n/2 − 1 of the local expansion.
    pub fn bessel_order(&self) -> f64 {
        self.n() as f64 / 2.0 - 1.0
    }

    /// δ(t) = 2^{−2ρ}(e^t − e^{−t})^{m_α}(e^{2t} − e^{−2t})^{m_2α} for t > 0.
    pub fn density_delta<F: Float>(&self, t: F) -> Result<F> {
        if !(t > F::zero()) {
            return Err(domain("density_delta", "t must be positive"));
        }
        Ok(self.density_unchecked(t))
    }

    /// Same formula, defined (and zero) at t = 0; rewritten as
    /// 2^{−m_2α} sinh^{m_α} t · sinh^{m_2α} 2t to avoid cancellation near 0.
    pub fn density_unchecked<F: Float>(&self, t: F) -> F {
        let two = cast::<F>(2.0);
        let s1 = t.sinh().powi(self.m_alpha as i32);
        let s2 = (two * t).sinh().powi(self.m_2alpha as i32);
        s1 * s2 / two.powi(self.m_2alpha as i32)
    }

    /// log δ(t), finite for large t where δ itself would overflow in low precision.
    pub fn log_density<F: Float>(&self, t: F) -> Result<F> {
        if !(t > F::zero()) {
            return Err(domain("log_density", "t must be positive"));
        }
        let two = cast::<F>(2.0);
        let ln2 = two.ln();
        let lsinh = |x: F| -> F {
            if x > cast(20.0) {
                x - ln2 + (-(two * x)).exp().neg().ln_1p()
            } else {
                x.sinh().ln()
            }
        };
        Ok(cast::<F>(self.m_alpha as f64) * lsinh(t) + cast::<F>(self.m_2alpha as f64) * (lsinh(two * t) - ln2))
    }

    /// w(t) = (t^{n−1}/δ(t))^{1/2} for t > 0.
    pub fn weight_w<F: Float>(&self, t: F) -> Result<F> {
        if !(t > F::zero()) {
            return Err(domain("weight_w", "t must be positive"));
        }
        Ok(self.weight_unchecked(t))
    }

    /// w with the removable singularity filled in: w(0) = 1.
    pub fn weight_unchecked<F: Float>(&self, t: F) -> F {
        let two = cast::<F>(2.0);
        let ratio = |x: F| if x.abs() < cast(1e-8) { F::one() } else { x / x.sinh() };
        let r1 = ratio(t).powi(self.m_alpha as i32);
        let r2 = ratio(two * t).powi(self.m_2alpha as i32);
        (r1 * r2).sqrt()
    }

    /// Weight of the Cartan integration formula with c_G = 1; equal to δ(t).
    pub fn cartan_measure_weight<F: Float>(&self, t: F) -> Result<F> {
        self.density_delta(t)
    }

    pub fn preset_name(&self) -> Option<&'static str> {
        match (self.m_alpha, self.m_2alpha) {
            (1, 0) => Some("H2"),
            (2, 0) => Some("H3"),
            (2, 1) => Some("CH2"),
            _ => None,
        }
    }
}

impl fmt::Display for RankOneSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.preset_name() {
            Some(name) => f.write_str(name),
            None => write!(f, "{},{}", self.m_alpha, self.m_2alpha),
        }
    }
}

impl FromStr for RankOneSpace {
    type Err = Error;

    /// Accepts a preset name (`H2`, `H3`, `CH2`) or `m_alpha,m_2alpha`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_uppercase().as_str() {
            "H2" => return Ok(Self::H2),
            "H3" => return Ok(Self::H3),
            "CH2" => return Ok(Self::CH2),
            _ => {}
        }
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("cannot parse space '{s}'")));
        }
        let parse = |x: &str| x.trim().parse::<u32>().map_err(|_| Error::Config(format!("bad multiplicity '{x}'")));
        RankOneSpace::new(parse(parts[0])?, parse(parts[1])?)
    }
}

/// X₁ × X₂.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductSpace {
    pub x1: RankOneSpace,
    pub x2: RankOneSpace,
}

impl ProductSpace {
    pub fn new(x1: RankOneSpace, x2: RankOneSpace) -> Self {
        ProductSpace { x1, x2 }
    }

    pub fn n(&self) -> (u32, u32) {
        (self.x1.n(), self.x2.n())
    }

    pub fn rho(&self) -> (f64, f64) {
        (self.x1.rho(), self.x2.rho())
    }

    pub fn swapped(&self) -> Self {
        ProductSpace { x1: self.x2, x2: self.x1 }
    }
}

impl fmt::Display for ProductSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.x1, self.x2)
    }
}

impl FromStr for ProductSpace {
    type Err = Error;

    /// `H2xH2`, `H3xH2`, `1,0x2,1`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (a, b) = lower
            .split_once('x')
            .ok_or_else(|| Error::Config(format!("product space '{s}' must look like H2xH2")))?;
        Ok(ProductSpace::new(a.parse()?, b.parse()?))
    }
}

/// p ∈ (1, ∞) together with δ(p) = |2/p − 1|.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub p: f64,
    pub delta_p: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(domain("Exponent::new", format!("p = {p} must lie in (1, ∞)")));
        }
        Ok(Exponent { p, delta_p: (2.0 / p - 1.0).abs() })
    }

    pub fn conjugate(&self) -> Self {
        // δ(p) = δ(p′) exactly
        Exponent { p: self.p / (self.p - 1.0), delta_p: self.delta_p }
    }

    pub fn delta<F: Float>(&self) -> F {
        cast(self.delta_p)
    }
}
