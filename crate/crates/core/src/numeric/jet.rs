//! Truncated bivariate Taylor series ("jets") over ℂ, for exact derivatives of
//! multipliers built from polynomials, exp, log and complex powers.

use crate::numeric::diff::factorial;
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients a_{i,j} of Σ a_{i,j} h1^i h2^j, truncated at i ≤ n1, j ≤ n2.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    n1: usize,
    n2: usize,
    c: Vec<Complex64>,
}

impl Jet2 {
    pub fn constant(c: Complex64, order: (usize, usize)) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); (order.0 + 1) * (order.1 + 1)];
        v[0] = c;
        Jet2 { n1: order.0, n2: order.1, c: v }
    }

    /// The first variable λ1 expanded at `at`.
    pub fn var1(at: Complex64, order: (usize, usize)) -> Self {
        let mut j = Self::constant(at, order);
        if order.0 >= 1 {
            j.c[order.1 + 1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// The second variable λ2 expanded at `at`.
    pub fn var2(at: Complex64, order: (usize, usize)) -> Self {
        let mut j = Self::constant(at, order);
        if order.1 >= 1 {
            j.c[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn order(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Taylor coefficient a_{i,j} = ∂^{(i,j)} / (i! j!).
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.c[i * (self.n2 + 1) + j]
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    fn like(&self, c: Complex64) -> Self {
        Self::constant(c, (self.n1, self.n2))
    }

    fn total_order(&self) -> usize {
        self.n1 + self.n2
    }

    fn scale(&self, s: Complex64) -> Self {
        Jet2 { n1: self.n1, n2: self.n2, c: self.c.iter().map(|x| x * s).collect() }
    }

    fn without_constant(&self) -> Self {
        let mut g = self.clone();
        g.c[0] = Complex64::new(0.0, 0.0);
        g
    }

    pub fn exp(&self) -> Self {
        let g = self.without_constant();
        // g is nilpotent of degree n1+n2+1
        let mut term = self.like(Complex64::new(1.0, 0.0));
        let mut sum = term.clone();
        for k in 1..=self.total_order() {
            term = (&term * &g).scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = &sum + &term;
        }
        sum.scale(self.c[0].exp())
    }

    /// Principal logarithm; the constant term must be nonzero.
    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let g = self.without_constant().scale(1.0 / a0);
        let mut power = g.clone();
        let mut sum = self.like(a0.ln());
        for k in 1..=self.total_order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sum = &sum + &power.scale(Complex64::new(sign / k as f64, 0.0));
            power = &power * &g;
        }
        sum
    }

    /// Jet from Taylor coefficients given by `coeff(i, j)`.
    pub fn from_taylor<F: Fn(usize, usize) -> Complex64>(order: (usize, usize), coeff: F) -> Self {
        let mut c = Vec::with_capacity((order.0 + 1) * (order.1 + 1));
        for i in 0..=order.0 {
            for j in 0..=order.1 {
                c.push(coeff(i, j));
            }
        }
        Jet2 { n1: order.0, n2: order.1, c }
    }

    /// A function of one variable (`var` = 1 or 2) from its Taylor coefficients.
    pub fn univariate(coeffs: &[Complex64], var: usize, order: (usize, usize)) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::from_taylor(order, |i, j| match var {
            1 if j == 0 => coeffs.get(i).copied().unwrap_or(zero),
            2 if i == 0 => coeffs.get(j).copied().unwrap_or(zero),
            _ => zero,
        })
    }

    /// 1/self; the constant term must be nonzero.
    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let g = self.without_constant().scale(-1.0 / a0);
        // 1/(a0(1 − g)) = Σ g^k / a0 with g nilpotent
        let mut term = self.like(Complex64::new(1.0, 0.0));
        let mut sum = term.clone();
        for _ in 1..=self.total_order() {
            term = &term * &g;
            sum = &sum + &term;
        }
        sum.scale(1.0 / a0)
    }

    /// ∂/∂λ1; the result has order (n1 − 1, n2).
    pub fn d1(&self) -> Self {
        assert!(self.n1 >= 1, "d1 of a jet of order 0 in the first variable");
        Self::from_taylor((self.n1 - 1, self.n2), |i, j| self.coeff(i + 1, j) * (i + 1) as f64)
    }

    /// ∂/∂λ2; the result has order (n1, n2 − 1).
    pub fn d2(&self) -> Self {
        assert!(self.n2 >= 1, "d2 of a jet of order 0 in the second variable");
        Self::from_taylor((self.n1, self.n2 - 1), |i, j| self.coeff(i, j + 1) * (j + 1) as f64)
    }

    /// Drops coefficients beyond `order` (which must not exceed the current order).
    pub fn truncate(&self, order: (usize, usize)) -> Self {
        assert!(order.0 <= self.n1 && order.1 <= self.n2);
        Self::from_taylor(order, |i, j| self.coeff(i, j))
    }

    /// The derivative ∂^{(i,j)} at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> Complex64 {
        self.coeff(i, j) * (factorial(i) * factorial(j))
    }

    /// Principal power self^s = exp(s ln self).
    pub fn powc(&self, s: Complex64) -> Self {
        self.ln().scale(s).exp()
    }
}

impl<'a> Add<&'a Jet2> for &'a Jet2 {
    type Output = Jet2;
    fn add(self, o: &Jet2) -> Jet2 {
        Jet2 { n1: self.n1, n2: self.n2, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Jet2> for &'a Jet2 {
    type Output = Jet2;
    fn sub(self, o: &Jet2) -> Jet2 {
        Jet2 { n1: self.n1, n2: self.n2, c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul<&'a Jet2> for &'a Jet2 {
    type Output = Jet2;
    fn mul(self, o: &Jet2) -> Jet2 {
        let w = self.n2 + 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for i1 in 0..=self.n1 {
            for j1 in 0..=self.n2 {
                let a = self.c[i1 * w + j1];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i2 in 0..=(self.n1 - i1) {
                    for j2 in 0..=(self.n2 - j1) {
                        out[(i1 + i2) * w + j1 + j2] += a * o.c[i2 * w + j2];
                    }
                }
            }
        }
        Jet2 { n1: self.n1, n2: self.n2, c: out }
    }
}

/// Scalars on which multiplier formulas are written once and evaluated either
/// pointwise (Complex64) or with derivatives (Jet2).
pub trait Holo: Clone + Send + Sync {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn add_c(&self, c: Complex64) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn powc(&self, s: Complex64) -> Self {
        self.ln().scale(s).exp()
    }
    fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }
    fn sq(&self) -> Self {
        self.mul(self)
    }
    fn constant_like(&self, c: Complex64) -> Self;
}

impl Holo for Complex64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add_c(&self, c: Complex64) -> Self {
        self + c
    }
    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn ln(&self) -> Self {
        Complex64::ln(*self)
    }
    fn powc(&self, s: Complex64) -> Self {
        if *self == Complex64::new(0.0, 0.0) {
            return if s == Complex64::new(0.0, 0.0) { Complex64::new(1.0, 0.0) } else { *self };
        }
        (s * Complex64::ln(*self)).exp()
    }
    fn constant_like(&self, c: Complex64) -> Self {
        c
    }
}

impl Holo for Jet2 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add_c(&self, c: Complex64) -> Self {
        let mut j = self.clone();
        j.c[0] += c;
        j
    }
    fn scale(&self, c: Complex64) -> Self {
        Jet2::scale(self, c)
    }
    fn exp(&self) -> Self {
        Jet2::exp(self)
    }
    fn ln(&self) -> Self {
        Jet2::ln(self)
    }
    fn powc(&self, s: Complex64) -> Self {
        Jet2::powc(self, s)
    }
    fn constant_like(&self, c: Complex64) -> Self {
        self.like(c)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gaussian_derivatives_match_hermite() {
        // d^k/dx^k e^{−x²} = (−1)^k H_k(x) e^{−x²}
        let x = 0.7;
        let j = Jet2::var1(c(x, 0.0), (5, 0));
        let g = (&j * &j).scale(c(-1.0, 0.0)).exp();
        let mut h = vec![1.0, 2.0 * x];
        for k in 1..5 {
            h.push(2.0 * x * h[k] - 2.0 * k as f64 * h[k - 1]);
        }
        for k in 0..=5 {
            let d = g.coeff(k, 0) * factorial(k);
            let expected = if k % 2 == 0 { 1.0 } else { -1.0 } * h[k] * (-x * x).exp();
            assert!((d - expected).norm() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn mixed_power_matches_closed_form() {
        // ∂1∂2 (a + λ1 λ2)^s = s(a+λ1λ2)^{s−1} + s(s−1)λ1λ2(a+λ1λ2)^{s−2}
        let (l1, l2, a, s) = (c(0.3, 0.1), c(-0.4, 0.2), c(2.0, 0.0), c(0.0, 1.0));
        let order = (2, 2);
        let base = (&Jet2::var1(l1, order) * &Jet2::var2(l2, order)).add_c(a);
        let p = base.powc(s);
        let b = a + l1 * l2;
        let expected = s * b.powc(s - 1.0) + s * (s - 1.0) * l1 * l2 * b.powc(s - 2.0);
        assert!((p.coeff(1, 1) - expected).norm() < 1e-13);
        assert!((p.value() - b.powc(s)).norm() < 1e-14);
    }

    #[test]
    fn ln_inverts_exp() {
        let order = (3, 3);
        let j = (&Jet2::var1(c(0.2, 0.3), order) * &Jet2::var2(c(1.1, -0.2), order)).add_c(c(0.5, 0.0));
        let back = j.exp().ln();
        for (a, b) in back.c.iter().zip(&j.c) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn recip_and_derivatives() {
        // d/dx (1/x) at x = 2 is −1/4, d²/dx² is 2/8
        let x = Jet2::var1(c(2.0, 0.0), (3, 1));
        let r = x.recip();
        assert!((r.derivative(1, 0) + 0.25).norm() < 1e-15);
        assert!((r.derivative(2, 0) - 0.25).norm() < 1e-15);
        let prod = &r * &x;
        assert!((prod.value() - 1.0).norm() < 1e-15 && prod.coeff(2, 0).norm() < 1e-15);
        let e = (&Jet2::var1(c(0.3, 0.0), (3, 3)) * &Jet2::var2(c(0.5, 0.0), (3, 3))).exp();
        let d = e.d1().d2();
        // ∂1∂2 e^{xy} = (1 + xy) e^{xy}
        assert!((d.value() - (1.0 + 0.15) * 0.15f64.exp()).norm() < 1e-14);
        assert_eq!(d.order(), (2, 2));
        assert_eq!(e.truncate((1, 2)).order(), (1, 2));
    }
}
