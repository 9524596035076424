//! Numerical differentiation: Richardson-extrapolated central differences and
//! Cauchy-integral Taylor coefficients for holomorphic functions.

use num_complex::Complex64;
use std::f64::consts::PI;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// k-th central difference quotient with step h (error O(h²)).
pub fn central_difference<F: Fn(f64) -> Complex64>(f: &F, x: f64, h: f64, k: usize) -> Complex64 {
    if k == 0 {
        return f(x);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += f(x + (k as f64 / 2.0 - j as f64) * h) * (sign * binomial(k, j));
    }
    acc / h.powi(k as i32)
}

/// k-th derivative along the real direction by three-level Richardson extrapolation.
pub fn richardson_derivative<F: Fn(f64) -> Complex64>(f: &F, x: f64, h: f64, k: usize) -> Complex64 {
    if k == 0 {
        return f(x);
    }
    let d0 = central_difference(f, x, h, k);
    let d1 = central_difference(f, x, h / 2.0, k);
    let d2 = central_difference(f, x, h / 4.0, k);
    let r1 = (d1 * 4.0 - d0) / 3.0;
    let r2 = (d2 * 4.0 - d1) / 3.0;
    (r2 * 16.0 - r1) / 15.0
}

/// Taylor coefficients a_0..a_{max_order} of a holomorphic f at z0 from
/// `n` equispaced samples on the circle of radius r (trapezoid rule).
pub fn taylor_coefficients<F: Fn(Complex64) -> Complex64>(
    f: &F,
    z0: Complex64,
    r: f64,
    n: usize,
    max_order: usize,
) -> Vec<Complex64> {
    let samples: Vec<(Complex64, Complex64)> = (0..n)
        .map(|k| {
            let u = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            (u, f(z0 + u * r))
        })
        .collect();
    (0..=max_order)
        .map(|j| {
            let s: Complex64 = samples.iter().map(|(u, v)| v * u.powi(-(j as i32))).sum();
            s / (n as f64 * r.powi(j as i32))
        })
        .collect()
}

/// Mixed Taylor coefficients a_{j1,j2} of a function holomorphic in each variable,
/// sampled on the torus |z1−w1| = r1, |z2−w2| = r2. Indexed `[j1][j2]`.
pub fn taylor_coefficients_2d<F: Fn(Complex64, Complex64) -> Complex64>(
    f: &F,
    w: (Complex64, Complex64),
    r: (f64, f64),
    n: usize,
    max_order: (usize, usize),
) -> Vec<Vec<Complex64>> {
    let units: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect();
    let mut vals = vec![Complex64::new(0.0, 0.0); n * n];
    for (a, ua) in units.iter().enumerate() {
        for (b, ub) in units.iter().enumerate() {
            vals[a * n + b] = f(w.0 + ua * r.0, w.1 + ub * r.1);
        }
    }
    let mut out = vec![vec![Complex64::new(0.0, 0.0); max_order.1 + 1]; max_order.0 + 1];
    for (j1, row) in out.iter_mut().enumerate() {
        // partial transform in the first variable
        let mut inner = vec![Complex64::new(0.0, 0.0); n];
        for (a, ua) in units.iter().enumerate() {
            let ph = ua.powi(-(j1 as i32));
            for b in 0..n {
                inner[b] += vals[a * n + b] * ph;
            }
        }
        for (j2, cell) in row.iter_mut().enumerate() {
            let s: Complex64 = inner.iter().zip(&units).map(|(v, ub)| v * ub.powi(-(j2 as i32))).sum();
            *cell = s / ((n * n) as f64 * r.0.powi(j1 as i32) * r.1.powi(j2 as i32));
        }
    }
    out
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}
