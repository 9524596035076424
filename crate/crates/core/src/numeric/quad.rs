//! Gauss–Legendre rules, composite panel rules and an adaptive bisection
//! integrator for complex-valued integrands.

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let r = gauss_legendre_uncached(n);
    cache.lock().unwrap().insert(n, r.clone());
    r
}

fn gauss_legendre_uncached(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// A fixed quadrature rule: nodes with weights, integrating over some set.
#[derive(Clone, Debug, Default)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// n-point Gauss–Legendre on each consecutive pair of `breaks`.
    pub fn composite(breaks: &[f64], n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut rule = QuadRule::default();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in x.iter().zip(&w) {
                rule.nodes.push(mid + half * xi);
                rule.weights.push(half * wi);
            }
        }
        rule
    }

    /// Uniform panels of width at most `h` on [a, b].
    pub fn uniform(a: f64, b: f64, h: f64, n: usize) -> Self {
        let k = ((b - a) / h).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
        Self::composite(&breaks, n)
    }

    /// Panels on [a, b] geometrically graded toward `a` down to width `min_width`,
    /// then uniform with width at most `h`.
    pub fn graded_from_left(a: f64, b: f64, min_width: f64, h: f64, n: usize) -> Self {
        let mut breaks = vec![a];
        let mut w = min_width;
        let mut x = a;
        while x + w < b && w < h {
            x += w;
            breaks.push(x);
            w *= 2.0;
        }
        if x < b {
            let rest = b - x;
            let k = (rest / h).ceil().max(1.0) as usize;
            for i in 1..=k {
                breaks.push(x + rest * i as f64 / k as f64);
            }
        }
        Self::composite(&breaks, n)
    }

    /// Mirror image on [-b, -a] appended (for symmetric integrals over ℝ).
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            out.nodes.push(-x);
            out.weights.push(*w);
        }
        out
    }

    pub fn append(&mut self, other: &QuadRule) {
        self.nodes.extend_from_slice(&other.nodes);
        self.weights.extend_from_slice(&other.weights);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }

    pub fn integrate_real<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive bisection on [a, b]: accept a panel when the 15-point rule and the
/// sum over its two halves agree to `tol` scaled by the panel's share of the interval.
/// `initial_panels` seeds the subdivision, e.g. from an oscillation phase estimate.
pub fn adaptive<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> AdaptiveResult {
    const N: usize = 15;
    const MAX_DEPTH: u32 = 40;
    let (x, w) = gauss_legendre(N);
    let panel = |lo: f64, hi: f64| -> Complex64 {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        x.iter().zip(&w).map(|(xi, wi)| f(mid + half * xi) * (half * wi)).sum()
    };
    let k = initial_panels.max(1);
    let width = b - a;
    let mut stack: Vec<(f64, f64, Complex64, u32)> = (0..k)
        .map(|i| {
            let lo = a + width * i as f64 / k as f64;
            let hi = a + width * (i + 1) as f64 / k as f64;
            (lo, hi, panel(lo, hi), 0)
        })
        .collect();
    let rough: f64 = stack.iter().map(|s| s.2.norm()).sum();
    let tol = abs_tol.max(rel_tol * rough);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut converged = true;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid);
        let right = panel(mid, hi);
        let diff = (left + right - whole).norm();
        let share = tol * (hi - lo) / width;
        if diff <= share || depth >= MAX_DEPTH || (hi - lo) < 1e-14 * width.max(1.0) {
            if diff > share {
                converged = false;
            }
            total += left + right;
            err += diff;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    AdaptiveResult { value: total, error: err, converged }
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let g = |x: f64| Complex64::new(f(x), 0.0);
    adaptive(&g, a, b, panels, tol, tol).value.re
}

/// Kahan–Babuška–Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}
