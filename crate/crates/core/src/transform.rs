//! Spherical transform ℋ, its inverse, the Abel transform and radial convolution.
//!
//! Conventions: ℋf(λ) = ∫₀^∞ f(t) φ_{−λ}(t) δ(t) dt with c_G = 1, and
//! ℋ⁻¹m(t) = C_ν ∫_ℝ m(λ) φ_λ(t) |c(λ)|^{−2} dλ. The Euclidean Fourier pair is
//! ℱg(λ) = ∫ g(t) e^{−iλt} dt, ℱ⁻¹h(b) = (2π)⁻¹ ∫ h(λ) e^{iλb} dλ.

use crate::error::{domain, Error, Result};
use crate::numeric::quad::QuadRule;
use crate::numeric::spline::ComplexSpline;
use crate::space::RankOneSpace;
use crate::specfun::{plancherel_constant, plancherel_density};
use crate::sphfn::{phi_fast_grid, T_MAX};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Gaussian tail exponent: the cutoff Λ solves rate·Λ² = 40.
const TAIL_EXPONENT: f64 = 40.0;
/// Nodes per λ panel in the inversion rule.
const LAMBDA_NODES: usize = 16;
/// Nodes per t panel in the forward rule (panels align with spline knots).
const T_NODES: usize = 6;
/// Forward-side spectral cutoff search stops at this λ.
const MAX_FORWARD_CUTOFF: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayHint {
    Compact,
    Gaussian,
    Exponential(f64),
}

/// A K-bi-invariant function, restricted to A⁺ and sampled on a grid.
/// Between knots it is the natural cubic spline; beyond the last knot it is zero.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    t_grid: Vec<f64>,
    values: Vec<Complex64>,
    decay_hint: DecayHint,
    spline: ComplexSpline,
}

impl RadialFunction {
    pub fn new(t_grid: Vec<f64>, values: Vec<Complex64>, decay_hint: DecayHint) -> Result<Self> {
        if t_grid.len() < 2 || t_grid.len() != values.len() {
            return Err(domain("RadialFunction", "need at least two knots and one value per knot"));
        }
        if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("RadialFunction", "grid must be nonnegative and strictly increasing"));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("RadialFunction", "values must be finite"));
        }
        if let DecayHint::Exponential(r) = decay_hint {
            if !(r > 0.0) {
                return Err(domain("RadialFunction", "exponential decay rate must be positive"));
            }
        }
        let spline = ComplexSpline::new(&t_grid, &values);
        Ok(RadialFunction { t_grid, values, decay_hint, spline })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(t_grid: Vec<f64>, f: F, decay_hint: DecayHint) -> Result<Self> {
        let values = t_grid.iter().map(|&t| f(t)).collect();
        Self::new(t_grid, values, decay_hint)
    }

    /// Uniform grid on [0, t_max] with `n` intervals.
    pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn decay_hint(&self) -> DecayHint {
        self.decay_hint
    }

    pub fn support_end(&self) -> f64 {
        *self.t_grid.last().expect("nonempty grid")
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let t = t.abs();
        if t > self.support_end() {
            return Complex64::new(0.0, 0.0);
        }
        self.spline.eval(t)
    }

    /// ∫₀^∞ |f|² δ dt.
    pub fn l2_norm_sqr(&self, space: &RankOneSpace) -> f64 {
        self.t_rule(0.25).integrate_real(|t| self.eval(t).norm_sqr() * space.density_unchecked(t))
    }

    /// Gauss rule on [0, support_end] with panels between consecutive knots,
    /// subdivided to width at most `h`.
    fn t_rule(&self, h: f64) -> QuadRule {
        let mut breaks = Vec::with_capacity(self.t_grid.len() + 1);
        if self.t_grid[0] > 0.0 {
            breaks.push(0.0);
        }
        for (i, &t) in self.t_grid.iter().enumerate() {
            if let Some(&prev) = breaks.last() {
                let k = ((t - prev) / h).ceil().max(1.0) as usize;
                for j in 1..k {
                    breaks.push(prev + (t - prev) * j as f64 / k as f64);
                }
            } else {
                debug_assert_eq!(i, 0);
            }
            breaks.push(t);
        }
        QuadRule::composite(&breaks, T_NODES)
    }
}

type Evaluator = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A function on the spectral side, m: ℂ → ℂ.
#[derive(Clone)]
pub struct SpectralFunction {
    evaluator: Evaluator,
    /// Declared evenness m(λ) = m(−λ).
    pub weyl_symmetric: bool,
    /// Declared holomorphy on |Im λ| ≤ analytic_strip.
    pub analytic_strip: f64,
    /// Declared decay |m(λ)| ≲ e^{−rate·λ²} on ℝ (0 when none).
    pub gaussian_rate: f64,
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("weyl_symmetric", &self.weyl_symmetric)
            .field("analytic_strip", &self.analytic_strip)
            .field("gaussian_rate", &self.gaussian_rate)
            .finish()
    }
}

impl SpectralFunction {
    pub fn new<F>(f: F, weyl_symmetric: bool, analytic_strip: f64) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        SpectralFunction { evaluator: Arc::new(f), weyl_symmetric, analytic_strip, gaussian_rate: 0.0 }
    }

    pub fn with_gaussian_rate(mut self, rate: f64) -> Self {
        self.gaussian_rate = rate.max(0.0);
        self
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(move |_| c, true, f64::INFINITY)
    }

    /// e^{−aλ²}.
    pub fn gaussian(a: f64) -> Self {
        Self::new(move |l| (-a * l * l).exp(), true, f64::INFINITY).with_gaussian_rate(a)
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        (self.evaluator)(lambda)
    }

    /// Rejects m unless it is declared Weyl symmetric and passes spot checks to 10⁻¹⁰.
    pub fn check_weyl(&self) -> Result<()> {
        if !self.weyl_symmetric {
            return Err(Error::NotWeylSymmetric { deviation: f64::NAN });
        }
        let strip = self.analytic_strip.min(1.0) * 0.5;
        let probes = [
            Complex64::new(0.37, 0.0),
            Complex64::new(1.3, 0.0),
            Complex64::new(2.9, 0.0),
            Complex64::new(7.1, 0.0),
            Complex64::new(0.8, strip),
            Complex64::new(3.3, -strip),
        ];
        let mut worst: f64 = 0.0;
        for l in probes {
            let (a, b) = (self.eval(l), self.eval(-l));
            worst = worst.max((a - b).norm() / a.norm().max(b.norm()).max(1.0));
        }
        if worst > 1e-10 {
            return Err(Error::NotWeylSymmetric { deviation: worst });
        }
        Ok(())
    }
}

struct Sorted {
    idx: Vec<usize>,
    ts: Vec<f64>,
}

impl Sorted {
    fn new(ts: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..ts.len()).collect();
        idx.sort_by(|&a, &b| ts[a].partial_cmp(&ts[b]).expect("finite t"));
        let sorted = idx.iter().map(|&i| ts[i]).collect();
        Sorted { idx, ts: sorted }
    }

    fn unsort(&self, vals: Vec<Complex64>) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); vals.len()];
        for (k, &i) in self.idx.iter().enumerate() {
            out[i] = vals[k];
        }
        out
    }
}

/// φ_{λ_i}(t_j) for every λ in `lambdas` and every t in `ts` (any order).
pub fn phi_table(space: &RankOneSpace, lambdas: &[Complex64], ts: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let sorted = Sorted::new(ts);
    lambdas
        .par_iter()
        .map(|&l| Ok(sorted.unsort(phi_fast_grid(space, l, &sorted.ts)?)))
        .collect()
}

/// Σ_i w_i φ_{λ_i}(t) at every t of `ts`, without storing the table.
pub fn phi_superpose(space: &RankOneSpace, lambdas: &[Complex64], weights: &[Complex64], ts: &[f64]) -> Result<Vec<Complex64>> {
    let sorted = Sorted::new(ts);
    let zero = || vec![Complex64::new(0.0, 0.0); ts.len()];
    let sum = lambdas
        .par_iter()
        .zip(weights)
        .filter(|(_, w)| **w != Complex64::new(0.0, 0.0))
        .try_fold(zero, |mut acc, (&l, &w)| {
            for (a, p) in acc.iter_mut().zip(phi_fast_grid(space, l, &sorted.ts)?) {
                *a += p * w;
            }
            Ok::<_, Error>(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            Ok(a)
        })?;
    Ok(sorted.unsort(sum))
}

/// Σ_j g_j φ_λ(t_j) for every λ of `lambdas`.
pub fn phi_project(space: &RankOneSpace, lambdas: &[Complex64], ts: &[f64], g: &[Complex64]) -> Result<Vec<Complex64>> {
    let sorted = Sorted::new(ts);
    let g_sorted: Vec<Complex64> = sorted.idx.iter().map(|&i| g[i]).collect();
    lambdas
        .par_iter()
        .map(|&l| Ok(phi_fast_grid(space, l, &sorted.ts)?.iter().zip(&g_sorted).map(|(p, w)| p * w).sum()))
        .collect()
}

/// Resolution controls of the inversion rule on [0, Λ].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions {
    /// Panel widths are divided by this factor.
    pub refinement: f64,
    /// Overrides the Gaussian-tail cutoff Λ.
    pub lambda_max: Option<f64>,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions { refinement: 1.0, lambda_max: None }
    }
}

/// Gauss rule on [0, Λ] whose panel width resolves the phase λ·t_max.
pub fn inversion_rule(lambda_max: f64, t_max: f64, refinement: f64) -> QuadRule {
    let h = 1.0f64.min(6.0 / t_max.max(1.0)) / refinement.max(1e-3);
    QuadRule::uniform(0.0, lambda_max, h, LAMBDA_NODES)
}

/// ℋ⁻¹(m·e^{−ελ²}) at every t of `ts` (t ∈ [0, 30], any order).
pub fn inverse_on_grid(
    space: &RankOneSpace,
    m: &SpectralFunction,
    ts: &[f64],
    epsilon: f64,
    opts: InverseOptions,
) -> Result<Vec<Complex64>> {
    if !(epsilon >= 0.0) {
        return Err(domain("inverse_spherical_transform", "epsilon must be nonnegative"));
    }
    m.check_weyl()?;
    if ts.iter().any(|t| !(0.0..=T_MAX).contains(t)) {
        return Err(domain("inverse_spherical_transform", format!("t must lie in [0, {T_MAX}]")));
    }
    let rate = epsilon + m.gaussian_rate;
    let lambda_max = match opts.lambda_max {
        Some(l) => l,
        None if rate > 0.0 => (TAIL_EXPONENT / rate).sqrt(),
        None => {
            return Err(Error::Divergence(
                "epsilon = 0 needs a multiplier with declared Gaussian decay".into(),
            ))
        }
    };
    let t_max = ts.iter().cloned().fold(0.0, f64::max);
    let rule = inversion_rule(lambda_max, t_max, opts.refinement);
    let lambdas: Vec<Complex64> = rule.nodes.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    let spectral: Vec<Complex64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&l, &w)| m.eval(Complex64::new(l, 0.0)) * ((-epsilon * l * l).exp() * plancherel_density(space, l) * w))
        .collect();
    if spectral.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(vec![Complex64::new(0.0, 0.0); ts.len()]);
    }
    let scale = 2.0 * plancherel_constant(space);
    Ok(phi_superpose(space, &lambdas, &spectral, ts)?.into_iter().map(|v| v * scale).collect())
}

/// ℋ⁻¹(m·e^{−ελ²})(t).
pub fn inverse_spherical_transform(space: &RankOneSpace, m: &SpectralFunction, t: f64, epsilon: f64) -> Result<Complex64> {
    Ok(inverse_on_grid(space, m, &[t], epsilon, InverseOptions::default())?[0])
}

/// ℋ⁻¹(m·e^{−ελ²}) sampled on `t_grid` as a radial function with Gaussian decay hint.
pub fn inverse_radial(space: &RankOneSpace, m: &SpectralFunction, t_grid: Vec<f64>, epsilon: f64) -> Result<RadialFunction> {
    let values = inverse_on_grid(space, m, &t_grid, epsilon, InverseOptions::default())?;
    RadialFunction::new(t_grid, values, DecayHint::Gaussian)
}

fn check_convergence(space: &RankOneSpace, f: &RadialFunction, lambdas: &[Complex64]) -> Result<()> {
    let rho = space.rho();
    let worst_im = lambdas.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    if worst_im > rho + 1e-12 {
        return Err(domain("spherical_transform", format!("|Im lambda| = {worst_im} exceeds rho = {rho}")));
    }
    if f.support_end() > T_MAX {
        return Err(domain("spherical_transform", format!("support beyond t = {T_MAX}")));
    }
    if let DecayHint::Exponential(rate) = f.decay_hint {
        // f δ φ_{−λ} grows like e^{(ρ + |Im λ| − rate)t}
        if rate <= rho + worst_im {
            return Err(Error::Divergence(format!(
                "decay rate {rate} does not beat the growth rate {} of the density times phi",
                rho + worst_im
            )));
        }
    }
    Ok(())
}

/// ℋf at every λ of `lambdas` (|Im λ| ≤ ρ).
pub fn spherical_transform_many(space: &RankOneSpace, f: &RadialFunction, lambdas: &[Complex64]) -> Result<Vec<Complex64>> {
    check_convergence(space, f, lambdas)?;
    let lmax = lambdas.iter().map(|l| l.norm()).fold(1.0, f64::max);
    let rule = f.t_rule(0.25f64.min(1.0 / lmax));
    let fd: Vec<Complex64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| f.eval(t) * (space.density_unchecked(t) * w))
        .collect();
    let neg: Vec<Complex64> = lambdas.iter().map(|l| -l).collect();
    let out = phi_project(space, &neg, &rule.nodes, &fd)?;
    if f.decay_hint != DecayHint::Compact {
        // tail beyond the last knot over one unit of length, against the bound |φ_{−λ}| ≤ φ_{i Im λ}
        let end = f.support_end();
        let edge = f.values.last().map(|v| v.norm()).unwrap_or(0.0) * space.density_unchecked(end);
        let mass: f64 = rule.nodes.iter().zip(&fd).map(|(&t, g)| g.norm() * (-space.rho() * t).exp() * (1.0 + t)).sum();
        let envelope = (-space.rho() * end).exp() * (1.0 + end) * (worst_imag(lambdas) * end).exp();
        let tail = edge * envelope;
        if tail > 1e-8 * mass.max(1e-300) && tail > 1e-14 {
            return Err(Error::Divergence(format!("tail estimate {tail:e} at t = {end} is not negligible")));
        }
    }
    Ok(out)
}

fn worst_imag(lambdas: &[Complex64]) -> f64 {
    lambdas.iter().map(|l| l.im.abs()).fold(0.0, f64::max)
}

/// ℋf(λ) = ∫₀^∞ f(t) φ_{−λ}(t) δ(t) dt.
pub fn spherical_transform(space: &RankOneSpace, f: &RadialFunction, lambda: Complex64) -> Result<Complex64> {
    Ok(spherical_transform_many(space, f, &[lambda])?[0])
}

/// Smallest integer λ with |ℋf| below `rel`·max|ℋf| at it and the next integer, capped at 64.
fn forward_cutoff(space: &RankOneSpace, fs: &[&RadialFunction], rel: f64) -> Result<f64> {
    let probes: Vec<Complex64> = (0..=MAX_FORWARD_CUTOFF as usize).map(|k| Complex64::new(k as f64, 0.0)).collect();
    let mut product = vec![1.0; probes.len()];
    for f in fs {
        let vals = spherical_transform_many(space, f, &probes)?;
        for (p, v) in product.iter_mut().zip(&vals) {
            *p *= v.norm();
        }
    }
    let peak = product.iter().cloned().fold(0.0, f64::max);
    for k in 1..product.len() - 1 {
        if product[k] <= rel * peak && product[k + 1] <= rel * peak {
            return Ok(k as f64 + 1.0);
        }
    }
    Ok(MAX_FORWARD_CUTOFF)
}

/// The Abel transform sampled on a symmetric grid of ℝ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbelProfile {
    pub b_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    /// max |𝒜f(b) − 𝒜f(−b)| relative to max |𝒜f|.
    pub asymmetry: f64,
    pub lambda_max: f64,
}

impl AbelProfile {
    pub fn at(&self, b: f64) -> Option<Complex64> {
        self.b_grid.iter().position(|&x| (x - b).abs() < 1e-12).map(|i| self.values[i])
    }
}

/// 𝒜f = ℱ⁻¹ℋf at ±b for each b ≥ 0 of `b_values`.
pub fn abel_transform_at(space: &RankOneSpace, f: &RadialFunction, b_values: &[f64]) -> Result<AbelProfile> {
    if b_values.iter().any(|b| *b < 0.0) {
        return Err(domain("abel_transform", "pass nonnegative b; the mirror points are added"));
    }
    let lambda_max = forward_cutoff(space, &[f], 1e-11)?;
    let b_max = b_values.iter().cloned().fold(0.0, f64::max);
    let rule = inversion_rule(lambda_max, b_max, 1.0).symmetrized();
    let lambdas: Vec<Complex64> = rule.nodes.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    let hf = spherical_transform_many(space, f, &lambdas)?;
    let mut b_grid: Vec<f64> = b_values.iter().filter(|b| **b > 0.0).map(|b| -b).collect();
    b_grid.extend_from_slice(b_values);
    b_grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    b_grid.dedup();
    let values: Vec<Complex64> = b_grid
        .iter()
        .map(|&b| {
            let s: Complex64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .zip(&hf)
                .map(|((&l, &w), h)| h * Complex64::new(0.0, l * b).exp() * w)
                .sum();
            s / (2.0 * std::f64::consts::PI)
        })
        .collect();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut asym: f64 = 0.0;
    for (i, &b) in b_grid.iter().enumerate() {
        if let Some(j) = b_grid.iter().position(|&x| (x + b).abs() < 1e-14) {
            asym = asym.max((values[i] - values[j]).norm() / peak);
        }
    }
    if asym > 1e-6 {
        return Err(Error::Integration(format!("Abel transform is not even (asymmetry {asym:e})")));
    }
    Ok(AbelProfile { b_grid, values, asymmetry: asym, lambda_max })
}

/// 𝒜f on the mirror of f's own grid.
pub fn abel_transform(space: &RankOneSpace, f: &RadialFunction) -> Result<AbelProfile> {
    let grid = f.t_grid.clone();
    abel_transform_at(space, f, &grid)
}

fn merged_grid(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b).cloned().collect();
    g.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    g.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    g
}

/// f ∗ k = ℋ⁻¹(ℋf·ℋk) on the union of both grids (extended to the sum of supports
/// when both are compact).
pub fn convolve_radial(space: &RankOneSpace, f: &RadialFunction, k: &RadialFunction) -> Result<RadialFunction> {
    let mut grid = merged_grid(&f.t_grid, &k.t_grid);
    let both_compact = f.decay_hint == DecayHint::Compact && k.decay_hint == DecayHint::Compact;
    if both_compact {
        let end = (f.support_end() + k.support_end()).min(T_MAX);
        let step = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min).max(1e-3);
        let mut t = *grid.last().expect("nonempty");
        while t + step <= end + 1e-12 {
            t += step;
            grid.push(t);
        }
    }
    let lambda_max = forward_cutoff(space, &[f, k], 1e-12)?;
    let rule = inversion_rule(lambda_max, *grid.last().expect("nonempty"), 1.0);
    let lambdas: Vec<Complex64> = rule.nodes.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    let hf = spherical_transform_many(space, f, &lambdas)?;
    let hk = spherical_transform_many(space, k, &lambdas)?;
    let spectral: Vec<Complex64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .zip(hf.iter().zip(&hk))
        .map(|((&l, &w), (a, b))| a * b * (plancherel_density(space, l) * w))
        .collect();
    let scale = 2.0 * plancherel_constant(space);
    let values = phi_superpose(space, &lambdas, &spectral, &grid)?.into_iter().map(|v| v * scale).collect();
    let hint = match (f.decay_hint, k.decay_hint) {
        (DecayHint::Compact, DecayHint::Compact) => DecayHint::Compact,
        (DecayHint::Exponential(a), DecayHint::Exponential(b)) => DecayHint::Exponential(a.min(b)),
        (DecayHint::Exponential(a), _) | (_, DecayHint::Exponential(a)) => DecayHint::Exponential(a),
        _ => DecayHint::Gaussian,
    };
    RadialFunction::new(grid, values, hint)
}

/// ∫₀^∞|f|²δ dt / ∫_ℝ |ℋf|² |c|^{−2} dλ; equals the Plancherel constant C_ν.
pub fn plancherel_ratio(space: &RankOneSpace, f: &RadialFunction) -> Result<f64> {
    let lambda_max = forward_cutoff(space, &[f], 1e-9)?;
    let rule = QuadRule::uniform(0.0, lambda_max, 0.5, LAMBDA_NODES);
    let lambdas: Vec<Complex64> = rule.nodes.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    let hf = spherical_transform_many(space, f, &lambdas)?;
    let spectral: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .zip(&hf)
        .map(|((&l, &w), h)| 2.0 * h.norm_sqr() * plancherel_density(space, l) * w)
        .sum();
    if spectral == 0.0 {
        return Err(Error::Divergence("spherical transform vanishes identically".into()));
    }
    Ok(f.l2_norm_sqr(space) / spectral)
}
