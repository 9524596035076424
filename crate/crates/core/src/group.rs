//! The 2×2 matrix model of the hyperbolic plane (m_α, m_2α) = (1, 0):
//! G = SL(2,ℝ), K = SO(2), a(t) = diag(e^{t/2}, e^{−t/2}) so that α(log a(t)) = t,
//! N̄ = lower unipotent matrices v̄_x. Also the horocycle Abel transform and an
//! empirical check of the transference inequality on the group N̄A.

use crate::error::{domain, Error, Result};
use crate::numeric::fit::{loglog_fit, logspace};
use crate::numeric::quad::QuadRule;
use crate::report::{EstimateReport, Verdict};
use crate::space::RankOneSpace;
use crate::transform::{DecayHint, RadialFunction};
use num_complex::Complex64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex as FftComplex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const RHO: f64 = 0.5;
const DET_TOLERANCE: f64 = 1e-10;

/// (a b; c d) with determinant 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixElement<F = f64> {
    pub a: F,
    pub b: F,
    pub c: F,
    pub d: F,
}

impl<F: Float> MatrixElement<F> {
    pub fn new(a: F, b: F, c: F, d: F) -> Result<Self> {
        let g = MatrixElement { a, b, c, d };
        let det = g.det().to_f64().unwrap_or(f64::NAN);
        if !((det - 1.0).abs() <= DET_TOLERANCE) {
            return Err(domain("MatrixElement", format!("determinant {det} is not 1")));
        }
        Ok(g)
    }

    pub fn identity() -> Self {
        MatrixElement { a: F::one(), b: F::zero(), c: F::zero(), d: F::one() }
    }

    /// v̄_x = (1 0; x 1).
    pub fn nbar(x: F) -> Self {
        MatrixElement { a: F::one(), b: F::zero(), c: x, d: F::one() }
    }

    /// a(t) = diag(e^{t/2}, e^{−t/2}).
    pub fn a_t(t: F) -> Self {
        let h = (t / (F::one() + F::one())).exp();
        MatrixElement { a: h, b: F::zero(), c: F::zero(), d: h.recip() }
    }

    /// Rotation (cos θ −sin θ; sin θ cos θ).
    pub fn k_theta(theta: F) -> Self {
        let (s, c) = theta.sin_cos();
        MatrixElement { a: c, b: -s, c: s, d: c }
    }

    pub fn det(&self) -> F {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Self) -> Self {
        MatrixElement {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        MatrixElement { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn max_abs_diff(&self, o: &Self) -> F {
        (self.a - o.a).abs().max((self.b - o.b).abs()).max((self.c - o.c).abs()).max((self.d - o.d).abs())
    }
}

/// g = v̄(x)·a(t)·k(k_angle).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaCoords<F = f64> {
    pub x: F,
    pub t: F,
    pub k_angle: F,
}

impl<F: Float> IwasawaCoords<F> {
    pub fn reconstruct(&self) -> MatrixElement<F> {
        MatrixElement::nbar(self.x).mul(&MatrixElement::a_t(self.t)).mul(&MatrixElement::k_theta(self.k_angle))
    }
}

/// N̄AK factorization from the first row: g gᵀ = L Lᵀ with L = v̄_x a(t).
pub fn iwasawa<F: Float>(g: &MatrixElement<F>) -> Result<IwasawaCoords<F>> {
    let det = g.det().to_f64().unwrap_or(f64::NAN);
    if !((det - 1.0).abs() <= DET_TOLERANCE) {
        return Err(domain("iwasawa", format!("determinant {det} is not 1")));
    }
    let r2 = g.a * g.a + g.b * g.b;
    if !(r2.to_f64().unwrap_or(0.0) > 1e-200) {
        return Err(domain("iwasawa", "first row vanishes"));
    }
    let x = (g.a * g.c + g.b * g.d) / r2;
    let t = r2.ln();
    let k_angle = (-g.b).atan2(g.a);
    Ok(IwasawaCoords { x, t, k_angle })
}

/// α(H(g)) for the factorization g = k·exp(H(g))·n (n upper unipotent):
/// e^{α(H(g))} is the squared length of the first column, so e^{α(H(v̄_x))} = 1 + x².
pub fn iwasawa_h<F: Float>(g: &MatrixElement<F>) -> F {
    (g.a * g.a + g.c * g.c).ln()
}

/// α(H(v̄_x)) = log(1 + x²).
pub fn h_of_nbar<F: Float>(x: F) -> F {
    (x * x).ln_1p()
}

/// P(v̄_x) = e^{−ρ α(H(v̄_x))} = (1 + x²)^{−1/2}.
pub fn poisson_p<F: Float>(x: F) -> F {
    (F::one() + x * x).sqrt().recip()
}

/// t⁺ = α(log [g]_+) = 2 asinh(√((a−d)² + (b+c)²)/2).
pub fn cartan_radius<F: Float>(g: &MatrixElement<F>) -> F {
    let two = F::one() + F::one();
    let s = ((g.a - g.d).powi(2) + (g.b + g.c).powi(2)).sqrt();
    two * (s / two).asinh()
}

/// t⁺(v̄_x a(t_b)).
pub fn cartan_radius_nbar_a<F: Float>(x: F, t_b: F) -> F {
    cartan_radius(&MatrixElement::nbar(x).mul(&MatrixElement::a_t(t_b)))
}

/// E(v̄_x, a(t_b)) = t⁺(v̄_x a(t_b)) − t_b − α(H(v̄_x)), in a cancellation-free form.
pub fn iwasawa_cartan_gap<F: Float>(x: F, t_b: F) -> Result<F> {
    if !(t_b > F::zero()) {
        return Err(domain("iwasawa_cartan_gap", "b must lie in A+ (t_b > 0)"));
    }
    let one = F::one();
    let two = one + one;
    let four = two + two;
    let u = (-t_b).exp();
    let q = (one + x * x) / u;
    let s = ((q + u).powi(2) - four).max(F::zero()).sqrt();
    // e^{t⁺} = (q + u + S)/2 and S − (q − u) = 4x²/(S + q − u)
    Ok((four * x * x / (s + q - u) / (two * q)).ln_1p())
}

/// Whether 0 ≤ E ≤ 2e^{−2t_b} and t⁺ ≥ t_b hold to `tol`.
pub fn gap_within_bounds(x: f64, t_b: f64, tol: f64) -> Result<bool> {
    let e = iwasawa_cartan_gap(x, t_b)?;
    let t_plus = cartan_radius_nbar_a(x, t_b);
    Ok(e >= -tol && e <= 2.0 * (-2.0 * t_b).exp() + tol && t_plus >= t_b - tol)
}

/// Fit of log E against t_b at fixed x (claimed slope −2).
pub fn gap_decay_fit(x: f64, t_range: (f64, f64), n: usize) -> Result<EstimateReport> {
    let ts: Vec<f64> = (0..n).map(|k| t_range.0 + (t_range.1 - t_range.0) * k as f64 / (n - 1) as f64).collect();
    let es: Vec<f64> = ts.iter().map(|&t| iwasawa_cartan_gap(x, t)).collect::<Result<_>>()?;
    let logs: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let fit = crate::numeric::fit::linear_fit(&ts, &logs);
    let mut r = EstimateReport::new("iwasawa_cartan_gap_decay", "E(v,b) <= 2 b^{-2}");
    r.window = t_range;
    r.fitted = fit.slope;
    r.claimed = -2.0;
    r.tolerance = 0.1;
    r.scatter = fit.max_residual;
    r.verdict = Verdict::from_bool((fit.slope + 2.0).abs() <= 0.1);
    Ok(r.detail("x", x))
}

/// Haar measure on N̄ is dx/(2π), which makes ∫_{N̄A} f(vb) b^{2ρ} dv db the area integral.
pub const NBAR_MEASURE: f64 = 1.0 / (2.0 * PI);

/// 𝒜f(t_b) = e^{ρ t_b} ∫_{N̄} f(t⁺(v̄_x a(t_b))) dx/(2π) for radial f on H2.
pub fn abel_horocycle(f: &RadialFunction, t_b: f64) -> Result<Complex64> {
    let end = f.support_end();
    if f.decay_hint() != DecayHint::Compact {
        let peak = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let last = f.values().last().map(|v| v.norm()).unwrap_or(0.0);
        if last > 1e-12 * peak.max(1e-300) {
            return Err(Error::Divergence(format!("radial function is not negligible at its grid end t = {end}")));
        }
    }
    // t⁺ ≤ end ⇔ x² ≤ (2 cosh(end) − e^{−t_b}) e^{−t_b} − 1
    let x2 = (2.0 * end.cosh() - (-t_b).exp()) * (-t_b).exp() - 1.0;
    if x2 <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let x_max = x2.sqrt();
    // the profile varies on the scale of x where e^{t⁺} ≈ (1 + x²)e^{t_b}; grade toward 0
    let rule = QuadRule::graded_from_left(0.0, x_max, 1e-3 * x_max.min(1.0), (0.05 * x_max).max(0.02), 12);
    let integral = rule.integrate(|x| f.eval(cartan_radius_nbar_a(x, t_b)));
    Ok(integral * 2.0 * NBAR_MEASURE * (RHO * t_b).exp())
}

/// ∫_{N̄A} f(vb) b^{2ρ} dv db via the horocycle route, to compare with ∫ f δ dt.
pub fn haar_iwasawa_integral(f: &RadialFunction) -> Result<Complex64> {
    let end = f.support_end();
    let rule = QuadRule::uniform(-end, end, 0.05, 10);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += abel_horocycle(f, t)? * (RHO * t).exp() * w;
    }
    Ok(acc)
}

/// ∫_0^∞ f(t) δ(t) dt for H2 (δ = sinh t).
pub fn haar_cartan_integral(f: &RadialFunction) -> Result<Complex64> {
    let space = RankOneSpace::H2;
    let rule = QuadRule::uniform(0.0, f.support_end(), 0.05, 10);
    Ok(rule.integrate(|t| f.eval(t) * space.density_unchecked(t)))
}

/// ∫_{|x| ≤ x_max} P(v̄_x)^q [α(H(v̄_x))]^k dx/(2π), k ∈ {0, 1}.
pub fn poisson_moment(q: f64, with_h: bool, x_max: f64) -> f64 {
    let rule = QuadRule::graded_from_left(0.0, x_max, 1e-2, 1.0f64.max(0.05 * x_max), 12);
    let integral = rule.integrate_real(|x| {
        let h = if with_h { h_of_nbar(x) } else { 1.0 };
        poisson_p(x).powf(q) * h
    });
    2.0 * NBAR_MEASURE * integral
}

/// ∫_{X ≤ |x| ≤ 10X} P^q H^k dx/(2π), integrated in u = ln x so that X may be huge.
fn poisson_block(q: f64, with_h: bool, x: f64) -> f64 {
    let rule = QuadRule::uniform(x.ln(), x.ln() + 10f64.ln(), 0.25, 12);
    let integral = rule.integrate_real(|u| {
        // P^q e^u = e^{u(1−q)} (1 + e^{−2u})^{−q/2}, H = 2u + ln(1 + e^{−2u})
        let e = (-2.0 * u).exp();
        let h = if with_h { 2.0 * u + e.ln_1p() } else { 1.0 };
        (u * (1.0 - q)).exp() * (1.0 + e).powf(-q / 2.0) * h
    });
    2.0 * NBAR_MEASURE * integral
}

/// Tail exponent of ∫_{|x|>X} P^q H^k: decade blocks decay like X^{1−q} up to a log factor,
/// so the window sits far out (10^{20} to 10^{40}) where the log factor is nearly flat.
pub fn poisson_tail_report(q: f64, with_h: bool) -> EstimateReport {
    let xs = logspace(1e20, 1e40, 9);
    let tails: Vec<f64> = xs.iter().map(|&x| poisson_block(q, with_h, x)).collect();
    let fit = loglog_fit(&xs, &tails);
    let mut r = EstimateReport::new(
        if with_h { "h_poisson_tail" } else { "poisson_tail" },
        "P^q and H P^q integrable on N-bar for q > 1",
    );
    r.window = (xs[0], xs[8]);
    r.claimed = 1.0 - q;
    r.tolerance = 0.1;
    if let Some(fit) = fit {
        r.fitted = fit.slope;
        r.scatter = fit.max_residual;
        // the H factor only adds 1/(ln X + 1/(q−1)) to the slope
        r.verdict = Verdict::from_bool(fit.slope < 0.0 && fit.slope <= r.claimed + r.tolerance);
    } else {
        r.verdict = Verdict::Fail;
    }
    r.detail("q", q)
}

/// A real kernel κ(x, t) on N̄A in coordinates (v̄_x a(t)).
#[derive(Clone)]
pub struct GroupKernel {
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub label: String,
}

impl std::fmt::Debug for GroupKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupKernel").field("label", &self.label).finish()
    }
}

impl GroupKernel {
    pub fn new<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(label: impl Into<String>, f: F) -> Self {
        GroupKernel { f: Arc::new(f), label: label.into() }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }

    /// A sum of 1–3 separable C^∞ bumps with random signs, supported in |x| < 2.2, |t| < 1.2.
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let k = rng.gen_range(1..=3);
        let parts: Vec<(f64, f64, f64, f64, f64)> = (0..k)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.5..1.2),
                    rng.gen_range(0.4..0.7),
                )
            })
            .collect();
        let label = format!("random({k} bumps)");
        GroupKernel::new(label, move |x, t| {
            parts.iter().map(|&(a, cx, ct, wx, wt)| a * smooth_bump((x - cx) / wx) * smooth_bump((t - ct) / wt)).sum()
        })
    }
}

/// e^{1 − 1/(1 − r²)} on |r| < 1, zero outside.
pub fn smooth_bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Uniform grid on [−x_max, x_max] × [−t_max, t_max]; test functions live on |t| ≤ t_max/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferenceGrid {
    pub n_x: usize,
    pub n_t: usize,
    pub x_max: f64,
    pub t_max: f64,
}

impl Default for TransferenceGrid {
    fn default() -> Self {
        TransferenceGrid { n_x: 64, n_t: 64, x_max: 3.0, t_max: 1.5 }
    }
}

impl TransferenceGrid {
    fn hx(&self) -> f64 {
        2.0 * self.x_max / (self.n_x - 1) as f64
    }
    fn ht(&self) -> f64 {
        2.0 * self.t_max / (self.n_t - 1) as f64
    }
    fn x(&self, j: usize) -> f64 {
        -self.x_max + j as f64 * self.hx()
    }
    fn t(&self, k: usize) -> f64 {
        -self.t_max + k as f64 * self.ht()
    }
    pub fn halved(&self) -> Self {
        TransferenceGrid { n_x: self.n_x / 2, n_t: self.n_t / 2, ..*self }
    }
}

type Fc = FftComplex<f64>;

/// Right convolution f ↦ f * κ on the grid, with
/// (f*κ)(x,t) = ∫∫ f(y,s) κ(e^s(x−y), t−s) e^s dy ds and left Haar measure e^t dx dt.
struct GroupOperator {
    grid: TransferenceGrid,
    len: usize,
    /// spectra[k * n_t + l]: FFT of the x-kernel coupling input row l to output row k.
    spectra: Vec<Vec<Fc>>,
    input_rows: Vec<usize>,
    weights: Vec<f64>,
    fft: Arc<dyn rustfft::Fft<f64>>,
    ifft: Arc<dyn rustfft::Fft<f64>>,
}

impl GroupOperator {
    fn new(kernel: &GroupKernel, grid: TransferenceGrid) -> Self {
        let (nx, nt) = (grid.n_x, grid.n_t);
        let len = (2 * nx).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let (hx, ht) = (grid.hx(), grid.ht());
        let input_rows: Vec<usize> = (0..nt).filter(|&l| grid.t(l).abs() <= 0.5 * grid.t_max + 1e-12).collect();
        let spectra: Vec<Vec<Fc>> = (0..nt * nt)
            .into_par_iter()
            .map(|idx| {
                let (k, l) = (idx / nt, idx % nt);
                let s = grid.t(l);
                let mut buf = vec![Fc::new(0.0, 0.0); len];
                for d in -(nx as i64 - 1)..(nx as i64) {
                    let v = kernel.eval(s.exp() * d as f64 * hx, grid.t(k) - s) * s.exp() * hx * ht;
                    let pos = if d >= 0 { d as usize } else { (len as i64 + d) as usize };
                    buf[pos] = Fc::new(v, 0.0);
                }
                fft.process(&mut buf);
                buf
            })
            .collect();
        let weights = (0..nt).map(|k| grid.t(k).exp() * hx * ht).collect();
        GroupOperator { grid, len, spectra, input_rows, weights, fft, ifft }
    }

    fn transform_rows(&self, rows: &[Vec<f64>], scale_by_weight: bool) -> Vec<Vec<Fc>> {
        rows.iter()
            .enumerate()
            .map(|(l, row)| {
                let w = if scale_by_weight { self.weights[l] } else { 1.0 };
                let mut buf = vec![Fc::new(0.0, 0.0); self.len];
                for (j, v) in row.iter().enumerate() {
                    buf[j] = Fc::new(v * w, 0.0);
                }
                self.fft.process(&mut buf);
                buf
            })
            .collect()
    }

    fn apply(&self, f: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nt = self.grid.n_t;
        let spec = self.transform_rows(f, false);
        (0..nt)
            .into_par_iter()
            .map(|k| {
                let mut acc = vec![Fc::new(0.0, 0.0); self.len];
                for &l in &self.input_rows {
                    let c = &self.spectra[k * nt + l];
                    for ((a, x), y) in acc.iter_mut().zip(c).zip(&spec[l]) {
                        *a += x * y;
                    }
                }
                self.ifft.process(&mut acc);
                acc[..self.grid.n_x].iter().map(|z| z.re / self.len as f64).collect()
            })
            .collect()
    }

    /// Adjoint with respect to the weighted pairing, restricted to the input rows.
    fn adjoint(&self, g: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nt = self.grid.n_t;
        let spec = self.transform_rows(g, true);
        (0..nt)
            .into_par_iter()
            .map(|l| {
                if !self.input_rows.contains(&l) {
                    return vec![0.0; self.grid.n_x];
                }
                let mut acc = vec![Fc::new(0.0, 0.0); self.len];
                for k in 0..nt {
                    let c = &self.spectra[k * nt + l];
                    for ((a, x), y) in acc.iter_mut().zip(c).zip(&spec[k]) {
                        *a += x.conj() * y;
                    }
                }
                self.ifft.process(&mut acc);
                acc[..self.grid.n_x].iter().map(|z| z.re / self.len as f64 / self.weights[l]).collect()
            })
            .collect()
    }

    fn norm_p(&self, f: &[Vec<f64>], p: f64) -> f64 {
        f.iter().zip(&self.weights).map(|(row, w)| w * row.iter().map(|v| v.abs().powf(p)).sum::<f64>()).sum::<f64>().powf(1.0 / p)
    }
}

fn dualize(v: &[Vec<f64>], q: f64) -> Vec<Vec<f64>> {
    v.iter().map(|row| row.iter().map(|x| x.signum() * x.abs().powf(q - 1.0)).collect()).collect()
}

/// Boyd's power method for ‖T‖_{p→p}; returns the best ratio found (a lower bound).
fn power_method<A, B, N>(apply: A, adjoint: B, norm: N, start: Vec<Vec<f64>>, p: f64, iterations: usize) -> f64
where
    A: Fn(&[Vec<f64>]) -> Vec<Vec<f64>>,
    B: Fn(&[Vec<f64>]) -> Vec<Vec<f64>>,
    N: Fn(&[Vec<f64>], f64) -> f64,
{
    let q = p / (p - 1.0);
    let mut x = start;
    let mut best: f64 = 0.0;
    for _ in 0..iterations {
        let nx = norm(&x, p);
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|row| row.iter_mut().for_each(|v| *v /= nx));
        let y = apply(&x);
        let ratio = norm(&y, p);
        if ratio == 0.0 {
            break;
        }
        let improved = ratio > best * (1.0 + 1e-7);
        best = best.max(ratio);
        if !improved && best > 0.0 && ratio <= best {
            break;
        }
        let z = adjoint(&dualize(&y, p));
        x = dualize(&z, q);
    }
    best
}

const POWER_ITERATIONS: usize = 40;
const STARTS: usize = 4;

/// Empirical ‖f ↦ f*κ‖_{L^p(N̄A)} on the grid (lower bound).
pub fn group_convolution_norm(kernel: &GroupKernel, p: f64, grid: TransferenceGrid, seed: u64) -> f64 {
    let op = GroupOperator::new(kernel, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for s in 0..STARTS {
        let start: Vec<Vec<f64>> = (0..grid.n_t)
            .map(|l| {
                (0..grid.n_x)
                    .map(|j| {
                        if !op.input_rows.contains(&l) {
                            0.0
                        } else if s == 0 {
                            // a broad positive profile
                            smooth_bump(grid.x(j) / grid.x_max) * smooth_bump(2.0 * grid.t(l) / grid.t_max)
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        best = best.max(power_method(|f| op.apply(f), |g| op.adjoint(g), |f, p| op.norm_p(f, p), start, p, POWER_ITERATIONS));
    }
    best
}

/// Empirical ‖φ‖_{Cv_p(ℝ)} for φ sampled on the uniform grid with step h (lower bound).
pub fn line_convolution_norm(phi: &[f64], h: f64, p: f64, seed: u64) -> f64 {
    let n = phi.len();
    let center = (n - 1) as i64 / 2;
    // (Sf)_i = Σ_j φ(t_i − t_j) f_j h with φ indexed around the center
    let kernel = |d: i64| -> f64 {
        let idx = d + center;
        if idx >= 0 && (idx as usize) < n {
            phi[idx as usize] * h
        } else {
            0.0
        }
    };
    let apply = |f: &[Vec<f64>]| -> Vec<Vec<f64>> {
        vec![(0..n).map(|i| (0..n).map(|j| kernel(i as i64 - j as i64) * f[0][j]).sum()).collect()]
    };
    let adjoint = |g: &[Vec<f64>]| -> Vec<Vec<f64>> {
        vec![(0..n).map(|j| (0..n).map(|i| kernel(i as i64 - j as i64) * g[0][i]).sum()).collect()]
    };
    let norm = |f: &[Vec<f64>], p: f64| -> f64 { (h * f[0].iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for s in 0..STARTS {
        let start = vec![(0..n)
            .map(|i| if s == 0 { smooth_bump((i as f64 - center as f64) / n as f64 * 2.0) } else { rng.gen_range(-1.0..1.0) })
            .collect()];
        best = best.max(power_method(apply, adjoint, norm, start, p, POWER_ITERATIONS));
    }
    best
}

/// ∫_{N̄} ‖(𝒟^{1/p}κ)(v̄_x ·)‖_{Cv_p(A)} dx with 𝒟(v̄_x a(t)) = e^t, and the L¹ companion.
pub fn transference_rhs(kernel: &GroupKernel, p: f64, grid: TransferenceGrid, seed: u64) -> (f64, f64) {
    let ht = grid.ht();
    // slices are sampled on a symmetric grid wide enough for all differences t − s
    let n = 2 * grid.n_t - 1;
    let ts: Vec<f64> = (0..n).map(|k| (k as f64 - (grid.n_t - 1) as f64) * ht).collect();
    let rows: Vec<(f64, f64)> = (0..grid.n_x)
        .into_par_iter()
        .map(|j| {
            let x = grid.x(j);
            let phi: Vec<f64> = ts.iter().map(|&t| (t / p).exp() * kernel.eval(x, t)).collect();
            let l1 = phi.iter().map(|v| v.abs()).sum::<f64>() * ht;
            if l1 == 0.0 {
                return (0.0, 0.0);
            }
            (line_convolution_norm(&phi[grid.n_t / 2..grid.n_t / 2 + grid.n_t], ht, p, seed ^ j as u64), l1)
        })
        .collect();
    let hx = grid.hx();
    (rows.iter().map(|r| r.0).sum::<f64>() * hx, rows.iter().map(|r| r.1).sum::<f64>() * hx)
}

/// One trial of the transference inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferenceTrial {
    pub label: String,
    pub lhs: f64,
    pub lhs_coarse: f64,
    pub rhs: f64,
    pub rhs_l1: f64,
    pub verdict: Verdict,
}

pub const TRANSFERENCE_SLACK: f64 = 0.05;

pub fn transference_trial(kernel: &GroupKernel, p: f64, grid: TransferenceGrid, seed: u64) -> TransferenceTrial {
    let lhs = group_convolution_norm(kernel, p, grid, seed);
    let lhs_coarse = group_convolution_norm(kernel, p, grid.halved(), seed);
    let (rhs, rhs_l1) = transference_rhs(kernel, p, grid, seed);
    let stable = (lhs - lhs_coarse).abs() <= 0.1 * lhs.max(lhs_coarse);
    let verdict = if lhs <= rhs * (1.0 + TRANSFERENCE_SLACK) {
        Verdict::Pass
    } else if !stable {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    TransferenceTrial { label: kernel.label.clone(), lhs, lhs_coarse, rhs, rhs_l1, verdict }
}

/// Runs `trials` random kernels; PASS iff no trial violates LHS ≤ RHS·(1 + 5%).
pub fn transference_check(p: f64, trials: usize, grid: TransferenceGrid, seed: u64) -> Result<(EstimateReport, Vec<TransferenceTrial>)> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(domain("transference_check", "p must lie in (1, 2]"));
    }
    if grid.n_x < 8 || grid.n_t < 8 {
        return Err(Error::Config("transference grid needs at least 8 points per axis".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels: Vec<(GroupKernel, u64)> = (0..trials).map(|_| (GroupKernel::random(&mut rng), rng.gen())).collect();
    let results: Vec<TransferenceTrial> = kernels.iter().map(|(k, s)| transference_trial(k, p, grid, *s)).collect();
    let violations = results.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let inconclusive = results.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    let worst = results.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
    let mut report = EstimateReport::new("transference", "||k||_{Cv_p(NA)} <= int_N ||D^{1/p} k(n.)||_{Cv_p(A)} dn");
    report.surrogate = Some("empirical lower bounds on both sides (power method)".into());
    report.fitted = worst;
    report.claimed = 1.0;
    report.tolerance = TRANSFERENCE_SLACK;
    report.verdict = if violations > 0 {
        Verdict::Fail
    } else if inconclusive > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let report = report.detail("trials", trials as f64).detail("violations", violations as f64).detail("inconclusive", inconclusive as f64);
    Ok((report, results))
}
