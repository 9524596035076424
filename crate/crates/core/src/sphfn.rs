//! Spherical functions φ_λ(t): the radial ODE oracle, the local Bessel
//! expansion A(λ,t) = w(t)𝒥_{n/2−1}(λt), and the Harish-Chandra series.

use crate::error::{domain, Error, Result};
use crate::numeric::ode::{dopri5, OdeOptions, State};
use crate::report::{EstimateReport, Verdict};
use crate::space::RankOneSpace;
use crate::specfun::{bessel_cj, c_function, gamma_ell};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Start of the numerical integration; below it the even power series is used.
pub const SERIES_LAUNCH: f64 = 1e-3;
pub const T_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    Local,
    Hc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalSample {
    pub lambda: Complex64,
    pub t: f64,
    pub value: Complex64,
    pub method: Method,
    pub est_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { rtol: 1e-12, atol: 1e-14, max_steps: 2_000_000 }
    }
}

impl OracleOptions {
    pub fn tightened(self, factor: f64) -> Self {
        OracleOptions { rtol: self.rtol / factor, atol: self.atol / factor, ..self }
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// p(t) = m_α coth t + 2m_2α coth 2t.
fn drift(space: &RankOneSpace, t: f64) -> f64 {
    space.m_alpha() as f64 * coth(t) + 2.0 * space.m_2alpha() as f64 * coth(2.0 * t)
}

/// u and u′ from u = 1 + a t² + b t⁴ near 0.
fn series_start(space: &RankOneSpace, lambda: Complex64, t: f64) -> (Complex64, Complex64) {
    let n = space.n() as f64;
    let e = lambda * lambda + space.rho() * space.rho();
    let k = (space.m_alpha() as f64 + 4.0 * space.m_2alpha() as f64) / 3.0;
    let a = -e / (2.0 * n);
    let b = -a * (e + 2.0 * k) / (4.0 * (n + 2.0));
    let t2 = t * t;
    (1.0 + a * t2 + b * t2 * t2, a * 2.0 * t + b * 4.0 * t2 * t)
}

/// (φ_λ(t), ∂_tφ_λ(t)) at each t of the ascending list `ts` ⊂ [0, 30].
///
/// Integrates v = e^{ρt}u, which satisfies v″ + (p − 2ρ)v′ + (λ² + 2ρ² − ρp)v = 0 and
/// stays bounded for real λ.
pub fn radial_solution(
    space: &RankOneSpace,
    lambda: Complex64,
    ts: &[f64],
    opts: OracleOptions,
) -> Result<Vec<(Complex64, Complex64)>> {
    let rho = space.rho();
    if lambda.im.abs() > rho + 1e-12 {
        return Err(domain("phi_oracle", format!("|Im lambda| = {} exceeds rho = {rho}", lambda.im.abs())));
    }
    if ts.iter().any(|t| !(0.0..=T_MAX).contains(t)) {
        return Err(domain("phi_oracle", format!("t must lie in [0, {T_MAX}]")));
    }
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("phi_oracle", "t values must be ascending"));
    }
    let mut out = Vec::with_capacity(ts.len());
    let split = ts.partition_point(|&t| t <= SERIES_LAUNCH);
    for &t in &ts[..split] {
        out.push(series_start(space, lambda, t));
    }
    if split == ts.len() {
        return Ok(out);
    }
    let t0 = SERIES_LAUNCH;
    let (u0, du0) = series_start(space, lambda, t0);
    let g0 = (rho * t0).exp();
    let y0: State = [u0 * g0, (du0 + u0 * rho) * g0];
    let l2 = lambda * lambda;
    let rhs = move |t: f64, y: &State| -> State {
        let p = drift(space, t);
        [y[1], -(y[1] * (p - 2.0 * rho)) - y[0] * (l2 + 2.0 * rho * rho - rho * p)]
    };
    let ode = OdeOptions { rtol: opts.rtol, atol: opts.atol, h_init: 1e-4, max_steps: opts.max_steps };
    let states = dopri5(rhs, t0, y0, &ts[split..], ode)
        .map_err(|e| Error::Integration(format!("radial ODE at lambda = {lambda}: {e:?}")))?;
    for (&t, y) in ts[split..].iter().zip(&states) {
        let g = (-rho * t).exp();
        out.push((y[0] * g, (y[1] - y[0] * rho) * g));
    }
    Ok(out)
}

/// φ_λ(t) from the radial ODE.
pub fn phi_oracle(space: &RankOneSpace, lambda: Complex64, t: f64) -> Result<Complex64> {
    Ok(radial_solution(space, lambda, &[t], OracleOptions::default())?[0].0)
}

/// φ_λ on an ascending grid in one integration sweep.
pub fn phi_oracle_grid(space: &RankOneSpace, lambda: Complex64, ts: &[f64]) -> Result<Vec<Complex64>> {
    Ok(radial_solution(space, lambda, ts, OracleOptions::default())?.into_iter().map(|s| s.0).collect())
}

/// φ_λ at arbitrary (unsorted) t values.
pub fn phi_oracle_unsorted(space: &RankOneSpace, lambda: Complex64, ts: &[f64], opts: OracleOptions) -> Result<Vec<Complex64>> {
    let mut idx: Vec<usize> = (0..ts.len()).collect();
    idx.sort_by(|&a, &b| ts[a].partial_cmp(&ts[b]).unwrap());
    let sorted: Vec<f64> = idx.iter().map(|&i| ts[i]).collect();
    let vals = radial_solution(space, lambda, &sorted, opts)?;
    let mut out = vec![Complex64::new(0.0, 0.0); ts.len()];
    for (k, &i) in idx.iter().enumerate() {
        out[i] = vals[k].0;
    }
    Ok(out)
}

/// A(λ,t) = w(t) 𝒥_{n/2−1}(λt) without the r₀ gate.
pub fn local_leading_term(space: &RankOneSpace, lambda: Complex64, t: f64) -> Complex64 {
    bessel_cj(space.bessel_order(), lambda * t) * space.weight_unchecked(t)
}

/// Local expansion on 0 < t ≤ r₀ with its deviation from the oracle.
pub fn phi_local(space: &RankOneSpace, lambda: Complex64, t: f64, r0: f64) -> Result<SphericalSample> {
    if !(t > 0.0 && t <= r0) {
        return Err(domain("phi_local", format!("t = {t} outside (0, r0 = {r0}]")));
    }
    let value = local_leading_term(space, lambda, t);
    let oracle = phi_oracle(space, lambda, t)?;
    Ok(SphericalSample { lambda, t, value, method: Method::Local, est_error: (oracle - value).norm() })
}

/// c(λ)e^{(iλ−ρ)t}[1 + e^{−2t}ω_L(λ,t)] + (λ → −λ).
pub fn hc_series_value(space: &RankOneSpace, lambda: Complex64, t: f64, big_l: usize) -> Result<Complex64> {
    if t < 0.5 {
        return Err(domain("phi_hc", "the series is used only for t >= 1/2"));
    }
    let rho = space.rho();
    let mut total = Complex64::new(0.0, 0.0);
    for s in [lambda, -lambda] {
        let c = c_function(space, s)?.value;
        let g = gamma_ell(space, s, big_l)?;
        let lead = ((Complex64::i() * s - rho) * t).exp();
        total += c * lead * (1.0 + g.omega(t, big_l) * (-2.0 * t).exp());
    }
    Ok(total)
}

/// Below this t the fast evaluator integrates the ODE; above it sums the Harish-Chandra series.
pub const HC_SWITCH: f64 = 1.0;
const HC_TERMS: usize = 40;
/// Closer to λ = 0 the two series terms cancel; the fast evaluator stays on the ODE.
const HC_MIN_MODULUS: f64 = 0.25;

/// φ_λ on an ascending grid: ODE below [`HC_SWITCH`], the precomputed series above it.
/// Agrees with [`phi_oracle_grid`] to about 10⁻¹¹.
pub fn phi_fast_grid(space: &RankOneSpace, lambda: Complex64, ts: &[f64]) -> Result<Vec<Complex64>> {
    let split = ts.partition_point(|&t| t < HC_SWITCH);
    if lambda.norm() < HC_MIN_MODULUS || split == ts.len() {
        return phi_oracle_grid(space, lambda, ts);
    }
    let rho = space.rho();
    let mut branches = Vec::with_capacity(2);
    for s in [lambda, -lambda] {
        let parts = c_function(space, s).and_then(|c| Ok((c.value, gamma_ell(space, s, HC_TERMS)?)));
        match parts {
            Ok((c, g)) => branches.push((s, c, g)),
            Err(_) => return phi_oracle_grid(space, lambda, ts),
        }
    }
    let mut out = phi_oracle_grid(space, lambda, &ts[..split])?;
    out.extend(ts[split..].iter().map(|&t| {
        branches
            .iter()
            .map(|(s, c, g)| c * ((Complex64::i() * s - rho) * t).exp() * (1.0 + g.omega(t, HC_TERMS) * (-2.0 * t).exp()))
            .sum::<Complex64>()
    }));
    Ok(out)
}

pub fn phi_hc(space: &RankOneSpace, lambda: Complex64, t: f64, big_l: usize) -> Result<SphericalSample> {
    let value = hc_series_value(space, lambda, t, big_l)?;
    let oracle = phi_oracle(space, lambda, t)?;
    Ok(SphericalSample { lambda, t, value, method: Method::Hc, est_error: (oracle - value).norm() })
}

pub fn phi_oracle_sample(space: &RankOneSpace, lambda: Complex64, t: f64) -> Result<SphericalSample> {
    let value = phi_oracle(space, lambda, t)?;
    let tight = radial_solution(space, lambda, &[t], OracleOptions::default().tightened(10.0))?[0].0;
    Ok(SphericalSample { lambda, t, value, method: Method::Oracle, est_error: (tight - value).norm() })
}

/// max |φ_λ(t) − φ_{−λ}(t)| over the grids; passes below 10⁻⁸.
pub fn weyl_symmetry_check(space: &RankOneSpace, lambdas: &[Complex64], ts: &[f64]) -> Result<EstimateReport> {
    let mut sorted = ts.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut worst = 0.0f64;
    for &l in lambdas {
        let a = phi_oracle_grid(space, l, &sorted)?;
        let b = phi_oracle_grid(space, -l, &sorted)?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).norm());
        }
    }
    let mut r = EstimateReport::new(format!("weyl_symmetry[{space}]"), "|phi_lambda - phi_-lambda| <= 1e-8");
    r.fitted = worst;
    r.claimed = 1e-8;
    r.window = (sorted[0], *sorted.last().unwrap());
    r.verdict = Verdict::from_bool(worst <= 1e-8);
    Ok(r)
}

/// Residual of the radial equation at t, by central differences of the oracle.
pub fn ode_residual(space: &RankOneSpace, lambda: Complex64, t: f64) -> Result<f64> {
    let h = 1e-3 * t.max(0.1);
    let ts = [t - 2.0 * h, t - h, t, t + h, t + 2.0 * h];
    let u = phi_oracle_grid(space, lambda, &ts)?;
    // fourth-order stencils
    let d1 = (u[0] - u[1] * 8.0 + u[3] * 8.0 - u[4]) / (12.0 * h);
    let d2 = (-u[0] + u[1] * 16.0 - u[2] * 30.0 + u[3] * 16.0 - u[4]) / (12.0 * h * h);
    let res = d2 + d1 * drift(space, t) + u[2] * (lambda * lambda + space.rho() * space.rho());
    Ok(res.norm())
}
