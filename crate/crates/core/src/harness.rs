//! Operator experiments on H2×H2 restricted to bi-radial functions, empirical
//! L^p norm lower bounds, experiment configuration and the named check suites.
//!
//! A bi-radial function is sampled at Gauss nodes (r1_i, r2_k) of [0, R]². The
//! multiplier operator acts spectrally, B = (ℋ1⁻¹ ⊗ ℋ2⁻¹) ∘ m ∘ (ℋ1 ⊗ ℋ2), which
//! is the bi-invariant convolution with k_B. The regularizer is the heat
//! semigroup e^{−ε(λ1²+ρ1²+λ2²+ρ2²)}; it is an L^p contraction, so every
//! empirical norm of the regularized operator is also a lower bound for the
//! unregularized one.
//!
//! Norms found here are lower bounds only. The boundedness constant is not
//! computable, so the tested property is stability under grid refinement.

use crate::error::{domain, Error, Result};
use crate::group::{smooth_bump, transference_check, TransferenceGrid};
use crate::kernels::{bump_bc, paper_bound_battery, KernelConfig};
use crate::mult::{builtin_multiplier, independence_witness, MultiplierKind, MultiplierSpec};
use crate::numeric::fit::{logspace, loglog_fit};
use crate::numeric::quad::{NeumaierSum, QuadRule};
use crate::report::Verdict;
use crate::space::{Exponent, ProductSpace, RankOneSpace};
use crate::specfun::{plancherel_constant, plancherel_density};
use crate::sphfn::{hc_series_value, local_leading_term, ode_residual, phi_oracle, weyl_symmetry_check};
use crate::transform::{inversion_rule, phi_table};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

type C = Complex64;

/// Gauss nodes per radial panel.
const RADIAL_NODES: usize = 8;
/// Spectral tail beyond Λ is below e^{−TAIL}.
const TAIL: f64 = 20.0;
/// The radial grids resolve φ_λ up to this frequency.
const LAMBDA_CAP: f64 = 24.0;
/// Kernel grid used to split k_B into the B0/B1/B2 pieces.
const KERNEL_RADIUS: f64 = 12.0;
const KERNEL_PANEL: f64 = 0.25;
/// Relative change of the ratio below which a power iteration has converged.
const CONVERGED: f64 = 1e-5;
/// Resolution spread tolerated by the stability verdict.
pub const STABILITY_SPREAD: f64 = 0.10;

mod space_str {
    use crate::space::ProductSpace;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &ProductSpace, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ProductSpace, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierChoice {
    /// imaginary_powers, gaussian, constant, euclid_marc or critical_powers.
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl MultiplierChoice {
    pub fn new(kind: &str, params: &[f64]) -> Self {
        MultiplierChoice { kind: kind.into(), params: params.to_vec() }
    }

    pub fn build(&self, space: &ProductSpace, p: &Exponent) -> Result<MultiplierSpec> {
        builtin_multiplier(space, p, MultiplierKind::parse(&self.kind, &self.params)?)
    }
}

fn default_space() -> ProductSpace {
    ProductSpace::new(RankOneSpace::H2, RankOneSpace::H2)
}
fn default_resolutions() -> Vec<usize> {
    vec![64, 128, 192]
}
fn default_radius() -> f64 {
    6.0
}
fn default_support() -> f64 {
    3.0
}
fn default_eps() -> f64 {
    0.2
}
fn default_trials() -> usize {
    6
}
fn default_iterations() -> usize {
    30
}
fn default_seed() -> u64 {
    7
}

/// One operator experiment. Functions are bi-radial, so there is no angular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_space", with = "space_str")]
    pub space: ProductSpace,
    pub p: f64,
    pub multiplier: MultiplierChoice,
    /// Radial nodes per factor, increasing; the last one is the reference resolution.
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    /// Each factor is sampled on [0, radius].
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Random starting functions live in [0, support]².
    #[serde(default = "default_support")]
    pub support: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Power iterations per trial.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(p: f64, multiplier: MultiplierChoice) -> Self {
        ExperimentConfig {
            space: default_space(),
            p,
            multiplier,
            resolutions: default_resolutions(),
            radius: default_radius(),
            support: default_support(),
            epsilon: default_eps(),
            trials: default_trials(),
            iterations: default_iterations(),
            seed: default_seed(),
            threads: None,
            out_dir: None,
        }
    }

    /// Parses and validates JSON; errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.space.x1 != RankOneSpace::H2 || self.space.x2 != RankOneSpace::H2 {
            return Err(Error::Unsupported(format!("operator experiments run on H2xH2 only, not {}", self.space)));
        }
        Exponent::new(self.p)?;
        let bad_res = |n: &usize| *n < 2 * RADIAL_NODES || n % RADIAL_NODES != 0;
        if self.resolutions.is_empty() || self.resolutions.iter().any(bad_res) {
            return Err(Error::Config(format!("at `resolutions`: entries must be multiples of {RADIAL_NODES}, at least {}", 2 * RADIAL_NODES)));
        }
        if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("at `resolutions`: must be strictly increasing".into()));
        }
        if !(self.radius > 0.0 && self.radius <= 20.0) {
            return Err(Error::Config("at `radius`: must lie in (0, 20]".into()));
        }
        if !(self.support > 0.0 && self.support <= self.radius) {
            return Err(Error::Config("at `support`: must lie in (0, radius]".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("at `epsilon`: must be positive".into()));
        }
        if self.trials == 0 || self.iterations == 0 {
            return Err(Error::Config("at `trials`/`iterations`: must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("at `threads`: must be positive".into()));
        }
        Ok(())
    }

    pub fn reference_resolution(&self) -> usize {
        *self.resolutions.last().expect("validated")
    }

    fn exponent(&self) -> Exponent {
        Exponent::new(self.p).expect("validated")
    }
}

/// Radial and spectral discretization of one factor.
#[derive(Debug, Clone)]
struct Factor {
    r: Vec<f64>,
    /// δ(r) times the radial quadrature weight.
    vol: Vec<f64>,
    lambda: QuadRule,
    /// ℋ as an (nλ × n) matrix: φ_λ(r) vol(r).
    forward: Array2<C>,
    /// ℋ⁻¹ on even symbols as an (n × nλ) matrix: 2C_ν φ_λ(r) |c(λ)|^{−2} w_λ.
    inverse: Array2<C>,
}

impl Factor {
    fn new(space: &RankOneSpace, radius: f64, n: usize, lambda: &QuadRule) -> Result<Self> {
        Self::from_rules(space, &radial_rule(radius, n / RADIAL_NODES), lambda)
    }

    fn from_rules(space: &RankOneSpace, rr: &QuadRule, lr: &QuadRule) -> Result<Self> {
        let lambdas: Vec<C> = lr.nodes.iter().map(|&l| C::new(l, 0.0)).collect();
        let table = phi_table(space, &lambdas, &rr.nodes)?;
        let vol: Vec<f64> = rr.nodes.iter().zip(&rr.weights).map(|(&r, &w)| space.density_unchecked(r) * w).collect();
        let cnu = 2.0 * plancherel_constant(space);
        let spec: Vec<f64> = lr.nodes.iter().zip(&lr.weights).map(|(&l, &w)| cnu * plancherel_density(space, l) * w).collect();
        let forward = Array2::from_shape_fn((lr.len(), rr.len()), |(j, i)| table[j][i] * vol[i]);
        let inverse = Array2::from_shape_fn((rr.len(), lr.len()), |(i, j)| table[j][i] * spec[j]);
        Ok(Factor { r: rr.nodes.clone(), vol, lambda: lr.clone(), forward, inverse })
    }
}

fn radial_rule(radius: f64, panels: usize) -> QuadRule {
    let breaks: Vec<f64> = (0..=panels).map(|k| radius * k as f64 / panels as f64).collect();
    QuadRule::composite(&breaks, RADIAL_NODES)
}

/// m(λ1, λ2) e^{−ε(λ1²+ρ1²+λ2²+ρ2²)} on a tensor grid.
fn heat_symbol(space: &ProductSpace, m: &MultiplierSpec, eps: f64, l1: &[f64], l2: &[f64]) -> Array2<C> {
    let (r1, r2) = space.rho();
    Array2::from_shape_fn((l1.len(), l2.len()), |(j, k)| {
        let (a, b) = (l1[j], l2[k]);
        m.eval(C::new(a, 0.0), C::new(b, 0.0)) * (-eps * (a * a + r1 * r1 + b * b + r2 * r2)).exp()
    })
}

/// A bi-radial function sampled at grid nodes: values[i][k] = f(r1_i, r2_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub values: Vec<Vec<C>>,
}

impl SampledFunction {
    fn to_array(&self) -> Array2<C> {
        Array2::from_shape_fn((self.r1.len(), self.r2.len()), |(i, k)| self.values[i][k])
    }

    fn from_array(r1: &[f64], r2: &[f64], a: &Array2<C>) -> Self {
        SampledFunction { r1: r1.to_vec(), r2: r2.to_vec(), values: a.outer_iter().map(|row| row.to_vec()).collect() }
    }
}

/// Bf together with the share of ‖Bf‖₂² within distance 1 of the box edge, a
/// proxy for the mass lost to truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub output: SampledFunction,
    pub truncation_mass: f64,
}

/// The discretized operator at one resolution.
#[derive(Debug, Clone)]
pub struct BiRadialOperator {
    space: ProductSpace,
    m: MultiplierSpec,
    epsilon: f64,
    lambda_max: f64,
    f1: Factor,
    f2: Factor,
    symbol: Array2<C>,
}

impl BiRadialOperator {
    /// The operator of `cfg` with `n` radial nodes per factor.
    pub fn new(cfg: &ExperimentConfig, n: usize) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.multiplier.build(&cfg.space, &cfg.exponent())?;
        Self::with_multiplier(cfg, m, n)
    }

    pub fn with_multiplier(cfg: &ExperimentConfig, m: MultiplierSpec, n: usize) -> Result<Self> {
        if n < 2 * RADIAL_NODES || n % RADIAL_NODES != 0 {
            return Err(Error::Config(format!("resolution {n} must be a multiple of {RADIAL_NODES}, at least {}", 2 * RADIAL_NODES)));
        }
        let lambda_max = (TAIL / (cfg.epsilon + m.gaussian_rate)).sqrt().min(LAMBDA_CAP);
        let lr = inversion_rule(lambda_max, cfg.radius, 1.0);
        let f1 = Factor::new(&cfg.space.x1, cfg.radius, n, &lr)?;
        let f2 = Factor::new(&cfg.space.x2, cfg.radius, n, &lr)?;
        let symbol = heat_symbol(&cfg.space, &m, cfg.epsilon, &f1.lambda.nodes, &f2.lambda.nodes);
        Ok(BiRadialOperator { space: cfg.space, m, epsilon: cfg.epsilon, lambda_max, f1, f2, symbol })
    }

    fn with_symbol(&self, symbol: Array2<C>) -> Self {
        BiRadialOperator { symbol, ..self.clone() }
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.f1.r, &self.f2.r)
    }

    pub fn spectral_points(&self) -> usize {
        self.f1.lambda.len()
    }

    pub fn sample<F: Fn(f64, f64) -> C>(&self, f: F) -> SampledFunction {
        let values = self.f1.r.iter().map(|&a| self.f2.r.iter().map(|&b| f(a, b)).collect()).collect();
        SampledFunction { r1: self.f1.r.clone(), r2: self.f2.r.clone(), values }
    }

    fn sample_array<F: Fn(f64, f64) -> C>(&self, f: F) -> Array2<C> {
        Array2::from_shape_fn((self.f1.r.len(), self.f2.r.len()), |(i, k)| f(self.f1.r[i], self.f2.r[k]))
    }

    fn apply_with(&self, f: &Array2<C>, conj: bool) -> Array2<C> {
        let mut g = self.f1.forward.dot(f).dot(&self.f2.forward.t());
        if conj {
            g.zip_mut_with(&self.symbol, |a, s| *a *= s.conj());
        } else {
            g.zip_mut_with(&self.symbol, |a, s| *a *= s);
        }
        self.f1.inverse.dot(&g).dot(&self.f2.inverse.t())
    }

    fn apply_array(&self, f: &Array2<C>) -> Array2<C> {
        self.apply_with(f, false)
    }

    /// Adjoint for the pairing Σ vol1 vol2 f ḡ; the radial φ_λ are real.
    fn adjoint_array(&self, g: &Array2<C>) -> Array2<C> {
        self.apply_with(g, true)
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<Applied> {
        if f.r1 != self.f1.r || f.r2 != self.f2.r {
            return Err(domain("apply_operator", "function is not sampled on the operator grid"));
        }
        let out = self.apply_array(&f.to_array());
        Ok(Applied { truncation_mass: self.edge_fraction(&out), output: SampledFunction::from_array(&self.f1.r, &self.f2.r, &out) })
    }

    fn edge_fraction(&self, a: &Array2<C>) -> f64 {
        let edge1 = self.f1.r.last().copied().unwrap_or(0.0) - 1.0;
        let edge2 = self.f2.r.last().copied().unwrap_or(0.0) - 1.0;
        let (mut total, mut shell) = (NeumaierSum::default(), NeumaierSum::default());
        for ((i, k), v) in a.indexed_iter() {
            let w = self.f1.vol[i] * self.f2.vol[k] * v.norm_sqr();
            total.add(w);
            if self.f1.r[i] > edge1 || self.f2.r[k] > edge2 {
                shell.add(w);
            }
        }
        let t = total.value();
        if t > 0.0 {
            shell.value() / t
        } else {
            0.0
        }
    }

    /// (Σ vol1 vol2 |f|^p)^{1/p}, compensated.
    pub fn norm_p(&self, f: &SampledFunction, p: f64) -> f64 {
        self.norm_array(&f.to_array(), p)
    }

    fn norm_array(&self, f: &Array2<C>, p: f64) -> f64 {
        let mut s = NeumaierSum::default();
        for ((i, k), v) in f.indexed_iter() {
            s.add(self.f1.vol[i] * self.f2.vol[k] * v.norm().powf(p));
        }
        s.value().powf(1.0 / p)
    }

    /// sup|m| over the spectral grid, without the regularizer.
    pub fn m_sup(&self) -> f64 {
        let mut s = 0.0f64;
        for &a in &self.f1.lambda.nodes {
            for &b in &self.f2.lambda.nodes {
                s = s.max(self.m.eval(C::new(a, 0.0), C::new(b, 0.0)).norm());
            }
        }
        s
    }

    /// Symbols of B0, B1, B2: ℋ of k_B cut by Φ1Φ2, by Φ1(1−Φ2) + (1−Φ1)Φ2 and by (1−Φ1)(1−Φ2).
    fn piece_symbols(&self) -> Result<[Array2<C>; 3]> {
        let rr = radial_rule(KERNEL_RADIUS, (KERNEL_RADIUS / KERNEL_PANEL).round() as usize);
        let fine = inversion_rule(self.lambda_max, KERNEL_RADIUS, 1.0);
        let (x1, x2) = (self.space.x1, self.space.x2);
        let s = heat_symbol(&self.space, &self.m, self.epsilon, &fine.nodes, &fine.nodes);
        let kernel = Factor::from_rules(&x1, &rr, &fine)?.inverse.dot(&s).dot(&Factor::from_rules(&x2, &rr, &fine)?.inverse.t());
        let h1 = Factor::from_rules(&x1, &rr, &self.f1.lambda)?.forward;
        let h2 = Factor::from_rules(&x2, &rr, &self.f2.lambda)?.forward;
        let cut: Vec<f64> = rr.nodes.iter().map(|&t| bump_bc(t)).collect();
        let weights: [fn(f64, f64) -> f64; 3] =
            [|a, b| a * b, |a, b| a * (1.0 - b) + (1.0 - a) * b, |a, b| (1.0 - a) * (1.0 - b)];
        Ok(weights.map(|w| {
            let piece = Array2::from_shape_fn(kernel.dim(), |(i, k)| kernel[(i, k)] * w(cut[i], cut[k]));
            h1.dot(&piece).dot(&h2.t())
        }))
    }
}

/// B f for f sampled on the grid of `config` at its reference resolution.
pub fn apply_operator(config: &ExperimentConfig, f: &SampledFunction) -> Result<Applied> {
    BiRadialOperator::new(config, config.reference_resolution())?.apply(f)
}

/// Σ a_k bump((r1 − c1_k)/w1_k) bump((r2 − c2_k)/w2_k), drawn independently of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSum {
    pub bumps: Vec<Bump>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: (f64, f64),
    pub width: (f64, f64),
    pub amplitude: C,
}

impl BumpSum {
    pub fn eval(&self, r1: f64, r2: f64) -> C {
        self.bumps
            .iter()
            .map(|b| b.amplitude * smooth_bump((r1 - b.center.0) / b.width.0) * smooth_bump((r2 - b.center.1) / b.width.1))
            .sum()
    }

    /// The first start is a centered bump; the rest are random superpositions.
    pub fn random_starts(count: usize, support: f64, seed: u64) -> Vec<BumpSum> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = (0.5 * support).min(1.5);
        let mut out = vec![BumpSum { bumps: vec![Bump { center: (0.0, 0.0), width: (w, w), amplitude: C::new(1.0, 0.0) }] }];
        while out.len() < count {
            let k = rng.gen_range(1..=4);
            let bumps = (0..k)
                .map(|_| {
                    let width = (rng.gen_range(0.3..1.0f64).min(support), rng.gen_range(0.3..1.0f64).min(support));
                    let center = (rng.gen_range(0.0..=support - width.0), rng.gen_range(0.0..=support - width.1));
                    let amplitude = C::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
                    Bump { center, width, amplitude }
                })
                .collect();
            out.push(BumpSum { bumps });
        }
        out.truncate(count);
        out
    }
}

fn dual_map(u: &Array2<C>, q: f64) -> Array2<C> {
    u.mapv(|z| {
        let a = z.norm();
        if a == 0.0 {
            z
        } else {
            z * a.powf(q - 2.0)
        }
    })
}

struct Trial {
    ratio: f64,
    converged: bool,
    best: Array2<C>,
}

/// Boyd's power method for ‖B‖_{p→p}: f ← J_{p′}(B* J_p(B f)), keeping the best ratio seen.
fn power_method(op: &BiRadialOperator, p: f64, start: Array2<C>, iterations: usize) -> Trial {
    let q = p / (p - 1.0);
    let mut f = start;
    let mut trial = Trial { ratio: 0.0, converged: false, best: f.clone() };
    let mut last = f64::NAN;
    for _ in 0..iterations {
        let nf = op.norm_array(&f, p);
        if !(nf > 0.0 && nf.is_finite()) {
            break;
        }
        f.mapv_inplace(|z| z / nf);
        let g = op.apply_array(&f);
        let r = op.norm_array(&g, p);
        if !r.is_finite() {
            break;
        }
        if r > trial.ratio {
            trial.ratio = r;
            trial.best = f.clone();
        }
        if (r - last).abs() <= CONVERGED * r {
            trial.converged = true;
            break;
        }
        last = r;
        f = dual_map(&op.adjoint_array(&dual_map(&g, p)), q);
    }
    trial
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPoint {
    pub radial_points: usize,
    pub spectral_points: usize,
    pub estimate: f64,
    pub converged_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceEstimate {
    pub piece: String,
    pub empirical_norm_lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorEstimate {
    pub p: f64,
    pub multiplier: String,
    /// Largest ‖Bf‖_p/‖f‖_p found at the reference resolution.
    pub empirical_norm_lower_bound: f64,
    /// Best ratio after each trial at the reference resolution; nondecreasing.
    pub trial_curve: Vec<f64>,
    pub resolution_curve: Vec<ResolutionPoint>,
    /// Lower bounds for B0, B1, B2 at the reference resolution.
    pub pieces: Vec<PieceEstimate>,
    /// ‖(B0+B1+B2)f − Bf‖₂ / ‖Bf‖₂ at the maximizing f.
    pub piece_sum_residual: f64,
    pub truncation_mass: f64,
    pub verdict: Verdict,
    pub note: String,
}

/// PASS when the estimates across resolutions agree within `STABILITY_SPREAD`,
/// FAIL when they grow monotonically beyond it, INCONCLUSIVE otherwise.
pub fn stability_verdict(estimates: &[f64]) -> Verdict {
    if estimates.is_empty() || estimates.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Verdict::Inconclusive;
    }
    let hi = estimates.iter().cloned().fold(f64::MIN, f64::max);
    let lo = estimates.iter().cloned().fold(f64::MAX, f64::min);
    if hi <= lo * (1.0 + STABILITY_SPREAD) {
        Verdict::Pass
    } else if estimates.windows(2).all(|w| w[1] > w[0]) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Randomized lower-bound search for ‖B‖_{p→p} across the configured resolutions.
pub fn estimate_lp_norm(config: &ExperimentConfig) -> Result<OperatorEstimate> {
    config.validate()?;
    in_pool(config.threads, || estimate_inner(config))?
}

fn estimate_inner(cfg: &ExperimentConfig) -> Result<OperatorEstimate> {
    let p = cfg.p;
    let m = cfg.multiplier.build(&cfg.space, &cfg.exponent())?;
    let starts = BumpSum::random_starts(cfg.trials, cfg.support, cfg.seed);
    let mut resolution_curve = Vec::new();
    let mut reference = None;
    for &n in &cfg.resolutions {
        let op = BiRadialOperator::with_multiplier(cfg, m.clone(), n)?;
        let trials: Vec<Trial> =
            starts.par_iter().map(|s| power_method(&op, p, op.sample_array(|a, b| s.eval(a, b)), cfg.iterations)).collect();
        let estimate = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
        let converged_trials = trials.iter().filter(|t| t.converged).count();
        resolution_curve.push(ResolutionPoint { radial_points: n, spectral_points: op.spectral_points(), estimate, converged_trials });
        reference = Some((op, trials));
    }
    let (op, trials) = reference.expect("at least one resolution");
    let mut trial_curve = Vec::with_capacity(trials.len());
    let mut best = 0.0f64;
    for t in &trials {
        best = best.max(t.ratio);
        trial_curve.push(best);
    }
    let arg = trials.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).expect("trials > 0");

    let symbols = op.piece_symbols()?;
    let piece_trials = cfg.trials.min(3);
    let mut pieces = Vec::new();
    let mut sum = Array2::<C>::zeros(arg.best.dim());
    for (j, s) in symbols.into_iter().enumerate() {
        let piece = op.with_symbol(s);
        sum = sum + piece.apply_array(&arg.best);
        let bound = starts[..piece_trials]
            .par_iter()
            .map(|st| power_method(&piece, p, piece.sample_array(|a, b| st.eval(a, b)), cfg.iterations).ratio)
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max);
        pieces.push(PieceEstimate { piece: format!("B{j}"), empirical_norm_lower_bound: bound });
    }
    let bf = op.apply_array(&arg.best);
    let piece_sum_residual = op.norm_array(&(&sum - &bf), 2.0) / op.norm_array(&bf, 2.0);

    let estimates: Vec<f64> = resolution_curve.iter().map(|r| r.estimate).collect();
    let mut verdict = stability_verdict(&estimates);
    let converged = resolution_curve.iter().any(|r| r.converged_trials > 0);
    if verdict == Verdict::Fail && !converged {
        verdict = Verdict::Inconclusive;
    }
    let note = format!(
        "empirical lower bounds only; boundedness constants are not computable, so the verdict tests stability under refinement (spread <= {:.0}%){}",
        100.0 * STABILITY_SPREAD,
        if converged { "" } else { "; no power iteration converged" }
    );
    Ok(OperatorEstimate {
        p,
        multiplier: m.name.clone(),
        empirical_norm_lower_bound: best,
        trial_curve,
        resolution_curve,
        pieces,
        piece_sum_residual,
        truncation_mass: op.edge_fraction(&bf),
        verdict,
        note,
    })
}

/// Relative ℓ² error of Bf against f for f = e^{−r1²−r2²}; m ≡ 1 gives B ≈ id.
pub fn identity_error(cfg: &ExperimentConfig) -> Result<f64> {
    let op = BiRadialOperator::new(cfg, cfg.reference_resolution())?;
    let f = op.sample_array(|a, b| C::new((-(a * a + b * b)).exp(), 0.0));
    Ok(op.norm_array(&(&op.apply_array(&f) - &f), 2.0) / op.norm_array(&f, 2.0))
}

/// max ‖Bf‖₂/‖f‖₂ over `count` random bump sums, divided by sup|m| on the spectral grid.
pub fn plancherel_ratio(cfg: &ExperimentConfig, count: usize, seed: u64) -> Result<f64> {
    let op = BiRadialOperator::new(cfg, cfg.reference_resolution())?;
    let ratios: Vec<f64> = BumpSum::random_starts(count, cfg.support, seed)
        .par_iter()
        .map(|s| {
            let f = op.sample_array(|a, b| s.eval(a, b));
            op.norm_array(&op.apply_array(&f), 2.0) / op.norm_array(&f, 2.0)
        })
        .collect();
    Ok(ratios.into_iter().fold(0.0, f64::max) / op.m_sup())
}

/// One line of a suite report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub verdict: Verdict,
    pub value: f64,
    pub detail: String,
}

impl SuiteCheck {
    fn new(name: &str, verdict: Verdict, value: f64, detail: impl Into<String>) -> Self {
        SuiteCheck { name: name.into(), verdict, value, detail: detail.into() }
    }

    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, Verdict::from_bool(value <= bound), value, format!("<= {bound:e}"))
    }

    fn failed(name: &str, e: &Error) -> Self {
        Self::new(name, Verdict::Fail, f64::NAN, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<SuiteCheck>,
    pub verdict: Verdict,
    pub elapsed_seconds: f64,
}

impl SuiteReport {
    /// Nonzero exactly when some check failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.checks.iter().any(|c| c.verdict == Verdict::Fail))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `<suite>.json` and `<suite>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let io = |e: std::io::Error| Error::Config(format!("cannot write report to {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let json = dir.join(format!("{}.json", self.suite));
        std::fs::write(&json, self.to_json()).map_err(io)?;
        let csv_path = dir.join(format!("{}.csv", self.suite));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Config(e.to_string()))?;
        for c in &self.checks {
            w.serialize(c).map_err(|e| Error::Config(e.to_string()))?;
        }
        w.flush().map_err(io)?;
        Ok((json, csv_path))
    }
}

pub const SUITES: [&str; 6] = ["sanity", "expansions", "paper-bounds", "independence", "transference", "operator"];

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// Runs a named suite, writing JSON and CSV when `out_dir` is set.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = in_pool(opts.threads, || match name {
        "sanity" => Ok(sanity_suite(opts.seed)),
        "expansions" => Ok(expansions_suite()),
        "paper-bounds" => Ok(paper_bounds_suite()),
        "independence" => Ok(independence_suite()),
        "transference" => Ok(transference_suite(opts.seed)),
        "operator" => Ok(operator_suite(opts.seed)),
        other => Err(Error::Config(format!("unknown suite `{other}`; expected one of {}", SUITES.join(", ")))),
    })??;
    let verdict = checks.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict));
    let report = SuiteReport { suite: name.into(), seed: opts.seed, checks, verdict, elapsed_seconds: start.elapsed().as_secs_f64() };
    if let Some(dir) = &opts.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

fn max_over<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    it.into_iter().try_fold(0.0f64, |acc, x| Ok(acc.max(x?)))
}

fn check_result(name: &str, bound: f64, r: Result<f64>) -> SuiteCheck {
    match r {
        Ok(v) => SuiteCheck::at_most(name, v, bound),
        Err(e) => SuiteCheck::failed(name, &e),
    }
}

const SPACES: [RankOneSpace; 3] = [RankOneSpace::H2, RankOneSpace::H3, RankOneSpace::CH2];

fn sanity_suite(seed: u64) -> Vec<SuiteCheck> {
    let lambdas = [C::new(0.0, 0.0), C::new(1.5, 0.0), C::new(7.0, 0.0), C::new(2.0, 0.3)];
    let mut out = vec![
        check_result(
            "phi_at_origin",
            1e-10,
            max_over(SPACES.iter().flat_map(|s| lambdas.iter().map(move |&l| phi_oracle(s, l, 0.0).map(|v| (v - 1.0).norm())))),
        ),
        check_result(
            "phi_at_i_rho_is_one",
            1e-8,
            max_over(SPACES.iter().flat_map(|s| [0.5, 2.0, 5.0].map(move |t| phi_oracle(s, C::new(0.0, s.rho()), t).map(|v| (v - 1.0).norm())))),
        ),
        check_result(
            "ode_residual",
            1e-6,
            max_over(SPACES.iter().flat_map(|s| [(0.5, 0.3), (3.0, 2.0), (9.0, 7.5)].map(move |(l, t)| ode_residual(s, C::new(l, 0.0), t)))),
        ),
    ];
    for s in SPACES {
        let name = format!("weyl_symmetry_{s}");
        out.push(match weyl_symmetry_check(&s, &[C::new(0.7, 0.0), C::new(4.0, 0.2)], &[0.3, 2.0, 6.0]) {
            Ok(r) => SuiteCheck::new(&name, r.verdict, r.fitted, r.to_string()),
            Err(e) => SuiteCheck::failed(&name, &e),
        });
    }
    let p = Exponent::new(1.5).expect("valid");
    out.push(SuiteCheck::at_most("conjugate_delta", (p.conjugate().delta_p - p.delta_p).abs(), 1e-15));

    let mut cfg = ExperimentConfig::new(2.0, MultiplierChoice::new("constant", &[1.0]));
    cfg.epsilon = 1e-4;
    cfg.resolutions = vec![128];
    out.push(check_result("operator_identity", 1e-3, identity_error(&cfg)));
    let mut cfg = ExperimentConfig::new(2.0, MultiplierChoice::new("gaussian", &[0.1]));
    cfg.resolutions = vec![64];
    out.push(check_result("operator_plancherel", 1.0 + 1e-2, plancherel_ratio(&cfg, 10, seed)));
    out
}

fn expansions_suite() -> Vec<SuiteCheck> {
    let mut out = Vec::new();
    for s in [RankOneSpace::H2, RankOneSpace::H3] {
        let err = |l: f64, t: f64, big_l: usize| -> Result<f64> {
            let lam = C::new(l, 0.0);
            Ok((hc_series_value(&s, lam, t, big_l)? - phi_oracle(&s, lam, t)?).norm())
        };
        let grid: Vec<(f64, f64)> = [0.5, 3.0, 10.0].iter().flat_map(|&l| [1.0, 2.0, 5.0].map(|t| (l, t))).collect();
        out.push(check_result(&format!("hc_series_L12_{s}"), 1e-6, max_over(grid.iter().map(|&(l, t)| err(l, t, 12)))));
        let name = format!("hc_series_decreasing_{s}");
        out.push(match (1..=12).map(|big_l| err(0.5, 1.0, big_l)).collect::<Result<Vec<f64>>>() {
            Ok(e) => {
                let decreasing = e.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-14);
                SuiteCheck::new(&name, Verdict::from_bool(decreasing), e[11], format!("errors {:?}", e.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>()))
            }
            Err(e) => SuiteCheck::failed(&name, &e),
        });
    }
    let ts = logspace(0.02, 0.2, 10);
    let s = RankOneSpace::H2;
    let lam = C::new(1.0, 0.0);
    let devs: Result<Vec<f64>> = ts.iter().map(|&t| Ok((phi_oracle(&s, lam, t)? - local_leading_term(&s, lam, t)).norm())).collect();
    out.push(match devs.map(|d| loglog_fit(&ts, &d)) {
        Ok(Some(fit)) => SuiteCheck::new(
            "local_expansion_slope",
            Verdict::from_bool((fit.slope - 2.0).abs() <= 0.2),
            fit.slope,
            "slope of |phi - A| on [0.02, 0.2], claimed 2 +- 0.2",
        ),
        Ok(None) => SuiteCheck::new("local_expansion_slope", Verdict::Inconclusive, f64::NAN, "fit failed"),
        Err(e) => SuiteCheck::failed("local_expansion_slope", &e),
    });
    out
}

fn paper_bounds_suite() -> Vec<SuiteCheck> {
    match paper_bound_battery(KernelConfig::default()) {
        Ok(reports) => reports.into_iter().map(|r| SuiteCheck::new(&r.name, r.verdict, r.fitted, r.to_string())).collect(),
        Err(e) => vec![SuiteCheck::failed("paper_bound_battery", &e)],
    }
}

fn independence_suite() -> Vec<SuiteCheck> {
    let p = Exponent::new(4.0 / 3.0).expect("valid");
    match independence_witness(&default_space(), &p, (1, 1)) {
        Ok(r) => [r.regime_a, r.regime_b_marc, r.regime_b_ionescu]
            .into_iter()
            .map(|e| SuiteCheck::new(&e.name, e.verdict, e.fitted, e.to_string()))
            .collect(),
        Err(e) => vec![SuiteCheck::failed("independence_witness", &e)],
    }
}

fn transference_suite(seed: u64) -> Vec<SuiteCheck> {
    match transference_check(1.5, 20, TransferenceGrid::default(), seed) {
        Ok((r, trials)) => {
            let mut out = vec![SuiteCheck::new("transference", r.verdict, r.fitted, r.to_string())];
            out.extend(trials.iter().enumerate().map(|(k, t)| {
                let detail = format!("{}: lhs {:.4e}, rhs {:.4e}", t.label, t.lhs, t.rhs);
                SuiteCheck::new(&format!("transference_trial_{k}"), t.verdict, t.lhs / t.rhs, detail)
            }));
            out
        }
        Err(e) => vec![SuiteCheck::failed("transference", &e)],
    }
}

fn operator_suite(seed: u64) -> Vec<SuiteCheck> {
    let mut cfg = ExperimentConfig::new(1.5, MultiplierChoice::new("imaginary_powers", &[1.0, 1.0, 1.0]));
    cfg.resolutions = vec![32, 48, 64];
    cfg.trials = 3;
    cfg.iterations = 15;
    cfg.seed = seed;
    match estimate_lp_norm(&cfg) {
        Ok(est) => vec![
            SuiteCheck::new(
                "operator_stability",
                est.verdict,
                est.empirical_norm_lower_bound,
                format!("{:?}; {}", est.resolution_curve.iter().map(|r| r.estimate).collect::<Vec<_>>(), est.note),
            ),
            SuiteCheck::new(
                "operator_piece_sum",
                Verdict::from_bool(est.piece_sum_residual <= 1e-2),
                est.piece_sum_residual,
                "relative l2 residual of (B0+B1+B2)f against Bf",
            ),
        ],
        Err(e) => vec![SuiteCheck::failed("operator_stability", &e)],
    }
}
