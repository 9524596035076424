//! Multiplier conditions: Θ_p, tubes, d_p, the Hörmander / Marcinkiewicz /
//! Ionescu norms as sampled suprema, and built-in multiplier families.
//!
//! Norms are lower bounds of the true suprema. A norm is flagged infinite when
//! its sampled value grows by more than ×10 across each of two successive grid
//! refinements.

use crate::error::{domain, Error, Result};
use crate::numeric::diff::{factorial, richardson_derivative, taylor_coefficients_2d};
use crate::numeric::fit::{loglog_fit, logspace};
use crate::numeric::jet::{Holo, Jet2};
use crate::report::{EstimateReport, Verdict};
use crate::space::{Exponent, ProductSpace, RankOneSpace};
use num_complex::{Complex, Complex64};
use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// |Im λ_k| < δ(p)ρ_k in every factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub half_widths: Vec<f64>,
    pub p: Exponent,
}

impl Tube {
    pub fn rank_one(space: &RankOneSpace, p: Exponent) -> Self {
        Tube { half_widths: vec![p.delta_p * space.rho()], p }
    }

    pub fn product(space: &ProductSpace, p: Exponent) -> Self {
        Tube { half_widths: vec![p.delta_p * space.x1.rho(), p.delta_p * space.x2.rho()], p }
    }

    /// Open membership; the boundary is excluded.
    pub fn contains(&self, zeta: &[Complex64]) -> bool {
        zeta.len() == self.half_widths.len() && zeta.iter().zip(&self.half_widths).all(|(z, w)| z.im.abs() < *w)
    }

    pub fn in_closure(&self, zeta: &[Complex64]) -> bool {
        zeta.len() == self.half_widths.len() && zeta.iter().zip(&self.half_widths).all(|(z, w)| z.im.abs() <= *w)
    }
}

/// Θ_p(ζ) = min(|ζ − iδ(p)ρ|, |ζ + iδ(p)ρ|).
pub fn theta_p<F: Float>(space: &RankOneSpace, p: &Exponent, zeta: Complex<F>) -> F {
    let a = p.delta::<F>() * space.rho_as::<F>();
    let up = Complex::new(zeta.re, zeta.im - a).norm();
    let down = Complex::new(zeta.re, zeta.im + a).norm();
    up.min(down)
}

/// sqrt((Re ζ1)² + (Re ζ2)² + dist((Im ζ1, Im ζ2), W_p^c)²) on the closed tube.
pub fn dp_ionescu<F: Float>(space: &ProductSpace, p: &Exponent, zeta: (Complex<F>, Complex<F>)) -> Result<F> {
    let w1 = p.delta::<F>() * space.x1.rho_as::<F>();
    let w2 = p.delta::<F>() * space.x2.rho_as::<F>();
    let (g1, g2) = (w1 - zeta.0.im.abs(), w2 - zeta.1.im.abs());
    if g1 < F::zero() || g2 < F::zero() {
        return Err(domain("dp_ionescu", "point lies outside the closed tube"));
    }
    let dist = g1.min(g2);
    Ok((zeta.0.re * zeta.0.re + zeta.1.re * zeta.1.re + dist * dist).sqrt())
}

/// A multiplier formula written once over [`Holo`] scalars, so it yields both
/// values and exact derivatives.
pub trait Formula: Send + Sync + 'static {
    fn apply<S: Holo>(&self, l1: S, l2: S) -> S;
}

type Eval2 = Arc<dyn Fn(Complex64, Complex64) -> Complex64 + Send + Sync>;
type JetEval = Arc<dyn Fn(Complex64, Complex64, (usize, usize)) -> Jet2 + Send + Sync>;

/// A multiplier m(λ1, λ2) on a product (rank-one multipliers ignore λ2).
#[derive(Clone)]
pub struct MultiplierSpec {
    pub name: String,
    eval: Eval2,
    jet: Option<JetEval>,
    pub weyl_symmetric: bool,
    /// Declared holomorphy on |Im λ_k| < analytic_strip.k.
    pub analytic_strip: (f64, f64),
    pub derivative_order_available: (usize, usize),
    /// Declared decay e^{−rate(λ1²+λ2²)} on a* (0 when none).
    pub gaussian_rate: f64,
}

impl fmt::Debug for MultiplierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSpec")
            .field("name", &self.name)
            .field("analytic_strip", &self.analytic_strip)
            .field("derivative_order_available", &self.derivative_order_available)
            .field("jet", &self.jet.is_some())
            .finish()
    }
}

impl MultiplierSpec {
    /// Derivatives of all orders by jet arithmetic.
    pub fn from_formula<F: Formula>(name: impl Into<String>, formula: F, analytic_strip: (f64, f64)) -> Self {
        let formula = Arc::new(formula);
        let f2 = formula.clone();
        MultiplierSpec {
            name: name.into(),
            eval: Arc::new(move |a, b| formula.apply(a, b)),
            jet: Some(Arc::new(move |a, b, order| f2.apply(Jet2::var1(a, order), Jet2::var2(b, order)))),
            weyl_symmetric: true,
            analytic_strip,
            derivative_order_available: (usize::MAX, usize::MAX),
            gaussian_rate: 0.0,
        }
    }

    /// A closure without analytic derivatives; derivatives come from Cauchy integrals.
    pub fn from_fn<F>(name: impl Into<String>, f: F, weyl_symmetric: bool, analytic_strip: (f64, f64)) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Send + Sync + 'static,
    {
        MultiplierSpec {
            name: name.into(),
            eval: Arc::new(f),
            jet: None,
            weyl_symmetric,
            analytic_strip,
            derivative_order_available: (usize::MAX, usize::MAX),
            gaussian_rate: 0.0,
        }
    }

    pub fn eval(&self, l1: Complex64, l2: Complex64) -> Complex64 {
        (self.eval)(l1, l2)
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.jet.is_some()
    }

    /// ∂^J m for all J ≤ order, indexed [j1][j2].
    pub fn derivatives(&self, l1: Complex64, l2: Complex64, order: (usize, usize)) -> Result<Vec<Vec<Complex64>>> {
        if order.0 > self.derivative_order_available.0 || order.1 > self.derivative_order_available.1 {
            return Err(Error::Unsupported(format!("{}: derivatives of order {order:?} unavailable", self.name)));
        }
        let taylor = match &self.jet {
            Some(jet) => {
                let j = jet(l1, l2, order);
                (0..=order.0).map(|a| (0..=order.1).map(|b| j.coeff(a, b)).collect()).collect()
            }
            None => {
                let r1 = 0.4 * (self.analytic_strip.0 - l1.im.abs()).min(1.0);
                let r2 = 0.4 * (self.analytic_strip.1 - l2.im.abs()).min(1.0);
                if !(r1 > 0.0 && r2 > 0.0) {
                    return Err(Error::Region { piece: self.name.clone(), region: "point outside the declared strip".into() });
                }
                taylor_coefficients_2d(&|a, b| self.eval(a, b), (l1, l2), (r1, r2), 32, order)
            }
        };
        Ok(taylor
            .into_iter()
            .enumerate()
            .map(|(a, row)| row.into_iter().enumerate().map(|(b, v)| v * factorial(a) * factorial(b)).collect())
            .collect())
    }

    /// ∂^J m by nested Richardson-extrapolated central differences along the real directions.
    pub fn derivative_fd(&self, l1: Complex64, l2: Complex64, j: (usize, usize), h: f64) -> Complex64 {
        let inner = |x: f64| {
            let g = |y: f64| self.eval(l1 + x, l2 + y);
            if j.1 == 0 {
                g(0.0)
            } else {
                richardson_derivative(&g, 0.0, h, j.1)
            }
        };
        if j.0 == 0 {
            inner(0.0)
        } else {
            richardson_derivative(&inner, 0.0, h, j.0)
        }
    }

    /// Rejects m unless m(±λ1, ±λ2) agree to 10⁻¹⁰ on spot checks.
    pub fn check_weyl(&self) -> Result<()> {
        if !self.weyl_symmetric {
            return Err(Error::NotWeylSymmetric { deviation: f64::NAN });
        }
        let s = (self.analytic_strip.0.min(1.0) * 0.4, self.analytic_strip.1.min(1.0) * 0.4);
        let probes = [
            (Complex64::new(0.37, 0.0), Complex64::new(1.3, 0.0)),
            (Complex64::new(2.9, s.0), Complex64::new(0.6, -s.1)),
            (Complex64::new(0.8, -s.0), Complex64::new(4.2, s.1)),
        ];
        let mut worst: f64 = 0.0;
        for (a, b) in probes {
            let v = self.eval(a, b);
            for w in [self.eval(-a, b), self.eval(a, -b), self.eval(-a, -b)] {
                worst = worst.max((v - w).norm() / v.norm().max(w.norm()).max(1.0));
            }
        }
        if worst > 1e-10 {
            return Err(Error::NotWeylSymmetric { deviation: worst });
        }
        Ok(())
    }
}

/// Built-in families, all Weyl symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplierKind {
    /// (λ1²+ρ1²)^{it}(λ1²+λ2²+ρ1²+ρ2²)^{iu}(λ2²+ρ2²)^{iv}.
    ImaginaryPowers { t: f64, u: f64, v: f64 },
    /// h̃_ε = e^{−ε(λ1²+λ2²)}.
    Gaussian { eps: f64 },
    Constant { re: f64, im: f64 },
    /// (λ1²)^{iu}(λ2²)^{iv}; defined on a* only.
    EuclidMarc { u: f64, v: f64 },
    /// h̃_ε(λ1²+δ²ρ1²)^{it}(λ1²+λ2²+ρ1²+ρ2²)^{iu}(λ2²+δ²ρ2²)^{iv}: branch points on the tube boundary.
    CriticalPowers { t: f64, u: f64, v: f64, eps: f64 },
}

impl MultiplierKind {
    /// Parses `kind` with comma-separated `params` as on the command line.
    pub fn parse(kind: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("{kind} takes {n} parameters, got {}", params.len())))
            }
        };
        match kind {
            "imaginary_powers" => need(3).map(|_| MultiplierKind::ImaginaryPowers { t: params[0], u: params[1], v: params[2] }),
            "gaussian" => need(1).map(|_| MultiplierKind::Gaussian { eps: params[0] }),
            "constant" => match params.len() {
                1 => Ok(MultiplierKind::Constant { re: params[0], im: 0.0 }),
                _ => need(2).map(|_| MultiplierKind::Constant { re: params[0], im: params[1] }),
            },
            "euclid_marc" => need(2).map(|_| MultiplierKind::EuclidMarc { u: params[0], v: params[1] }),
            "critical_powers" => {
                need(4).map(|_| MultiplierKind::CriticalPowers { t: params[0], u: params[1], v: params[2], eps: params[3] })
            }
            other => Err(Error::Config(format!("unknown multiplier kind {other}"))),
        }
    }
}

struct Powers {
    a1: f64,
    a2: f64,
    mixed: f64,
    exps: (f64, f64, f64),
    eps: f64,
}

impl Formula for Powers {
    fn apply<S: Holo>(&self, l1: S, l2: S) -> S {
        let i = Complex64::i();
        let (q1, q2) = (l1.sq(), l2.sq());
        let mut out = q1.add(&q2).scale(Complex64::new(-self.eps, 0.0)).exp();
        if self.exps.0 != 0.0 {
            out = out.mul(&q1.add_c(self.a1.into()).powc(i * self.exps.0));
        }
        if self.exps.1 != 0.0 {
            out = out.mul(&q1.add(&q2).add_c(self.mixed.into()).powc(i * self.exps.1));
        }
        if self.exps.2 != 0.0 {
            out = out.mul(&q2.add_c(self.a2.into()).powc(i * self.exps.2));
        }
        out
    }
}

struct ConstantFormula(Complex64);

impl Formula for ConstantFormula {
    fn apply<S: Holo>(&self, l1: S, _l2: S) -> S {
        l1.constant_like(self.0)
    }
}

/// Builds a built-in multiplier for `space` and rejects it when a branch cut
/// crosses the declared strip.
pub fn builtin_multiplier(space: &ProductSpace, p: &Exponent, kind: MultiplierKind) -> Result<MultiplierSpec> {
    let (r1, r2) = space.rho();
    let d = p.delta_p;
    let spec = match kind {
        MultiplierKind::ImaginaryPowers { t, u, v } => MultiplierSpec::from_formula(
            format!("imaginary_powers({t},{u},{v})"),
            Powers { a1: r1 * r1, a2: r2 * r2, mixed: r1 * r1 + r2 * r2, exps: (t, u, v), eps: 0.0 },
            (r1, r2),
        ),
        MultiplierKind::Gaussian { eps } => {
            if !(eps > 0.0) {
                return Err(Error::Config("gaussian needs eps > 0".into()));
            }
            let mut m = MultiplierSpec::from_formula(
                format!("gaussian({eps})"),
                Powers { a1: 0.0, a2: 0.0, mixed: 0.0, exps: (0.0, 0.0, 0.0), eps },
                (f64::INFINITY, f64::INFINITY),
            );
            m.gaussian_rate = eps;
            m
        }
        MultiplierKind::Constant { re, im } => {
            MultiplierSpec::from_formula(format!("constant({re},{im})"), ConstantFormula(Complex64::new(re, im)), (f64::INFINITY, f64::INFINITY))
        }
        MultiplierKind::EuclidMarc { u, v } => MultiplierSpec::from_formula(
            format!("euclid_marc({u},{v})"),
            Powers { a1: 0.0, a2: 0.0, mixed: 0.0, exps: (u, 0.0, v), eps: 0.0 },
            (0.0, 0.0),
        ),
        MultiplierKind::CriticalPowers { t, u, v, eps } => {
            let mut m = MultiplierSpec::from_formula(
                format!("critical_powers({t},{u},{v},{eps})"),
                Powers { a1: d * d * r1 * r1, a2: d * d * r2 * r2, mixed: r1 * r1 + r2 * r2, exps: (t, u, v), eps },
                (d * r1, d * r2),
            );
            m.gaussian_rate = eps;
            m
        }
    };
    continuity_sweep(&spec)?;
    Ok(spec)
}

/// Walks horizontal and vertical lines inside the declared strips and rejects
/// jumps that a continuous function could not make over one step.
pub fn continuity_sweep(m: &MultiplierSpec) -> Result<()> {
    let s = (m.analytic_strip.0.min(2.0), m.analytic_strip.1.min(2.0));
    if s.0 <= 0.0 || s.1 <= 0.0 {
        return Ok(());
    }
    let step = 1e-3;
    let mut paths: Vec<Vec<(Complex64, Complex64)>> = Vec::new();
    for &f in &[-0.9, -0.5, 0.0, 0.5, 0.9] {
        let (y1, y2) = (f * s.0, f * s.1);
        paths.push((0..=4000).map(|k| {
            let x = -2.0 + k as f64 * step;
            (Complex64::new(x, y1), Complex64::new(0.3, y2))
        }).collect());
        paths.push((0..=4000).map(|k| {
            let x = -2.0 + k as f64 * step;
            (Complex64::new(0.3, y1), Complex64::new(x, y2))
        }).collect());
    }
    for &x in &[0.0, 0.4, 1.5] {
        let n = (1.8 * s.0.max(s.1) / step).ceil() as usize;
        paths.push((0..=n).map(|k| {
            let f = -0.9 + 1.8 * k as f64 / n as f64;
            (Complex64::new(x, f * s.0), Complex64::new(x, f * s.1))
        }).collect());
    }
    for path in paths {
        let vals: Vec<Complex64> = path.iter().map(|(a, b)| m.eval(*a, *b)).collect();
        for w in vals.windows(2) {
            let scale = w[0].norm().max(w[1].norm()).max(1e-300);
            if (w[1] - w[0]).norm() > 0.1 * scale {
                return Err(Error::Domain {
                    op: "builtin_multiplier",
                    msg: format!("{}: branch-cut crossing inside the declared strip", m.name),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Single-parameter weight Θ^{(1)}(λ1)^{j1+j2} (|λ1| on a*).
    Horm,
    /// (1 + |λ1|)^{j1+j2}.
    HormInfty,
    /// Θ^{(1)}(λ1)^{j1} Θ^{(2)}(λ2)^{j2} (|λ_k| on a*).
    Marc,
    /// (1 + Θ^{(1)})^{j1} (1 + Θ^{(2)})^{j2} ((1 + |λ_k|) on a*).
    MarcInfty,
    /// |λ1|^{j1}|λ2|^{j2} on a*.
    MarcFrastar,
    /// d_p^{j1+j2}.
    Ionescu,
}

impl Condition {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "horm" => Condition::Horm,
            "horm_infty" => Condition::HormInfty,
            "marc" => Condition::Marc,
            "marc_infty" => Condition::MarcInfty,
            "marc_frastar" => Condition::MarcFrastar,
            "ionescu" => Condition::Ionescu,
            other => return Err(Error::Config(format!("unknown condition {other}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Tube,
    RealAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub condition: Condition,
    pub domain: Domain,
    pub order: (usize, usize),
    /// Sampled supremum at the finest level (a lower bound of the true norm).
    pub value: f64,
    /// Set when the sampled values grow without bound under refinement.
    pub infinite: bool,
    pub argmax_point: (Complex64, Complex64),
    pub argmax_index: (usize, usize),
    /// Sampled supremum at each refinement level.
    pub levels: Vec<f64>,
}

impl fmt::Display for NormReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.infinite { "+inf".to_string() } else { format!("{:.6e}", self.value) };
        write!(
            f,
            "{:?}[{:?}] order {:?}: {v} at ({}, {}) J={:?}",
            self.condition, self.domain, self.order, self.argmax_point.0, self.argmax_point.1, self.argmax_index
        )
    }
}

pub const REFINEMENT_LEVELS: usize = 3;

/// Sample points of one variable at refinement level ℓ: |Re| log-spaced from 10^{−(2+2ℓ)}
/// up to 10^{1+ℓ} (denser per level on a*), Im toward ±s geometrically down to 10^{−(2+2ℓ)}.
fn axis_points(s: f64, level: usize, domain: Domain) -> Vec<Complex64> {
    let closest = 10f64.powi(-(2 + 2 * level as i32));
    let far = 10f64.powi(1 + level as i32);
    let per_decade = if domain == Domain::RealAxis { 20.0 * (1 << level) as f64 } else { 2.0 };
    let decades = (far / closest).log10();
    let mut xs = vec![0.0];
    xs.extend(logspace(closest, far, (decades * per_decade).ceil() as usize + 1));
    let ys: Vec<f64> = match domain {
        Domain::RealAxis => vec![0.0],
        Domain::Tube => {
            let mut ys = vec![0.0, 0.5 * s, -0.5 * s];
            let top = 0.25 * s;
            if top > closest {
                let n = ((top / closest).log10() * 2.0).ceil() as usize + 1;
                for d in logspace(closest, top, n) {
                    ys.push(s - d);
                    ys.push(-(s - d));
                }
            }
            ys
        }
    };
    xs.iter().flat_map(|&x| ys.iter().map(move |&y| Complex64::new(x, y))).collect()
}

fn weight(
    space: &ProductSpace,
    p: &Exponent,
    cond: Condition,
    domain: Domain,
    l: (Complex64, Complex64),
    j: (usize, usize),
) -> Result<f64> {
    let (t1, t2) = match domain {
        Domain::Tube => (theta_p(&space.x1, p, l.0), theta_p(&space.x2, p, l.1)),
        Domain::RealAxis => (l.0.norm(), l.1.norm()),
    };
    let (j1, j2) = (j.0 as i32, j.1 as i32);
    Ok(match cond {
        Condition::Horm => t1.powi(j1 + j2),
        Condition::HormInfty => (1.0 + l.0.norm()).powi(j1 + j2),
        Condition::Marc | Condition::MarcFrastar => t1.powi(j1) * t2.powi(j2),
        Condition::MarcInfty => (1.0 + t1).powi(j1) * (1.0 + t2).powi(j2),
        Condition::Ionescu => dp_ionescu(space, p, l)?.powi(j1 + j2),
    })
}

/// Sampled sup over J ≤ order of weight·|∂^J m| at one refinement level.
fn level_sup(
    space: &ProductSpace,
    p: &Exponent,
    m: &MultiplierSpec,
    cond: Condition,
    domain: Domain,
    order: (usize, usize),
    level: usize,
) -> Result<(f64, (Complex64, Complex64), (usize, usize))> {
    let tube = Tube::product(space, *p);
    let a = axis_points(tube.half_widths[0], level, domain);
    let b = axis_points(tube.half_widths[1], level, domain);
    let pairs: Vec<(Complex64, Complex64)> = a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect();
    let zero = Complex64::new(0.0, 0.0);
    pairs
        .par_iter()
        .map(|&(l1, l2)| -> Result<(f64, (Complex64, Complex64), (usize, usize))> {
            let d = m.derivatives(l1, l2, order)?;
            let mut best = (0.0, (l1, l2), (0, 0));
            for (j1, row) in d.iter().enumerate() {
                for (j2, v) in row.iter().enumerate() {
                    if !v.re.is_finite() || !v.im.is_finite() {
                        continue;
                    }
                    let w = weight(space, p, cond, domain, (l1, l2), (j1, j2))?;
                    let val = w * v.norm();
                    if val > best.0 {
                        best = (val, (l1, l2), (j1, j2));
                    }
                }
            }
            Ok(best)
        })
        .try_reduce(|| (0.0, (zero, zero), (0, 0)), |x, y| Ok(if y.0 > x.0 { y } else { x }))
}

/// Sampled norm of `m` for `cond` on `domain`, over all J ≤ order.
pub fn norm(
    space: &ProductSpace,
    p: &Exponent,
    m: &MultiplierSpec,
    cond: Condition,
    domain: Domain,
    order: (usize, usize),
) -> Result<NormReport> {
    m.check_weyl()?;
    let domain = if cond == Condition::MarcFrastar { Domain::RealAxis } else { domain };
    if domain == Domain::Tube {
        let tube = Tube::product(space, *p);
        if m.analytic_strip.0 < tube.half_widths[0] || m.analytic_strip.1 < tube.half_widths[1] {
            return Err(Error::InsufficientStrip {
                available: m.analytic_strip.0.min(m.analytic_strip.1),
                required: tube.half_widths[0].max(tube.half_widths[1]),
            });
        }
    }
    let mut levels = Vec::with_capacity(REFINEMENT_LEVELS);
    let mut last = (0.0, (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), (0, 0));
    for level in 0..REFINEMENT_LEVELS {
        last = level_sup(space, p, m, cond, domain, order, level)?;
        levels.push(last.0);
    }
    let infinite = levels.windows(2).all(|w| w[1] > 10.0 * w[0]);
    Ok(NormReport { condition: cond, domain, order, value: last.0, infinite, argmax_point: last.1, argmax_index: last.2, levels })
}

pub fn marc_norm(space: &ProductSpace, p: &Exponent, m: &MultiplierSpec, order: (usize, usize)) -> Result<NormReport> {
    norm(space, p, m, Condition::Marc, Domain::Tube, order)
}

pub fn marc_infty_norm(space: &ProductSpace, p: &Exponent, m: &MultiplierSpec, order: (usize, usize)) -> Result<NormReport> {
    norm(space, p, m, Condition::MarcInfty, Domain::Tube, order)
}

pub fn marc_frastar_norm(space: &ProductSpace, p: &Exponent, m: &MultiplierSpec, order: (usize, usize)) -> Result<NormReport> {
    norm(space, p, m, Condition::MarcFrastar, Domain::RealAxis, order)
}

pub fn horm_norm(space: &ProductSpace, p: &Exponent, m: &MultiplierSpec, order: (usize, usize)) -> Result<NormReport> {
    norm(space, p, m, Condition::Horm, Domain::Tube, order)
}

pub fn horm_infty_norm(space: &ProductSpace, p: &Exponent, m: &MultiplierSpec, order: (usize, usize)) -> Result<NormReport> {
    norm(space, p, m, Condition::HormInfty, Domain::Tube, order)
}

pub fn ionescu_norm(space: &ProductSpace, p: &Exponent, m: &MultiplierSpec, order: (usize, usize)) -> Result<NormReport> {
    norm(space, p, m, Condition::Ionescu, Domain::Tube, order)
}

/// Weight comparison between the split Θ weights and the d_p weight near 0 + iW_p.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub j: (usize, usize),
    /// Regime A: slope of log(Θ-weight / d_p-weight) against log gap.
    pub regime_a: EstimateReport,
    /// Regime B: exponent of the Θ weight (claimed J1 + J2/4).
    pub regime_b_marc: EstimateReport,
    /// Regime B: exponent of the d_p weight (claimed (J1+J2)/4).
    pub regime_b_ionescu: EstimateReport,
    /// Weight ratio at J = (0,0); identically 1.
    pub trivial_ratio: f64,
    pub verdict: Verdict,
}

/// Reproduces both regimes in which the Marcinkiewicz and Ionescu conditions
/// fail to imply each other.
pub fn independence_witness(space: &ProductSpace, p: &Exponent, j: (usize, usize)) -> Result<IndependenceReport> {
    if !(p.p > 1.0 && p.p < 2.0) {
        return Err(domain("independence_witness", "p must lie in (1, 2)"));
    }
    let tube = Tube::product(space, *p);
    let (w1, w2) = (tube.half_widths[0], tube.half_widths[1]);
    let split = |l: (Complex64, Complex64), jj: (usize, usize)| {
        theta_p(&space.x1, p, l.0).powi(jj.0 as i32) * theta_p(&space.x2, p, l.1).powi(jj.1 as i32)
    };
    let ion = |l: (Complex64, Complex64), jj: (usize, usize)| -> Result<f64> {
        Ok(dp_ionescu(space, p, l)?.powi((jj.0 + jj.1) as i32))
    };
    let tol = 0.05;

    // A: on 0 + iW_p, the first factor nearest the boundary
    let gaps_a: Vec<f64> = logspace(1e-4, 1e-1, 13).into_iter().filter(|g| *g < 0.5 * w2.min(w1)).collect();
    let mut ratio = Vec::new();
    let mut trivial: f64 = 1.0;
    for &g in &gaps_a {
        let l = (Complex64::new(0.0, w1 - g), Complex64::new(0.0, 0.0));
        ratio.push(split(l, j) / ion(l, j)?);
        trivial = trivial.max((split(l, (0, 0)) / ion(l, (0, 0))? - 1.0).abs() + 1.0);
    }
    let fit_a = loglog_fit(&gaps_a, &ratio).ok_or_else(|| Error::Integration("regime A fit failed".into()))?;
    let mut a = EstimateReport::new("independence_regime_a", "Theta weight / d_p weight ~ gap^{-J2}");
    a.window = (gaps_a[0], *gaps_a.last().expect("nonempty"));
    a.fitted = fit_a.slope;
    a.claimed = -(j.1 as f64);
    a.tolerance = tol;
    a.scatter = fit_a.max_residual;
    a.verdict = Verdict::from_bool((a.fitted - a.claimed).abs() <= tol);

    // B: Re λ2 = gap^{1/4}, second factor at distance gap^{1/2} from its side
    let gaps_b = logspace(1e-10, 1e-4, 13);
    let (mut wm, mut wi) = (Vec::new(), Vec::new());
    for &g in &gaps_b {
        let l = (Complex64::new(0.0, w1 - g), Complex64::new(g.powf(0.25), w2 - g.sqrt()));
        wm.push(split(l, j));
        wi.push(ion(l, j)?);
    }
    let fit_m = loglog_fit(&gaps_b, &wm).ok_or_else(|| Error::Integration("regime B fit failed".into()))?;
    let fit_i = loglog_fit(&gaps_b, &wi).ok_or_else(|| Error::Integration("regime B fit failed".into()))?;
    let mut bm = EstimateReport::new("independence_regime_b_marc", "Theta weight ~ gap^{J1+J2/4}");
    bm.window = (gaps_b[0], *gaps_b.last().expect("nonempty"));
    bm.fitted = fit_m.slope;
    bm.claimed = j.0 as f64 + j.1 as f64 / 4.0;
    bm.tolerance = tol;
    bm.scatter = fit_m.max_residual;
    bm.verdict = Verdict::from_bool((bm.fitted - bm.claimed).abs() <= tol);
    let mut bi = EstimateReport::new("independence_regime_b_ionescu", "d_p weight ~ gap^{(J1+J2)/4}");
    bi.window = bm.window;
    bi.fitted = fit_i.slope;
    bi.claimed = (j.0 + j.1) as f64 / 4.0;
    bi.tolerance = tol;
    bi.scatter = fit_i.max_residual;
    bi.verdict = Verdict::from_bool((bi.fitted - bi.claimed).abs() <= tol);

    let trivial_ratio = trivial;
    let verdict = a.verdict.and(bm.verdict).and(bi.verdict).and(Verdict::from_bool((trivial_ratio - 1.0).abs() < 1e-12));
    Ok(IndependenceReport { j, regime_a: a, regime_b_marc: bm, regime_b_ionescu: bi, trivial_ratio, verdict })
}
