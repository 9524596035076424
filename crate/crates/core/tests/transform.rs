use sphmult_core::specfun::plancherel_constant;
use sphmult_core::transform::*;
use sphmult_core::{Complex64, RankOneSpace};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn grid(t_max: f64, step: f64) -> Vec<f64> {
    RadialFunction::uniform_grid(t_max, (t_max / step).round() as usize)
}

#[test]
fn inverse_then_forward_round_trip() {
    let s = RankOneSpace::H2;
    let f = inverse_radial(&s, &SpectralFunction::gaussian(1.0), grid(12.0, 0.02), 0.0).unwrap();
    let lambdas: Vec<Complex64> = [0.0, 0.5, 1.0, 1.5, 2.0].iter().map(|&l| c(l)).collect();
    let back = spherical_transform_many(&s, &f, &lambdas).unwrap();
    for (l, v) in lambdas.iter().zip(&back) {
        let expected = (-l.re * l.re).exp();
        assert!((v - expected).norm() < 1e-4 * expected, "lambda {l}: {v} vs {expected}");
    }
}

#[test]
fn transform_is_weyl_invariant() {
    let s = RankOneSpace::H2;
    let f = RadialFunction::from_fn(grid(8.0, 0.02), |t| c((-t * t).exp() * (1.0 + t)), DecayHint::Gaussian).unwrap();
    for &l in &[0.3, 1.7, 4.0] {
        let a = spherical_transform(&s, &f, c(l)).unwrap();
        let b = spherical_transform(&s, &f, c(-l)).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }
}

#[test]
fn heat_profile_matches_refined_run() {
    let s = RankOneSpace::H2;
    let ts: Vec<f64> = (0..=12).map(|k| 0.5 * k as f64).collect();
    let one = SpectralFunction::constant(c(1.0));
    let coarse = inverse_on_grid(&s, &one, &ts, 0.25, InverseOptions::default()).unwrap();
    let fine = inverse_on_grid(&s, &one, &ts, 0.25, InverseOptions { refinement: 4.0, lambda_max: None }).unwrap();
    let peak = fine[0].norm();
    for ((t, a), b) in ts.iter().zip(&coarse).zip(&fine) {
        assert!((a - b).norm() < 1e-10 * peak, "t {t}: {a} vs {b}");
        assert!(b.im.abs() < 1e-14 && b.re > 0.0);
    }
}

#[test]
fn plancherel_constant_is_stable_across_pairs() {
    let s = RankOneSpace::H2;
    let fitted = plancherel_ratio(&s, &RadialFunction::from_fn(grid(8.0, 0.01), |t| c((-t * t).exp()), DecayHint::Gaussian).unwrap()).unwrap();
    let others: Vec<RadialFunction> = vec![
        RadialFunction::from_fn(grid(6.0, 0.01), |t| c((-2.0 * t * t).exp()), DecayHint::Gaussian).unwrap(),
        RadialFunction::from_fn(grid(10.0, 0.01), |t| c((-0.5 * t * t).exp() * (1.0 + t * t)), DecayHint::Gaussian).unwrap(),
        RadialFunction::from_fn(grid(8.0, 0.01), |t| Complex64::new((-t * t).exp(), (-1.5 * t * t).exp()), DecayHint::Gaussian).unwrap(),
        inverse_radial(&s, &SpectralFunction::gaussian(0.5), grid(12.0, 0.02), 0.0).unwrap(),
        RadialFunction::from_fn(
            grid(1.0, 0.005),
            |t| if t < 1.0 { c((1.0 - 1.0 / (1.0 - t * t)).exp()) } else { c(0.0) },
            DecayHint::Compact,
        )
        .unwrap(),
    ];
    for (i, f) in others.iter().enumerate() {
        let r = plancherel_ratio(&s, f).unwrap();
        assert!((r / fitted - 1.0).abs() < 5e-3, "pair {i}: {r} vs {fitted}");
    }
    assert!((fitted / plancherel_constant(&s) - 1.0).abs() < 1e-4, "{fitted}");
}

#[test]
fn abel_transform_of_heat_kernel_is_euclidean_gaussian() {
    let s = RankOneSpace::H2;
    let eps = 0.3;
    let f = inverse_radial(&s, &SpectralFunction::gaussian(eps), grid(10.0, 0.01), 0.0).unwrap();
    let bs = [0.0, 0.5, 1.0, 2.0, 3.0];
    let profile = abel_transform_at(&s, &f, &bs).unwrap();
    for &b in &bs {
        let v = profile.at(b).unwrap();
        let w = profile.at(-b).unwrap();
        let expected = (4.0 * std::f64::consts::PI * eps).powf(-0.5) * (-b * b / (4.0 * eps)).exp();
        assert!((v - expected).norm() < 1e-4 * expected.max(1e-3), "b {b}: {v} vs {expected}");
        assert!((v - w).norm() < 1e-12);
    }
}

fn gaussian_type(a: f64, shift: f64) -> RadialFunction {
    RadialFunction::from_fn(grid(9.0, 0.01), move |t| c((-a * t * t).exp() * (1.0 + shift * t * t)), DecayHint::Gaussian).unwrap()
}

#[test]
fn convolution_is_commutative_and_associative() {
    let s = RankOneSpace::H2;
    let (f, g, h) = (gaussian_type(1.0, 0.0), gaussian_type(2.0, 0.5), gaussian_type(1.5, 0.2));
    let fg = convolve_radial(&s, &f, &g).unwrap();
    let gf = convolve_radial(&s, &g, &f).unwrap();
    let peak = fg.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in fg.values().iter().zip(gf.values()) {
        assert!((a - b).norm() < 1e-8 * peak);
    }
    let left = convolve_radial(&s, &fg, &h).unwrap();
    let right = convolve_radial(&s, &f, &convolve_radial(&s, &g, &h).unwrap()).unwrap();
    let peak = left.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in left.values().iter().zip(right.values()) {
        assert!((a - b).norm() < 1e-6 * peak, "{a} vs {b}");
    }
}

#[test]
fn convolution_with_approximate_identity() {
    let s = RankOneSpace::H2;
    let f = gaussian_type(1.0, 0.3);
    let sigma: f64 = 0.02;
    let raw = RadialFunction::from_fn(grid(12.0 * sigma, sigma / 50.0), |t| c((-(t / sigma).powi(2)).exp()), DecayHint::Gaussian).unwrap();
    let mass = spherical_transform(&s, &raw, c(0.0)).unwrap();
    let id = RadialFunction::from_fn(raw.t_grid().to_vec(), |t| c((-(t / sigma).powi(2)).exp()) / mass, DecayHint::Gaussian).unwrap();
    let out = convolve_radial(&s, &f, &id).unwrap();
    for (&t, v) in out.t_grid().iter().zip(out.values()).step_by(25) {
        assert!((v - f.eval(t)).norm() < 2e-3, "t {t}: {v} vs {}", f.eval(t));
    }
}
