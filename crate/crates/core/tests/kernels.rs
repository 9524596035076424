use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphmult_core::error::Error;
use sphmult_core::kernels::*;
use sphmult_core::mult::*;
use sphmult_core::numeric::diff::richardson_derivative;
use sphmult_core::numeric::quad::adaptive;
use sphmult_core::specfun::plancherel_density;
use sphmult_core::transform::{inverse_spherical_transform, SpectralFunction};
use sphmult_core::{Complex64, Exponent, ProductSpace, RankOneSpace};

const H2: RankOneSpace = RankOneSpace::H2;

fn p43() -> Exponent {
    Exponent::new(4.0 / 3.0).unwrap()
}

fn h2xh2() -> ProductSpace {
    ProductSpace::new(H2, H2)
}

fn imag_powers(t: f64, u: f64, v: f64) -> MultiplierSpec {
    builtin_multiplier(&h2xh2(), &p43(), MultiplierKind::ImaginaryPowers { t, u, v }).unwrap()
}

fn zero_multiplier() -> MultiplierSpec {
    builtin_multiplier(&h2xh2(), &p43(), MultiplierKind::Constant { re: 0.0, im: 0.0 }).unwrap()
}

fn rank_one(m: MultiplierSpec, reg: f64) -> RankOneKernels {
    RankOneKernels::new(H2, m, p43(), KernelConfig::with_regularizer(reg)).unwrap()
}

/// m(λ1, 0) as a one-variable spectral function for the transform module.
fn spectral(m: &MultiplierSpec, strip: f64) -> SpectralFunction {
    let m = m.clone();
    SpectralFunction::new(move |l| m.eval(l, Complex64::new(0.0, 0.0)), true, strip)
}

#[test]
fn bump_plateau_support_and_evenness() {
    assert_eq!(bump_bc(0.5), 1.0);
    assert_eq!(bump_bc(1.0), 1.0);
    assert_eq!(bump_bc(2.5), 0.0);
    assert_eq!(bump_bc(2.0), 0.0);
    let v: f64 = bump_bc(1.5);
    assert!(v > 0.0 && v < 1.0);
    assert_eq!(v, bump_bc(-1.5));
    // the glue is symmetric about 3/2
    assert!((v - 0.5).abs() < 1e-15);
    assert_eq!(bump_bc(0.5f32), 1.0f32);
}

#[test]
fn bump_derivatives_are_bounded_and_stable() {
    for (k, sup, change) in bump_smoothness(4) {
        let exact = (0..=1200).map(|i| Cutoff::PHI.derivative(0.9 + 1.2 * i as f64 / 1200.0, k).abs()).fold(0.0, f64::max);
        assert!(sup.is_finite() && (sup - exact).abs() < 0.02 * exact, "order {k}: sup {sup} vs {exact}");
        assert!(change < 0.05, "order {k}: step-halving change {change}");
    }
    let f = |x: f64| Complex64::new(bump_bc(x), 0.0);
    for x in [1.1, 1.37, 1.5, 1.81, -1.6] {
        for k in 1..=3 {
            let fd = richardson_derivative(&f, x, 0.02, k).re;
            let exact = Cutoff::PHI.derivative(x, k);
            assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "x {x} k {k}: {fd} vs {exact}");
        }
    }
}

#[test]
fn piece_names_round_trip() {
    for id in KernelPieceId::ALL {
        assert_eq!(id.name().parse::<KernelPieceId>().unwrap(), id);
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, format!("\"{}\"", id.name()));
    }
    assert!("kappa_Z".parse::<KernelPieceId>().is_err());
}

#[test]
fn phi_p_routes_agree() {
    let m = imag_powers(0.5, 0.0, 0.0);
    let k = rank_one(m, 0.1);
    let raw = k.phi_p_with_derivative(3.0, Route::Raw).unwrap();
    for route in [Route::ShiftedFull, Route::ShiftedEps] {
        let s = k.phi_p_with_derivative(3.0, route).unwrap();
        assert!((s.0 - raw.0).norm() < 1e-6, "{route:?}: {} vs {}", s.0, raw.0);
        assert!((s.1 - raw.1).norm() < 1e-6, "{route:?} derivative: {} vs {}", s.1, raw.1);
    }
    assert!(raw.0.norm() > 1e-3);
}

#[test]
fn phi_p_derivative_matches_finite_differences() {
    let k = rank_one(imag_powers(0.5, 0.0, 0.0), 0.1);
    for t in [1.6, 3.0, 7.5] {
        let d = k.phi_p_with_derivative(t, Route::ShiftedFull).unwrap().1;
        let fd = richardson_derivative(&|s: f64| k.phi_p(s, Route::ShiftedFull).unwrap(), t, 0.05, 1);
        assert!((d - fd).norm() < 1e-7, "t {t}: {d} vs {fd}");
    }
}

#[test]
fn phi_p_vanishes_on_the_plateau_and_for_zero_multiplier() {
    let k = rank_one(imag_powers(0.5, 0.0, 0.0), 0.1);
    for t in [0.0, 0.3, 1.0, -0.7] {
        assert_eq!(k.phi_p(t, Route::Raw).unwrap(), Complex64::new(0.0, 0.0));
    }
    let z = rank_one(zero_multiplier(), 0.1);
    for route in [Route::Raw, Route::ShiftedFull, Route::ShiftedEps] {
        assert_eq!(z.phi_p(3.0, route).unwrap().norm(), 0.0);
    }
}

#[test]
fn insufficient_strip_is_rejected() {
    // strip δ(4/3)ρ = 1/4, but p = 1.1 needs (2/p − 1)ρ ≈ 0.41
    let m = builtin_multiplier(&h2xh2(), &p43(), MultiplierKind::CriticalPowers { t: 1.0, u: 0.0, v: 0.0, eps: 0.1 }).unwrap();
    let k = RankOneKernels::new(H2, m, Exponent::new(1.1).unwrap(), KernelConfig::default()).unwrap();
    match k.phi_p(3.0, Route::ShiftedFull) {
        Err(Error::InsufficientStrip { available, required }) => {
            assert!((available - 0.25).abs() < 1e-12 && required > 0.4);
        }
        other => panic!("expected InsufficientStrip, got {other:?}"),
    }
    assert!(k.phi_p(3.0, Route::Raw).is_ok());
}

#[test]
fn kappa_1_is_rescaled_phi_p() {
    let k = rank_one(imag_powers(0.5, 0.0, 0.0), 0.1);
    let t = 3.0;
    let k1 = k.kappa_1(t).unwrap();
    let phi = k.phi_p(t, Route::ShiftedEps).unwrap() * (-2.0 * H2.rho() * t / p43().p).exp();
    assert!((k1 - phi).norm() < 1e-8, "{k1} vs {phi}");
}

#[test]
fn harish_chandra_pieces_reproduce_the_inverse_transform() {
    let m = imag_powers(0.5, 0.0, 0.0);
    let k = rank_one(m.clone(), 0.1);
    let inv = inverse_spherical_transform(&H2, &spectral(&m, 0.5), 3.0, 0.1).unwrap();
    let (k1, kw) = k.kappa_1_omega(3.0, 0.0).unwrap();
    assert!((2.0 * (k1 + kw) - inv).norm() < 1e-6, "{} vs {inv}", 2.0 * (k1 + kw));
    // κ_A, κ_R vanish at t = 3
    let local = k.local_pieces(&[3.0]).unwrap()[0];
    assert_eq!(local.kappa_a.norm() + local.kappa_r.norm(), 0.0);
    // the sum is independent of the contour
    let (k1s, kws) = k.kappa_1_omega(3.0, 0.2).unwrap();
    assert!((k1s - k1).norm() < 1e-10 && (kws - kw).norm() < 1e-10);
}

#[test]
fn rank_one_sum_identity_across_regions() {
    let m = imag_powers(0.5, 0.0, 0.0);
    let k = rank_one(m.clone(), 0.1);
    let sf = spectral(&m, 0.5);
    let ts = [0.05, 0.5, 1.2, 1.5, 1.9, 3.0, 6.0];
    for l in k.local_pieces(&ts).unwrap() {
        let inv = inverse_spherical_transform(&H2, &sf, l.t, 0.1).unwrap();
        let (k1, kw) = k.kappa_1_omega(l.t, 0.0).unwrap();
        let phi = bump_bc(l.t);
        assert!((l.kappa_a + l.kappa_r - inv * phi).norm() < 1e-6, "t {}", l.t);
        assert!((2.0 * (k1 + kw) - inv * (1.0 - phi)).norm() < 1e-6, "t {}", l.t);
    }
}

#[test]
fn product_sum_identity_and_cutoff_supports() {
    let k = ProductKernels::new(h2xh2(), imag_powers(0.5, 0.2, 0.3), p43(), KernelConfig::with_regularizer(0.1)).unwrap();
    let pts = [(0.5, 0.5), (1.5, 1.5), (3.0, 0.5), (0.5, 3.0), (3.0, 3.0), (1.5, 3.0), (0.05, 2.5)];
    let pieces = k.pieces(&pts).unwrap();
    for pc in &pieces {
        assert!(pc.sum_residual() < 1e-6, "{:?}: residual {}", pc.t, pc.sum_residual());
        assert!(pc.aa_split_residual() < 1e-10, "{:?}", pc.t);
    }
    let inner = pieces[0];
    assert_eq!(inner.k_b1().norm() + inner.k_b2().norm(), 0.0);
    assert!((inner.k_b0() - inner.direct).norm() < 1e-6);
    // far from the walls only k_B2 survives
    let far = pieces[4];
    assert_eq!(far.k_b0().norm() + far.k_b1().norm(), 0.0);
}

#[test]
fn kappa_11_is_rescaled_phi_p_11() {
    let m = imag_powers(0.5, 0.2, 0.3);
    let k = ProductKernels::new(h2xh2(), m, p43(), KernelConfig::with_regularizer(0.1)).unwrap();
    let t = (3.0, 4.0);
    let one_one = k.pieces(&[t]).unwrap()[0].one_one;
    let phi = k.phi_p_11(&[t], Route::ShiftedFull).unwrap()[0][0];
    let scale = (-2.0 * 0.5 * (t.0 + t.1) / p43().p).exp();
    assert!((one_one - phi * scale).norm() < 1e-8 * (1.0 + one_one.norm()), "{one_one} vs {}", phi * scale);
    let raw = k.phi_p_11(&[t], Route::Raw).unwrap()[0];
    let eps = k.phi_p_11(&[t], Route::ShiftedEps).unwrap()[0];
    let full = k.phi_p_11(&[t], Route::ShiftedFull).unwrap()[0];
    for c in 0..4 {
        assert!((raw[c] - full[c]).norm() < 1e-6 && (eps[c] - full[c]).norm() < 1e-6, "component {c}");
    }
}

#[test]
fn zero_multiplier_kills_every_piece() {
    let zero = zero_multiplier();
    let p = p43();
    for id in KernelPieceId::ALL {
        let (space, point): (KernelSpace, Vec<f64>) = match id {
            KernelPieceId::TauP1 | KernelPieceId::TauP2 | KernelPieceId::TauP3 => (KernelSpace::RankOne(H2), vec![0.7, 2.5]),
            _ if id.is_rank_one() => (KernelSpace::RankOne(H2), vec![1.5]),
            _ => (KernelSpace::Product(h2xh2()), vec![1.5, 2.5]),
        };
        let v = kernel_piece_eval(id, &space, &zero, p, &point, 0.1).unwrap();
        assert_eq!(v.norm(), 0.0, "{id}");
    }
}

#[test]
fn invalid_evaluations_are_rejected() {
    let m = imag_powers(0.5, 0.0, 0.0);
    let r1 = KernelSpace::RankOne(H2);
    let pr = KernelSpace::Product(h2xh2());
    assert!(kernel_piece_eval(KernelPieceId::Kappa1, &r1, &m, p43(), &[3.0], 0.0).is_err());
    assert!(matches!(kernel_piece_eval(KernelPieceId::AA, &r1, &m, p43(), &[3.0], 0.1), Err(Error::Region { .. })));
    assert!(matches!(kernel_piece_eval(KernelPieceId::Kappa1, &pr, &m, p43(), &[3.0, 1.0], 0.1), Err(Error::Region { .. })));
    assert!(matches!(kernel_piece_eval(KernelPieceId::KappaR, &r1, &m, p43(), &[-1.0], 0.1), Err(Error::Region { .. })));
    assert!(matches!(kernel_piece_eval(KernelPieceId::AR, &pr, &m, p43(), &[1.0], 0.1), Err(Error::Region { .. })));
    // no decay at all
    let k = RankOneKernels::new(H2, m, p43(), KernelConfig::with_regularizer(0.0));
    assert!(matches!(k, Err(Error::Divergence(_))));
}

#[test]
fn tau_pieces_at_the_identity() {
    let tables = tau_decomposition(&H2, &imag_powers(0.5, 0.0, 0.0), p43(), KernelConfig::with_regularizer(0.1), &[0.0], &[1.5, 3.0, 6.0]).unwrap();
    for v in &tables.values[0] {
        assert_eq!(v.tau1.norm(), 0.0);
        assert!(v.tau2.norm() < 1e-15);
        assert!((v.tau3 - v.whole).norm() < 1e-6 * (1.0 + v.whole.norm()));
    }
}

#[test]
fn tau_decomposition_holds_on_random_samples() {
    let m = imag_powers(0.5, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<f64> = (0..10).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let bs: Vec<f64> = (0..10).map(|_| rng.gen_range(0.05..6.0)).collect();
    let tables = tau_decomposition(&H2, &m, p43(), KernelConfig::with_regularizer(0.1), &xs, &bs).unwrap();
    assert_eq!(tables.values.iter().flatten().count(), 100);
    assert!(tables.max_residual() < 1e-6, "max residual {}", tables.max_residual());
    assert!(tables.values.iter().flatten().any(|v| v.tau1.norm() > 1e-4));
}

#[test]
fn tau_pieces_vanish_off_the_positive_chamber() {
    let tables = tau_decomposition(&H2, &imag_powers(0.5, 0.0, 0.0), p43(), KernelConfig::with_regularizer(0.1), &[-1.0, 0.5], &[-2.0, -0.1, 0.0]).unwrap();
    for v in tables.values.iter().flatten() {
        assert_eq!(v.tau1.norm() + v.tau2.norm() + v.tau3.norm() + v.whole.norm(), 0.0);
    }
    let cfg = KernelConfig::with_regularizer(0.1);
    assert!(matches!(tau_decomposition(&RankOneSpace::H3, &imag_powers(0.5, 0.0, 0.0), p43(), cfg, &[0.0], &[1.0]), Err(Error::Unsupported(_))));
}

#[test]
fn chebyshev_average_of_zero_is_zero() {
    let out = chebyshev_average(&h2xh2(), &zero_multiplier(), (5.0, 7.0), ParityCase::EvenEven).unwrap();
    assert!(out.iter().flatten().all(|z| z.norm() == 0.0));
    assert!(chebyshev_average(&h2xh2(), &zero_multiplier(), (5.0, 7.0), ParityCase::OddEven).is_err());
}

#[test]
fn chebyshev_average_needs_enough_derivatives() {
    let base = imag_powers(0.5, 0.0, 0.5);
    let mut m = MultiplierSpec::from_fn("shallow", move |a, b| base.eval(a, b), true, (0.5, 0.5));
    m.derivative_order_available = (1, 1);
    assert!(matches!(chebyshev_average(&h2xh2(), &m, (5.0, 7.0), ParityCase::EvenEven), Err(Error::Unsupported(_))));
}

#[test]
fn mixed_chebyshev_average_matches_brute_force() {
    let h3h2 = ProductSpace::new(RankOneSpace::H3, H2);
    let m = builtin_multiplier(&h3h2, &p43(), MultiplierKind::ImaginaryPowers { t: 0.5, u: 0.3, v: 0.5 }).unwrap();
    let origin = chebyshev_average(&h3h2, &m, (0.0, 0.0), ParityCase::OddEven).unwrap();
    assert!(origin.iter().flatten().all(|z| z.norm() == 0.0));

    let v = (3.0, 4.0);
    let got = chebyshev_average(&h3h2, &m, v, ParityCase::OddEven).unwrap();
    // G = −∂1(M/λ1) by finite differences, then ∫_0^{π/2} sin θ ∂2 G(v1, v2 sin θ) dθ adaptively
    let mm = |l1: f64, l2: f64| {
        m.eval(Complex64::new(l1, 0.0), Complex64::new(l2, 0.0))
            * ((1.0 - bump_bc(l1)) * (1.0 - bump_bc(l2)) * plancherel_density(&RankOneSpace::H3, l1) * plancherel_density(&H2, l2))
    };
    let g = |l1: f64, l2: f64| -richardson_derivative(&|x: f64| mm(x, l2) / x, l1, 0.05, 1);
    let inner = |th: f64| richardson_derivative(&|y: f64| g(v.0, y), v.1 * th.sin(), 0.05, 1) * th.sin();
    let oracle = adaptive(&inner, 0.0, std::f64::consts::FRAC_PI_2, 16, 1e-8, 1e-8).value;
    assert!((got[0][0] - oracle).norm() < 1e-6, "{} vs {oracle}", got[0][0]);
}

#[test]
fn paper_bound_battery_passes() {
    let reports = paper_bound_battery(KernelConfig::default()).unwrap();
    assert!(reports.len() >= 18);
    for r in &reports {
        assert!(r.verdict.is_pass(), "{r}");
    }
}

#[test]
fn estimate_verify_rejects_vanishing_windows() {
    let (mut t, m, p) = paper_bound_targets(KernelConfig::default()).unwrap().into_iter().find(|(t, _, _)| t.name == "phi_p decay").unwrap();
    t.fit_window = (0.2, 0.9);
    assert!(estimate_verify(t.piece, &t, &m, p).is_err());
    assert!(estimate_verify(KernelPieceId::KappaA, &t, &m, p).is_err());
}

/// m(−λ1, λ2) with the same declared analytic data.
fn flipped(m: &MultiplierSpec) -> MultiplierSpec {
    let inner = m.clone();
    let mut f = MultiplierSpec::from_fn("flipped", move |a, b| inner.eval(-a, b), true, m.analytic_strip);
    f.gaussian_rate = m.gaussian_rate;
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn product_pieces_are_weyl_invariant(t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
        let m = imag_powers(0.5, 0.2, 0.3);
        let cfg = KernelConfig::with_regularizer(0.15);
        let a = ProductKernels::new(h2xh2(), m.clone(), p43(), cfg).unwrap().pieces(&[(t1, t2)]).unwrap()[0];
        let b = ProductKernels::new(h2xh2(), flipped(&m), p43(), cfg).unwrap().pieces(&[(t1, t2)]).unwrap()[0];
        for id in KernelPieceId::ALL {
            if let (Some(x), Some(y)) = (a.get(id), b.get(id)) {
                prop_assert!((x - y).norm() < 1e-10 * (1.0 + x.norm()), "{} differs", id);
            }
        }
    }

    #[test]
    fn product_sum_identity_on_random_points(t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let k = ProductKernels::new(h2xh2(), imag_powers(0.4, 0.1, 0.6), p43(), KernelConfig::with_regularizer(0.15)).unwrap();
        let pc = k.pieces(&[(t1, t2)]).unwrap()[0];
        prop_assert!(pc.sum_residual() < 1e-6);
    }

    #[test]
    fn phi_p_is_route_independent(t in 1.0f64..12.0) {
        let k = rank_one(imag_powers(0.5, 0.0, 0.0), 0.1);
        let raw = k.phi_p(t, Route::Raw).unwrap();
        let full = k.phi_p(t, Route::ShiftedFull).unwrap();
        let eps = k.phi_p(t, Route::ShiftedEps).unwrap();
        prop_assert!((raw - full).norm() < 1e-6 && (eps - full).norm() < 1e-6);
    }

    #[test]
    fn bump_stays_in_the_unit_interval(x in -3.0f64..3.0) {
        let v = bump_bc(x);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, bump_bc(-x));
    }
}
