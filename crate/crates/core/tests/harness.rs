use proptest::prelude::*;
use sphmult_core::harness::*;
use sphmult_core::report::Verdict;
use sphmult_core::transform::{inverse_on_grid, spherical_transform, DecayHint, InverseOptions, RadialFunction, SpectralFunction};
use sphmult_core::{Complex64, Error, RankOneSpace};
use std::time::Instant;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn config(p: f64, kind: &str, params: &[f64]) -> ExperimentConfig {
    ExperimentConfig::new(p, MultiplierChoice::new(kind, params))
}

fn imaginary_powers(p: f64) -> ExperimentConfig {
    config(p, "imaginary_powers", &[1.0, 1.0, 1.0])
}

fn spread(e: &OperatorEstimate) -> f64 {
    let v: Vec<f64> = e.resolution_curve.iter().map(|r| r.estimate).collect();
    let hi = v.iter().cloned().fold(f64::MIN, f64::max);
    let lo = v.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo - 1.0
}

#[test]
fn identity_multiplier_reproduces_the_input() {
    let mut cfg = config(2.0, "constant", &[1.0]);
    cfg.epsilon = 1e-4;
    let err = identity_error(&cfg).unwrap();
    assert!(err < 1e-3, "{err:e}");
}

#[test]
fn separable_multiplier_composes_one_factor_operators() {
    // B(g1 ⊗ g2) = ℋ⁻¹(e^{−(a+ε)λ²−ερ²} ℋg1) ⊗ ℋ⁻¹(same ℋg2) for m = e^{−a(λ1²+λ2²)}
    let (a, eps) = (0.1, 0.05);
    let mut cfg = config(2.0, "gaussian", &[a]);
    cfg.epsilon = eps;
    cfg.resolutions = vec![128];
    let g1 = |r: f64| (-r * r).exp();
    let g2 = |r: f64| (1.0 + r * r) * (-1.5 * r * r).exp();
    let op = BiRadialOperator::new(&cfg, 128).unwrap();
    let out = op.apply(&op.sample(|x, y| c(g1(x) * g2(y)))).unwrap().output;

    let h2 = RankOneSpace::H2;
    let rho2 = h2.rho() * h2.rho();
    let grid: Vec<f64> = (0..=1200).map(|k| k as f64 * 0.005).collect();
    let oracle = |g: &dyn Fn(f64) -> f64, ts: &[f64]| -> Vec<Complex64> {
        let rf = RadialFunction::from_fn(grid.clone(), |t| c(g(t)), DecayHint::Gaussian).unwrap();
        let m = SpectralFunction::new(
            move |l| spherical_transform(&h2, &rf, l).unwrap() * (-(a + eps) * l * l - eps * rho2).exp(),
            true,
            f64::INFINITY,
        )
        .with_gaussian_rate(a + eps);
        inverse_on_grid(&h2, &m, ts, 0.0, InverseOptions::default()).unwrap()
    };
    let (r1, r2) = op.nodes();
    let o1 = oracle(&g1, r1);
    let o2 = oracle(&g2, r2);
    let scale = o1.iter().map(|z| z.norm()).fold(0.0, f64::max) * o2.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for (i, row) in out.values.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            worst = worst.max((v - o1[i] * o2[k]).norm());
        }
    }
    assert!(worst / scale < 1e-4, "{:e}", worst / scale);
}

#[test]
fn l2_ratio_is_bounded_by_the_symbol() {
    for (kind, params) in [("gaussian", vec![0.1]), ("imaginary_powers", vec![1.0, 1.0, 1.0]), ("constant", vec![0.3, 0.4])] {
        let mut cfg = config(2.0, kind, &params);
        cfg.resolutions = vec![96];
        let ratio = plancherel_ratio(&cfg, 50, 5).unwrap();
        assert!(ratio <= 1.0 + 1e-2, "{kind}: {ratio}");
        assert!(ratio > 0.1, "{kind}: {ratio}");
    }
}

#[test]
fn constant_multiplier_norm_at_p_1_5() {
    let mut cfg = config(1.5, "constant", &[1.0]);
    cfg.epsilon = 0.05;
    let e = estimate_lp_norm(&cfg).unwrap();
    assert!((0.95..=1.0).contains(&e.empirical_norm_lower_bound), "{e:?}");
    assert_eq!(e.verdict, Verdict::Pass);
}

#[test]
fn gaussian_multiplier_at_p_2_respects_plancherel() {
    let e = estimate_lp_norm(&config(2.0, "gaussian", &[0.1])).unwrap();
    assert!(e.empirical_norm_lower_bound <= 1.0 + 1e-2, "{}", e.empirical_norm_lower_bound);
}

#[test]
fn imaginary_powers_are_stable_under_refinement() {
    let e = estimate_lp_norm(&imaginary_powers(1.5)).unwrap();
    let res: Vec<usize> = e.resolution_curve.iter().map(|r| r.radial_points).collect();
    assert_eq!(res, vec![64, 128, 192]);
    assert!(spread(&e) <= 0.10, "{:?}", e.resolution_curve);
    assert_eq!(e.verdict, Verdict::Pass);
    assert!(e.empirical_norm_lower_bound >= 1.0, "{}", e.empirical_norm_lower_bound);
    assert!(e.note.contains("lower bounds"));
}

#[test]
fn conjugate_exponents_agree() {
    let a = estimate_lp_norm(&imaginary_powers(1.5)).unwrap().empirical_norm_lower_bound;
    let b = estimate_lp_norm(&imaginary_powers(3.0)).unwrap().empirical_norm_lower_bound;
    assert!((a / b - 1.0).abs() <= 0.10, "{a} vs {b}");
}

#[test]
fn pieces_sum_to_the_operator() {
    let mut cfg = imaginary_powers(1.5);
    cfg.resolutions = vec![64];
    cfg.trials = 2;
    let e = estimate_lp_norm(&cfg).unwrap();
    assert_eq!(e.pieces.iter().map(|p| p.piece.as_str()).collect::<Vec<_>>(), ["B0", "B1", "B2"]);
    assert!(e.piece_sum_residual < 1e-6, "{:e}", e.piece_sum_residual);
    // every piece of a nonzero symbol acts nontrivially, and the triangle inequality bounds B
    let total: f64 = e.pieces.iter().map(|p| p.empirical_norm_lower_bound).sum();
    assert!(e.pieces.iter().all(|p| p.empirical_norm_lower_bound > 0.0));
    assert!(e.empirical_norm_lower_bound <= total * (1.0 + 1e-6));
}

#[test]
fn same_seed_gives_identical_reports() {
    let mut cfg = imaginary_powers(1.5);
    cfg.resolutions = vec![32, 48];
    cfg.trials = 3;
    cfg.iterations = 8;
    cfg.threads = Some(2);
    let a = serde_json::to_string(&estimate_lp_norm(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&estimate_lp_norm(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    cfg.seed += 1;
    let c = serde_json::to_string(&estimate_lp_norm(&cfg).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn apply_rejects_foreign_grids() {
    let mut cfg = config(2.0, "constant", &[1.0]);
    cfg.resolutions = vec![32];
    let other = BiRadialOperator::new(&cfg, 48).unwrap().sample(|_, _| c(1.0));
    assert!(matches!(apply_operator(&cfg, &other), Err(Error::Domain { .. })));
    let own = BiRadialOperator::new(&cfg, 32).unwrap().sample(|x, y| c((-(x * x + y * y)).exp()));
    let out = apply_operator(&cfg, &own).unwrap();
    assert!(out.truncation_mass >= 0.0 && out.truncation_mass < 1e-6, "{}", out.truncation_mass);
}

#[test]
fn config_errors_name_the_key() {
    let e = ExperimentConfig::from_json(r#"{"multiplier": {"kind": "gaussian", "params": [0.1]}}"#).unwrap_err();
    assert!(e.to_string().contains("missing field `p`"), "{e}");
    let e = ExperimentConfig::from_json(r#"{"p": 1.5, "multiplier": {"params": [1]}}"#).unwrap_err();
    assert!(e.to_string().contains("`multiplier`") && e.to_string().contains("kind"), "{e}");
    let e = ExperimentConfig::from_json(r#"{"p": 1.5, "multiplier": {"kind": "gaussian"}, "epsilon": "big"}"#).unwrap_err();
    assert!(e.to_string().contains("`epsilon`"), "{e}");
    let e = ExperimentConfig::from_json(r#"{"p": 1.5, "multiplier": {"kind": "gaussian", "params": [0.1]}, "angular": 8}"#).unwrap_err();
    assert!(e.to_string().contains("angular"), "{e}");
    let e = ExperimentConfig::from_json(r#"{"p": 1.5, "space": "H3xH2", "multiplier": {"kind": "gaussian", "params": [0.1]}}"#).unwrap_err();
    assert!(matches!(e, Error::Unsupported(_)), "{e}");
    let e = ExperimentConfig::from_json(r#"{"p": 1.5, "multiplier": {"kind": "gaussian", "params": [0.1]}, "resolutions": [64, 60]}"#).unwrap_err();
    assert!(e.to_string().contains("resolutions"), "{e}");
    let cfg = ExperimentConfig::from_json(r#"{"p": 1.5, "multiplier": {"kind": "gaussian", "params": [0.1]}}"#).unwrap();
    assert_eq!(cfg.resolutions, vec![64, 128, 192]);
}

#[test]
fn stability_verdict_rules() {
    assert_eq!(stability_verdict(&[1.0, 1.05, 1.02]), Verdict::Pass);
    assert_eq!(stability_verdict(&[1.0, 1.2, 1.5]), Verdict::Fail);
    assert_eq!(stability_verdict(&[1.0, 1.3, 1.1]), Verdict::Inconclusive);
    assert_eq!(stability_verdict(&[1.0, f64::NAN]), Verdict::Inconclusive);
    assert_eq!(stability_verdict(&[]), Verdict::Inconclusive);
}

#[test]
fn sanity_suite_passes_quickly_and_writes_reports() {
    let dir = std::env::temp_dir().join(format!("sphmult-sanity-{}", std::process::id()));
    let start = Instant::now();
    let report = run_suite("sanity", &SuiteOptions { seed: 3, threads: None, out_dir: Some(dir.clone()) }).unwrap();
    assert!(start.elapsed().as_secs() < 60);
    for c in &report.checks {
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
    }
    assert_eq!(report.exit_code(), 0);
    let json: SuiteReport = serde_json::from_str(&std::fs::read_to_string(dir.join("sanity.json")).unwrap()).unwrap();
    assert_eq!(json.checks.len(), report.checks.len());
    let csv = std::fs::read_to_string(dir.join("sanity.csv")).unwrap();
    assert_eq!(csv.lines().count(), report.checks.len() + 1);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn expansion_and_operator_suites_pass() {
    for name in ["expansions", "operator", "independence"] {
        let report = run_suite(name, &SuiteOptions::default()).unwrap();
        assert_eq!(report.exit_code(), 0, "{report:#?}");
        assert_eq!(report.verdict, Verdict::Pass, "{report:#?}");
    }
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(matches!(run_suite("everything", &SuiteOptions::default()), Err(Error::Config(_))));
}

#[test]
fn failing_checks_give_a_nonzero_exit_code() {
    let mut report = run_suite("independence", &SuiteOptions::default()).unwrap();
    report.checks[0].verdict = Verdict::Fail;
    assert_eq!(report.exit_code(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn config_round_trips(p in 1.05f64..4.0, eps in 0.01f64..1.0, seed in any::<u64>(), trials in 1usize..20, threads in proptest::option::of(1usize..8)) {
        let mut cfg = config(p, "imaginary_powers", &[1.0, 0.5, -1.0]);
        cfg.epsilon = eps;
        cfg.seed = seed;
        cfg.trials = trials;
        cfg.threads = threads;
        cfg.out_dir = Some("out/run".into());
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn trial_curve_is_nondecreasing(seed in any::<u64>(), p in 1.2f64..3.0) {
        let mut cfg = imaginary_powers(p);
        cfg.resolutions = vec![32];
        cfg.trials = 5;
        cfg.iterations = 5;
        cfg.seed = seed;
        let e = estimate_lp_norm(&cfg).unwrap();
        prop_assert_eq!(e.trial_curve.len(), 5);
        prop_assert!(e.trial_curve.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(*e.trial_curve.last().unwrap(), e.empirical_norm_lower_bound);
    }
}
