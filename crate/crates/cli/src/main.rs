//! `sphmult`: command-line access to the spherical analysis toolkit.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};
use sphmult_core::group::{gap_decay_fit, iwasawa_cartan_gap, transference_check, TransferenceGrid};
use sphmult_core::harness::{estimate_lp_norm, run_suite, ExperimentConfig, SuiteOptions, SuiteReport, SUITES};
use sphmult_core::kernels::{kernel_piece_eval, paper_bound_battery, KernelConfig, KernelPieceId, KernelSpace};
use sphmult_core::mult::{
    builtin_multiplier, horm_infty_norm, horm_norm, independence_witness, ionescu_norm, marc_frastar_norm, marc_infty_norm,
    marc_norm, Condition, MultiplierKind,
};
use sphmult_core::specfun::{c_function, hc_fit, plancherel_density};
use sphmult_core::sphfn::{hc_series_value, ode_residual, phi_oracle};
use sphmult_core::transform::{inverse_on_grid, InverseOptions, SpectralFunction};
use sphmult_core::{EstimateReport, Exponent, ProductSpace, RankOneSpace, Verdict};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sphmult", version, about = "Spherical multipliers on rank-one symmetric spaces and their products")]
struct Cli {
    /// Seed for every randomized routine.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for JSON and CSV outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Root data, ρ, dimension and the density δ(t).
    Space {
        #[arg(long, default_value = "H2")]
        space: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        t: Vec<f64>,
    },
    /// Harish-Chandra c-function and Plancherel density at real λ.
    Specfun {
        #[arg(long, default_value = "H2")]
        space: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.5, 1.0, 5.0])]
        lambda: Vec<f64>,
        /// Also extract c(λ) from the large-t asymptotics.
        #[arg(long)]
        fit: bool,
    },
    /// φ_λ(t) from the ODE oracle and the Harish-Chandra series.
    Sphfn {
        #[arg(long, default_value = "H2")]
        space: String,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda_im: f64,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        t: Vec<f64>,
        #[arg(long, default_value_t = 12)]
        hc_terms: usize,
    },
    /// ℋ⁻¹ of the Gaussian symbol e^{−aλ²}.
    Transform {
        #[arg(long, default_value = "H2")]
        space: String,
        #[arg(long, default_value_t = 0.5)]
        gaussian: f64,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0])]
        t: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Multiplier conditions.
    #[command(subcommand)]
    Mult(MultCmd),
    /// Kernel pieces and the estimate battery.
    #[command(subcommand)]
    Kernels(KernelsCmd),
    /// Iwasawa/Cartan gap and the transference check.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Operator experiments and named suites.
    #[command(subcommand)]
    Harness(HarnessCmd),
    /// Runs a named suite (same as `harness suite`).
    Run { name: String },
}

#[derive(Args, Clone)]
struct MultiplierArgs {
    #[arg(long, default_value = "imaginary_powers")]
    kind: String,
    #[arg(long, num_args = 1.., value_delimiter = ',', allow_hyphen_values = true, default_values_t = [1.0, 1.0, 1.0])]
    params: Vec<f64>,
}

#[derive(Subcommand)]
enum MultCmd {
    /// Sampled norm of a built-in multiplier for one condition.
    Norm {
        #[arg(long, default_value = "H2xH2")]
        space: String,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        m: MultiplierArgs,
        /// horm, horm_infty, marc, marc_infty, marc_frastar or ionescu.
        #[arg(long, default_value = "marc")]
        condition: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [1, 1])]
        order: Vec<usize>,
    },
    /// The two regimes separating the Marcinkiewicz and Ionescu conditions.
    Independence {
        #[arg(long, default_value = "H2xH2")]
        space: String,
        #[arg(long, default_value_t = 4.0 / 3.0)]
        p: f64,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [1, 1])]
        j: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum KernelsCmd {
    /// Evaluates one kernel piece, e.g. `--piece kappa_omega --space H2 --p 1.3333 --t 3`.
    Eval {
        #[arg(long)]
        piece: String,
        /// A rank-one space (H2) or a product (H2xH2).
        #[arg(long, default_value = "H2")]
        space: String,
        #[arg(long)]
        p: f64,
        /// The point: one radius, or two for product pieces.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[command(flatten)]
        m: MultiplierArgs,
    },
    /// Runs the estimate battery.
    Verify {
        #[arg(long, default_value = "paper-bounds")]
        suite: String,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

#[derive(Subcommand)]
enum GroupCmd {
    /// E(v, b) and its decay fit in t_b.
    Gap {
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        #[arg(long, num_args = 1.., value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
        tb: Vec<f64>,
    },
    /// Transference inequality over random kernels.
    Transference {
        #[arg(long, default_value_t = 1.5)]
        p: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum HarnessCmd {
    /// Runs one of: sanity, expansions, paper-bounds, independence, transference, operator.
    Suite { name: String },
    /// Empirical L^p norm of an operator described by a JSON config file.
    Estimate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Prints the default configuration for p and a multiplier.
    Config {
        #[arg(long, default_value_t = 1.5)]
        p: f64,
        #[command(flatten)]
        m: MultiplierArgs,
    },
}

/// A command's result: the JSON document, the CSV rows and the exit status.
struct Output {
    name: String,
    json: Value,
    rows: Vec<Vec<(String, String)>>,
    failed: bool,
}

impl Output {
    fn new(name: &str, json: Value, rows: Vec<Vec<(String, String)>>) -> Self {
        Output { name: name.into(), json, rows, failed: false }
    }
}

fn cplx(z: Complex64) -> String {
    format!("{:.15e}{:+.15e}i", z.re, z.im)
}

fn row(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn rank_one(s: &str) -> Result<RankOneSpace> {
    Ok(s.parse()?)
}

fn product(s: &str) -> Result<ProductSpace> {
    Ok(s.parse()?)
}

fn pair_of(v: &[usize], what: &str) -> Result<(usize, usize)> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => bail!("--{what} takes two comma-separated integers"),
    }
}

fn estimate_rows(reports: &[EstimateReport]) -> Vec<Vec<(String, String)>> {
    reports
        .iter()
        .map(|r| {
            row(&[
                ("name", r.name.clone()),
                ("verdict", r.verdict.to_string()),
                ("fitted", r.fitted.to_string()),
                ("claimed", r.claimed.to_string()),
                ("tolerance", r.tolerance.to_string()),
                ("window_lo", r.window.0.to_string()),
                ("window_hi", r.window.1.to_string()),
            ])
        })
        .collect()
}

fn suite_output(report: SuiteReport) -> Output {
    let rows = report
        .checks
        .iter()
        .map(|c| row(&[("name", c.name.clone()), ("verdict", c.verdict.to_string()), ("value", c.value.to_string()), ("detail", c.detail.clone())]))
        .collect();
    let failed = report.exit_code() != 0;
    Output { name: report.suite.clone(), json: serde_json::to_value(&report).expect("serializable"), rows, failed }
}

fn run(cli: &Cli) -> Result<Output> {
    Ok(match &cli.cmd {
        Cmd::Space { space, p, t } => {
            let s = rank_one(space)?;
            let delta = p.map(Exponent::new).transpose()?;
            let rows: Vec<_> = t.iter().map(|&t| Ok(row(&[("t", t.to_string()), ("density", s.density_delta(t)?.to_string())]))).collect::<Result<_>>()?;
            let json = json!({
                "space": s.to_string(), "m_alpha": s.m_alpha(), "m_2alpha": s.m_2alpha(), "n": s.n(), "rho": s.rho(),
                "delta_p": delta.map(|e| e.delta_p), "density": rows.iter().map(|r| json!({"t": r[0].1, "value": r[1].1})).collect::<Vec<_>>(),
            });
            Output::new("space", json, rows)
        }
        Cmd::Specfun { space, lambda, fit } => {
            let s = rank_one(space)?;
            let mut rows = Vec::new();
            for &l in lambda {
                let c = c_function(&s, Complex64::new(l, 0.0))?.value;
                let mut r = row(&[("lambda", l.to_string()), ("c", cplx(c)), ("plancherel_density", plancherel_density(&s, l).to_string())]);
                if *fit {
                    let f = hc_fit(&s, l)?;
                    r.push(("c_fit".into(), cplx(f.value)));
                    r.push(("fit_rel_error".into(), ((f.value - c).norm() / c.norm()).to_string()));
                }
                rows.push(r);
            }
            Output::new("specfun", rows_json(&rows), rows)
        }
        Cmd::Sphfn { space, lambda, lambda_im, t, hc_terms } => {
            let s = rank_one(space)?;
            let l = Complex64::new(*lambda, *lambda_im);
            let mut rows = Vec::new();
            for &t in t {
                let mut r = row(&[("t", t.to_string()), ("phi", cplx(phi_oracle(&s, l, t)?))]);
                if t >= 0.5 {
                    r.push(("phi_hc".into(), cplx(hc_series_value(&s, l, t, *hc_terms)?)));
                }
                if t > 0.0 {
                    r.push(("ode_residual".into(), ode_residual(&s, l, t)?.to_string()));
                }
                rows.push(r);
            }
            Output::new("sphfn", rows_json(&rows), rows)
        }
        Cmd::Transform { space, gaussian, t, eps } => {
            let s = rank_one(space)?;
            let values = inverse_on_grid(&s, &SpectralFunction::gaussian(*gaussian), t, *eps, InverseOptions::default())?;
            let rows: Vec<_> = t.iter().zip(&values).map(|(t, v)| row(&[("t", t.to_string()), ("inverse", cplx(*v))])).collect();
            Output::new("transform", rows_json(&rows), rows)
        }
        Cmd::Mult(MultCmd::Norm { space, p, m, condition, order }) => {
            let ps = product(space)?;
            let e = Exponent::new(*p)?;
            let spec = builtin_multiplier(&ps, &e, MultiplierKind::parse(&m.kind, &m.params)?)?;
            let order = pair_of(order, "order")?;
            let f = match Condition::parse(condition)? {
                Condition::Horm => horm_norm,
                Condition::HormInfty => horm_infty_norm,
                Condition::Marc => marc_norm,
                Condition::MarcInfty => marc_infty_norm,
                Condition::MarcFrastar => marc_frastar_norm,
                Condition::Ionescu => ionescu_norm,
            };
            let r = f(&ps, &e, &spec, order)?;
            let rows = r.levels.iter().enumerate().map(|(k, v)| row(&[("level", k.to_string()), ("sup", v.to_string())])).collect();
            Output::new("mult_norm", serde_json::to_value(&r)?, rows)
        }
        Cmd::Mult(MultCmd::Independence { space, p, j }) => {
            let r = independence_witness(&product(space)?, &Exponent::new(*p)?, pair_of(j, "j")?)?;
            let rows = estimate_rows(&[r.regime_a.clone(), r.regime_b_marc.clone(), r.regime_b_ionescu.clone()]);
            let mut out = Output::new("independence", serde_json::to_value(&r)?, rows);
            out.failed = r.verdict == Verdict::Fail;
            out
        }
        Cmd::Kernels(KernelsCmd::Eval { piece, space, p, t, eps, m }) => {
            let id: KernelPieceId = piece.parse()?;
            let (ks, ps) = if space.to_ascii_lowercase().contains('x') {
                let ps = product(space)?;
                (KernelSpace::Product(ps), ps)
            } else {
                let s = rank_one(space)?;
                (KernelSpace::RankOne(s), ProductSpace::new(s, s))
            };
            let e = Exponent::new(*p)?;
            let spec = builtin_multiplier(&ps, &e, MultiplierKind::parse(&m.kind, &m.params)?)?;
            let v = kernel_piece_eval(id, &ks, &spec, e, t, *eps)?;
            let rows = vec![row(&[("piece", id.to_string()), ("point", format!("{t:?}")), ("value", cplx(v))])];
            Output::new("kernels_eval", json!({"piece": id.to_string(), "space": space, "p": p, "point": t, "eps": eps, "multiplier": spec.name, "value": [v.re, v.im]}), rows)
        }
        Cmd::Kernels(KernelsCmd::Verify { suite, eps }) => {
            if suite != "paper-bounds" {
                bail!("unknown kernel suite `{suite}`; expected paper-bounds");
            }
            let reports = paper_bound_battery(KernelConfig::with_regularizer(*eps))?;
            let mut out = Output::new("paper-bounds", serde_json::to_value(&reports)?, estimate_rows(&reports));
            out.failed = reports.iter().any(|r| r.verdict == Verdict::Fail);
            out
        }
        Cmd::Group(GroupCmd::Gap { x, tb }) => {
            let mut rows = Vec::new();
            for &b in tb {
                rows.push(row(&[("x", x.to_string()), ("t_b", b.to_string()), ("gap", iwasawa_cartan_gap(*x, b)?.to_string()), ("bound", (2.0 * (-2.0 * b).exp()).to_string())]));
            }
            let fit = gap_decay_fit(*x, (2.0, 8.0), 13)?;
            let mut out = Output::new("gap", json!({"samples": rows_json(&rows), "decay_fit": fit}), rows);
            out.failed = fit.verdict == Verdict::Fail;
            out
        }
        Cmd::Group(GroupCmd::Transference { p, trials }) => {
            let (report, results) = transference_check(*p, *trials, TransferenceGrid::default(), cli.seed)?;
            let rows = results
                .iter()
                .map(|r| row(&[("label", r.label.clone()), ("lhs", r.lhs.to_string()), ("rhs", r.rhs.to_string()), ("verdict", r.verdict.to_string())]))
                .collect();
            let mut out = Output::new("transference", json!({"report": report, "trials": results}), rows);
            out.failed = report.verdict == Verdict::Fail;
            out
        }
        Cmd::Harness(HarnessCmd::Suite { name }) | Cmd::Run { name } => {
            let opts = SuiteOptions { seed: cli.seed, threads: cli.threads, out_dir: None };
            suite_output(run_suite(name, &opts)?)
        }
        Cmd::Harness(HarnessCmd::Estimate { config }) => {
            let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            cfg.threads = cli.threads.or(cfg.threads);
            let est = estimate_lp_norm(&cfg)?;
            let rows = est
                .resolution_curve
                .iter()
                .map(|r| row(&[("radial_points", r.radial_points.to_string()), ("spectral_points", r.spectral_points.to_string()), ("estimate", r.estimate.to_string())]))
                .collect();
            let mut out = Output::new("operator_estimate", serde_json::to_value(&est)?, rows);
            out.failed = est.verdict == Verdict::Fail;
            if cli.out_dir.is_none() {
                if let Some(dir) = &cfg.out_dir {
                    write_outputs(&out, dir)?;
                }
            }
            out
        }
        Cmd::Harness(HarnessCmd::Config { p, m }) => {
            let mut cfg = ExperimentConfig::new(*p, sphmult_core::harness::MultiplierChoice::new(&m.kind, &m.params));
            cfg.seed = cli.seed;
            cfg.validate()?;
            Output::new("config", serde_json::from_str(&cfg.to_json())?, Vec::new())
        }
    })
}

fn rows_json(rows: &[Vec<(String, String)>]) -> Value {
    Value::Array(rows.iter().map(|r| Value::Object(r.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())).collect())
}

fn write_outputs(out: &Output, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join(format!("{}.json", out.name)), serde_json::to_string_pretty(&out.json)?)?;
    let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", out.name)))?;
    // rows may carry optional columns; the header is the union in first-seen order
    let mut header: Vec<String> = Vec::new();
    for r in &out.rows {
        for (k, _) in r {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    if !header.is_empty() {
        w.write_record(&header)?;
        for r in &out.rows {
            w.write_record(header.iter().map(|h| r.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or("")))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_text(out: &Output) {
    if out.rows.is_empty() {
        emit(&serde_json::to_string_pretty(&out.json).expect("serializable"));
        return;
    }
    for r in &out.rows {
        emit(&r.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("  "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let out = match run(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e:#}");
            if matches!(&cli.cmd, Cmd::Run { .. } | Cmd::Harness(HarnessCmd::Suite { .. })) {
                eprintln!("suites: {}", SUITES.join(", "));
            }
            return ExitCode::from(2);
        }
    };
    if cli.json {
        emit(&serde_json::to_string_pretty(&out.json).expect("serializable"));
    } else {
        print_text(&out);
    }
    if let Some(dir) = &cli.out_dir {
        if let Err(e) = write_outputs(&out, dir) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    if out.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
