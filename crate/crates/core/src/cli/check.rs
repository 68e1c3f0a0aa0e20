//! Self-check suite: oracle, identity and asymptotic properties of every module.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fit::{objective, objective_grad, recover, FitConfig};
use crate::forward::{
    laplace_trace, sample_trace, single_mode_example, single_mode_orders, square_vertex_example, trace,
    SpectralProblem, TraceSample,
};
use crate::models::{from_physical, to_physical, ModelKind, ModelParams, PhysicalParams};
use crate::specfun::{
    gamma, gl_panel, normalize_spec, s1_kernel_contour, s2_kernel_contour, ContourSpec, Evaluator, MlArgs,
    OrderSpec, MML_DEFAULT_KMAX,
};
use crate::{Case, Result};

/// e·erfc(1) = E_{1/2,1}(-1).
const E_ERFC_1: f64 = 0.427_583_576_155_807_004_41;

/// Settings of the suite.
#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    /// Relative error injected into every Γ value of the Mittag-Leffler
    /// evaluator; zero for a faithful run.
    pub gamma_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub suite: &'static str,
    pub name: &'static str,
    /// Measured error (or spread) compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.items {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "{mark}  {}/{}  measured {:.3e}  tol {:.1e}",
                c.suite, c.name, c.measured, c.tolerance
            );
            if !c.detail.is_empty() {
                let _ = write!(out, "  ({})", c.detail);
            }
            out.push('\n');
        }
        let failed = self.items.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.items.len());
        out
    }
}

fn item(suite: &'static str, name: &'static str, measured: Result<f64>, tolerance: f64, detail: String) -> CheckItem {
    match measured {
        Ok(m) => CheckItem {
            suite,
            name,
            measured: m,
            tolerance,
            passed: m <= tolerance,
            detail,
        },
        Err(e) => CheckItem {
            suite,
            name,
            measured: f64::INFINITY,
            tolerance,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn oracle_specs() -> Vec<OrderSpec> {
    vec![
        OrderSpec::single(0.5).expect("valid"),
        OrderSpec::two_term(0.3, 0.7, 0.5).expect("valid"),
        OrderSpec::two_term(0.2, 0.9, 1.0).expect("valid"),
    ]
}

/// Largest relative series/contour discrepancy of S₁ and S₂ over the
/// 3 × 3 × 4 oracle grid.
pub fn oracle_grid_error(ev: &Evaluator) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for lambda in [1.0, PI * PI + 1.0, 2.0 * PI * PI] {
        for spec in oracle_specs() {
            for t in [1e-4, 1e-2, 1e-1, 1.0] {
                let c = ContourSpec::for_time(t);
                worst = worst.max(rel(ev.s1_kernel_series(lambda, &spec, t)?, s1_kernel_contour(lambda, &spec, t, &c)?));
                worst = worst.max(rel(ev.s2_kernel_series(lambda, &spec, t)?, s2_kernel_contour(lambda, &spec, t, &c)?));
            }
        }
    }
    Ok(worst)
}

fn specfun_suite(ev: &Evaluator, out: &mut Vec<CheckItem>) {
    const S: &str = "specfun";
    let gamma_err = (|| -> Result<f64> {
        Ok(rel(gamma(5.0)?, 24.0)
            .max(rel(gamma(0.5)?, PI.sqrt()))
            .max(rel(gamma(1.0)?, 1.0))
            .max(rel(gamma(1.5)?, 0.5 * PI.sqrt())))
    })();
    out.push(item(S, "gamma_values", gamma_err, 1e-14, String::new()));

    let exp_err = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..=60 {
            let z = -0.5 * k as f64;
            worst = worst.max((ev.ml2(1.0, 1.0, z)? - z.exp()).abs());
        }
        Ok(worst)
    })();
    out.push(item(S, "ml_exponential_identity", exp_err, 1e-12, "E_{1,1}(z) = e^z, z in [-30, 0]".into()));

    let erfc_err = ev.ml2(0.5, 1.0, -1.0).map(|v| rel(v, E_ERFC_1));
    out.push(item(S, "ml_erfc_identity", erfc_err, 1e-12, "E_{1/2,1}(-1) = e erfc(1)".into()));

    let red_err = (|| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let b0 = rng.gen_range(0.2..2.0);
            let b1 = rng.gen_range(0.2..1.0);
            let z = rng.gen_range(-20.0..0.0);
            let args = MlArgs::new(b0, vec![b1], vec![z])?;
            worst = worst.max(rel(ev.mml(&args, MML_DEFAULT_KMAX)?, ev.ml2(b1, b0, z)?));
        }
        Ok(worst)
    })();
    out.push(item(S, "mml_single_argument_reduction", red_err, 1e-12, "50 draws".into()));

    // two-argument series against the one-argument functions it factors into
    // when the second exponent is the first: E_{(a,a),b}(x, y) = E_{a,b}(x + y)
    let merge_err = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (a, b, x, y) in [(0.5, 1.0, -0.4, -0.7), (0.8, 1.8, -1.0, -0.5), (0.3, 1.3, -0.2, -0.3)] {
            let args = MlArgs::new(b, vec![a, a], vec![x, y])?;
            worst = worst.max(rel(ev.mml(&args, MML_DEFAULT_KMAX)?, ev.ml2(a, b, x + y)?));
        }
        Ok(worst)
    })();
    out.push(item(S, "mml_merged_arguments", merge_err, 1e-12, "E_(a,a),b(x,y) = E_a,b(x+y)".into()));

    out.push(item(S, "kernel_oracle_grid", oracle_grid_error(ev), 1e-6, "36 points, S1 and S2".into()));

    let norm_err = (|| -> Result<f64> {
        let spec = OrderSpec::two_term(0.3, 0.7, 0.5)?;
        let t = 1e-14;
        let s1 = ev.s1_kernel_series(PI * PI + 1.0, &spec, t)?;
        let s2i = ev.s2_kernel_int_series(PI * PI + 1.0, &spec, 0.0, t)?;
        Ok((s1 - 1.0).abs().max(s2i.abs()))
    })();
    out.push(item(S, "kernel_small_time_limits", norm_err, 1e-8, "S1 -> 1, integrated S2 -> 0 at t = 1e-14".into()));

    let scale_err = (|| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let rn = rng.gen_range(0.5..2.0);
            let spec = OrderSpec::new(vec![0.3, 0.7], vec![0.5, rn])?;
            let (norm, lambda, scale) = normalize_spec(&spec, 10.0);
            let t = 0.1;
            let c = ContourSpec::for_time(t);
            worst = worst.max(rel(s1_kernel_contour(10.0, &spec, t, &c)?, s1_kernel_contour(lambda, &norm, t, &c)?));
            worst = worst.max(rel(
                s2_kernel_contour(10.0, &spec, t, &c)?,
                scale * s2_kernel_contour(lambda, &norm, t, &c)?,
            ));
        }
        Ok(worst)
    })();
    out.push(item(S, "kernel_weight_scaling", scale_err, 1e-10, "5 draws of r_N".into()));

    // d/dt S₁ = -λ S₂
    let deriv_err = (|| -> Result<f64> {
        let spec = OrderSpec::two_term(0.3, 0.7, 0.5)?;
        let lambda = PI * PI + 1.0;
        let mut worst: f64 = 0.0;
        for t in [0.05, 0.2] {
            let h = 1e-5 * t;
            let fd = (ev.s1_kernel_series(lambda, &spec, t + h)? - ev.s1_kernel_series(lambda, &spec, t - h)?) / (2.0 * h);
            worst = worst.max(rel(-fd / lambda, ev.s2_kernel_series(lambda, &spec, t)?));
        }
        Ok(worst)
    })();
    out.push(item(S, "kernel_derivative_identity", deriv_err, 1e-5, "t in {0.05, 0.2}".into()));
}

/// ∫₀^∞ e^{-pt} g(t) dt by Gauss-Legendre panels on a geometric grid.
fn laplace_quadrature(problem: &SpectralProblem, spec: &OrderSpec, p: f64) -> Result<f64> {
    let t_end = 40.0 / p;
    let t_start = 1e-10 * t_end;
    let mut err = None;
    let mut f = |t: f64| match trace(problem, spec, t) {
        Ok(g) => (-p * t).exp() * g,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    // near t = 0 the trace is its initial value
    let mut total = t_start * f(0.5 * t_start);
    let mut a = t_start;
    while a < t_end {
        let b = (2.0 * a).min(t_end);
        total += gl_panel(a, b, &mut f).0;
        a = b;
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// |g - f_p|/t^{2α_N} at each t, with f_p built from the true parameters.
pub fn remainder_ratios(problem: &SpectralProblem, spec: &OrderSpec, times: &[f64]) -> Result<Vec<f64>> {
    let phys = problem.physical(spec)?;
    let fp = from_physical(&phys, ModelKind::Polynomial, problem.case(), problem.source_exponent())?;
    let an = spec.alpha_max();
    times
        .iter()
        .map(|t| Ok((trace(problem, spec, *t)? - fp.eval(*t)?).abs() / t.powf(2.0 * an)))
        .collect()
}

/// p^{a+1}(Σ r_k p^{α_k}) L[g](p)/c₀.
pub fn laplace_step2_value(problem: &SpectralProblem, spec: &OrderSpec, p: f64) -> Result<f64> {
    let q: f64 = spec.alphas().iter().zip(spec.weights()).map(|(a, r)| r * p.powf(*a)).sum();
    Ok(p.powf(problem.source_exponent() + 1.0) * q * laplace_trace(problem, spec, p)? / problem.source_scale())
}

fn forward_suite(out: &mut Vec<CheckItem>) {
    const S: &str = "forward";
    let initial = square_vertex_example(Case::InitialData);
    let source = square_vertex_example(Case::Source);
    let spec_i = OrderSpec::two_term(0.5, 0.8, 0.5).expect("valid");
    let spec_s = OrderSpec::two_term(0.5, 0.7, 0.5).expect("valid");

    let init_err = trace(&initial, &spec_i, 1e-14).map(|g| rel(g, initial.weight_sum()));
    out.push(item(S, "initial_value", init_err, 1e-6, "g(0+) = sum of weights".into()));

    let step2 = laplace_step2_value(&source, &spec_s, 1e8);
    let detail = match &step2 {
        Ok(v) => format!("value {v:.6} at p = 1e8, limit {}", source.weight_sum()),
        Err(_) => String::new(),
    };
    out.push(item(S, "laplace_step2_limit", step2.map(|v| rel(v, source.weight_sum())), 1e-2, detail));

    let lap_err = (|| -> Result<f64> {
        let problem = single_mode_example();
        let spec = single_mode_orders(&[0.3, 0.7], 0.5)?;
        let mut worst: f64 = 0.0;
        for p in [1.0, 10.0] {
            worst = worst.max(rel(laplace_quadrature(&problem, &spec, p)?, laplace_trace(&problem, &spec, p)?));
        }
        Ok(worst)
    })();
    out.push(item(S, "laplace_transform_consistency", lap_err, 1e-6, "quadrature of e^{-pt} g(t), p in {1, 10}".into()));

    let times = [1e-8, 1e-7, 1e-6];
    for (name, problem, spec) in [
        ("remainder_order_initial_data", &initial, &spec_i),
        ("remainder_order_source", &source, &spec_s),
    ] {
        let spread = remainder_ratios(problem, spec, &times).map(|r| {
            let max = r.iter().copied().fold(0.0, f64::max);
            let min = r.iter().copied().fold(f64::INFINITY, f64::min);
            max / min
        });
        out.push(item(S, name, spread, 4.0, "max/min of |g - f_p|/t^{2 alpha_N}, t in {1e-8, 1e-7, 1e-6}".into()));
    }

    let sample_err = sample_trace(&initial, &spec_i, 1e-6, 100).map(|s| {
        let first = rel(s.times()[0], 1e-8);
        let mono = s.values().windows(2).filter(|w| w[1] > w[0]).count() as f64;
        first + mono
    });
    out.push(item(S, "sample_grid", sample_err, 1e-12, "first node T0/n, monotone data".into()));
}

fn models_suite(out: &mut Vec<CheckItem>) {
    const S: &str = "models";
    let trip = (|| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for case in [Case::InitialData, Case::Source] {
            for kind in [ModelKind::Polynomial, ModelKind::Rational] {
                for orders in [OrderSpec::single(0.6)?, OrderSpec::two_term(0.35, 0.8, 0.7)?] {
                    let a = if case == Case::Source { 0.3 } else { 0.0 };
                    let phys = PhysicalParams {
                        orders,
                        amplitude: 12.5,
                        constant: (case == Case::InitialData).then_some(1.5),
                    };
                    let back = to_physical(&from_physical(&phys, kind, case, a)?, a)?;
                    for (x, y) in back.orders.alphas().iter().zip(phys.orders.alphas()) {
                        worst = worst.max(rel(*x, *y));
                    }
                    for (x, y) in back.orders.weights().iter().zip(phys.orders.weights()) {
                        worst = worst.max(rel(*x, *y));
                    }
                    worst = worst.max(rel(back.amplitude, phys.amplitude));
                }
            }
        }
        Ok(worst)
    })();
    out.push(item(S, "physical_round_trip", trip, 1e-12, "both kinds, both cases, one and two orders".into()));

    let bound = (|| -> Result<f64> {
        let lambda = PI * PI + 1.0;
        let mut violations = 0;
        for alpha in [0.25, 0.5, 0.75] {
            let k = lambda / gamma(alpha + 1.0)?;
            let fp = ModelParams::new(ModelKind::Polynomial, Case::InitialData, vec![1.0, -k], vec![alpha])?;
            let fr = ModelParams::new(ModelKind::Rational, Case::InitialData, vec![1.0, k], vec![alpha])?;
            for j in 1..=100 {
                let t = j as f64 / 100.0;
                let g = crate::specfun::ml2(alpha, 1.0, -lambda * t.powf(alpha))?;
                if !(fr.eval(t)? >= g && g >= fp.eval(t)?) {
                    violations += 1;
                }
            }
        }
        Ok(violations as f64)
    })();
    out.push(item(S, "single_order_bounds", bound, 0.0, "f_p <= E_{alpha,1}(-lambda t^alpha) <= f_r on (0, 1]".into()));
}

/// Worst relative error of the analytic objective gradient against central
/// differences over 50 random models and data sets.
pub fn gradient_suite_error(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for draw in 0..50 {
        let kind = [ModelKind::Polynomial, ModelKind::Rational][draw % 2];
        let case = [Case::InitialData, Case::Source][(draw / 2) % 2];
        let m = 1 + (draw / 4) % 2;
        let mut beta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.8)).collect();
        beta.sort_by(f64::total_cmp);
        if m == 2 && beta[1] - beta[0] < 0.05 {
            beta[1] = beta[0] + 0.05;
        }
        let nc = m + crate::models::has_constant(kind, case) as usize;
        let c: Vec<f64> = (0..nc)
            .map(|i| if kind == ModelKind::Rational && i > 0 { rng.gen_range(0.1..3.0) } else { rng.gen_range(-3.0..3.0) })
            .collect();
        let p = ModelParams::new(kind, case, c, beta)?;
        let times: Vec<f64> = (1..=40).map(|k| k as f64 / 40.0).collect();
        let values = times.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = TraceSample::new(times, values, 1.0)?;
        let analytic = objective_grad(&s, &p);
        let x = p.to_vec();
        let scale = analytic.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..x.len() {
            let h = 1e-7 * x[i].abs().max(1.0);
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (objective(&s, &p.with_vec(&xp)) - objective(&s, &p.with_vec(&xm))) / (2.0 * h);
            worst = worst.max((fd - analytic[i]).abs() / analytic[i].abs().max(1e-3 * scale));
        }
    }
    Ok(worst)
}

fn fit_suite(out: &mut Vec<CheckItem>) {
    const S: &str = "fit";
    out.push(item(S, "objective_gradient", gradient_suite_error(2024), 1e-6, "50 draws".into()));

    let exact = (|| -> Result<f64> {
        let truth = ModelParams::new(ModelKind::Rational, Case::InitialData, vec![1.2, 0.8, -0.3], vec![0.7, 1.1])?;
        let times: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
        let values = times.iter().map(|t| truth.eval(*t)).collect::<Result<Vec<_>>>()?;
        let s = TraceSample::new(times, values, 1.0)?;
        let mut cfg = FitConfig::from_alpha_init(ModelKind::Rational, Case::InitialData, &[0.3, 0.6], 0.0)?;
        cfg.beta_init = vec![0.6, 1.2];
        let r = recover(&s, &cfg)?;
        Ok(r.params.beta.iter().zip(&truth.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    })();
    out.push(item(S, "model_data_recovery", exact, 1e-6, "two-term rational model data".into()));

    let single = (|| -> Result<f64> {
        let problem = single_mode_example();
        let s = sample_trace(&problem, &OrderSpec::single(0.7)?, 1e-6, 100)?;
        let cfg = FitConfig::from_alpha_init(ModelKind::Rational, Case::InitialData, &[0.5], 0.0)?;
        let r = recover(&s, &cfg)?;
        let alpha = r.estimates.map(|e| e.alpha[0]).unwrap_or(f64::NAN);
        Ok((alpha - 0.7).abs())
    })();
    out.push(item(S, "single_order_recovery", single, 1e-2, "alpha = 0.7 from a T0 = 1e-6 trace".into()));
}

/// Runs every suite and collects the measured errors.
pub fn cmd_check(opts: &CheckOptions) -> CheckReport {
    let ev = if opts.gamma_error == 0.0 {
        Evaluator::new()
    } else {
        Evaluator::with_gamma_error(opts.gamma_error)
    };
    let mut items = Vec::new();
    specfun_suite(&ev, &mut items);
    forward_suite(&mut items);
    models_suite(&mut items);
    fit_suite(&mut items);
    CheckReport { items }
}
