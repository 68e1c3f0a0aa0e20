use std::f64::consts::PI;

use fracorder::forward::{single_mode_example, square_vertex_example, trace};
use fracorder::models::{from_physical, physical_estimates, to_physical, ModelKind, ModelParams, PhysicalParams};
use fracorder::specfun::{gamma, ml2, OrderSpec};
use fracorder::Case;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KINDS: [ModelKind; 2] = [ModelKind::Polynomial, ModelKind::Rational];
const CASES: [Case; 2] = [Case::InitialData, Case::Source];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn polynomial_evaluation() {
    let p = ModelParams::new(ModelKind::Polynomial, Case::InitialData, vec![1.0, -2.0], vec![0.7]).unwrap();
    assert_eq!(p.eval(1.0).unwrap(), -1.0);
    assert!(p.eval(0.0).is_err());
    assert!(p.eval(-1.0).is_err());
}

#[test]
fn rational_evaluation_matches_single_order_form() {
    let alpha = 0.6;
    let x = (PI * PI + 1.0) / gamma(alpha + 1.0).unwrap();
    let p = ModelParams::new(ModelKind::Rational, Case::InitialData, vec![1.0, x], vec![alpha]).unwrap();
    for t in [1e-6f64, 1e-2, 0.5] {
        let expect = 1.0 / (1.0 + x * t.powf(alpha));
        assert!(rel(p.eval(t).unwrap(), expect) < 1e-15);
    }
    let s = ModelParams::new(ModelKind::Rational, Case::Source, vec![2.0, x], vec![alpha]).unwrap();
    let t: f64 = 0.1;
    let expect = 2.0 * (1.0 - 1.0 / (1.0 + x * t.powf(alpha)));
    assert!(rel(s.eval(t).unwrap(), expect) < 1e-14);
}

#[test]
fn polynomial_and_rational_agree_to_first_order() {
    let (b, x) = (0.4, 3.0);
    let fp = ModelParams::new(ModelKind::Polynomial, Case::InitialData, vec![1.0, -x], vec![b]).unwrap();
    let fr = ModelParams::new(ModelKind::Rational, Case::InitialData, vec![1.0, x], vec![b]).unwrap();
    // 1/(1+y) - (1-y) = y²/(1+y)
    let ratio = |t: f64| (fr.eval(t).unwrap() - fp.eval(t).unwrap()).abs() / t.powf(2.0 * b);
    let (r8, r7) = (ratio(1e-8), ratio(1e-7));
    assert!((r8 / (x * x) - 1.0).abs() < 1e-2, "{r8}");
    assert!((r7 / (x * x) - 1.0).abs() < 1e-2, "{r7}");
}

#[test]
fn amplitude_partials_are_the_powers() {
    let p = ModelParams::new(ModelKind::Polynomial, Case::Source, vec![0.3, -1.2], vec![0.5, 1.1]).unwrap();
    let t: f64 = 0.02;
    let g = p.grad(t).unwrap();
    assert!(rel(g[0], t.powf(0.5)) < 1e-15);
    assert!(rel(g[1], t.powf(1.1)) < 1e-15);
    let g1 = p.grad(1.0).unwrap();
    assert_eq!(&g1[2..], &[0.0, 0.0]);
}

fn random_params(rng: &mut ChaCha8Rng, kind: ModelKind, case: Case) -> ModelParams {
    let m = rng.gen_range(1..=2);
    let mut beta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.8)).collect();
    beta.sort_by(f64::total_cmp);
    if m == 2 && beta[1] - beta[0] < 0.05 {
        beta[1] = beta[0] + 0.05;
    }
    let nc = m + fracorder::models::has_constant(kind, case) as usize;
    let c = (0..nc)
        .map(|i| {
            if kind == ModelKind::Rational && i > 0 {
                rng.gen_range(0.1..3.0)
            } else {
                rng.gen_range(-3.0..3.0)
            }
        })
        .collect();
    ModelParams::new(kind, case, c, beta).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for draw in 0..20 {
        let kind = KINDS[draw % 2];
        let case = CASES[(draw / 2) % 2];
        let p = random_params(&mut rng, kind, case);
        let t = rng.gen_range(0.05..0.9);
        let g = p.grad(t).unwrap();
        let x = p.to_vec();
        for i in 0..x.len() {
            let h = 1e-7 * x[i].abs().max(1.0);
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (p.with_vec(&up).eval(t).unwrap() - p.with_vec(&dn).eval(t).unwrap()) / (2.0 * h);
            let err = (g[i] - fd).abs() / g[i].abs().max(1e-3);
            assert!(err < 1e-6, "draw {draw}, partial {i}: {} vs {fd}", g[i]);
        }
    }
}

#[test]
fn single_order_initial_layout() {
    let phys = PhysicalParams {
        orders: OrderSpec::single(0.7).unwrap(),
        amplitude: 10.87,
        constant: Some(1.0),
    };
    let p = from_physical(&phys, ModelKind::Polynomial, Case::InitialData, 0.0).unwrap();
    assert_eq!(p.beta, vec![0.7]);
    assert_eq!(p.c[0], 1.0);
    assert!(rel(p.c[1], -10.87 / gamma(1.7).unwrap()) < 1e-15);
}

#[test]
fn source_exponent_shifts_both_betas() {
    let phys = PhysicalParams {
        orders: OrderSpec::two_term(0.5, 0.7, 0.5).unwrap(),
        amplitude: 2.5,
        constant: None,
    };
    let p = from_physical(&phys, ModelKind::Polynomial, Case::Source, 0.5).unwrap();
    assert!((p.beta[0] - 1.2).abs() < 1e-15);
    assert!((p.beta[1] - 1.4).abs() < 1e-15);
}

#[test]
fn exact_round_trip_of_two_order_parameters() {
    let phys = PhysicalParams {
        orders: OrderSpec::two_term(0.6, 0.9, 0.5).unwrap(),
        amplitude: PI * PI + 1.0,
        constant: Some(1.0),
    };
    for kind in KINDS {
        let p = from_physical(&phys, kind, Case::InitialData, 0.0).unwrap();
        let back = to_physical(&p, 0.0).unwrap();
        let a = back.orders.alphas();
        assert!((a[0] - 0.6).abs() < 1e-12 && (a[1] - 0.9).abs() < 1e-12);
        assert!((back.orders.weights()[0] - 0.5).abs() < 1e-12);
        assert!(rel(back.amplitude, PI * PI + 1.0) < 1e-12);
    }
}

#[test]
fn table_row_coefficient_maps_to_the_eigenvalue() {
    // f_p row of the single-order table at T0 = 1e-6: β = 0.6998, λ = 1.083e1
    let beta = 0.6998;
    let c1 = -10.83 / gamma(beta + 1.0).unwrap();
    let p = ModelParams::new(ModelKind::Polynomial, Case::InitialData, vec![1.0, c1], vec![beta]).unwrap();
    let est = physical_estimates(&p, 0.0).unwrap();
    assert!(rel(est.amplitude, 10.83) < 1e-14);
    assert_eq!(est.alpha, vec![beta]);
}

#[test]
fn source_amplitude_targets_the_source_trace() {
    let src = square_vertex_example(Case::Source);
    let spec = OrderSpec::two_term(0.5, 0.7, 0.5).unwrap();
    let p = from_physical(&src.physical(&spec).unwrap(), ModelKind::Polynomial, Case::Source, 0.0).unwrap();
    let amp = p.c[0] * gamma(p.beta[0] + 1.0).unwrap();
    assert!(rel(amp, 2.5) < 1e-15);
}

#[test]
fn asymptotic_models_are_tight_and_rational_is_better() {
    let problem = single_mode_example();
    let spec = OrderSpec::single(0.75).unwrap();
    let phys = problem.physical(&spec).unwrap();
    let fp = from_physical(&phys, ModelKind::Polynomial, Case::InitialData, 0.0).unwrap();
    let fr = from_physical(&phys, ModelKind::Rational, Case::InitialData, 0.0).unwrap();
    let g = trace(&problem, &spec, 1e-6).unwrap();
    assert!((g - fp.eval(1e-6).unwrap()).abs() <= 1e-6);
    assert!((g - fr.eval(1e-6).unwrap()).abs() <= 1e-6);

    let (mut sup_p, mut sup_r) = (0.0f64, 0.0f64);
    for k in 1..=400 {
        let t = 0.1 * k as f64 / 400.0;
        let g = trace(&problem, &spec, t).unwrap();
        sup_p = sup_p.max((g - fp.eval(t).unwrap()).abs());
        sup_r = sup_r.max((g - fr.eval(t).unwrap()).abs());
    }
    assert!(sup_r < sup_p, "{sup_r} vs {sup_p}");
}

#[test]
fn single_order_relaxation_lies_between_the_models() {
    let lambda = PI * PI + 1.0;
    for alpha in [0.25, 0.5, 0.75] {
        let x = lambda / gamma(alpha + 1.0).unwrap();
        for k in 1..=200 {
            let t = k as f64 / 200.0;
            let y = x * t.powf(alpha);
            let e = ml2(alpha, 1.0, -lambda * t.powf(alpha)).unwrap();
            assert!(1.0 / (1.0 + y) >= e - 1e-15, "alpha {alpha}, t {t}");
            assert!(e >= 1.0 - y, "alpha {alpha}, t {t}");
        }
    }
}

#[test]
fn inadmissible_orders_are_not_identifiable() {
    // 2β₁ - β₂ ≤ 0
    let p = ModelParams::new(ModelKind::Polynomial, Case::InitialData, vec![1.0, -2.0, 1.0], vec![0.4, 0.9]).unwrap();
    assert!(matches!(to_physical(&p, 0.0), Err(fracorder::Error::Identifiability(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn physical_round_trip(
        a1 in 0.05f64..0.9,
        gap in 0.02f64..0.5,
        r1 in 0.05f64..5.0,
        amp in 0.1f64..100.0,
        constant in -3.0f64..3.0,
        a in 0.0f64..1.0,
        kind_ix in 0usize..2,
        case_ix in 0usize..2,
    ) {
        let an = (a1 + gap).min(0.99);
        prop_assume!(an > a1);
        let kind = KINDS[kind_ix];
        let case = CASES[case_ix];
        let phys = PhysicalParams {
            orders: OrderSpec::two_term(a1, an, r1).unwrap(),
            amplitude: amp,
            constant: (case == Case::InitialData).then_some(constant),
        };
        prop_assume!(2.0 * an - a1 + a < 2.0 || case == Case::InitialData);
        let p = from_physical(&phys, kind, case, a).unwrap();
        let back = to_physical(&p, a).unwrap();
        prop_assert!((back.orders.alphas()[0] - a1).abs() < 1e-12);
        prop_assert!((back.orders.alphas()[1] - an).abs() < 1e-12);
        prop_assert!(rel(back.orders.weights()[0], r1) < 1e-12);
        prop_assert!(rel(back.amplitude, amp) < 1e-12);
        if case == Case::InitialData {
            prop_assert!((back.constant.unwrap() - constant).abs() < 1e-12);
        }
    }
}
