use std::f64::consts::PI;

use fracorder::specfun::{
    gamma, ml2, mml, normalize_spec, s1_kernel_contour, s1_kernel_series, s2_kernel_contour, s2_kernel_int_series,
    s2_kernel_series, ContourSpec, MlArgs, OrderSpec, Z_MAX,
};
use fracorder::Error;
use statrs::function::gamma as sgamma;

// Reference values from tests/oracle/mml_oracle.py (60-digit mpmath).
const MML_M2: f64 = 0.481_602_883_029_139_381_25;
const S1_TWO_TERM: f64 = 0.202_547_008_065_205_349_88;
const S2_TWO_TERM: f64 = 0.203_535_237_191_748_892_1;
const GAMMA_REF: [(f64, f64); 9] = [
    (0.1, 9.513_507_698_668_731_836_3),
    (0.3, 2.991_568_987_687_590_628_3),
    (1.7, 0.908_638_732_853_290_449_98),
    (3.3, 2.683_437_381_955_768_793_6),
    (10.1, 454_760.751_441_585_950_87),
    (20.5, 5.406_242_982_335_075_044_7e17),
    (33.3, 7.487_577_596_522_706_608e35),
    (45.2, 5.681_566_124_853_115_826_2e54),
    (49.9, 4.118_011_034_253_058_041_9e62),
];
/// e^{x²} erfc(x).
const ERFC_REF: [(f64, f64); 6] = [
    (0.25, 0.770_346_547_730_996_743_92),
    (0.5, 0.615_690_344_192_925_874_87),
    (1.0, 0.427_583_576_155_807_004_41),
    (1.5, 0.321_585_416_454_317_502_35),
    (2.0, 0.255_395_676_310_505_743_87),
    (3.0, 0.179_001_151_181_389_950_42),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gamma_matches_extended_precision_values() {
    for (x, want) in GAMMA_REF {
        assert!(rel(gamma(x).unwrap(), want) <= 1e-13, "x = {x}");
    }
}

#[test]
fn gamma_agrees_with_statrs_on_working_range() {
    // statrs itself is only good to about 1e-13 near the top of the range
    let mut worst: f64 = 0.0;
    for k in 0..=499 {
        let x = 0.1 + k as f64 * 0.1;
        worst = worst.max(rel(gamma(x).unwrap(), sgamma::gamma(x)));
    }
    assert!(worst <= 1e-12, "worst {worst:e}");
}

#[test]
fn gamma_special_values() {
    assert_eq!(gamma(1.0).unwrap(), 1.0);
    assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-15);
    assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-15);
}

#[test]
fn gamma_rejects_nonpositive_arguments() {
    for x in [0.0, -1.0, -0.5, f64::NAN] {
        assert!(matches!(gamma(x), Err(Error::Domain(_))), "x = {x}");
    }
}

#[test]
fn exponential_identity() {
    for k in 0..=300 {
        let z = -0.1 * k as f64;
        assert!((ml2(1.0, 1.0, z).unwrap() - z.exp()).abs() <= 1e-12, "z = {z}");
    }
}

#[test]
fn half_order_erfc_identity() {
    for (x, want) in ERFC_REF {
        assert!(rel(ml2(0.5, 1.0, -x).unwrap(), want) <= 1e-12, "x = {x}");
    }
}

#[test]
fn zero_argument() {
    assert_eq!(ml2(0.7, 1.0, 0.0).unwrap(), 1.0);
    let args = MlArgs::new(1.3, vec![0.4, 0.9, 0.2], vec![0.0; 3]).unwrap();
    assert!(rel(mml(&args).unwrap(), 1.0 / gamma(1.3).unwrap()) < 1e-15);
}

#[test]
fn two_argument_oracle() {
    let args = MlArgs::new(1.8, vec![0.8, 0.3], vec![-1.0, -0.5]).unwrap();
    assert!(rel(mml(&args).unwrap(), MML_M2) <= 1e-12);
}

#[test]
fn single_argument_reduction() {
    let args = MlArgs::new(1.0, vec![0.7], vec![-0.3]).unwrap();
    assert!(rel(mml(&args).unwrap(), ml2(0.7, 1.0, -0.3).unwrap()) <= 1e-12);
}

#[test]
fn multinomial_argument_validation() {
    assert!(matches!(MlArgs::new(1.0, vec![0.5; 5], vec![-0.1; 5]), Err(Error::Domain(_))));
    assert!(matches!(MlArgs::new(1.0, vec![0.5], vec![-(Z_MAX + 1.0)]), Err(Error::Domain(_))));
    assert!(MlArgs::new(1.0, vec![0.5, 0.3], vec![-0.1]).is_err());
    assert!(matches!(MlArgs::new(2.5, vec![0.5], vec![-0.1]), Err(Error::Domain(_))));
}

#[test]
fn s1_series_single_order_is_mittag_leffler() {
    let spec = OrderSpec::single(0.6).unwrap();
    for t in [1e-3f64, 0.1, 1.0] {
        let want = ml2(0.6, 1.0, -3.0 * t.powf(0.6)).unwrap();
        assert!(rel(s1_kernel_series(3.0, &spec, t).unwrap(), want) <= 1e-10);
    }
}

#[test]
fn s2_series_single_order_is_mittag_leffler() {
    let spec = OrderSpec::single(0.4).unwrap();
    for t in [1e-3f64, 0.1, 1.0] {
        let want = t.powf(-0.6) * ml2(0.4, 0.4, -5.0 * t.powf(0.4)).unwrap();
        assert!(rel(s2_kernel_series(5.0, &spec, t).unwrap(), want) <= 1e-10);
    }
}

#[test]
fn two_term_kernel_oracles() {
    let spec = OrderSpec::two_term(0.2, 0.5, 0.5).unwrap();
    let lambda = PI * PI + 1.0;
    assert!(rel(s1_kernel_series(lambda, &spec, 0.1).unwrap(), S1_TWO_TERM) <= 1e-10);
    let c = ContourSpec::for_time(0.1);
    assert!(rel(s1_kernel_contour(lambda, &spec, 0.1, &c).unwrap(), S1_TWO_TERM) <= 1e-9);

    let spec = OrderSpec::two_term(0.5, 0.8, 1.0).unwrap();
    let lambda = 2.0 * PI * PI;
    assert!(rel(s2_kernel_series(lambda, &spec, 0.05).unwrap(), S2_TWO_TERM) <= 1e-10);
    let c = ContourSpec::for_time(0.05);
    assert!(rel(s2_kernel_contour(lambda, &spec, 0.05, &c).unwrap(), S2_TWO_TERM) <= 1e-9);
}

#[test]
fn contour_single_order_matches_mittag_leffler() {
    let spec = OrderSpec::single(0.6).unwrap();
    let c = ContourSpec::for_time(1.0);
    let want = ml2(0.6, 1.0, -1.0).unwrap();
    assert!(rel(s1_kernel_contour(1.0, &spec, 1.0, &c).unwrap(), want) <= 1e-9);
    let want = ml2(0.6, 0.6, -1.0).unwrap();
    assert!(rel(s2_kernel_contour(1.0, &spec, 1.0, &c).unwrap(), want) <= 1e-9);
}

#[test]
fn series_and_contour_agree_on_oracle_grid() {
    let specs = [
        OrderSpec::single(0.5).unwrap(),
        OrderSpec::two_term(0.3, 0.7, 0.5).unwrap(),
        OrderSpec::two_term(0.2, 0.9, 1.0).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for lambda in [1.0, PI * PI + 1.0, 2.0 * PI * PI] {
        for spec in &specs {
            for t in [1e-4, 1e-2, 1e-1, 1.0] {
                let c = ContourSpec::for_time(t);
                worst = worst.max(rel(
                    s1_kernel_series(lambda, spec, t).unwrap(),
                    s1_kernel_contour(lambda, spec, t, &c).unwrap(),
                ));
                worst = worst.max(rel(
                    s2_kernel_series(lambda, spec, t).unwrap(),
                    s2_kernel_contour(lambda, spec, t, &c).unwrap(),
                ));
            }
        }
    }
    assert!(worst <= 1e-6, "worst {worst:e}");
}

#[test]
fn s2_decreases_in_lambda() {
    let spec = OrderSpec::two_term(0.3, 0.7, 0.5).unwrap();
    let v: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|l| s2_kernel_series(*l, &spec, 0.1).unwrap())
        .collect();
    assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0, "{v:?}");
}

#[test]
fn small_time_limits() {
    let spec = OrderSpec::two_term(0.3, 0.9, 0.5).unwrap();
    assert!((s1_kernel_series(1.0, &spec, 1e-12).unwrap() - 1.0).abs() <= 1e-8);
    assert!(s2_kernel_int_series(1.0, &spec, 0.5, 1e-12).unwrap().abs() <= 1e-8);
}

#[test]
fn integrated_kernel_matches_log_graded_convolution() {
    let spec = OrderSpec::two_term(0.5, 0.7, 0.5).unwrap();
    let lambda = 2.0 * PI * PI;
    let t: f64 = 0.01;
    // ∫₀ᵗ S₂(s) ds on 10⁴ log-graded nodes; below the first node S₂ ≈ s^{α_N-1}/Γ(α_N)
    let n = 10_000;
    let s0 = 1e-12 * t;
    let nodes: Vec<f64> = (0..=n).map(|k| s0 * (t / s0).powf(k as f64 / n as f64)).collect();
    let vals: Vec<f64> = nodes.iter().map(|s| s2_kernel_series(lambda, &spec, *s).unwrap()).collect();
    let mut total = s0.powf(0.7) / gamma(1.7).unwrap();
    for k in 0..n {
        total += 0.5 * (vals[k] + vals[k + 1]) * (nodes[k + 1] - nodes[k]);
    }
    let got = s2_kernel_int_series(lambda, &spec, 0.0, t).unwrap();
    assert!(rel(got, total) <= 1e-5, "{got} vs {total}");
}

#[test]
fn integrated_kernel_with_zero_exponent_is_one_minus_s1_over_lambda() {
    let spec = OrderSpec::two_term(0.3, 0.6, 0.8).unwrap();
    for t in [1e-3, 0.05, 0.5] {
        let s1 = s1_kernel_series(7.0, &spec, t).unwrap();
        let si = s2_kernel_int_series(7.0, &spec, 0.0, t).unwrap();
        assert!(rel(si, (1.0 - s1) / 7.0) <= 1e-9, "t = {t}");
    }
}

#[test]
fn integrated_kernel_rejects_exponent_outside_unit_interval() {
    let spec = OrderSpec::single(0.5).unwrap();
    assert!(matches!(s2_kernel_int_series(1.0, &spec, 1.5, 0.1), Err(Error::Domain(_))));
}

#[test]
fn derivative_identity() {
    let spec = OrderSpec::two_term(0.3, 0.7, 0.5).unwrap();
    let lambda = PI * PI + 1.0;
    for t in [0.05, 0.2] {
        let h = 1e-5 * t;
        let fd = (s1_kernel_series(lambda, &spec, t + h).unwrap() - s1_kernel_series(lambda, &spec, t - h).unwrap())
            / (2.0 * h);
        assert!(rel(-fd / lambda, s2_kernel_series(lambda, &spec, t).unwrap()) <= 1e-5);
    }
}

#[test]
fn normalization_examples() {
    let (spec, lambda, scale) = normalize_spec(&OrderSpec::new(vec![0.5], vec![2.0]).unwrap(), 4.0);
    assert_eq!((spec.weights(), lambda, scale), (&[1.0][..], 2.0, 0.5));

    let raw = OrderSpec::new(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap();
    let (spec, lambda, scale) = normalize_spec(&raw, 10.0);
    assert_eq!((spec.weights(), lambda, scale), (&[0.25, 1.0][..], 5.0, 0.5));
    let c = ContourSpec::for_time(0.1);
    let before = s2_kernel_contour(10.0, &raw, 0.1, &c).unwrap();
    let after = scale * s2_kernel_contour(lambda, &spec, 0.1, &c).unwrap();
    assert!(rel(before, after) <= 1e-10);
    let before = s1_kernel_contour(10.0, &raw, 0.1, &c).unwrap();
    assert!(rel(before, s1_kernel_contour(lambda, &spec, 0.1, &c).unwrap()) <= 1e-10);
}

#[test]
fn series_requires_normalized_spec() {
    let raw = OrderSpec::new(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap();
    assert!(s1_kernel_series(1.0, &raw, 0.1).is_err());
}

#[test]
fn order_spec_validation() {
    assert!(OrderSpec::new(vec![0.7, 0.3], vec![1.0, 1.0]).is_err());
    assert!(OrderSpec::new(vec![0.3, 1.0], vec![1.0, 1.0]).is_err());
    assert!(OrderSpec::new(vec![0.3], vec![-1.0]).is_err());
    assert!(OrderSpec::new(vec![], vec![]).is_err());
    let json = r#"{"alphas":[0.8,0.2],"weights":[1,1]}"#;
    assert!(serde_json::from_str::<OrderSpec>(json).is_err());
}

#[test]
fn contour_validation() {
    let mut c = ContourSpec::for_time(1.0);
    c.theta = 0.4 * PI;
    assert!(c.validate().is_err());
    let spec = OrderSpec::single(0.5).unwrap();
    assert!(s1_kernel_contour(1.0, &spec, 1.0, &c).is_err());
}
