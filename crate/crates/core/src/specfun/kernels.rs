//! Per-mode solution kernels S₁, S₂ and the integrated S₂ in series form.
//!
//! Each kernel combines two representations: the convergent multinomial
//! Mittag-Leffler series, accurate while λt^{α_N} is moderate, and the
//! large-time inverse-power expansion obtained from the Laplace symbol at
//! p → 0, accurate once λt^{α_N} is large. The one with the smaller error
//! estimate is returned. Neither touches the contour quadrature.

use serde::{Deserialize, Serialize};

use super::dd::{ln_rgamma_dd, Dd};
use super::mittag_leffler::Evaluator;
use super::shells::{sum_asymptotic, sum_convergent, SeriesSum};
use crate::{Error, Result};

/// Shell cap for the kernel series.
pub const KERNEL_KMAX: usize = 600;

/// Largest relative error estimate a kernel value may carry.
pub const KERNEL_RTOL: f64 = 1e-7;

/// Estimates below this are accepted without trying the other route.
const KERNEL_EARLY_RTOL: f64 = 1e-12;

/// Fractional orders 0 < α₁ < … < α_N < 1 with positive weights r₁..r_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOrderSpec")]
pub struct OrderSpec {
    alphas: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawOrderSpec {
    alphas: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawOrderSpec> for OrderSpec {
    type Error = Error;

    fn try_from(raw: RawOrderSpec) -> Result<Self> {
        OrderSpec::new(raw.alphas, raw.weights)
    }
}

impl OrderSpec {
    pub fn new(alphas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("an order specification needs at least one term"));
        }
        if alphas.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} orders but {} weights",
                alphas.len(),
                weights.len()
            )));
        }
        if alphas.len() > super::MML_MAX_ARGS {
            return Err(Error::domain(format!("at most {} terms supported", super::MML_MAX_ARGS)));
        }
        if !(alphas[0] > 0.0) || !(alphas[alphas.len() - 1] < 1.0) {
            return Err(Error::domain(format!("orders must lie in (0, 1), got {alphas:?}")));
        }
        if alphas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain(format!("orders must be strictly increasing, got {alphas:?}")));
        }
        if weights.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::domain(format!("weights must be positive, got {weights:?}")));
        }
        Ok(Self { alphas, weights })
    }

    /// Single-term specification with unit weight.
    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha], vec![1.0])
    }

    /// Two-term specification α₁ < α₂ with weights (r₁, 1).
    pub fn two_term(alpha1: f64, alpha2: f64, r1: f64) -> Result<Self> {
        Self::new(vec![alpha1, alpha2], vec![r1, 1.0])
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// The leading order α_N.
    pub fn alpha_max(&self) -> f64 {
        self.alphas[self.alphas.len() - 1]
    }

    /// Weight of the leading order, r_N.
    pub fn leading_weight(&self) -> f64 {
        self.weights[self.weights.len() - 1]
    }

    fn is_normalized(&self) -> bool {
        self.leading_weight() == 1.0
    }
}

/// Divides the equation by r_N.
///
/// Returns the spec with weights r_i/r_N, the eigenvalue λ/r_N and the
/// factor 1/r_N that S₂ picks up; S₁ is unchanged.
pub fn normalize_spec(spec: &OrderSpec, lambda: f64) -> (OrderSpec, f64, f64) {
    let rn = spec.leading_weight();
    let weights = spec.weights.iter().map(|r| r / rn).collect::<Vec<_>>();
    let mut weights = weights;
    let last = weights.len() - 1;
    weights[last] = 1.0;
    (
        OrderSpec {
            alphas: spec.alphas.clone(),
            weights,
        },
        lambda / rn,
        1.0 / rn,
    )
}

#[derive(Clone, Copy)]
enum Kernel {
    S1,
    S2,
    S2Int(f64),
}

impl Kernel {
    fn name(self) -> &'static str {
        match self {
            Kernel::S1 => "S1 series",
            Kernel::S2 => "S2 series",
            Kernel::S2Int(_) => "integrated S2 series",
        }
    }
}

/// A value together with its absolute error estimate.
#[derive(Debug, Clone, Copy)]
struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    fn rel(&self) -> f64 {
        self.error / self.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Convergent multinomial form in the normalized variables.
fn convergent(ev: &Evaluator, kernel: Kernel, lambda: f64, spec: &OrderSpec, t: f64) -> Estimate {
    let n = spec.len();
    let an = spec.alpha_max();
    let mut xs = vec![-lambda * t.powf(an)];
    let mut exps = vec![an];
    for k in 0..n - 1 {
        let e = an - spec.alphas[k];
        xs.push(-spec.weights[k] * t.powf(e));
        exps.push(e);
    }
    let (beta0, prefactor) = match kernel {
        Kernel::S1 => (1.0 + an, -lambda * t.powf(an)),
        Kernel::S2 => (an, t.powf(an - 1.0)),
        Kernel::S2Int(a) => (an + a + 1.0, t.powf(an + a)),
    };
    let s: SeriesSum = ev.kernel_series(beta0, &xs, &exps, KERNEL_KMAX);
    let err = if s.converged { s.error } else { f64::INFINITY };
    match kernel {
        Kernel::S1 => {
            let value = 1.0 + prefactor * s.value;
            Estimate {
                value,
                error: prefactor.abs() * err + f64::EPSILON,
            }
        }
        _ => Estimate {
            value: prefactor * s.value,
            error: prefactor.abs() * err,
        },
    }
}

/// Inverse-power expansion in x_k = -r_k t^{-α_k} / λ.
fn asymptotic(ev: &Evaluator, kernel: Kernel, lambda: f64, spec: &OrderSpec, t: f64) -> Estimate {
    let xs: Vec<f64> = spec
        .alphas
        .iter()
        .zip(&spec.weights)
        .map(|(a, r)| -r * t.powf(-a) / lambda)
        .collect();
    let (shift, k_start, prefactor) = match kernel {
        // 1 - λ/(p(λ+Q)) leaves -Σ_{j≥1}
        Kernel::S1 => (1.0, 1, -1.0),
        Kernel::S2 => (0.0, 1, 1.0 / (lambda * t)),
        Kernel::S2Int(a) => (a + 1.0, 0, t.powf(a) / lambda),
    };
    let w = ev.reflected_weight(shift);
    let s = sum_asymptotic(&xs, &spec.alphas, &w, k_start, KERNEL_KMAX);
    let err = if s.converged { s.error } else { f64::INFINITY };
    Estimate {
        value: prefactor * s.value,
        error: prefactor.abs() * err,
    }
}

fn is_large_argument(lambda: f64, spec: &OrderSpec, t: f64) -> bool {
    lambda * t.powf(spec.alpha_max()) >= 1.0
}

/// The inverse-power expansion needs every |x_k| = r_k t^{-α_k}/λ below one.
fn asymptotic_can_converge(lambda: f64, spec: &OrderSpec, t: f64) -> bool {
    spec.alphas
        .iter()
        .zip(&spec.weights)
        .all(|(a, r)| r * t.powf(-a) < lambda)
}

fn kernel_estimate(
    ev: &Evaluator,
    kernel: Kernel,
    lambda: f64,
    spec: &OrderSpec,
    t: f64,
) -> Estimate {
    let large = is_large_argument(lambda, spec, t);
    let first = if large {
        asymptotic(ev, kernel, lambda, spec, t)
    } else {
        convergent(ev, kernel, lambda, spec, t)
    };
    if first.rel() <= KERNEL_EARLY_RTOL || (!large && !asymptotic_can_converge(lambda, spec, t)) {
        return first;
    }
    let second = if large {
        convergent(ev, kernel, lambda, spec, t)
    } else {
        asymptotic(ev, kernel, lambda, spec, t)
    };
    if second.error < first.error {
        second
    } else {
        first
    }
}

fn checked(
    ev: &Evaluator,
    kernel: Kernel,
    lambda: f64,
    spec: &OrderSpec,
    t: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("eigenvalue must be positive, got {lambda}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    if !spec.is_normalized() {
        return Err(Error::invalid("kernel series expects a normalized spec (r_N = 1)"));
    }
    let est = kernel_estimate(ev, kernel, lambda, spec, t);
    if !est.value.is_finite() {
        return Err(Error::NonFinite(kernel.name().to_string()));
    }
    if est.rel() > KERNEL_RTOL {
        return Err(Error::Accuracy {
            what: format!("{} at lambda={lambda}, t={t}", kernel.name()),
            estimate: est.rel(),
        });
    }
    Ok(est.value)
}

impl Evaluator {
    /// S₁(t) = 1 - λt^{α_N} E_{(α_N, α_N-α_1, …), 1+α_N}(-λt^{α_N}, -r_1 t^{α_N-α_1}, …).
    pub fn s1_kernel_series(&self, lambda: f64, spec: &OrderSpec, t: f64) -> Result<f64> {
        checked(self, Kernel::S1, lambda, spec, t)
    }

    /// S₂(t) = t^{α_N-1} E_{(α_N, α_N-α_1, …), α_N}(-λt^{α_N}, -r_1 t^{α_N-α_1}, …).
    pub fn s2_kernel_series(&self, lambda: f64, spec: &OrderSpec, t: f64) -> Result<f64> {
        checked(self, Kernel::S2, lambda, spec, t)
    }

    /// t^{α_N+a} E_{(α_N, α_N-α_1, …), α_N+a+1}(-λt^{α_N}, -r_1 t^{α_N-α_1}, …).
    pub fn s2_kernel_int_series(&self, lambda: f64, spec: &OrderSpec, a: f64, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::domain(format!("source exponent must lie in [0, 1], got {a}")));
        }
        checked(self, Kernel::S2Int(a), lambda, spec, t)
    }

    pub(crate) fn kernel_series(&self, beta0: f64, xs: &[f64], exps: &[f64], k_max: usize) -> SeriesSum {
        let w = self.shifted_weight(beta0);
        sum_convergent(xs, exps, &w, k_max)
    }

    /// s ↦ 1/Γ(shift - s), the weight of the inverse-power expansions.
    fn reflected_weight(&self, shift: f64) -> impl Fn(Dd) -> Option<(Dd, f64)> {
        let bias = Dd::from_f64(self.ln_gamma_bias());
        let shift = Dd::from_f64(shift);
        move |s| ln_rgamma_dd(shift - s).map(|(l, sg)| (l - bias, sg))
    }
}

/// S₁ with the default evaluator.
pub fn s1_kernel_series(lambda: f64, spec: &OrderSpec, t: f64) -> Result<f64> {
    Evaluator::default().s1_kernel_series(lambda, spec, t)
}

/// S₂ with the default evaluator.
pub fn s2_kernel_series(lambda: f64, spec: &OrderSpec, t: f64) -> Result<f64> {
    Evaluator::default().s2_kernel_series(lambda, spec, t)
}

/// Integrated S₂ with the default evaluator.
pub fn s2_kernel_int_series(lambda: f64, spec: &OrderSpec, a: f64, t: f64) -> Result<f64> {
    Evaluator::default().s2_kernel_int_series(lambda, spec, a, t)
}
