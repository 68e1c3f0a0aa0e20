//! Small-time regressors for the boundary trace and their link to the
//! physical parameters.
//!
//! Both families use a generic parametrization (c, β):
//!
//! ```text
//!   polynomial, initial data   c₀ + Σ c_i t^{β_i}
//!   polynomial, source         Σ c_i t^{β_i}
//!   rational,   initial data   c₀ / (1 + Σ d_i t^{β_i})      c = (c₀, d₁..d_M)
//!   rational,   source         c_A (1 - 1/(1 + Σ d_i t^{β_i}))  c = (c_A, d₁..d_M)
//! ```
//!
//! Gamma factors only enter through [`to_physical`] and [`from_physical`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::specfun::{gamma, OrderSpec};
use crate::{Case, Error, Result};

/// Regressor family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Fractional polynomial f_p.
    #[serde(rename = "fp")]
    Polynomial,
    /// Lowest-order rational approximant f_r.
    #[serde(rename = "fr")]
    Rational,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Polynomial => "fp",
            ModelKind::Rational => "fr",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp" | "polynomial" => Ok(ModelKind::Polynomial),
            "fr" | "rational" => Ok(ModelKind::Rational),
            other => Err(Error::invalid(format!("unknown model kind '{other}' (expected fp or fr)"))),
        }
    }
}

/// True when the parameter vector starts with a constant/scale entry.
pub fn has_constant(kind: ModelKind, case: Case) -> bool {
    !(kind == ModelKind::Polynomial && case == Case::Source)
}

/// Model parameters: amplitudes `c` and strictly increasing exponents `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub case: Case,
    pub c: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ModelParams {
    pub fn new(kind: ModelKind, case: Case, c: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let p = Self { kind, case, c, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_empty() {
            return Err(Error::invalid("a model needs at least one exponent"));
        }
        let want = self.n_terms() + self.offset();
        if self.c.len() != want {
            return Err(Error::invalid(format!(
                "{} {} model with {} exponents needs {want} amplitudes, got {}",
                self.kind,
                self.case,
                self.n_terms(),
                self.c.len()
            )));
        }
        if self.beta.iter().any(|b| !(*b > 0.0 && *b < 2.0)) {
            return Err(Error::domain(format!("exponents must lie in (0, 2), got {:?}", self.beta)));
        }
        if self.beta.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain(format!("exponents must be strictly increasing, got {:?}", self.beta)));
        }
        Ok(())
    }

    /// Number of power terms M.
    pub fn n_terms(&self) -> usize {
        self.beta.len()
    }

    /// Index of the first power-term coefficient in `c`.
    pub fn offset(&self) -> usize {
        has_constant(self.kind, self.case) as usize
    }

    /// Length of the (c, β) vector.
    pub fn n_params(&self) -> usize {
        self.c.len() + self.beta.len()
    }

    /// Flattens to (c, β).
    pub fn to_vec(&self) -> Vec<f64> {
        self.c.iter().chain(&self.beta).copied().collect()
    }

    /// Rebuilds from a flat (c, β) vector without validation.
    pub fn with_vec(&self, x: &[f64]) -> Self {
        let nc = self.c.len();
        Self {
            kind: self.kind,
            case: self.case,
            c: x[..nc].to_vec(),
            beta: x[nc..].to_vec(),
        }
    }

    fn powers(&self, t: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let off = self.offset();
        self.beta.iter().zip(&self.c[off..]).map(move |(b, k)| (*k, t.powf(*b)))
    }

    /// Model value at t > 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.value(t))
    }

    fn value(&self, t: f64) -> f64 {
        let sum: f64 = self.powers(t).map(|(k, p)| k * p).sum();
        match (self.kind, self.case) {
            (ModelKind::Polynomial, Case::InitialData) => self.c[0] + sum,
            (ModelKind::Polynomial, Case::Source) => sum,
            (ModelKind::Rational, Case::InitialData) => self.c[0] / (1.0 + sum),
            (ModelKind::Rational, Case::Source) => self.c[0] * sum / (1.0 + sum),
        }
    }

    /// Exact partial derivatives with respect to (c, β).
    pub fn grad(&self, t: f64) -> Result<Vec<f64>> {
        check_time(t)?;
        let mut g = vec![0.0; self.n_params()];
        self.value_and_grad(t, &mut g);
        Ok(g)
    }

    /// Writes ∂f/∂(c, β) into `g` and returns f(t).
    pub(crate) fn value_and_grad(&self, t: f64, g: &mut [f64]) -> f64 {
        let off = self.offset();
        let nc = self.c.len();
        let ln_t = t.ln();
        let pw: Vec<f64> = self.beta.iter().map(|b| t.powf(*b)).collect();
        let sum: f64 = pw.iter().zip(&self.c[off..]).map(|(p, k)| k * p).sum();
        match (self.kind, self.case) {
            (ModelKind::Polynomial, case) => {
                if case == Case::InitialData {
                    g[0] = 1.0;
                }
                for (i, p) in pw.iter().enumerate() {
                    g[off + i] = *p;
                    g[nc + i] = self.c[off + i] * p * ln_t;
                }
                if case == Case::InitialData {
                    self.c[0] + sum
                } else {
                    sum
                }
            }
            (ModelKind::Rational, case) => {
                let den = 1.0 + sum;
                let den2 = den * den;
                // f = c₀/den or c_A·sum/den; both have ∂f/∂sum = ∓c/den²
                let (value, d_sum) = match case {
                    Case::InitialData => {
                        g[0] = 1.0 / den;
                        (self.c[0] / den, -self.c[0] / den2)
                    }
                    Case::Source => {
                        g[0] = sum / den;
                        (self.c[0] * sum / den, self.c[0] / den2)
                    }
                };
                for (i, p) in pw.iter().enumerate() {
                    g[off + i] = d_sum * p;
                    g[nc + i] = d_sum * self.c[off + i] * p * ln_t;
                }
                value
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("model evaluation needs t > 0, got {t}")));
    }
    Ok(())
}

/// Physical quantities implied by a fitted model, before any validity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalEstimates {
    /// Ascending orders (α₁, α_N) or (α_N).
    pub alpha: Vec<f64>,
    /// Weights matching `alpha`, with r_N = 1.
    pub r: Vec<f64>,
    /// ℛ*Au₀(x₀) for initial data, c₀ℛ*f(x₀) for a source.
    pub amplitude: f64,
    /// ℛ*u₀(x₀) for initial data.
    pub constant: Option<f64>,
}

/// Validated physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub orders: OrderSpec,
    pub amplitude: f64,
    pub constant: Option<f64>,
}

/// Raw map from (c, β) to orders, weights and amplitude; `a` is the source
/// exponent (zero for initial data).
pub fn physical_estimates(params: &ModelParams, a: f64) -> Result<PhysicalEstimates> {
    params.validate()?;
    let m = params.n_terms();
    if m > 2 {
        return Err(Error::invalid(format!("physical map supports one or two terms, got {m}")));
    }
    let a = if params.case == Case::Source { a } else { 0.0 };
    let off = params.offset();
    let b1 = params.beta[0];
    let g1 = gamma(b1 + 1.0)?;
    let k1 = params.c[off];
    let amplitude = match (params.kind, params.case) {
        (ModelKind::Polynomial, Case::InitialData) => -k1 * g1,
        (ModelKind::Polynomial, Case::Source) => k1 * g1,
        (ModelKind::Rational, _) => params.c[0] * k1 * g1,
    };
    let alpha_n = b1 - a;
    let (alpha, r) = if m == 1 {
        (vec![alpha_n], vec![1.0])
    } else {
        let b2 = params.beta[1];
        let g2 = gamma(b2 + 1.0)?;
        let k2 = params.c[off + 1];
        let r1 = -k2 * g2 / (k1 * g1);
        (vec![2.0 * b1 - b2 - a, alpha_n], vec![r1, 1.0])
    };
    let constant = (params.case == Case::InitialData).then(|| params.c[0]);
    Ok(PhysicalEstimates {
        alpha,
        r,
        amplitude,
        constant,
    })
}

/// Maps fitted parameters to physical ones, rejecting maps that leave the
/// admissible set 0 < α₁ < α_N < 1, r₁ > 0.
pub fn to_physical(params: &ModelParams, a: f64) -> Result<PhysicalParams> {
    let est = physical_estimates(params, a)?;
    let alpha_n = *est.alpha.last().expect("nonempty");
    if !(alpha_n > 0.0 && alpha_n < 1.0) {
        return Err(Error::Identifiability(format!("leading order {alpha_n} outside (0, 1)")));
    }
    if est.alpha.len() == 2 {
        if !(est.alpha[0] > 0.0) {
            return Err(Error::Identifiability(format!(
                "recovered lower order {} is not positive",
                est.alpha[0]
            )));
        }
        if !(est.r[0] > 0.0 && est.r[0].is_finite()) {
            return Err(Error::Identifiability(format!("recovered weight r1 = {} is not positive", est.r[0])));
        }
    }
    if !est.amplitude.is_finite() {
        return Err(Error::NonFinite("recovered amplitude".into()));
    }
    let orders = OrderSpec::new(est.alpha, est.r).map_err(|e| Error::Identifiability(e.to_string()))?;
    Ok(PhysicalParams {
        orders,
        amplitude: est.amplitude,
        constant: est.constant,
    })
}

/// Model parameters whose leading behaviour matches the given physical
/// parameters. Initial-data models need `phys.constant`.
pub fn from_physical(phys: &PhysicalParams, kind: ModelKind, case: Case, a: f64) -> Result<ModelParams> {
    let n = phys.orders.len();
    if n > 2 {
        return Err(Error::invalid(format!("physical map supports one or two orders, got {n}")));
    }
    if phys.orders.leading_weight() != 1.0 {
        return Err(Error::invalid("physical parameters must have r_N = 1"));
    }
    let a = if case == Case::Source { a } else { 0.0 };
    let amp = phys.amplitude;
    let alpha_n = phys.orders.alpha_max();
    let b1 = alpha_n + a;
    let g1 = gamma(b1 + 1.0)?;
    let mut beta = vec![b1];
    let mut second = None;
    if n == 2 {
        let a1 = phys.orders.alphas()[0];
        let r1 = phys.orders.weights()[0];
        let b2 = 2.0 * alpha_n - a1 + a;
        beta.push(b2);
        second = Some((r1, gamma(b2 + 1.0)?));
    }
    let constant = || {
        phys.constant
            .ok_or_else(|| Error::invalid("initial-data model needs the constant ℛ*u₀(x₀)"))
    };
    let c = match (kind, case) {
        (ModelKind::Polynomial, Case::InitialData) => {
            let mut c = vec![constant()?, -amp / g1];
            if let Some((r1, g2)) = second {
                c.push(amp * r1 / g2);
            }
            c
        }
        (ModelKind::Polynomial, Case::Source) => {
            let mut c = vec![amp / g1];
            if let Some((r1, g2)) = second {
                c.push(-amp * r1 / g2);
            }
            c
        }
        (ModelKind::Rational, Case::InitialData) => {
            let c0 = constant()?;
            let mut c = vec![c0, amp / (c0 * g1)];
            if let Some((r1, g2)) = second {
                c.push(-amp * r1 / (c0 * g2));
            }
            c
        }
        (ModelKind::Rational, Case::Source) => {
            let mut c = vec![amp, 1.0 / g1];
            if let Some((r1, g2)) = second {
                c.push(-r1 / g2);
            }
            c
        }
    };
    ModelParams::new(kind, case, c, beta)
}
