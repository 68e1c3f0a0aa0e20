//! Least-squares recovery of model parameters from a sampled trace.
//!
//! The misfit J = ½ (T₀/n) Σ (g(t_k) - f(t_k))² is minimized over (c, β)
//! with box constraints on β by a projected limited-memory BFGS method.
//! The amplitudes c are solved at every trial β (linear least squares for
//! the polynomial kind), so the quasi-Newton iteration only sees β.

mod lbfgsb;
mod linear;
mod minimize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forward::TraceSample;
use crate::models::{physical_estimates, to_physical, ModelKind, ModelParams, PhysicalEstimates, PhysicalParams};
use crate::{Case, Error, Result};

pub use linear::{linear_init, MAX_CONDITION};
pub use minimize::minimize;

/// Default box for every exponent.
pub const DEFAULT_BETA_BOUNDS: (f64, f64) = (0.01, 1.99);

/// Fitting protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub kind: ModelKind,
    pub case: Case,
    pub n_terms: usize,
    pub beta_init: Vec<f64>,
    /// Per-exponent (lo, hi); empty means [`DEFAULT_BETA_BOUNDS`] for all.
    pub beta_bounds: Vec<(f64, f64)>,
    pub max_iter: usize,
    pub memory: usize,
    pub grad_tol: f64,
    pub min_gap: f64,
    pub multi_start: Option<usize>,
    /// Exponent a of the power-law source; ignored for initial data.
    pub source_exponent: f64,
    /// Keep β fixed and optimize the amplitudes only.
    pub freeze_beta: bool,
    /// Extra starting amplitudes for the rational amplitude solve.
    pub c_init: Option<Vec<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Polynomial,
            case: Case::InitialData,
            n_terms: 1,
            beta_init: vec![0.5],
            beta_bounds: Vec::new(),
            max_iter: 200,
            memory: 10,
            grad_tol: 1e-10,
            min_gap: 1e-3,
            multi_start: None,
            source_exponent: 0.0,
            freeze_beta: false,
            c_init: None,
        }
    }
}

impl FitConfig {
    /// Configuration whose starting exponents correspond to the order guess
    /// `alpha_init` (ascending): β₁ = α_N + a and β₂ = 2α_N - α₁ + a.
    pub fn from_alpha_init(kind: ModelKind, case: Case, alpha_init: &[f64], source_exponent: f64) -> Result<Self> {
        let a = if case == Case::Source { source_exponent } else { 0.0 };
        let beta_init = match alpha_init {
            [an] => vec![an + a],
            [a1, an] => vec![an + a, 2.0 * an - a1 + a],
            _ => return Err(Error::invalid("expected one or two initial orders")),
        };
        let cfg = Self {
            kind,
            case,
            n_terms: beta_init.len(),
            beta_init,
            source_exponent: a,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        if self.beta_bounds.is_empty() {
            vec![DEFAULT_BETA_BOUNDS; self.n_terms]
        } else {
            self.beta_bounds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.n_terms) {
            return Err(Error::invalid(format!("n_terms must be 1 or 2, got {}", self.n_terms)));
        }
        if self.beta_init.len() != self.n_terms {
            return Err(Error::invalid(format!(
                "beta_init has {} entries for {} terms",
                self.beta_init.len(),
                self.n_terms
            )));
        }
        let bounds = self.bounds();
        if bounds.len() != self.n_terms {
            return Err(Error::invalid("one bound pair per exponent is required"));
        }
        for ((lo, hi), b) in bounds.iter().zip(&self.beta_init) {
            if !(*lo > 0.0 && lo < hi && *hi < 2.0) {
                return Err(Error::invalid(format!("exponent bounds ({lo}, {hi}) must satisfy 0 < lo < hi < 2")));
            }
            if !(lo <= b && b <= hi) {
                return Err(Error::invalid(format!("initial exponent {b} outside ({lo}, {hi})")));
            }
        }
        if self.beta_init.windows(2).any(|w| !(w[1] - w[0] >= self.min_gap)) {
            return Err(Error::invalid("initial exponents must increase by at least min_gap"));
        }
        if self.max_iter == 0 || !(self.grad_tol > 0.0) || !(self.min_gap >= 0.0) {
            return Err(Error::invalid("max_iter, grad_tol and min_gap must be positive"));
        }
        if !(0.0..=1.0).contains(&self.source_exponent) {
            return Err(Error::invalid(format!("source exponent {} outside [0, 1]", self.source_exponent)));
        }
        if let Some(c) = &self.c_init {
            let want = self.n_terms + crate::models::has_constant(self.kind, self.case) as usize;
            if c.len() != want {
                return Err(Error::invalid(format!("c_init needs {want} entries, got {}", c.len())));
            }
        }
        Ok(())
    }
}

/// Objective value after each accepted iterate, with its exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub objective: f64,
    pub beta: Vec<f64>,
}

/// Output of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub t0: f64,
    /// Validated physical parameters, when the fit is admissible.
    pub physical: Option<PhysicalParams>,
    /// Physical quantities read off the fit regardless of admissibility.
    pub estimates: Option<PhysicalEstimates>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient norm in the optimizer's scaled variables.
    pub grad_norm: f64,
    pub note: Option<String>,
    pub assumptions: Vec<String>,
    pub history: Vec<IterRecord>,
}

#[derive(Serialize)]
struct FitResultJson<'a> {
    kind: ModelKind,
    case: Case,
    #[serde(rename = "T0")]
    t0: f64,
    beta: &'a [f64],
    c: &'a [f64],
    alpha: Option<&'a [f64]>,
    r: Option<&'a [f64]>,
    amplitude: Option<f64>,
    constant: Option<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    assumptions: &'a [String],
}

impl FitResult {
    pub fn to_json(&self) -> serde_json::Value {
        let est = self.estimates.as_ref();
        let view = FitResultJson {
            kind: self.params.kind,
            case: self.params.case,
            t0: self.t0,
            beta: &self.params.beta,
            c: &self.params.c,
            alpha: est.map(|e| e.alpha.as_slice()),
            r: est.map(|e| e.r.as_slice()),
            amplitude: est.map(|e| e.amplitude),
            constant: est.and_then(|e| e.constant),
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
            assumptions: &self.assumptions,
        };
        serde_json::to_value(view).expect("plain data serializes")
    }
}

/// J = ½ (T₀/n) Σ (g_k - f(t_k))².
pub fn objective(sample: &TraceSample, params: &ModelParams) -> f64 {
    let n = sample.len() as f64;
    let ss: f64 = sample
        .times()
        .iter()
        .zip(sample.values())
        .map(|(t, g)| {
            let f = params.eval(*t).unwrap_or(f64::NAN);
            (g - f) * (g - f)
        })
        .sum();
    0.5 * sample.t0() / n * ss
}

/// ∂J/∂(c, β).
pub fn objective_grad(sample: &TraceSample, params: &ModelParams) -> Vec<f64> {
    let n = sample.len() as f64;
    let w = sample.t0() / n;
    let mut out = vec![0.0; params.n_params()];
    let mut g = vec![0.0; params.n_params()];
    for (t, y) in sample.times().iter().zip(sample.values()) {
        let f = params.value_and_grad(*t, &mut g);
        let r = f - y;
        for (o, d) in out.iter_mut().zip(&g) {
            *o += w * r * d;
        }
    }
    out
}

/// Starting exponents on a uniform lattice inside the bounds.
fn lattice_starts(cfg: &FitConfig, count: usize) -> Vec<Vec<f64>> {
    let bounds = cfg.bounds();
    let per_dim = if cfg.n_terms == 1 {
        count
    } else {
        (count as f64).sqrt().ceil() as usize
    };
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..per_dim)
            .map(|k| lo + (k as f64 + 0.5) * (hi - lo) / per_dim as f64)
            .collect()
    };
    let mut starts = vec![cfg.beta_init.clone()];
    if cfg.n_terms == 1 {
        starts.extend(axis(bounds[0]).into_iter().map(|b| vec![b]));
    } else {
        for b1 in axis(bounds[0]) {
            for b2 in axis(bounds[1]) {
                if b2 - b1 >= cfg.min_gap.max(1e-6) {
                    starts.push(vec![b1, b2]);
                }
            }
        }
    }
    starts
}

/// Minimizes and maps the result to physical parameters.
///
/// With `multi_start = Some(k)`, k > 1, the fit is repeated from a lattice
/// of exponent starts (plus the configured one) and the lowest objective
/// wins. An inadmissible physical map is reported in `note` with
/// `converged = false`.
pub fn recover(sample: &TraceSample, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let mut best = match cfg.multi_start {
        Some(k) if k > 1 => {
            let runs: Vec<Result<FitResult>> = lattice_starts(cfg, k)
                .into_par_iter()
                .map(|b| {
                    let mut c = cfg.clone();
                    c.beta_init = b;
                    c.c_init = None;
                    minimize(sample, &c)
                })
                .collect();
            let mut best: Option<FitResult> = None;
            let mut first_err = None;
            for r in runs {
                match r {
                    Ok(r) => {
                        if best.as_ref().map_or(true, |b| r.objective < b.objective) {
                            best = Some(r);
                        }
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            match (best, first_err) {
                (Some(b), _) => b,
                (None, Some(e)) => return Err(e),
                (None, None) => return Err(Error::invalid("no multi-start point was admissible")),
            }
        }
        _ => minimize(sample, cfg)?,
    };
    attach_physical(&mut best, cfg.source_exponent);
    Ok(best)
}

pub(crate) fn attach_physical(res: &mut FitResult, a: f64) {
    res.estimates = physical_estimates(&res.params, a).ok();
    match to_physical(&res.params, a) {
        Ok(p) => res.physical = Some(p),
        Err(e) => {
            res.physical = None;
            res.converged = false;
            res.note = Some(match res.note.take() {
                Some(n) => format!("{n}; {e}"),
                None => e.to_string(),
            });
        }
    }
}
