//! Projected quasi-Newton driver with the amplitudes eliminated.
//!
//! The optimizer works on τ = t/T₀ with amplitudes c̃_i = c_i T₀^{β_i} and
//! the normalized misfit φ = mean((g - f)²)/D², D the standard deviation of
//! the data (their rms when they are constant). For every trial β the
//! amplitudes are solved to optimality: exactly by linear least squares for
//! the polynomial kind, by damped Gauss-Newton from the linearized solution
//! for the rational kind. L-BFGS-B then runs on the reduced misfit
//! φ*(β) = min_c φ(c, β), whose gradient is ∂φ/∂β at the optimal c.

use std::cell::RefCell;

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::lbfgsb::{minimize_box, Options, Stop};
use super::linear::{linear_init_scaled, scale_c, unscale_c};
use super::{objective, FitConfig, FitResult, IterRecord};
use crate::forward::TraceSample;
use crate::models::{has_constant, ModelKind, ModelParams};
use crate::{Case, Error, Result};

/// Projected-gradient level accepted as stationary when the line search can
/// no longer decrease φ in floating point.
const STALL_TOL: f64 = 1e-6;

const GN_MAX_ITER: usize = 100;

struct Scaled<'a> {
    tau: Vec<f64>,
    g: &'a [f64],
    d2: f64,
    kind: ModelKind,
    case: Case,
    nc: usize,
}

/// Amplitudes solved at fixed exponents, with φ and ∂φ/∂β there.
#[derive(Debug, Clone)]
struct Reduced {
    c: Vec<f64>,
    phi: f64,
    grad_beta: Vec<f64>,
}

impl Scaled<'_> {
    fn params(&self, c: &[f64], beta: &[f64]) -> ModelParams {
        ModelParams {
            kind: self.kind,
            case: self.case,
            c: c.to_vec(),
            beta: beta.to_vec(),
        }
    }

    /// φ and ∂φ/∂(c, β).
    fn phi_grad(&self, c: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
        let p = self.params(c, beta);
        let np = c.len() + beta.len();
        let n = self.tau.len() as f64;
        let mut df = vec![0.0; np];
        let mut grad = vec![0.0; np];
        let mut ss = 0.0;
        for (t, y) in self.tau.iter().zip(self.g) {
            let r = p.value_and_grad(*t, &mut df) - y;
            ss += r * r;
            for (o, d) in grad.iter_mut().zip(&df) {
                *o += r * d;
            }
        }
        let w = 1.0 / (n * self.d2);
        grad.iter_mut().for_each(|v| *v *= 2.0 * w);
        (ss * w, grad)
    }

    fn phi(&self, c: &[f64], beta: &[f64]) -> f64 {
        self.phi_grad(c, beta).0
    }

    /// Levenberg-Marquardt on the amplitudes with β fixed.
    fn refine_c(&self, c0: &[f64], beta: &[f64]) -> Option<(Vec<f64>, f64)> {
        let nc = self.nc;
        let m = self.tau.len();
        let mut c = c0.to_vec();
        let mut phi = self.phi(&c, beta);
        if !phi.is_finite() {
            return None;
        }
        let mut mu = 1e-3;
        let mut df = vec![0.0; nc + beta.len()];
        for _ in 0..GN_MAX_ITER {
            let p = self.params(&c, beta);
            let mut jac = DMatrix::zeros(m, nc);
            let mut r = DVector::zeros(m);
            for (k, (t, y)) in self.tau.iter().zip(self.g).enumerate() {
                r[k] = p.value_and_grad(*t, &mut df) - y;
                for j in 0..nc {
                    jac[(k, j)] = df[j];
                }
            }
            let jtj = jac.transpose() * &jac;
            let jtr = jac.transpose() * &r;
            let mut improved = false;
            while mu < 1e16 {
                let mut a = jtj.clone();
                for j in 0..nc {
                    a[(j, j)] += mu * jtj[(j, j)].max(f64::MIN_POSITIVE);
                }
                let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&jtr))) else {
                    mu *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let pt = self.phi(&trial, beta);
                if pt.is_finite() && pt < phi {
                    let rel = (phi - pt) / phi;
                    let small = step.iter().zip(&c).all(|(s, v)| s.abs() <= 1e-14 * v.abs().max(1e-300));
                    c = trial;
                    phi = pt;
                    mu = (mu * 0.1).max(1e-12);
                    improved = rel > 1e-15 && !small;
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        Some((c, phi))
    }

    /// Optimal amplitudes at β; `warm` is an extra starting point for the
    /// nonlinear (rational) solve.
    fn solve_c(&self, beta: &[f64], warm: Option<&[f64]>) -> Option<Vec<f64>> {
        let lin = linear_init_scaled(&self.tau, self.g, beta, self.kind, self.case).ok();
        if self.kind == ModelKind::Polynomial {
            return lin;
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for start in lin.as_deref().into_iter().chain(warm) {
            if let Some((c, phi)) = self.refine_c(start, beta) {
                if best.as_ref().map_or(true, |b| phi < b.1) {
                    best = Some((c, phi));
                }
            }
        }
        best.map(|b| b.0)
    }

    fn reduced(&self, beta: &[f64], warm: Option<&[f64]>) -> Option<Reduced> {
        let c = self.solve_c(beta, warm)?;
        let (phi, grad) = self.phi_grad(&c, beta);
        let grad_beta = grad[self.nc..].to_vec();
        (phi.is_finite() && grad_beta.iter().all(|v| v.is_finite())).then_some(Reduced { c, phi, grad_beta })
    }
}

/// Fits (c, β) to the sample by box-constrained L-BFGS on β with the
/// amplitudes solved at every step.
///
/// `config.c_init` seeds the nonlinear amplitude solve of the rational
/// kind. On exit the exponents are sorted and separated by at least
/// `min_gap`, and the amplitudes are re-solved if the gap had to be widened.
pub fn minimize(sample: &TraceSample, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let t0 = sample.t0();
    let n = sample.len() as f64;
    let mean = sample.values().iter().sum::<f64>() / n;
    let var = sample.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let d2 = if var > 0.0 { var } else { mean * mean };
    if !(d2 > 0.0 && d2.is_finite()) {
        return Err(Error::invalid("trace data must be finite and not identically zero"));
    }
    let prob = Scaled {
        tau: sample.times().iter().map(|t| t / t0).collect(),
        g: sample.values(),
        d2,
        kind: config.kind,
        case: config.case,
        nc: config.n_terms + has_constant(config.kind, config.case) as usize,
    };
    let offset = prob.nc - config.n_terms;
    let j_ref = 0.5 * t0 * d2;

    let beta0 = config.beta_init.clone();
    let warm0 = config.c_init.as_ref().map(|c| scale_c(c, &beta0, offset, t0));
    let start = prob.reduced(&beta0, warm0.as_deref()).ok_or_else(|| {
        Error::NonFinite(format!("objective or amplitude solve at the initial exponents {beta0:?}"))
    })?;

    let mut history = vec![IterRecord {
        objective: j_ref * start.phi,
        beta: beta0.clone(),
    }];
    let bounds = config.bounds();
    let (lo, hi): (Vec<f64>, Vec<f64>) = if config.freeze_beta {
        (beta0.clone(), beta0.clone())
    } else {
        bounds.iter().copied().unzip()
    };

    // amplitudes at the most recent evaluation and at the accepted iterate
    let last_eval: RefCell<Option<Reduced>> = RefCell::new(None);
    let accepted: RefCell<Reduced> = RefCell::new(start);
    let fg = |beta: &[f64]| {
        let warm = accepted.borrow().c.clone();
        match prob.reduced(beta, Some(&warm)) {
            Some(r) => {
                let out = (r.phi, r.grad_beta.clone());
                *last_eval.borrow_mut() = Some(r);
                out
            }
            None => (f64::NAN, vec![f64::NAN; beta.len()]),
        }
    };
    let opts = Options {
        max_iter: config.max_iter,
        memory: config.memory,
        grad_tol: config.grad_tol,
        ..Options::default()
    };
    let out = minimize_box(&fg, &beta0, &lo, &hi, &opts, |beta, phi| {
        if let Some(r) = last_eval.borrow().as_ref() {
            *accepted.borrow_mut() = r.clone();
        }
        history.push(IterRecord {
            objective: j_ref * phi,
            beta: beta.to_vec(),
        });
        true
    })?;
    let (stop, pg) = (out.stop, out.pg_norm);
    debug!(
        "minimize stopped with {stop:?} after {} iterations, phi {:.3e}, pg {pg:.3e}",
        out.iterations, out.f
    );

    // sort exponents with their amplitudes and keep them apart
    let fitted = accepted.into_inner();
    let mut beta = out.x;
    let mut c = fitted.c;
    let mut order: Vec<usize> = (0..beta.len()).collect();
    order.sort_by(|a, b| beta[*a].total_cmp(&beta[*b]));
    let sorted_c: Vec<f64> = order.iter().map(|i| c[offset + i]).collect();
    beta = order.iter().map(|i| beta[*i]).collect();
    c[offset..].copy_from_slice(&sorted_c);
    let gap = config.min_gap.max(1e-12);
    if beta.len() == 2 && beta[1] - beta[0] < gap {
        let mid = 0.5 * (beta[0] + beta[1]);
        let b0 = (mid - 0.5 * gap).clamp(bounds[0].0, bounds[1].1 - gap);
        beta = vec![b0, b0 + gap];
        if let Some(cn) = prob.solve_c(&beta, Some(&c)) {
            c = cn;
        }
    }

    let params = ModelParams::new(config.kind, config.case, unscale_c(&c, &beta, offset, t0), beta.clone())?;
    let obj = objective(sample, &params);
    if !obj.is_finite() {
        return Err(Error::NonFinite("objective at the fitted parameters".into()));
    }
    if history.last().map_or(true, |h| h.beta != beta) {
        history.push(IterRecord {
            objective: obj,
            beta: beta.clone(),
        });
    }
    let converged = match stop {
        Stop::Converged => true,
        Stop::LineSearch => pg <= STALL_TOL,
        Stop::MaxIter | Stop::Interrupted => false,
    };
    let note = match stop {
        Stop::Converged => None,
        Stop::LineSearch if converged => Some(format!("stalled at working precision, projected gradient {pg:.2e}")),
        Stop::LineSearch => Some(format!("line search failed, projected gradient {pg:.2e}")),
        Stop::MaxIter | Stop::Interrupted => Some(format!("iteration limit reached, projected gradient {pg:.2e}")),
    };
    Ok(FitResult {
        params,
        t0,
        physical: None,
        estimates: None,
        objective: obj,
        iterations: out.iterations,
        converged,
        grad_norm: pg,
        note,
        assumptions: Vec::new(),
        history,
    })
}
