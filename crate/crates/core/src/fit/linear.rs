//! Linear least-squares amplitudes for fixed exponents.
//!
//! All regressions run on the normalized time τ = t/T₀ so that the design
//! columns τ^β stay O(1); coefficients are mapped back with c_i = c̃_i/T₀^{β_i}.

use nalgebra::{DMatrix, DVector};

use crate::forward::TraceSample;
use crate::models::{ModelKind, ModelParams};
use crate::{Case, Error, Result};

/// Largest admissible condition number of the column-normalized design.
pub const MAX_CONDITION: f64 = 1e12;

/// Least-squares solution of columns·x ≈ rhs, with column equilibration.
fn solve_ls(columns: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let m = columns.len();
    if n < m {
        return Err(Error::invalid(format!("{n} samples cannot determine {m} coefficients")));
    }
    let norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if norms.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::RankDeficient { cond: f64::INFINITY });
    }
    let a = DMatrix::from_fn(n, m, |i, j| columns[j][i] / norms[j]);
    let b = DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !(cond <= MAX_CONDITION) {
        return Err(Error::RankDeficient { cond });
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::invalid(format!("least-squares solve failed: {e}")))?;
    Ok(x.iter().zip(&norms).map(|(v, s)| v / s).collect())
}

/// Amplitudes in τ units for exponents `beta`, laid out as in
/// [`ModelParams::c`].
pub(crate) fn linear_init_scaled(
    tau: &[f64],
    g: &[f64],
    beta: &[f64],
    kind: ModelKind,
    case: Case,
) -> Result<Vec<f64>> {
    let pow = |b: f64| tau.iter().map(|t| t.powf(b)).collect::<Vec<f64>>();
    let ones = vec![1.0; tau.len()];
    match (kind, case) {
        (ModelKind::Polynomial, Case::InitialData) => {
            let mut cols = vec![ones];
            cols.extend(beta.iter().map(|b| pow(*b)));
            solve_ls(&cols, g)
        }
        (ModelKind::Polynomial, Case::Source) => {
            let cols: Vec<_> = beta.iter().map(|b| pow(*b)).collect();
            solve_ls(&cols, g)
        }
        (ModelKind::Rational, Case::InitialData) => {
            // 1/f = (1 + Σ d_i τ^{β_i}) / c₀ is linear in (1/c₀, d_i/c₀)
            let inv = reciprocal(g)?;
            let mut cols = vec![ones];
            cols.extend(beta.iter().map(|b| pow(*b)));
            let e = solve_ls(&cols, &inv)?;
            if !(e[0] != 0.0 && e[0].is_finite()) {
                return Err(Error::invalid("rational initialization found no finite constant"));
            }
            let c0 = 1.0 / e[0];
            let mut c = vec![c0];
            c.extend(e[1..].iter().map(|v| v * c0));
            Ok(c)
        }
        (ModelKind::Rational, Case::Source) => {
            let ca = source_scale_estimate(tau, g, beta[0])?;
            // f/(c_A - f) = Σ d_i τ^{β_i}
            let rhs: Vec<f64> = g.iter().map(|v| v / (ca - v)).collect();
            if rhs.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("rational source linearization".into()));
            }
            let cols: Vec<_> = beta.iter().map(|b| pow(*b)).collect();
            let d = solve_ls(&cols, &rhs)?;
            let mut c = vec![ca];
            c.extend(d);
            Ok(c)
        }
    }
}

fn reciprocal(g: &[f64]) -> Result<Vec<f64>> {
    let inv: Vec<f64> = g.iter().map(|v| 1.0 / v).collect();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reciprocal of trace data".into()));
    }
    Ok(inv)
}

/// Saturation level c_A of c_A·D/(1+D) with D = dτ^β: 1/f = 1/c_A + τ^{-β}/(c_A d).
/// When the data are too far from saturation for the intercept to be
/// resolved, a level well above the largest datum is used.
fn source_scale_estimate(tau: &[f64], g: &[f64], beta1: f64) -> Result<f64> {
    let peak = g.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if peak == 0.0 {
        return Err(Error::invalid("source data vanish identically"));
    }
    let fallback = 100.0 * peak;
    let Ok(inv) = reciprocal(g) else {
        return Ok(fallback);
    };
    let cols = vec![vec![1.0; tau.len()], tau.iter().map(|t| t.powf(-beta1)).collect()];
    match solve_ls(&cols, &inv) {
        Ok(e) if e[0].is_finite() && e[0] != 0.0 => {
            let ca = 1.0 / e[0];
            if ca.signum() == peak.signum() && ca.abs() > 1.01 * peak.abs() && ca.abs() < 1e6 * peak.abs() {
                Ok(ca)
            } else {
                Ok(fallback)
            }
        }
        _ => Ok(fallback),
    }
}

/// Maps τ-unit amplitudes back to t units.
pub(crate) fn unscale_c(c_scaled: &[f64], beta: &[f64], offset: usize, t0: f64) -> Vec<f64> {
    let mut c = c_scaled.to_vec();
    for (i, b) in beta.iter().enumerate() {
        c[offset + i] /= t0.powf(*b);
    }
    c
}

/// Maps t-unit amplitudes to τ units.
pub(crate) fn scale_c(c: &[f64], beta: &[f64], offset: usize, t0: f64) -> Vec<f64> {
    let mut cs = c.to_vec();
    for (i, b) in beta.iter().enumerate() {
        cs[offset + i] *= t0.powf(*b);
    }
    cs
}

/// Amplitudes c for fixed exponents by linear least squares.
///
/// The polynomial kinds are solved exactly; the rational kinds are
/// linearized through 1/f (initial data) or f/(c_A - f) (source).
pub fn linear_init(sample: &TraceSample, beta: &[f64], kind: ModelKind, case: Case) -> Result<Vec<f64>> {
    let t0 = sample.t0();
    let tau: Vec<f64> = sample.times().iter().map(|t| t / t0).collect();
    let cs = linear_init_scaled(&tau, sample.values(), beta, kind, case)?;
    let offset = crate::models::has_constant(kind, case) as usize;
    let c = unscale_c(&cs, beta, offset, t0);
    ModelParams::new(kind, case, c.clone(), beta.to_vec())?;
    Ok(c)
}
