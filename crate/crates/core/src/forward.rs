//! Spectral forward model for the boundary trace g(t) = ℛ*u(x₀, t).
//!
//! A problem is a list of modes (λ_n, w_n) where w_n already fuses the
//! expansion coefficient of u₀ or f with the trace of the eigenfunction.
//! Each mode evolves by the scalar kernel S₁ (initial data) or the integrated
//! S₂ (power-law source), so the trace is a finite weighted kernel sum.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::models::PhysicalParams;
use crate::specfun::{
    normalize_spec, s1_kernel_contour, s1_kernel_series, s2_kernel_int_contour, s2_kernel_int_series,
    ContourSpec, OrderSpec,
};
use crate::{Case, Error, Result};

/// One eigen-mode: eigenvalue and fused boundary weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub lambda: f64,
    pub weight: f64,
}

impl Mode {
    pub fn new(lambda: f64, weight: f64) -> Self {
        Self { lambda, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProblem {
    modes: Vec<Mode>,
    case: Case,
    /// Exponent a of σ(s) = c₀ s^a / Γ(a+1); zero for initial data.
    source_exponent: f64,
    /// Scale c₀ of σ; one for initial data.
    source_scale: f64,
    pub ref_u0_x0: Option<f64>,
    pub ref_au0_x0: Option<f64>,
    pub ref_f_x0: Option<f64>,
}

impl SpectralProblem {
    pub fn initial_data(modes: Vec<Mode>) -> Result<Self> {
        Self::validate_modes(&modes)?;
        Ok(Self {
            modes,
            case: Case::InitialData,
            source_exponent: 0.0,
            source_scale: 1.0,
            ref_u0_x0: None,
            ref_au0_x0: None,
            ref_f_x0: None,
        })
    }

    pub fn source(modes: Vec<Mode>, exponent: f64, scale: f64) -> Result<Self> {
        Self::validate_modes(&modes)?;
        if !(0.0..=1.0).contains(&exponent) {
            return Err(Error::domain(format!("source exponent must lie in [0, 1], got {exponent}")));
        }
        if !scale.is_finite() {
            return Err(Error::invalid(format!("source scale must be finite, got {scale}")));
        }
        Ok(Self {
            modes,
            case: Case::Source,
            source_exponent: exponent,
            source_scale: scale,
            ref_u0_x0: None,
            ref_au0_x0: None,
            ref_f_x0: None,
        })
    }

    fn validate_modes(modes: &[Mode]) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::invalid("a spectral problem needs at least one mode"));
        }
        if let Some(m) = modes.iter().find(|m| !(m.lambda > 0.0 && m.lambda.is_finite())) {
            return Err(Error::domain(format!("eigenvalues must be positive, got {}", m.lambda)));
        }
        if modes.windows(2).any(|w| w[1].lambda < w[0].lambda) {
            return Err(Error::invalid("eigenvalues must be nondecreasing"));
        }
        if let Some(m) = modes.iter().find(|m| !m.weight.is_finite()) {
            return Err(Error::invalid(format!("mode weight must be finite, got {}", m.weight)));
        }
        Ok(())
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn source_exponent(&self) -> f64 {
        self.source_exponent
    }

    pub fn source_scale(&self) -> f64 {
        self.source_scale
    }

    /// Σ w_n, the trace of u₀ or f at x₀.
    pub fn weight_sum(&self) -> f64 {
        self.modes.iter().map(|m| m.weight).sum()
    }

    /// Σ λ_n w_n, the trace of A u₀ or A f at x₀.
    pub fn weighted_eigen_sum(&self) -> f64 {
        self.modes.iter().map(|m| m.lambda * m.weight).sum()
    }

    /// Physical parameters that the small-time models should recover for
    /// the orders `spec`: ℛ*Au₀(x₀) and ℛ*u₀(x₀) for initial data,
    /// c₀ℛ*f(x₀) for a source.
    pub fn physical(&self, spec: &OrderSpec) -> Result<PhysicalParams> {
        let (orders, _, scale) = normalize_spec(spec, 1.0);
        Ok(match self.case {
            Case::InitialData => PhysicalParams {
                orders,
                amplitude: self.weighted_eigen_sum() * scale,
                constant: Some(self.weight_sum()),
            },
            Case::Source => PhysicalParams {
                orders,
                amplitude: self.source_scale * self.weight_sum() * scale,
                constant: None,
            },
        })
    }
}

/// A single eigenfunction with λ = π² + 1 as initial datum, so that
/// g(t) = E_{α,1}(-λ t^α) for a single order.
pub fn single_mode_example() -> SpectralProblem {
    let lambda = PI * PI + 1.0;
    let mut p = SpectralProblem::initial_data(vec![Mode::new(lambda, 1.0)]).expect("valid modes");
    p.ref_u0_x0 = Some(1.0);
    p.ref_au0_x0 = Some(lambda);
    p
}

/// Orders for the single-mode example: one order with unit weight, or two
/// orders with weights (r₁, 1).
pub fn single_mode_orders(alphas: &[f64], r1: f64) -> Result<OrderSpec> {
    match alphas {
        [a] => OrderSpec::single(*a),
        [a1, a2] => OrderSpec::two_term(*a1, *a2, r1),
        _ => Err(Error::invalid(format!("expected one or two orders, got {}", alphas.len()))),
    }
}

/// Unit square with zero-Neumann condition, observed at the vertex (0, 0).
///
/// The data are finite sums of cos(mπx)cos(nπy), each equal to one at the
/// vertex, so the weights are the raw coefficients. The source case uses a
/// time-constant source (a = 0, c₀ = 1).
pub fn square_vertex_example(case: Case) -> SpectralProblem {
    let pi2 = PI * PI;
    match case {
        Case::InitialData => {
            let modes = vec![
                Mode::new(2.0 * pi2, 1.0),
                Mode::new(5.0 * pi2, 0.25),
                Mode::new(5.0 * pi2, 0.25),
                Mode::new(8.0 * pi2, 0.125),
            ];
            let mut p = SpectralProblem::initial_data(modes).expect("valid modes");
            p.ref_u0_x0 = Some(1.625);
            p.ref_au0_x0 = Some(5.5 * pi2);
            p
        }
        Case::Source => {
            let modes = vec![
                Mode::new(2.0 * pi2, 1.0),
                Mode::new(5.0 * pi2, 0.5),
                Mode::new(5.0 * pi2, 0.5),
                Mode::new(10.0 * pi2, 0.25),
                Mode::new(10.0 * pi2, 0.25),
            ];
            let mut p = SpectralProblem::source(modes, 0.0, 1.0).expect("valid modes");
            p.ref_f_x0 = Some(2.5);
            p
        }
    }
}

/// Kernel value by series; if the series cannot certify its accuracy the
/// contour quadrature is used instead.
fn kernel_or_contour(
    series: impl FnOnce() -> Result<f64>,
    contour: impl FnOnce(&ContourSpec) -> Result<f64>,
    t: f64,
) -> Result<f64> {
    match series() {
        Err(Error::Accuracy { what, estimate }) => {
            log::debug!("{what}: series estimate {estimate:.2e}, using contour quadrature");
            contour(&ContourSpec::for_time(t))
        }
        other => other,
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// g(t) = Σ_n w_n S₁(t; λ_n) for initial data.
pub fn trace_initial(problem: &SpectralProblem, spec: &OrderSpec, t: f64) -> Result<f64> {
    if problem.case != Case::InitialData {
        return Err(Error::invalid("trace_initial needs an initial-data problem"));
    }
    check_time(t)?;
    let mut g = 0.0;
    for m in &problem.modes {
        let (norm, lambda, _) = normalize_spec(spec, m.lambda);
        let s1 = kernel_or_contour(
            || s1_kernel_series(lambda, &norm, t),
            |c| s1_kernel_contour(lambda, &norm, t, c),
            t,
        )?;
        g += m.weight * s1;
    }
    Ok(g)
}

/// g(t) = c₀ Σ_n w_n ∫₀ᵗ s^a/Γ(a+1) S₂(t - s; λ_n) ds for a power-law source.
pub fn trace_source(problem: &SpectralProblem, spec: &OrderSpec, t: f64) -> Result<f64> {
    if problem.case != Case::Source {
        return Err(Error::invalid("trace_source needs a source problem"));
    }
    check_time(t)?;
    let a = problem.source_exponent;
    let mut g = 0.0;
    for m in &problem.modes {
        let (norm, lambda, scale) = normalize_spec(spec, m.lambda);
        let s = kernel_or_contour(
            || s2_kernel_int_series(lambda, &norm, a, t),
            |c| s2_kernel_int_contour(lambda, &norm, a, t, c),
            t,
        )?;
        g += m.weight * scale * s;
    }
    Ok(problem.source_scale * g)
}

/// Trace at `t` for either case.
pub fn trace(problem: &SpectralProblem, spec: &OrderSpec, t: f64) -> Result<f64> {
    match problem.case {
        Case::InitialData => trace_initial(problem, spec, t),
        Case::Source => trace_source(problem, spec, t),
    }
}

/// Laplace transform of the trace at real p > 0.
pub fn laplace_trace(problem: &SpectralProblem, spec: &OrderSpec, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("p must be positive, got {p}")));
    }
    let q: f64 = spec
        .alphas()
        .iter()
        .zip(spec.weights())
        .map(|(a, r)| r * p.powf(*a))
        .sum();
    let resolvent: f64 = problem.modes.iter().map(|m| m.weight / (m.lambda + q)).sum();
    Ok(match problem.case {
        Case::InitialData => resolvent * q / p,
        Case::Source => {
            problem.source_scale * p.powf(-problem.source_exponent - 1.0) * resolvent
        }
    })
}

/// Trace values on a grid of (0, T₀].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    times: Vec<f64>,
    values: Vec<f64>,
    #[serde(rename = "T0")]
    t0: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    g: f64,
}

impl TraceSample {
    pub fn new(times: Vec<f64>, values: Vec<f64>, t0: f64) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid(format!(
                "trace needs equally many times and values (got {} and {})",
                times.len(),
                values.len()
            )));
        }
        if !(t0 > 0.0) {
            return Err(Error::invalid(format!("T0 must be positive, got {t0}")));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || !(times[0] > 0.0) {
            return Err(Error::invalid("trace times must be positive and strictly increasing"));
        }
        if times[times.len() - 1] > t0 * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::invalid("trace times must not exceed T0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trace values".into()));
        }
        Ok(Self { times, values, t0 })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same grid with every value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            t0: self.t0,
        }
    }

    /// Writes `t,g` rows with shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (t, g) in self.times.iter().zip(&self.values) {
            wr.serialize(CsvRow { t: *t, g: *g })?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a `t,g` file; T₀ is taken as the last time.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let (mut times, mut values) = (Vec::new(), Vec::new());
        for row in rd.deserialize() {
            let row: CsvRow = row?;
            times.push(row.t);
            values.push(row.g);
        }
        let t0 = times.last().copied().unwrap_or(0.0);
        Self::new(times, values, t0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Samples the trace at t_k = k T₀/n, k = 1..n.
pub fn sample_trace(problem: &SpectralProblem, spec: &OrderSpec, t0: f64, n: usize) -> Result<TraceSample> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least two samples, got {n}")));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::invalid(format!("T0 must be positive, got {t0}")));
    }
    let times: Vec<f64> = (1..=n).map(|k| k as f64 * t0 / n as f64).collect();
    let values = times
        .iter()
        .map(|&t| trace(problem, spec, t))
        .collect::<Result<Vec<_>>>()?;
    TraceSample::new(times, values, t0)
}
