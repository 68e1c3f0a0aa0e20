//! Laplace inversion along the Hankel contour γ(δ, θ).
//!
//! The contour runs in from ∞·e^{-iθ} along a ray, around the arc |p| = δ,
//! and back out along the ray at angle θ. For integrands with F(p̄) = F(p)‾
//! the two rays combine into one imaginary part and the arc into one real
//! part, so the result is real by construction. Both pieces use 16-point
//! Gauss–Legendre panels; the rays are split into geometrically graded
//! panels between δ and r_max.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::kernels::OrderSpec;
use crate::{Error, Result};

const GL_ORDER: usize = 16;

/// Nodes and weights of the Gauss–Legendre rule on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Integrates `f` over [a, b] with one Gauss–Legendre panel.
pub(crate) fn gl_panel(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for &(x, w) in gauss_legendre() {
        let v = w * f(mid + half * x);
        sum += v;
        abs += v.abs();
    }
    (half * sum, half.abs() * abs)
}

/// Quadrature parameters of the Hankel contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub theta: f64,
    pub delta: f64,
    pub n_radial: usize,
    pub r_max: f64,
}

impl ContourSpec {
    /// Contour tuned to evaluation time `t`: θ = 5π/6, δ = 1/t, and r_max
    /// where e^{t r cos θ} drops below 1e-18.
    pub fn for_time(t: f64) -> Self {
        let theta = 5.0 * PI / 6.0;
        Self {
            theta,
            delta: 1.0 / t,
            n_radial: 400,
            r_max: (1e18f64).ln() / (t * theta.cos().abs()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.5 * PI && self.theta < PI) {
            return Err(Error::domain(format!("contour angle must lie in (π/2, π), got {}", self.theta)));
        }
        if !(self.delta > 0.0) || !(self.r_max > self.delta) {
            return Err(Error::domain(format!(
                "contour needs 0 < delta < r_max, got delta={} r_max={}",
                self.delta, self.r_max
            )));
        }
        if self.n_radial < GL_ORDER {
            return Err(Error::domain(format!("n_radial must be at least {GL_ORDER}, got {}", self.n_radial)));
        }
        Ok(())
    }
}

/// Outcome of a contour quadrature.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HankelQuadrature {
    pub value: f64,
    /// Magnitude of the outermost radial panel.
    pub tail: f64,
    /// Tail plus a rounding allowance proportional to ∫|F|.
    pub error: f64,
}

/// (1/2πi) ∫_γ F(p) dp for a conjugate-symmetric F.
pub(crate) fn hankel_integral(
    f: &dyn Fn(Complex64) -> Complex64,
    theta: f64,
    delta: f64,
    r_max: f64,
    n_radial: usize,
    n_arc: usize,
) -> HankelQuadrature {
    let arc_panels = n_arc.div_ceil(GL_ORDER).max(1);
    let mut arc = 0.0;
    let mut abs = 0.0;
    for j in 0..arc_panels {
        let a = theta * j as f64 / arc_panels as f64;
        let b = theta * (j + 1) as f64 / arc_panels as f64;
        let (s, m) = gl_panel(a, b, &mut |phi| {
            let p = Complex64::from_polar(delta, phi);
            (f(p) * p).re
        });
        arc += s;
        abs += m;
    }

    let ray_panels = n_radial.div_ceil(GL_ORDER).max(1);
    let ratio = (r_max / delta).powf(1.0 / ray_panels as f64);
    let dir = Complex64::from_polar(1.0, theta);
    let mut ray = 0.0;
    let mut tail = 0.0;
    let mut a = delta;
    for j in 0..ray_panels {
        let b = if j + 1 == ray_panels { r_max } else { a * ratio };
        let (s, m) = gl_panel(a, b, &mut |r| (f(dir * r) * dir).im);
        ray += s;
        abs += m;
        tail = s.abs();
        a = b;
    }

    let value = (arc + ray) / PI;
    let tail = tail / PI;
    HankelQuadrature {
        value,
        tail,
        error: tail + 64.0 * f64::EPSILON * abs / PI,
    }
}

fn arc_nodes(t: f64, delta: f64) -> usize {
    GL_ORDER * (4 + (t * delta).ceil().min(64.0) as usize)
}

/// Q(p) = Σ r_k p^{α_k} on the principal branch.
fn symbol(spec: &OrderSpec, p: Complex64) -> Complex64 {
    spec.alphas()
        .iter()
        .zip(spec.weights())
        .map(|(a, r)| p.powf(*a) * *r)
        .sum()
}

fn finish(q: HankelQuadrature, what: &str) -> Result<f64> {
    if !q.value.is_finite() {
        return Err(Error::NonFinite(format!("{what} contour quadrature")));
    }
    if q.tail > 1e-8 * q.value.abs() {
        return Err(Error::Accuracy {
            what: format!("{what} contour truncation"),
            estimate: q.tail / q.value.abs(),
        });
    }
    Ok(q.value)
}

fn contour_kernel(
    contour: &ContourSpec,
    t: f64,
    what: &str,
    f: &dyn Fn(Complex64) -> Complex64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    contour.validate()?;
    let q = hankel_integral(
        f,
        contour.theta,
        contour.delta,
        contour.r_max,
        contour.n_radial,
        arc_nodes(t, contour.delta),
    );
    finish(q, what)
}

/// S₁(t) = (1/2πi)∫ e^{tp} (Σ r_k p^{α_k-1}) / (λ + Σ r_k p^{α_k}) dp.
pub fn s1_kernel_contour(lambda: f64, spec: &OrderSpec, t: f64, contour: &ContourSpec) -> Result<f64> {
    let f = |p: Complex64| {
        let q = symbol(spec, p);
        (p * t).exp() * q / (p * (q + lambda))
    };
    contour_kernel(contour, t, "S1", &f)
}

/// S₂(t) = (1/2πi)∫ e^{tp} / (λ + Σ r_k p^{α_k}) dp.
pub fn s2_kernel_contour(lambda: f64, spec: &OrderSpec, t: f64, contour: &ContourSpec) -> Result<f64> {
    let f = |p: Complex64| (p * t).exp() / (symbol(spec, p) + lambda);
    contour_kernel(contour, t, "S2", &f)
}

/// ∫₀ᵗ s^a/Γ(a+1) S₂(t-s) ds as the inverse transform of
/// p^{-a-1} / (λ + Σ r_k p^{α_k}).
pub fn s2_kernel_int_contour(
    lambda: f64,
    spec: &OrderSpec,
    a: f64,
    t: f64,
    contour: &ContourSpec,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("source exponent must lie in [0, 1], got {a}")));
    }
    let f = |p: Complex64| (p * t).exp() * p.powf(-a - 1.0) / (symbol(spec, p) + lambda);
    contour_kernel(contour, t, "integrated S2", &f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let w: f64 = gauss_legendre().iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let m30: f64 = gauss_legendre().iter().map(|(x, w)| w * x.powi(30)).sum();
        assert!((m30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn inverts_simple_transforms() {
        // 1/p → 1 and 1/(p+1) → e^{-t}
        for &t in &[1e-3, 0.5, 7.0] {
            let c = ContourSpec::for_time(t);
            let one = hankel_integral(&|p: Complex64| (p * t).exp() / p, c.theta, c.delta, c.r_max, 400, 64);
            assert!((one.value - 1.0).abs() < 1e-12, "t={t}: {}", one.value);
            let e = hankel_integral(
                &|p: Complex64| (p * t).exp() / (p + 1.0),
                c.theta,
                c.delta,
                c.r_max,
                400,
                64,
            );
            assert!((e.value - (-t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn contour_validation() {
        let mut c = ContourSpec::for_time(1.0);
        assert!(c.validate().is_ok());
        c.theta = 0.4 * PI;
        assert!(c.validate().is_err());
        let mut c = ContourSpec::for_time(1.0);
        c.n_radial = 8;
        assert!(c.validate().is_err());
        let mut c = ContourSpec::for_time(1.0);
        c.r_max = 0.5 * c.delta;
        assert!(c.validate().is_err());
    }
}
