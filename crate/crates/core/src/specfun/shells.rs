//! Shell-by-shell summation of multinomial power series
//!
//! ```text
//!   Σ_k Σ_{m_1+…+m_n=k} (k; m_1..m_n) Π x_j^{m_j} · G(Σ e_j m_j)
//! ```
//!
//! Both the convergent multinomial Mittag-Leffler series and the large-time
//! inverse-power expansions of the solution kernels have this shape, so they
//! share one enumerator. Terms are formed in log space; each shell `k` walks
//! the compositions of `k` lexicographically.
//!
//! Exponents, logarithms and partial sums are carried in double-double so
//! that the alternating cancellation of the convergent series costs digits
//! of the extended format rather than of the final f64 result.

use std::borrow::Cow;
use std::ops::ControlFlow;
use std::sync::OnceLock;

use super::dd::{ln_gamma_dd, Dd, DD_EPS};

/// Contribution of one complete shell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shell {
    pub k: usize,
    /// Signed sum of the shell's terms.
    pub sum: Dd,
    /// Sum of absolute values of the shell's terms.
    pub abs: f64,
    /// Estimated rounding error committed while forming the shell's terms.
    pub rounding: f64,
}

/// Reciprocal-weight callback: returns `(ln|G(s)|, sign G(s))`, or `None`
/// where G vanishes.
pub(crate) type Weight<'a> = &'a dyn Fn(Dd) -> Option<(Dd, f64)>;

struct Walker<'a> {
    ln_abs_x: Vec<f64>,
    sign_x: Vec<f64>,
    zero_x: Vec<bool>,
    exps: &'a [f64],
    weight: Weight<'a>,
    ln_fact: &'a [Dd],
}

struct Partial {
    sum: Dd,
    abs: f64,
    rounding: f64,
}

impl Walker<'_> {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        j: usize,
        remaining: usize,
        ln_coef: Dd,
        ln_pow: Dd,
        sign: f64,
        exponent: Dd,
        ln_k_fact: Dd,
        out: &mut Partial,
    ) {
        let last = j + 1 == self.exps.len();
        let range_lo = if last { remaining } else { 0 };
        for m in range_lo..=remaining {
            if m > 0 && self.zero_x[j] {
                break;
            }
            let mf = m as f64;
            let lc = ln_coef - self.ln_fact[m];
            let lp = if m > 0 {
                ln_pow + Dd::prod(mf, self.ln_abs_x[j])
            } else {
                ln_pow
            };
            let sg = if m % 2 == 1 { sign * self.sign_x[j] } else { sign };
            let ex = exponent + Dd::prod(self.exps[j], mf);
            if last {
                if let Some((ln_g, sign_g)) = (self.weight)(ex) {
                    let ln_term = ln_k_fact + lc + lp + ln_g;
                    let mag = ln_term.exp();
                    let term = if sg * sign_g < 0.0 { -mag } else { mag };
                    out.sum = out.sum + term;
                    let mag = mag.to_f64();
                    out.abs += mag;
                    let spread = 4.0 + ln_k_fact.hi.abs() + lc.hi.abs() + lp.hi.abs() + ln_g.hi.abs();
                    out.rounding += mag * DD_EPS * spread;
                }
            } else {
                self.walk(j + 1, remaining - m, lc, lp, sg, ex, ln_k_fact, out);
            }
        }
    }
}

/// Length of the shared ln k! table.
const LN_FACT_CACHED: usize = 1024;

/// ln k! for k = 0..=k_max, from a table built once.
fn ln_factorials(k_max: usize) -> Cow<'static, [Dd]> {
    static TABLE: OnceLock<Vec<Dd>> = OnceLock::new();
    let build = |n: usize| (0..n).map(|k| ln_gamma_dd(Dd::from_f64(k as f64 + 1.0))).collect::<Vec<Dd>>();
    if k_max < LN_FACT_CACHED {
        Cow::Borrowed(&TABLE.get_or_init(|| build(LN_FACT_CACHED))[..=k_max])
    } else {
        Cow::Owned(build(k_max + 1))
    }
}

/// Walks shells `k = k_start..=k_max`, handing each completed shell to
/// `on_shell`, which decides whether to continue.
pub(crate) fn walk_shells(
    xs: &[f64],
    exps: &[f64],
    weight: Weight<'_>,
    k_start: usize,
    k_max: usize,
    mut on_shell: impl FnMut(Shell) -> ControlFlow<()>,
) {
    debug_assert_eq!(xs.len(), exps.len());
    debug_assert!(!xs.is_empty());
    let ln_fact = ln_factorials(k_max);
    let walker = Walker {
        ln_abs_x: xs.iter().map(|x| x.abs().ln()).collect(),
        sign_x: xs.iter().map(|x| if *x < 0.0 { -1.0 } else { 1.0 }).collect(),
        zero_x: xs.iter().map(|x| *x == 0.0).collect(),
        exps,
        weight,
        ln_fact: &ln_fact,
    };
    for k in k_start..=k_max {
        let mut partial = Partial {
            sum: Dd::default(),
            abs: 0.0,
            rounding: 0.0,
        };
        walker.walk(0, k, Dd::default(), Dd::default(), 1.0, Dd::default(), ln_fact[k], &mut partial);
        let shell = Shell {
            k,
            sum: partial.sum,
            abs: partial.abs,
            rounding: partial.rounding,
        };
        if on_shell(shell).is_break() {
            break;
        }
    }
}

/// Result of summing a convergent series shell by shell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SeriesSum {
    pub value: f64,
    /// Rounding plus truncation error estimate (absolute).
    pub error: f64,
    pub converged: bool,
}

/// Sums a convergent series until a whole shell falls below
/// `1e-16 · |partial sum|` or `k_max` is reached.
pub(crate) fn sum_convergent(xs: &[f64], exps: &[f64], weight: Weight<'_>, k_max: usize) -> SeriesSum {
    let mut total = Dd::default();
    let mut rounding = 0.0;
    let mut last_abs = f64::INFINITY;
    let mut converged = false;
    walk_shells(xs, exps, weight, 0, k_max, |shell| {
        total = total + shell.sum;
        rounding += shell.rounding;
        last_abs = shell.abs;
        let partial = total.to_f64().abs();
        if shell.k > 0 && shell.abs <= 1e-16 * partial {
            converged = true;
            return ControlFlow::Break(());
        }
        if shell.k > 0 && shell.abs == 0.0 {
            converged = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    let truncation = if converged { 0.0 } else { last_abs };
    let value = total.to_f64();
    SeriesSum {
        value,
        error: rounding + truncation + f64::EPSILON * value.abs(),
        converged,
    }
}

/// Optimally truncated sum of an asymptotic series: shells are accumulated
/// while they keep shrinking; the estimate is the first omitted nonzero shell.
pub(crate) fn sum_asymptotic(
    xs: &[f64],
    exps: &[f64],
    weight: Weight<'_>,
    k_start: usize,
    k_max: usize,
) -> SeriesSum {
    let mut partials: Vec<(f64, f64, f64)> = Vec::new(); // (partial sum, shell abs, rounding)
    let mut total = Dd::default();
    let mut rounding = 0.0;
    let mut best = f64::INFINITY;
    let mut rising = 0;
    walk_shells(xs, exps, weight, k_start, k_max, |shell| {
        total = total + shell.sum;
        rounding += shell.rounding;
        partials.push((total.to_f64(), shell.abs, rounding));
        if shell.abs == 0.0 {
            return ControlFlow::Continue(());
        }
        if shell.abs < best {
            best = shell.abs;
            rising = 0;
        } else {
            rising += 1;
        }
        let tiny = shell.abs <= 1e-17 * total.to_f64().abs();
        if rising >= 3 || tiny {
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });

    // position of the smallest nonzero shell
    let mut idx_min = None;
    let mut min_abs = f64::INFINITY;
    for (i, (_, a, _)) in partials.iter().enumerate() {
        if *a > 0.0 && *a < min_abs {
            min_abs = *a;
            idx_min = Some(i);
        }
    }
    let Some(i) = idx_min else {
        // every shell vanished
        let value = partials.last().map(|p| p.0).unwrap_or(0.0);
        return SeriesSum {
            value,
            error: 0.0,
            converged: true,
        };
    };
    let (value, _, round) = partials[i];
    let next = partials[i + 1..].iter().map(|p| p.1).find(|a| *a > 0.0);
    let converged = next.is_some() || min_abs <= 1e-17 * value.abs();
    let error = next.unwrap_or(min_abs).max(min_abs);
    SeriesSum {
        value,
        error: error + round + f64::EPSILON * value.abs(),
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::dd::ln_gamma_dd;

    fn rgamma_shift(shift: f64) -> impl Fn(Dd) -> Option<(Dd, f64)> {
        move |s| Some((-ln_gamma_dd(s + Dd::from_f64(shift)), 1.0))
    }

    #[test]
    fn exponential_series() {
        // Σ x^k / Γ(1 + k) = e^x
        let w = rgamma_shift(1.0);
        let s = sum_convergent(&[-2.0], &[1.0], &w, 200);
        assert!(s.converged);
        assert!((s.value - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn binomial_shells_reduce_to_product() {
        // With G ≡ 1/Γ(1 + s) and unit exponents the double series is e^{x+y}.
        let w = rgamma_shift(1.0);
        let s = sum_convergent(&[-0.3, 0.2], &[1.0, 1.0], &w, 200);
        assert!((s.value - (-0.1f64).exp()).abs() < 1e-15);
    }
}
