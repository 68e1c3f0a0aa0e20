//! Projected limited-memory BFGS for box constraints.
//!
//! Variables sitting on a bound with the gradient pointing outward form the
//! active set; the quasi-Newton direction is built by the two-loop recursion
//! on the remaining free variables. Steps follow the projected path
//! P(x + αd) with backtracking until the Armijo condition holds.

use std::collections::VecDeque;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Options {
    pub max_iter: usize,
    pub memory: usize,
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iter: 200,
            memory: 10,
            grad_tol: 1e-10,
            armijo: 1e-4,
            max_halvings: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    /// Projected gradient below tolerance.
    Converged,
    MaxIter,
    /// No acceptable step even along steepest descent.
    LineSearch,
    /// The per-iteration callback asked to stop.
    Interrupted,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub pg_norm: f64,
    pub stop: Stop,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// ‖P(x - g) - x‖∞.
pub(crate) fn projected_grad_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| ((x[i] - g[i]).clamp(lo[i], hi[i]) - x[i]).abs())
        .fold(0.0, f64::max)
}

fn active(x: f64, g: f64, lo: f64, hi: f64) -> bool {
    (x <= lo && g > 0.0) || (x >= hi && g < 0.0) || lo == hi
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    cap: usize,
}

impl Memory {
    fn new(cap: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(cap),
            cap,
        }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if !(sy > f64::EPSILON * yy) || self.cap == 0 {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    /// H·q restricted to the free variables.
    fn apply(&self, q: &mut [f64], free: &[bool]) {
        let masked = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(free).map(|(x, f)| if *f { *x } else { 0.0 }).collect()
        };
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let s = masked(s);
            let y = masked(y);
            let a = rho * dot(&s, q);
            for i in 0..q.len() {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let yy = dot(y, y);
            if yy > 0.0 {
                let gamma = dot(s, y) / yy;
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let s = masked(s);
            let y = masked(y);
            let b = rho * dot(&y, q);
            for i in 0..q.len() {
                q[i] += (a - b) * s[i];
            }
        }
    }
}

/// Minimizes `fg` over the box [lo, hi] starting from `x0`.
///
/// `fg` returns the value and gradient; non-finite values at trial points
/// are treated as failed steps. `on_accept` sees every accepted iterate
/// with its value and returns `false` to stop early.
pub(crate) fn minimize_box(
    fg: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &Options,
    mut on_accept: impl FnMut(&[f64], f64) -> bool,
) -> Result<Outcome> {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut f, mut g) = fg(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective at the starting point".into()));
    }
    let mut mem = Memory::new(opts.memory);
    let mut iterations = 0;
    let mut pg = projected_grad_norm(&x, &g, lo, hi);

    let stop = loop {
        if pg < opts.grad_tol {
            break Stop::Converged;
        }
        if iterations >= opts.max_iter {
            break Stop::MaxIter;
        }
        let free: Vec<bool> = (0..n).map(|i| !active(x[i], g[i], lo[i], hi[i])).collect();
        let mut d: Vec<f64> = g.iter().zip(&free).map(|(v, f)| if *f { *v } else { 0.0 }).collect();
        mem.apply(&mut d, &free);
        d.iter_mut().zip(&free).for_each(|(v, f)| *v = if *f { -*v } else { 0.0 });
        if !(dot(&d, &g) < 0.0) {
            mem.clear();
            d = g.iter().zip(&free).map(|(v, f)| if *f { -v } else { 0.0 }).collect();
        }

        let mut step = if mem.pairs.is_empty() {
            let dn = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dn > 1.0 {
                1.0 / dn
            } else {
                1.0
            }
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            project(&mut xt, lo, hi);
            let decrease: f64 = (0..n).map(|i| g[i] * (xt[i] - x[i])).sum();
            if decrease < 0.0 {
                let (ft, gt) = fg(&xt);
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + opts.armijo * decrease {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((xn, fnew, gn)) = accepted else {
            if mem.pairs.is_empty() {
                break Stop::LineSearch;
            }
            mem.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        mem.push(s, y);
        x = xn;
        f = fnew;
        g = gn;
        iterations += 1;
        pg = projected_grad_norm(&x, &g, lo, hi);
        if !on_accept(&x, f) {
            break Stop::Interrupted;
        }
    };

    Ok(Outcome {
        x,
        f,
        iterations,
        pg_norm: pg,
        stop,
    })
}
