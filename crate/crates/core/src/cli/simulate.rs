//! Trace generation: sampled traces for the tables and model curves for the figures.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{settings, ExperimentConfig, Experiment, Setting};
use crate::forward::{sample_trace, trace};
use crate::models::{from_physical, ModelKind, ModelParams};
use crate::specfun::{gamma, ml2, KERNEL_KMAX, KERNEL_RTOL};
use crate::{Case, Error, Result};

/// Points on the figure time axis.
pub const FIGURE_POINTS: usize = 500;

/// The figure axis starts this many decades below `t_max`.
const FIGURE_DECADES: i32 = 6;

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    g: f64,
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    g: Option<f64>,
    f_p: f64,
    f_r: f64,
}

#[derive(Serialize)]
struct Truncation {
    kernel_shell_cap: usize,
    kernel_rel_tol: f64,
    fallback: &'static str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: Experiment,
    subtable: &'a str,
    example: super::config::ExampleId,
    case: Case,
    alphas: &'a [f64],
    weights: Vec<f64>,
    #[serde(rename = "T0")]
    t0: f64,
    n: usize,
    modes: usize,
    truncation: Truncation,
    assumptions: &'a [String],
    errors: Vec<String>,
}

/// Files written and the settings that failed.
#[derive(Debug, Clone, Default)]
pub struct SimulateRun {
    pub files: Vec<PathBuf>,
    pub errors: Vec<String>,
}

fn truncation() -> Truncation {
    Truncation {
        kernel_shell_cap: KERNEL_KMAX,
        kernel_rel_tol: KERNEL_RTOL,
        fallback: "contour quadrature",
    }
}

fn alpha_tag(alphas: &[f64]) -> String {
    alphas.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("-")
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Log-spaced grid of `n` points ending at `t_max`.
pub fn figure_grid(t_max: f64, n: usize) -> Vec<f64> {
    let lo = t_max.log10() - FIGURE_DECADES as f64;
    (0..n)
        .map(|k| {
            if k + 1 == n {
                t_max
            } else {
                10f64.powf(lo + FIGURE_DECADES as f64 * k as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// f_p and f_r for a single order, valid up to α = 1.
fn single_order_models(alpha: f64, lambda: f64) -> Result<(ModelParams, ModelParams)> {
    let k = lambda / gamma(alpha + 1.0)?;
    Ok((
        ModelParams::new(ModelKind::Polynomial, Case::InitialData, vec![1.0, -k], vec![alpha])?,
        ModelParams::new(ModelKind::Rational, Case::InitialData, vec![1.0, k], vec![alpha])?,
    ))
}

fn simulate_curve(cfg: &ExperimentConfig, s: &Setting) -> Result<(Vec<CurveRow>, Vec<String>)> {
    let problem = s.example.problem();
    let lambda = problem.modes()[0].lambda;
    let (fp, fr, g): (ModelParams, ModelParams, Box<dyn Fn(f64) -> Result<f64> + Sync>) = if s.alphas.len() == 1 {
        let a = s.alphas[0];
        let (fp, fr) = single_order_models(a, lambda)?;
        (fp, fr, Box::new(move |t: f64| ml2(a, 1.0, -lambda * t.powf(a))))
    } else {
        let spec = s.orders()?;
        let phys = problem.physical(&spec)?;
        let fp = from_physical(&phys, ModelKind::Polynomial, Case::InitialData, 0.0)?;
        let fr = from_physical(&phys, ModelKind::Rational, Case::InitialData, 0.0)?;
        (fp, fr, Box::new(move |t: f64| trace(&problem, &spec, t)))
    };
    let grid = figure_grid(cfg.t_max, FIGURE_POINTS);
    let mut errors = Vec::new();
    let mut rows = Vec::with_capacity(grid.len());
    for t in grid {
        let gv = match g(t) {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(format!("t={t}: {e}"));
                None
            }
        };
        rows.push(CurveRow {
            t,
            g: gv,
            f_p: fp.eval(t)?,
            f_r: fr.eval(t)?,
        });
    }
    Ok((rows, errors))
}

fn sidecar<'a>(cfg: &ExperimentConfig, s: &'a Setting, t0: f64, n: usize, errors: Vec<String>) -> Sidecar<'a> {
    let problem = s.example.problem();
    let weights = if s.alphas.len() == 2 { vec![s.r1, 1.0] } else { vec![1.0] };
    Sidecar {
        experiment: cfg.experiment,
        subtable: &s.subtable,
        example: s.example,
        case: problem.case(),
        alphas: &s.alphas,
        weights,
        t0,
        n,
        modes: problem.modes().len(),
        truncation: truncation(),
        assumptions: &s.assumptions,
        errors,
    }
}

/// Writes a `t,g` CSV with a JSON sidecar for every (setting, T₀) of a
/// table or custom experiment, or `t,g,f_p,f_r` curves for the figures.
///
/// Evaluation errors are collected per file; I/O errors abort the run.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateRun> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let mut run = SimulateRun::default();
    let all = settings(cfg);

    if cfg.experiment.is_figure() {
        let curves: Vec<_> = pool.install(|| all.par_iter().map(|s| simulate_curve(cfg, s)).collect());
        for (s, res) in all.iter().zip(curves) {
            let stem = format!("{}_alpha{}", cfg.experiment, alpha_tag(&s.alphas));
            match res {
                Ok((rows, errors)) => {
                    let csv = cfg.out.join(format!("{stem}.csv"));
                    write_rows(&csv, &rows)?;
                    let json = cfg.out.join(format!("{stem}.json"));
                    run.errors.extend(errors.iter().map(|e| format!("{stem}: {e}")));
                    write_json(&json, &sidecar(cfg, s, cfg.t_max, rows.len(), errors))?;
                    run.files.extend([csv, json]);
                }
                Err(e) => run.errors.push(format!("{stem}: {e}")),
            }
        }
        return Ok(run);
    }

    let items: Vec<(&Setting, f64)> = all.iter().flat_map(|s| s.t0.iter().map(move |t| (s, *t))).collect();
    let traces: Vec<_> = pool.install(|| {
        items
            .par_iter()
            .map(|(s, t0)| sample_trace(&s.example.problem(), &s.orders()?, *t0, cfg.n_samples))
            .collect()
    });
    for ((s, t0), res) in items.iter().zip(traces) {
        let stem = format!("{}_{}_alpha{}_T0_{:e}", cfg.experiment, s.subtable, alpha_tag(&s.alphas), t0);
        match res {
            Ok(sample) => {
                let rows: Vec<TraceRow> = sample
                    .times()
                    .iter()
                    .zip(sample.values())
                    .map(|(t, g)| TraceRow { t: *t, g: *g })
                    .collect();
                let csv = cfg.out.join(format!("{stem}.csv"));
                write_rows(&csv, &rows)?;
                let json = cfg.out.join(format!("{stem}.json"));
                write_json(&json, &sidecar(cfg, s, *t0, rows.len(), Vec::new()))?;
                run.files.extend([csv, json]);
            }
            Err(e) => run.errors.push(format!("{stem}: {e}")),
        }
    }
    Ok(run)
}
