//! Batch recovery over the rows of a table experiment.

use std::fs;
use std::path::PathBuf;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{settings, ExperimentConfig, Setting};
use crate::fit::{recover, FitConfig, FitResult};
use crate::forward::sample_trace;
use crate::models::ModelKind;
use crate::{Error, Result};

/// One (setting, T₀, kind) recovery.
#[derive(Debug, Clone)]
struct Job {
    setting: Setting,
    t0: f64,
    kind: ModelKind,
}

/// A results-table row. Missing estimates are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub subtable: String,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub alpha_true1: f64,
    pub alpha_true2: Option<f64>,
    pub kind: ModelKind,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub amplitude: Option<f64>,
    pub r1: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// `ok`, or the reason the row has no trustworthy estimate.
    pub status: String,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    subtable: &'a str,
    #[serde(rename = "T0")]
    t0: f64,
    alpha_true: &'a [f64],
    kind: ModelKind,
    status: &'a str,
    note: Option<&'a str>,
    result: Option<serde_json::Value>,
}

/// Rows plus the files written.
#[derive(Debug, Clone)]
pub struct FitRun {
    pub rows: Vec<FitRow>,
    pub csv: PathBuf,
    pub json: PathBuf,
}

impl FitRun {
    /// Rows that produced no estimate at all.
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status.starts_with("error")).count()
    }
}

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for s in settings(cfg) {
        for t0 in &s.t0 {
            for kind in &cfg.kinds {
                out.push(Job {
                    setting: s.clone(),
                    t0: *t0,
                    kind: *kind,
                });
            }
        }
    }
    out
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<FitResult> {
    let s = &job.setting;
    let problem = s.example.problem();
    let sample = sample_trace(&problem, &s.orders()?, job.t0, cfg.n_samples)?;
    let mut fc = FitConfig::from_alpha_init(job.kind, problem.case(), &s.alpha_init, problem.source_exponent())?;
    cfg.fit.apply(&mut fc);
    let mut res = recover(&sample, &fc)?;
    res.assumptions = s.assumptions.clone();
    Ok(res)
}

fn row(job: &Job, res: &Result<FitResult>) -> FitRow {
    let s = &job.setting;
    let mut row = FitRow {
        subtable: s.subtable.clone(),
        t0: job.t0,
        alpha_true1: s.alphas[0],
        alpha_true2: s.alphas.get(1).copied(),
        kind: job.kind,
        alpha1: None,
        alpha2: None,
        amplitude: None,
        r1: None,
        objective: None,
        iterations: None,
        converged: None,
        status: String::new(),
    };
    match res {
        Ok(r) => {
            if let Some(e) = &r.estimates {
                row.alpha1 = e.alpha.first().copied();
                row.alpha2 = e.alpha.get(1).copied();
                row.amplitude = Some(e.amplitude);
                row.r1 = (e.r.len() == 2).then(|| e.r[0]);
            }
            row.objective = Some(r.objective);
            row.iterations = Some(r.iterations);
            row.converged = Some(r.converged);
            row.status = if r.converged {
                "ok".into()
            } else {
                r.note.clone().unwrap_or_else(|| "not converged".into())
            };
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Runs every row of a table experiment on `cfg.jobs` threads and writes
/// `<experiment>_fit.csv` and `<experiment>_fit.json` under `cfg.out`.
///
/// Row failures are recorded in the status column and do not stop the run.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<FitRun> {
    cfg.validate()?;
    if cfg.experiment.is_figure() {
        return Err(Error::invalid(format!(
            "{} has no recovery step; use simulate",
            cfg.experiment
        )));
    }
    let jobs = jobs(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<FitResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let r = run_job(cfg, j);
                info!("{} ({}) T0={} {}: done", cfg.experiment, j.setting.subtable, j.t0, j.kind);
                r
            })
            .collect()
    });

    let rows: Vec<FitRow> = jobs.iter().zip(&results).map(|(j, r)| row(j, r)).collect();
    fs::create_dir_all(&cfg.out)?;
    let csv_path = cfg.out.join(format!("{}_fit.csv", cfg.experiment));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let json_rows: Vec<JsonRow> = jobs
        .iter()
        .zip(&results)
        .zip(&rows)
        .map(|((j, res), r)| JsonRow {
            subtable: &j.setting.subtable,
            t0: j.t0,
            alpha_true: &j.setting.alphas,
            kind: j.kind,
            status: &r.status,
            note: res.as_ref().ok().and_then(|f| f.note.as_deref()),
            result: res.as_ref().ok().map(FitResult::to_json),
        })
        .collect();
    let json_path = cfg.out.join(format!("{}_fit.json", cfg.experiment));
    let doc = serde_json::json!({
        "experiment": cfg.experiment,
        "n_samples": cfg.n_samples,
        "rows": json_rows,
    });
    fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(FitRun {
        rows,
        csv: csv_path,
        json: json_path,
    })
}
