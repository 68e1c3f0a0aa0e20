//! Experiment configuration and the built-in table and figure presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fit::FitConfig;
use crate::forward::{single_mode_example, single_mode_orders, square_vertex_example, SpectralProblem};
use crate::models::ModelKind;
use crate::specfun::OrderSpec;
use crate::{Case, Error, Result};

/// Weight r₁ used where a two-order experiment does not state one.
pub const ASSUMED_R1: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Table1a,
    Table1b,
    Table2,
    Table3,
    Fig1,
    Fig2,
    Custom,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1a => "table1a",
            Experiment::Table1b => "table1b",
            Experiment::Table2 => "table2",
            Experiment::Table3 => "table3",
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Custom => "custom",
        }
    }

    pub fn is_figure(self) -> bool {
        matches!(self, Experiment::Fig1 | Experiment::Fig2)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::invalid(format!("unknown experiment '{s}'")))
    }
}

/// Built-in forward problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleId {
    /// One eigenfunction, λ = π² + 1, as initial datum.
    SingleMode,
    /// Unit square observed at a vertex, four-mode initial datum.
    SquareInitial,
    /// Unit square observed at a vertex, constant five-mode source.
    SquareSource,
}

impl ExampleId {
    pub fn problem(self) -> SpectralProblem {
        match self {
            ExampleId::SingleMode => single_mode_example(),
            ExampleId::SquareInitial => square_vertex_example(Case::InitialData),
            ExampleId::SquareSource => square_vertex_example(Case::Source),
        }
    }
}

/// True orders and the optimizer's starting orders for one forward problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSelector {
    pub example: ExampleId,
    /// True orders, ascending.
    pub alphas: Vec<f64>,
    /// Weight of the lower order when there are two.
    #[serde(default)]
    pub r1: Option<f64>,
    /// Starting orders for the fit; defaults to the true orders.
    #[serde(default)]
    pub alpha_init: Option<Vec<f64>>,
}

impl ProblemSelector {
    pub fn orders(&self) -> Result<OrderSpec> {
        single_mode_orders(&self.alphas, self.r1.unwrap_or(ASSUMED_R1))
    }
}

/// Optional overrides applied to every fit of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOverrides {
    pub max_iter: Option<usize>,
    pub memory: Option<usize>,
    pub grad_tol: Option<f64>,
    pub min_gap: Option<f64>,
    pub multi_start: Option<usize>,
    pub beta_bounds: Option<Vec<(f64, f64)>>,
}

impl FitOverrides {
    pub fn apply(&self, cfg: &mut FitConfig) {
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.memory {
            cfg.memory = v;
        }
        if let Some(v) = self.grad_tol {
            cfg.grad_tol = v;
        }
        if let Some(v) = self.min_gap {
            cfg.min_gap = v;
        }
        if let Some(v) = self.multi_start {
            cfg.multi_start = Some(v);
        }
        if let Some(v) = &self.beta_bounds {
            cfg.beta_bounds = v.clone();
        }
    }
}

fn default_kinds() -> Vec<ModelKind> {
    vec![ModelKind::Polynomial, ModelKind::Rational]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_n_samples() -> usize {
    100
}

fn default_jobs() -> usize {
    1
}

fn default_t_max() -> f64 {
    1.0
}

/// A complete run description, read from JSON or assembled from flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Required for `custom`; ignored by the presets.
    #[serde(default)]
    pub problem: Option<ProblemSelector>,
    /// Replaces the preset's T₀ list.
    #[serde(default, rename = "T0")]
    pub t0: Option<Vec<f64>>,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<ModelKind>,
    #[serde(default)]
    pub fit: FitOverrides,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Right end of the figure time axis.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            problem: None,
            t0: None,
            kinds: default_kinds(),
            fit: FitOverrides::default(),
            out: default_out(),
            n_samples: default_n_samples(),
            jobs: default_jobs(),
            t_max: default_t_max(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t0) = &self.t0 {
            if t0.is_empty() {
                return Err(Error::invalid("the T0 list is empty"));
            }
            if let Some(bad) = t0.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::invalid(format!("T0 values must be positive, got {bad}")));
            }
        }
        if self.kinds.is_empty() {
            return Err(Error::invalid("no model kinds selected"));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("at least two samples per trace are needed"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be at least 1"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::invalid(format!("t_max must be positive, got {}", self.t_max)));
        }
        match (&self.problem, self.experiment) {
            (None, Experiment::Custom) => Err(Error::invalid("a custom experiment needs a problem selector")),
            (Some(p), Experiment::Custom) => {
                p.orders()?;
                if p.alpha_init.as_ref().is_some_and(|a| a.len() != p.alphas.len()) {
                    return Err(Error::invalid("alpha_init must have one entry per order"));
                }
                if self.t0.is_none() {
                    return Err(Error::invalid("a custom experiment needs a T0 list"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// One trace setting inside an experiment: a sub-table and its true orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub subtable: String,
    pub example: ExampleId,
    pub alphas: Vec<f64>,
    pub r1: f64,
    pub alpha_init: Vec<f64>,
    pub t0: Vec<f64>,
    pub assumptions: Vec<String>,
}

impl Setting {
    pub fn orders(&self) -> Result<OrderSpec> {
        single_mode_orders(&self.alphas, self.r1)
    }
}

fn decades(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| format!("1e{e}").parse().expect("literal")).collect()
}

fn r1_assumption(subtable: &str) -> Vec<String> {
    vec![format!("true r1 = {ASSUMED_R1} assumed for sub-table ({subtable}); the weight is not stated")]
}

/// Trace settings of a table experiment, with T₀ overrides applied.
pub fn settings(cfg: &ExperimentConfig) -> Vec<Setting> {
    let mk = |subtable: &str, example, alphas: &[f64], alpha_init: &[f64], t0: Vec<f64>, assumptions| Setting {
        subtable: subtable.to_string(),
        example,
        alphas: alphas.to_vec(),
        r1: ASSUMED_R1,
        alpha_init: alpha_init.to_vec(),
        t0,
        assumptions,
    };
    let mut out = match cfg.experiment {
        Experiment::Table1a => vec![mk("a", ExampleId::SingleMode, &[0.7], &[0.5], decades(-7, -1), vec![])],
        Experiment::Table1b => [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
            .iter()
            .map(|a| mk("b", ExampleId::SingleMode, &[*a], &[0.5], vec![1e-6], vec![]))
            .collect(),
        Experiment::Table2 => vec![
            mk("a", ExampleId::SingleMode, &[0.6, 0.9], &[0.4, 0.8], decades(-7, -2), r1_assumption("a")),
            mk("b", ExampleId::SingleMode, &[0.5, 0.7], &[0.2, 0.6], decades(-7, -2), r1_assumption("b")),
        ],
        Experiment::Table3 => vec![
            mk("a", ExampleId::SquareInitial, &[0.5, 0.8], &[0.3, 0.7], decades(-8, -4), r1_assumption("a")),
            mk("b", ExampleId::SquareSource, &[0.5, 0.7], &[0.3, 0.6], decades(-8, -4), r1_assumption("b")),
        ],
        Experiment::Fig1 => [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|a| mk("fig1", ExampleId::SingleMode, &[*a], &[*a], vec![cfg.t_max], vec![]))
            .collect(),
        Experiment::Fig2 => [0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|a| mk("fig2", ExampleId::SingleMode, &[0.2, *a], &[0.2, *a], vec![cfg.t_max], vec![]))
            .collect(),
        Experiment::Custom => {
            let p = cfg.problem.clone().expect("validated custom config");
            let mut assumptions = Vec::new();
            if p.alphas.len() == 2 && p.r1.is_none() {
                assumptions = r1_assumption("custom");
            }
            vec![Setting {
                subtable: "custom".into(),
                example: p.example,
                r1: p.r1.unwrap_or(ASSUMED_R1),
                alpha_init: p.alpha_init.clone().unwrap_or_else(|| p.alphas.clone()),
                alphas: p.alphas,
                t0: Vec::new(),
                assumptions,
            }]
        }
    };
    if let Some(t0) = &cfg.t0 {
        if !cfg.experiment.is_figure() {
            out.iter_mut().for_each(|s| s.t0 = t0.clone());
        }
    }
    out
}
