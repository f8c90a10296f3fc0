//! Run configuration: every experiment knob with its default, loadable from a
//! `key = value` file.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Diagnostic, DiagnosticKind, Error, Result};
use crate::objective::{
    CgOptions, SimilarityOptions, Variant, DEFAULT_EXACT_SIMILARITY_MAX_EDGES,
    DEFAULT_HIGHWAY_CUTOFF_KMH, DEFAULT_SIMILARITY_THRESHOLD,
};
use crate::pagerank;

/// Default regularization weights, chosen by held-out error on synthetic
/// grids with 80-160 m roads. Trip costs enter the objective squared and the
/// design matrix holds meters, so good values grow with road length; rerun
/// `tune` on other data.
pub const DEFAULT_ALPHA: f64 = 10.0;
pub const DEFAULT_BETA: f64 = 1e4;
pub const DEFAULT_GAMMA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub similarity_threshold: f64,
    pub exact_similarity_max_edges: usize,
    pub highway_cutoff_kmh: f64,
    pub cg_tol: f64,
    /// `None` means `10 · |d|`.
    pub cg_max_iters: Option<usize>,
    pub jacobi: bool,
    pub pr_tol: f64,
    pub pr_max_iters: usize,
    pub seed: u64,
    pub variant: Variant,
    pub train_fraction: f64,
    pub default_speed_kmh: f64,
    pub baseline_lambdas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            similarity_threshold: DEFAULT_SIMILARITY_THRESHOLD,
            exact_similarity_max_edges: DEFAULT_EXACT_SIMILARITY_MAX_EDGES,
            highway_cutoff_kmh: DEFAULT_HIGHWAY_CUTOFF_KMH,
            cg_tol: 1e-8,
            cg_max_iters: None,
            jacobi: false,
            pr_tol: pagerank::DEFAULT_TOL,
            pr_max_iters: pagerank::DEFAULT_MAX_ITERS,
            seed: 0,
            variant: Variant::F4,
            train_fraction: 0.8,
            default_speed_kmh: 50.0,
            baseline_lambdas: vec![1.0, 2.0],
        }
    }
}

pub const KEYS: &[&str] = &[
    "alpha",
    "beta",
    "gamma",
    "similarity_threshold",
    "exact_similarity_max_edges",
    "highway_cutoff_kmh",
    "cg_tol",
    "cg_max_iters",
    "jacobi",
    "pr_tol",
    "pr_max_iters",
    "seed",
    "variant",
    "train_fraction",
    "default_speed_kmh",
    "baseline_lambdas",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key.trim() {
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "similarity_threshold" => self.similarity_threshold = parse(key, value)?,
            "exact_similarity_max_edges" => self.exact_similarity_max_edges = parse(key, value)?,
            "highway_cutoff_kmh" => self.highway_cutoff_kmh = parse(key, value)?,
            "cg_tol" => self.cg_tol = parse(key, value)?,
            "cg_max_iters" => {
                self.cg_max_iters = match value {
                    "" | "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "jacobi" => self.jacobi = parse(key, value)?,
            "pr_tol" => self.pr_tol = parse(key, value)?,
            "pr_max_iters" => self.pr_max_iters = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "variant" => self.variant = parse(key, value)?,
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "default_speed_kmh" => self.default_speed_kmh = parse(key, value)?,
            "baseline_lambdas" => {
                self.baseline_lambdas = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(key, s))
                    .collect::<std::result::Result<_, _>>()?
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped. `origin` names the source in diagnostics.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        let mut problems = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let diag = |kind, reason| Diagnostic {
                file: origin.to_path_buf(),
                line: i + 1,
                kind,
                reason,
            };
            match line.split_once('=') {
                None => problems.push(diag(
                    DiagnosticKind::MalformedRow,
                    format!("expected key = value, got {line:?}"),
                )),
                Some((k, v)) => {
                    if let Err(reason) = self.set(k, v) {
                        problems.push(diag(DiagnosticKind::InvalidValue, reason));
                    }
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        self.validate()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            bad.push(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            bad.push(format!("beta must be non-negative, got {}", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            bad.push(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            bad.push(format!(
                "similarity_threshold must lie in (0, 1], got {}",
                self.similarity_threshold
            ));
        }
        if !(self.highway_cutoff_kmh > 0.0) {
            bad.push("highway_cutoff_kmh must be positive".to_string());
        }
        if !(self.cg_tol > 0.0) || !(self.pr_tol > 0.0) {
            bad.push("tolerances must be positive".to_string());
        }
        if self.cg_max_iters == Some(0) || self.pr_max_iters == 0 {
            bad.push("iteration limits must be positive".to_string());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bad.push(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        if !(self.default_speed_kmh > 0.0) {
            bad.push("default_speed_kmh must be positive".to_string());
        }
        if self.baseline_lambdas.iter().any(|&l| !(l >= 1.0)) {
            bad.push("baseline lambdas must be >= 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Contract(bad.join("; ")))
        }
    }

    pub fn similarity(&self) -> SimilarityOptions {
        SimilarityOptions {
            threshold: self.similarity_threshold,
            exact_max_edges: self.exact_similarity_max_edges,
        }
    }

    pub fn cg(&self) -> CgOptions {
        CgOptions {
            tol: self.cg_tol,
            max_iters: self.cg_max_iters,
            jacobi: self.jacobi,
        }
    }

    /// Every key with its current value, in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let lambdas = self
            .baseline_lambdas
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("similarity_threshold", self.similarity_threshold.to_string()),
            ("exact_similarity_max_edges", self.exact_similarity_max_edges.to_string()),
            ("highway_cutoff_kmh", self.highway_cutoff_kmh.to_string()),
            ("cg_tol", self.cg_tol.to_string()),
            (
                "cg_max_iters",
                self.cg_max_iters.map_or("auto".to_string(), |n| n.to_string()),
            ),
            ("jacobi", self.jacobi.to_string()),
            ("pr_tol", self.pr_tol.to_string()),
            ("pr_max_iters", self.pr_max_iters.to_string()),
            ("seed", self.seed.to_string()),
            ("variant", self.variant.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("default_speed_kmh", self.default_speed_kmh.to_string()),
            ("baseline_lambdas", lambdas),
        ]
    }

    /// The configuration as a `key = value` file.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
