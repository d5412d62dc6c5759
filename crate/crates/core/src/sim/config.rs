//! Flat `key = value` experiment configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gof::ceil_tol;
use crate::mechanisms::MechanismName;

pub const FORMAT_VERSION: u32 = 1;

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Parsed key/value pairs with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return config_err(format!("line {line_no}: expected key = value, got '{line}'"));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return config_err(format!("line {line_no}: empty key"));
            }
            if entries.insert(key.clone(), (value.trim().to_string(), line_no)).is_some() {
                return config_err(format!("line {line_no}: duplicate key '{key}'"));
            }
        }
        Ok(Self { entries })
    }

    /// Fails on the first key not in `allowed`, and on an unsupported
    /// `format_version`.
    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (key, (_, line)) in &self.entries {
            if key != "format_version" && !allowed.contains(&key.as_str()) {
                return config_err(format!("line {line}: unknown key '{key}'"));
            }
        }
        if let Some(v) = self.get::<u32>("format_version")? {
            if v != FORMAT_VERSION {
                return config_err(format!("unsupported format_version {v}, expected {FORMAT_VERSION}"));
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((value, line)) => value
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = '{value}'"))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((value, line)) => value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Config(format!("line {line}: cannot parse '{s}' in {key}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.list(key)?.ok_or_else(|| Error::Config(format!("missing key '{key}'")))?;
        if v.is_empty() {
            return config_err(format!("'{key}' must list at least one value"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Gof,
    Ind,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gof => "gof",
            Self::Ind => "ind",
        }
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gof" => Ok(Self::Gof),
            "ind" => Ok(Self::Ind),
            other => config_err(format!("unknown test '{other}', expected gof or ind")),
        }
    }
}

/// Shape of the categorical data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Categories(usize),
    Table { rows: usize, cols: usize },
}

impl Shape {
    pub fn cells(&self) -> usize {
        match *self {
            Self::Categories(d) => d,
            Self::Table { rows, cols } => rows * cols,
        }
    }
}

/// A Type-I or power experiment.
///
/// Gaussian noise is run at the variance-matched `ρ = ε²/8` of each listed ε;
/// Laplace noise uses a Monte-Carlo critical value from `mc_samples` draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub test: TestKind,
    pub mechanisms: Vec<MechanismName>,
    pub shape: Shape,
    pub epsilons: Vec<f64>,
    pub alpha: f64,
    pub n_grid: Vec<u64>,
    pub eta: f64,
    pub trials: usize,
    pub seed: Option<u64>,
    pub mc_samples: usize,
    pub workers: Option<usize>,
    pub output: Option<String>,
}

const EXPERIMENT_KEYS: &[&str] = &[
    "test", "mechanisms", "d", "r", "c", "epsilons", "alpha", "n_grid", "eta", "trials", "seed", "mc_samples",
    "workers", "output",
];

pub const DEFAULT_MC_SAMPLES: usize = 999;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        map.check_keys(EXPERIMENT_KEYS)?;
        let test: TestKind = map.require("test")?;
        let shape = match test {
            TestKind::Gof => {
                for key in ["r", "c"] {
                    if map.entries.contains_key(key) {
                        return config_err(format!("'{key}' applies to ind experiments only"));
                    }
                }
                Shape::Categories(map.require("d")?)
            }
            TestKind::Ind => {
                if map.entries.contains_key("d") {
                    return config_err("'d' applies to gof experiments only; use r and c");
                }
                Shape::Table { rows: map.require("r")?, cols: map.require("c")? }
            }
        };
        let config = Self {
            test,
            mechanisms: map.require_list("mechanisms")?,
            shape,
            epsilons: map.require_list("epsilons")?,
            alpha: map.get("alpha")?.unwrap_or(0.05),
            n_grid: map.require_list("n_grid")?,
            eta: map.get("eta")?.unwrap_or(0.0),
            trials: map.get("trials")?.unwrap_or(1000),
            seed: map.get("seed")?,
            mc_samples: map.get("mc_samples")?.unwrap_or(DEFAULT_MC_SAMPLES),
            workers: map.get("workers")?,
            output: map.get("output")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return config_err("trials must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return config_err(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.mechanisms.is_empty() || self.epsilons.is_empty() || self.n_grid.is_empty() {
            return config_err("mechanisms, epsilons and n_grid must be nonempty");
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return config_err(format!("epsilons must be positive and finite, got {e}"));
        }
        if self.n_grid.contains(&0) {
            return config_err("n_grid entries must be positive");
        }
        if self.workers == Some(0) {
            return config_err("workers must be at least 1");
        }
        if !self.eta.is_finite() {
            return config_err("eta must be finite");
        }
        match self.shape {
            Shape::Categories(d) => {
                if d < 2 {
                    return config_err(format!("d must be at least 2, got {d}"));
                }
                if self.eta != 0.0 && d % 2 != 0 {
                    return config_err(format!("the eta pattern needs an even d, got {d}"));
                }
                if 1.0 / d as f64 - self.eta.abs() <= 0.0 {
                    return config_err(format!("eta {} makes a cell probability nonpositive at d = {d}", self.eta));
                }
            }
            Shape::Table { rows, cols } => {
                if rows < 2 || cols < 2 {
                    return config_err(format!("r and c must be at least 2, got {rows}x{cols}"));
                }
                if self.eta != 0.0 && (rows % 2 != 0 || cols % 2 != 0) {
                    return config_err(format!("the eta pattern needs even r and c, got {rows}x{cols}"));
                }
                if 1.0 / (rows * cols) as f64 - self.eta.abs() <= 0.0 {
                    return config_err(format!("eta {} makes a cell probability nonpositive", self.eta));
                }
                if self.mechanisms.contains(&MechanismName::Laplace) {
                    return config_err("laplace noise has no independence test");
                }
            }
        }
        if self.mechanisms.contains(&MechanismName::Laplace) {
            let min = ceil_tol(1.0 / self.alpha) as usize;
            if self.mc_samples <= min {
                return config_err(format!("mc_samples {} must exceed ceil(1/alpha) = {min}", self.mc_samples));
            }
        }
        Ok(())
    }

    /// Resolved configuration as `key = value` text, with `seed` filled in.
    pub fn render(&self, seed: u64) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let _ = writeln!(out, "format_version = {FORMAT_VERSION}");
        let _ = writeln!(out, "test = {}", self.test.as_str());
        let _ = writeln!(out, "mechanisms = {}", join(self.mechanisms.iter().map(|m| m.to_string()).collect()));
        match self.shape {
            Shape::Categories(d) => {
                let _ = writeln!(out, "d = {d}");
            }
            Shape::Table { rows, cols } => {
                let _ = writeln!(out, "r = {rows}\nc = {cols}");
            }
        }
        let _ = writeln!(out, "epsilons = {}", join(self.epsilons.iter().map(|e| e.to_string()).collect()));
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "n_grid = {}", join(self.n_grid.iter().map(|n| n.to_string()).collect()));
        let _ = writeln!(out, "eta = {}", self.eta);
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {seed}");
        if self.mechanisms.contains(&MechanismName::Laplace) {
            let _ = writeln!(out, "mc_samples = {}", self.mc_samples);
        }
        if let Some(o) = &self.output {
            let _ = writeln!(out, "output = {o}");
        }
        out
    }
}

/// Noncentrality-coefficient table settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Config {
    pub d_list: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub output: Option<String>,
}

impl Fig1Config {
    pub fn parse(text: &str) -> Result<Self> {
        let map = ConfigMap::parse(text)?;
        map.check_keys(&["d_list", "epsilons", "output"])?;
        let config = Self {
            d_list: map.list("d_list")?.unwrap_or_else(|| vec![4, 10, 40, 100]),
            epsilons: map.list("epsilons")?.unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]),
            output: map.get("output")?,
        };
        if let Some(d) = config.d_list.iter().find(|d| **d <= 2) {
            return config_err(format!("d_list entries must exceed 2, got {d}"));
        }
        if let Some(e) = config.epsilons.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return config_err(format!("epsilons must be positive and finite, got {e}"));
        }
        if config.d_list.is_empty() || config.epsilons.is_empty() {
            return config_err("d_list and epsilons must be nonempty");
        }
        Ok(config)
    }

    pub fn render(&self) -> String {
        let ds: Vec<String> = self.d_list.iter().map(|d| d.to_string()).collect();
        let es: Vec<String> = self.epsilons.iter().map(|e| e.to_string()).collect();
        let mut out = format!("format_version = {FORMAT_VERSION}\nd_list = {}\nepsilons = {}\n", ds.join(","), es.join(","));
        if let Some(o) = &self.output {
            let _ = writeln!(out, "output = {o}");
        }
        out
    }
}
