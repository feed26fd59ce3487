//! Flat `key = value` run configuration.
//!
//! Every key has a default; files and command-line flags override them. Unknown keys are
//! errors. The resolved table is written back in the same format, so a run can be
//! repeated from its echo.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("config key {key}: cannot parse {value:?}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Known keys with their defaults and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("lrf.max_areas", "5", "maximum number of focus areas"),
    ("lrf.neighbors", "20", "neighbors in the ray-concentration objective"),
    ("lrf.alpha_deg", "10", "frustum half-angle of the clustering semimetric, degrees"),
    ("lrf.min_cluster_size", "20", "HDBSCAN minimum cluster size"),
    ("lrf.single_cluster", "true", "allow HDBSCAN to return a single cluster"),
    ("ism.tau", "4", "tanh slope of the collinearity penalty"),
    ("ism.gamma", "0.1", "color-similarity scale"),
    ("ism.eps2", "0.0025", "relative depth threshold of the collinearity indicator"),
    ("ism.max_segment", "40", "longest triplet segment, pixels"),
    ("ism.lambda_col", "0.01", "weight of the collinearity loss"),
    ("ism.canny_sigma", "1.4", "Gaussian blur of the edge detector"),
    ("ism.canny_low", "0.1", "low hysteresis threshold"),
    ("ism.canny_high", "0.2", "high hysteresis threshold"),
    ("sdd.enabled", "true", "surrounding-depth check on extracted points"),
    ("sdd.eps3", "0.0025", "relative depth slack of the surrounding-depth check"),
    ("sdd.patch", "3", "odd patch side, pixels"),
    ("csd.color_mode", "csd", "point color mode: csd or standard"),
    ("csd.eps4", "0.0025", "relative half-width of the color window"),
    ("train.iterations", "2000", "optimizer steps"),
    ("train.triplets_per_batch", "32", "pixel triplets per step"),
    ("train.samples", "128", "stratified samples per training ray"),
    ("train.near", "0.1", "training ray start"),
    ("train.far", "10", "training ray end"),
    ("train.learning_rate", "0.01", "Adam step size"),
    ("train.chunk_triplets", "4", "triplets per gradient chunk"),
    ("render.near", "0.1", "ray start for rendering and extraction"),
    ("render.far", "10", "ray end for rendering and extraction"),
    ("render.samples", "512", "stratified samples per ray"),
    ("render.resample", "0", "extra weight-proportional samples per ray"),
    ("eval.fscore_threshold", "0.05", "F-score distance threshold, meters"),
    ("fixture.kind", "", "fixture written by make-fixture"),
    ("run.seed", "0", "seed of every random stream"),
    ("run.points", "100000", "target point count of an extraction"),
    ("run.bounds", "", "optional extraction box x0,y0,z0,x1,y1,z1"),
    ("run.bench_points", "20000", "target point count of the extraction benchmark"),
];

#[derive(Clone, Debug)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Keys set by a file or a flag rather than left at their default.
    explicit: BTreeSet<String>,
}

impl PartialEq for RunConfig {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
            explicit: BTreeSet::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.into();
                self.explicit.insert(key.to_string());
                Ok(())
            }
            None => Err(ConfigError::UnknownKey(key.to_string())),
        }
    }

    /// Replaces the value only when the key was never set explicitly.
    pub fn set_default(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if self.is_explicit(key) {
            return Ok(());
        }
        self.set(key, value)?;
        self.explicit.remove(key);
        Ok(())
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("config key {key} is not declared"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e: T::Err| ConfigError::BadValue {
            key: key.to_string(),
            value: v.to_string(),
            reason: e.to_string(),
        })
    }

    /// Resolved table, one key per line in key order.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
