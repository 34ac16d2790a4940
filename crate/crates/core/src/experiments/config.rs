use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one offline + sweep run.
///
/// File format is flat `key = value` text; `#` starts a comment. Keys use
/// snake_case; CLI flags use the kebab-case spelling of the same key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_cells: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub n_train: usize,
    pub n_sweep: usize,
    pub rb_size: usize,
    pub seed: u64,
    pub oversample: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_cells: 200,
            mu_min: 1.0,
            mu_max: 1000.0,
            n_train: 200,
            n_sweep: 400,
            rb_size: 6,
            seed: 42,
            oversample: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 9] = [
    "n_cells",
    "mu_min",
    "mu_max",
    "n_train",
    "n_sweep",
    "rb_size",
    "seed",
    "oversample",
    "output_dir",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
}

impl ExperimentConfig {
    /// Sets one key. Accepts `snake_case` or `kebab-case`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "n_cells" => self.n_cells = parse(&key, value)?,
            "mu_min" => self.mu_min = parse(&key, value)?,
            "mu_max" => self.mu_max = parse(&key, value)?,
            "n_train" => self.n_train = parse(&key, value)?,
            "n_sweep" => self.n_sweep = parse(&key, value)?,
            "rb_size" => self.rb_size = parse(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "oversample" => self.oversample = parse(&key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_cells < 2 {
            return fail("n_cells must be at least 2");
        }
        if self.mu_min.is_nan() || self.mu_min < 1.0 || !self.mu_max.is_finite() || self.mu_max <= self.mu_min {
            return fail("need 1 <= mu_min < mu_max < inf");
        }
        if self.n_train < 2 || self.n_sweep < 2 {
            return fail("n_train and n_sweep must be at least 2");
        }
        if self.rb_size == 0 {
            return fail("rb_size must be positive");
        }
        if self.rb_size > self.n_train {
            return fail("rb_size exceeds n_train");
        }
        Ok(())
    }

    /// `n_train` log-spaced points including both ends.
    pub fn training_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.mu_min.ln(), self.mu_max.ln());
        let last = (self.n_train - 1) as f64;
        (0..self.n_train)
            .map(|k| match k {
                0 => self.mu_min,
                k if k + 1 == self.n_train => self.mu_max,
                k => (lo + (hi - lo) * k as f64 / last).exp(),
            })
            .collect()
    }

    /// `n_sweep` log-spaced cell midpoints, so no point coincides with the
    /// training grid's end points.
    pub fn sweep_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.mu_min.ln(), self.mu_max.ln());
        let n = self.n_sweep as f64;
        (0..self.n_sweep)
            .map(|k| (lo + (hi - lo) * (k as f64 + 0.5) / n).exp())
            .collect()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_cells = {}", self.n_cells)?;
        writeln!(f, "mu_min = {}", self.mu_min)?;
        writeln!(f, "mu_max = {}", self.mu_max)?;
        writeln!(f, "n_train = {}", self.n_train)?;
        writeln!(f, "n_sweep = {}", self.n_sweep)?;
        writeln!(f, "rb_size = {}", self.rb_size)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "oversample = {}", self.oversample)?;
        writeln!(f, "output_dir = {}", self.output_dir.display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let mut cfg = ExperimentConfig::default();
        cfg.rb_size = 3;
        cfg.mu_max = 250.5;
        let back = ExperimentConfig::parse_str(&cfg.to_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_kebab_keys() {
        let cfg = ExperimentConfig::parse_str("# hi\nrb-size = 2 # trailing\n\nseed=7\n").unwrap();
        assert_eq!(cfg.rb_size, 2);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse_str("nope = 1").is_err());
        assert!(ExperimentConfig::parse_str("rb_size = x").is_err());
        assert!(ExperimentConfig::parse_str("rb_size 3").is_err());
        let cfg = ExperimentConfig {
            mu_min: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grids() {
        let cfg = ExperimentConfig::default();
        let t = cfg.training_grid();
        assert_eq!(t.len(), 200);
        assert_eq!((t[0], t[199]), (1.0, 1000.0));
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        let s = cfg.sweep_grid();
        assert_eq!(s.len(), 400);
        assert!(s[0] > 1.0 && s[399] < 1000.0);
        assert!(s.iter().all(|m| !t.contains(m)));
    }
}
