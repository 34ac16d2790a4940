use std::fmt;

use serde::{Deserialize, Serialize};

use super::artifact::Artifact;
use super::sweep::SweepRecord;
use crate::precision::UNIT_ROUNDOFF;

/// Allowed factor between the observed E2 minimum and `δ √ε / β`.
pub const E2_FLOOR_FACTOR: f64 = 30.0;
/// Allowed factor between the observed E1 minimum and `δ ε / β`.
pub const E1_FLOOR_FACTOR: f64 = 100.0;
/// Required `min E2 / min E1`.
pub const MIN_FLOOR_SEPARATION: f64 = 1e4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Predicted and observed round-off floors over one sweep.
///
/// Estimators that return exactly zero (clamped or exactly cancelled
/// radicands) have no floor value; observed minima are taken over the
/// positive values and the zeros are counted separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorReport {
    pub delta: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub predicted_e1: f64,
    pub predicted_e2: f64,
    pub min_e1: f64,
    pub min_e2: f64,
    pub min_e2dd: f64,
    pub min_e3: f64,
    pub zero_e2: usize,
    pub zero_e2dd: usize,
    pub zero_e3: usize,
    pub negative_e2_radicands: usize,
    /// `stdev(log10 e2)` and `stdev(log10 e1)` over the rows where `E2` lies
    /// in its lowest decade.
    pub flat_stdev_e2: f64,
    pub flat_stdev_e1: f64,
    pub checks: Vec<FloorCheck>,
}

impl FloorReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn min_positive(values: impl Iterator<Item = f64>) -> (f64, usize) {
    values.fold((f64::INFINITY, 0), |(m, zeros), v| {
        if v > 0.0 {
            (m.min(v), zeros)
        } else {
            (m, zeros + 1)
        }
    })
}

fn stdev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn within_factor(observed: f64, predicted: f64, factor: f64) -> bool {
    observed <= predicted * factor && observed >= predicted / factor
}

pub fn measure_floors(artifact: &Artifact, records: &[SweepRecord]) -> FloorReport {
    let delta = artifact.e2.delta;
    let beta = artifact.e2.beta;
    let epsilon = UNIT_ROUNDOFF;
    let predicted_e1 = delta * epsilon / beta;
    let predicted_e2 = delta * epsilon.sqrt() / beta;

    let (min_e1, _) = min_positive(records.iter().map(|r| r.e1));
    let (min_e2, zero_e2) = min_positive(records.iter().map(|r| r.e2));
    let (min_e2dd, zero_e2dd) = min_positive(records.iter().map(|r| r.e2dd));
    let (min_e3, zero_e3) = min_positive(records.iter().map(|r| r.e3));
    let negative_e2_radicands = records.iter().filter(|r| r.e2_radicand < 0.0).count();

    let low: Vec<&SweepRecord> = records.iter().filter(|r| r.e2 > 0.0 && r.e2 <= 10.0 * min_e2).collect();
    let log = |f: fn(&SweepRecord) -> f64| low.iter().map(|r| f(r).max(f64::MIN_POSITIVE).log10()).collect::<Vec<_>>();
    let flat_stdev_e2 = stdev(&log(|r| r.e2));
    let flat_stdev_e1 = stdev(&log(|r| r.e1));

    let checks = vec![
        FloorCheck {
            name: "E2 floor".into(),
            pass: within_factor(min_e2, predicted_e2, E2_FLOOR_FACTOR),
            detail: format!(
                "min E2 = {min_e2:.3e}, delta*sqrt(eps)/beta = {predicted_e2:.3e}, ratio {:.2}, allowed factor {E2_FLOOR_FACTOR}",
                min_e2 / predicted_e2
            ),
        },
        FloorCheck {
            name: "E1 floor".into(),
            pass: within_factor(min_e1, predicted_e1, E1_FLOOR_FACTOR),
            detail: format!(
                "min E1 = {min_e1:.3e}, delta*eps/beta = {predicted_e1:.3e}, ratio {:.2}, allowed factor {E1_FLOOR_FACTOR}",
                min_e1 / predicted_e1
            ),
        },
        FloorCheck {
            name: "floor separation".into(),
            pass: min_e2 / min_e1 >= MIN_FLOOR_SEPARATION,
            detail: format!("min E2 / min E1 = {:.3e}, need >= {MIN_FLOOR_SEPARATION:e}", min_e2 / min_e1),
        },
        FloorCheck {
            name: "double-double remedy".into(),
            pass: min_e2dd <= min_e1,
            detail: format!("min E2dd = {min_e2dd:.3e} vs min E1 = {min_e1:.3e}"),
        },
        FloorCheck {
            name: "E2 flattens".into(),
            pass: flat_stdev_e2 < 0.5 && flat_stdev_e1 > 0.5,
            detail: format!(
                "over {} rows in the lowest E2 decade: stdev log10 E2 = {flat_stdev_e2:.3}, stdev log10 E1 = {flat_stdev_e1:.3}",
                low.len()
            ),
        },
    ];

    FloorReport {
        delta,
        beta,
        epsilon,
        predicted_e1,
        predicted_e2,
        min_e1,
        min_e2,
        min_e2dd,
        min_e3,
        zero_e2,
        zero_e2dd,
        zero_e3,
        negative_e2_radicands,
        flat_stdev_e2,
        flat_stdev_e1,
        checks,
    }
}

impl fmt::Display for FloorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "delta               {:.6e}", self.delta)?;
        writeln!(f, "beta                {}", self.beta)?;
        writeln!(f, "eps (unit roundoff) {:.6e}", self.epsilon)?;
        writeln!(f, "predicted E1 floor  {:.3e}  (delta*eps/beta)", self.predicted_e1)?;
        writeln!(f, "predicted E2 floor  {:.3e}  (delta*sqrt(eps)/beta)", self.predicted_e2)?;
        writeln!(f, "observed min E1     {:.3e}", self.min_e1)?;
        writeln!(
            f,
            "observed min E2     {:.3e}  ({} zero, {} negative radicands)",
            self.min_e2, self.zero_e2, self.negative_e2_radicands
        )?;
        writeln!(f, "observed min E2dd   {:.3e}  ({} zero)", self.min_e2dd, self.zero_e2dd)?;
        writeln!(f, "observed min E3     {:.3e}  ({} zero)", self.min_e3, self.zero_e3)?;
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}
