use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::artifact::Artifact;
use super::config::ExperimentConfig;
use super::plot::{LogLogPlot, Series};
use crate::error::{Error, Result};
use crate::estimators::{estimator_e1, estimator_e2, estimator_e2_dd, estimator_e3, true_error};
use crate::reduced::solve_reduced;

pub const CSV_HEADER: &str = "mu,true_error,e1,e2,e2_radicand,e2dd,e3,e3_clamped_flag";
pub const CSV_FILE: &str = "sweep.csv";
pub const PLOT_LEFT: &str = "e1_e3.svg";
pub const PLOT_RIGHT: &str = "e1_e2.svg";

/// One row of the parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub mu: f64,
    pub true_error: f64,
    pub e1: f64,
    pub e2: f64,
    pub e2_radicand: f64,
    pub e2dd: f64,
    pub e3: f64,
    pub e3_clamped_flag: bool,
}

impl SweepRecord {
    fn csv_line(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.mu,
            self.true_error,
            self.e1,
            self.e2,
            self.e2_radicand,
            self.e2dd,
            self.e3,
            u8::from(self.e3_clamped_flag)
        );
    }
}

/// Sweep parameters: the offset log grid of `config` plus the snapshot
/// parameters, sorted and deduplicated.
pub fn sweep_parameters(artifact: &Artifact, config: &ExperimentConfig) -> Vec<f64> {
    let mut mus = config.sweep_grid();
    mus.extend(
        artifact
            .model
            .snapshot_params
            .iter()
            .filter(|&&m| m >= config.mu_min && m <= config.mu_max),
    );
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    mus
}

/// Evaluates every estimator and the true error over the sweep, in `mu` order.
pub fn evaluate_sweep(artifact: &Artifact, config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    artifact.check_config(config)?;
    let sys = artifact.truth_system()?;
    sweep_parameters(artifact, config)
        .into_iter()
        .map(|mu| {
            let sol = solve_reduced(&artifact.model, mu)?;
            let e2 = estimator_e2(&artifact.e2, &sol)?;
            let e3 = estimator_e3(&artifact.e3, &sol)?;
            Ok(SweepRecord {
                mu,
                true_error: true_error(&sys, &artifact.model, &sol)?,
                e1: estimator_e1(&sys, &artifact.model, &sol),
                e2: e2.value,
                e2_radicand: e2.radicand,
                e2dd: estimator_e2_dd(&artifact.e2, &sol)?.value,
                e3: e3.value,
                e3_clamped_flag: e3.clamped,
            })
        })
        .collect()
}

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        r.csv_line(&mut out);
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Artifact("missing or unexpected CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Artifact(format!("bad CSV row: {line}"));
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            Ok(SweepRecord {
                mu: num(0)?,
                true_error: num(1)?,
                e1: num(2)?,
                e2: num(3)?,
                e2_radicand: num(4)?,
                e2dd: num(5)?,
                e3: num(6)?,
                e3_clamped_flag: match f[7] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                },
            })
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Output files of [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub csv: PathBuf,
    pub plots: [PathBuf; 2],
}

/// Online sweep: writes `sweep.csv` and the two log-log plots to `output_dir`.
pub fn run_sweep(artifact: &Artifact, config: &ExperimentConfig) -> Result<SweepOutput> {
    let records = evaluate_sweep(artifact, config)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(CSV_FILE);
    write(&csv, &records_to_csv(&records))?;

    let column = |f: fn(&SweepRecord) -> f64| -> Vec<(f64, f64)> { records.iter().map(|r| (r.mu, f(r))).collect() };
    let left = LogLogPlot {
        title: "E1 and E3",
        x_label: "mu",
        series: vec![
            Series::new("true error", "#888888", column(|r| r.true_error)),
            Series::new("E1", "#1f77b4", column(|r| r.e1)),
            Series::new("E3", "#d62728", column(|r| r.e3)).dashed(),
        ],
    };
    let right = LogLogPlot {
        title: "E1, E2 (double) and E2 (double-double)",
        x_label: "mu",
        series: vec![
            Series::new("E1", "#1f77b4", column(|r| r.e1)),
            Series::new("E2", "#2ca02c", column(|r| r.e2)),
            Series::new("E2 dd", "#9467bd", column(|r| r.e2dd)).dashed(),
        ],
    };
    let plots = [dir.join(PLOT_LEFT), dir.join(PLOT_RIGHT)];
    write(&plots[0], &left.render())?;
    write(&plots[1], &right.render())?;
    Ok(SweepOutput { records, csv, plots })
}
