//! Full pipeline: offline build, sweep with CSV and SVG output, floor report.
//!
//! Run with `cargo run --release --example figure_one -- [output_dir]`.

use std::path::PathBuf;

use rbcert::experiments::{measure_floors, run_offline, run_sweep, ExperimentConfig};

fn main() -> rbcert::Result<()> {
    let output_dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("figure_one"), PathBuf::from);
    let cfg = ExperimentConfig { output_dir, ..Default::default() };
    let artifact = run_offline(&cfg)?;
    let out = run_sweep(&artifact, &cfg)?;
    println!("{} rows written to {}", out.records.len(), out.csv.display());
    for p in &out.plots {
        println!("plot: {}", p.display());
    }
    println!();
    print!("{}", measure_floors(&artifact, &out.records));
    Ok(())
}
