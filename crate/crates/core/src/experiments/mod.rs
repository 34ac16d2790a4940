//! Offline build, parameter sweep and round-off floor measurement for the
//! `-u'' + mu u = 1` benchmark.

mod artifact;
mod config;
mod floors;
mod plot;
mod sweep;

pub use artifact::{build_artifact, run_offline, Artifact, ARTIFACT_FILE, ARTIFACT_VERSION};
pub use config::{ExperimentConfig, KEYS};
pub use floors::{measure_floors, FloorCheck, FloorReport, E1_FLOOR_FACTOR, E2_FLOOR_FACTOR, MIN_FLOOR_SEPARATION};
pub use plot::{LogLogPlot, Series};
pub use sweep::{
    evaluate_sweep, records_from_csv, records_to_csv, run_sweep, sweep_parameters, SweepOutput, SweepRecord,
    CSV_FILE, CSV_HEADER, PLOT_LEFT, PLOT_RIGHT,
};
