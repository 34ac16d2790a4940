use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbcert::experiments::{
    evaluate_sweep, measure_floors, run_offline, run_sweep, Artifact, ExperimentConfig,
};
use rbcert::precision::TWO_PROD_USES_FMA;
use rbcert::Error;

#[derive(Parser)]
#[command(version, about = "Certified reduced-basis solver with round-off-robust error estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy build, estimator offline data, artifact written to output_dir.
    Offline(Opts),
    /// Evaluate all estimators over the sweep; writes sweep.csv and SVG plots.
    Sweep(Opts),
    /// Compare observed estimator minima with the predicted round-off floors.
    Floors(Opts),
}

#[derive(Args)]
struct Opts {
    /// key = value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact to read (sweep, floors). Defaults to <output_dir>/model.json.
    #[arg(long)]
    artifact: Option<PathBuf>,
    #[arg(long)]
    n_cells: Option<String>,
    #[arg(long)]
    mu_min: Option<String>,
    #[arg(long)]
    mu_max: Option<String>,
    #[arg(long)]
    n_train: Option<String>,
    #[arg(long)]
    n_sweep: Option<String>,
    #[arg(long)]
    rb_size: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    oversample: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
}

impl Opts {
    fn resolve(&self) -> rbcert::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("n_cells", &self.n_cells),
            ("mu_min", &self.mu_min),
            ("mu_max", &self.mu_max),
            ("n_train", &self.n_train),
            ("n_sweep", &self.n_sweep),
            ("rb_size", &self.rb_size),
            ("seed", &self.seed),
            ("oversample", &self.oversample),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self, cfg: &ExperimentConfig) -> rbcert::Result<Artifact> {
        let path = self.artifact.clone().unwrap_or_else(|| Artifact::path_in(&cfg.output_dir));
        Artifact::load(&path)
    }
}

fn run(cli: Cli) -> rbcert::Result<()> {
    let path = if TWO_PROD_USES_FMA { "fused multiply-add" } else { "Dekker split" };
    eprintln!("two_prod: {path}");
    match cli.command {
        Command::Offline(opts) => {
            let cfg = opts.resolve()?;
            let a = run_offline(&cfg)?;
            println!("snapshots: {:?}", a.model.snapshot_params);
            for (k, step) in a.history.iter().enumerate() {
                println!("greedy step {:>2}: mu = {:<22} max E1 = {:.3e}", k + 1, step.mu, step.max_estimator);
            }
            println!("delta = {:.6e}", a.e2.delta);
            println!(
                "interpolation: d = {}, samples = {}, seed = {}, cond = {:.3e}",
                a.e3.dim(),
                a.e3.n_samples(),
                a.e3.seed,
                a.e3.cond_estimate
            );
            println!("wrote {}", Artifact::path_in(&cfg.output_dir).display());
        }
        Command::Sweep(opts) => {
            let cfg = opts.resolve()?;
            let a = opts.load(&cfg)?;
            let out = run_sweep(&a, &cfg)?;
            println!("{} rows -> {}", out.records.len(), out.csv.display());
            for p in &out.plots {
                println!("plot -> {}", p.display());
            }
        }
        Command::Floors(opts) => {
            let cfg = opts.resolve()?;
            let a = opts.load(&cfg)?;
            let records = evaluate_sweep(&a, &cfg)?;
            let report = measure_floors(&a, &records);
            print!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::InvalidMesh(_) | Error::OutOfDomain(_) | Error::DimensionMismatch { .. } => 2,
                ref e if e.is_numerical() => 3,
                _ => 1,
            })
        }
    }
}
