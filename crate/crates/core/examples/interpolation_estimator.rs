//! The interpolation estimator E3: sample parameters, tabulate squared
//! residual norms once, then evaluate the estimator from a small dense solve.
//!
//! Run with `cargo run --example interpolation_estimator`.

use rbcert::estimators::{
    build_e2_data, build_e3_data, default_oversample, estimator_e1, estimator_e2, estimator_e3, LogUniformSampler,
};
use rbcert::experiments::ExperimentConfig;
use rbcert::fem::assemble;
use rbcert::reduced::{greedy_build, solve_reduced, GreedyOptions};

fn main() -> rbcert::Result<()> {
    let cfg = ExperimentConfig::default();
    let sys = assemble(cfg.n_cells)?;
    let (model, _) = greedy_build(&sys, &cfg.training_grid(), GreedyOptions::default())?;
    let sampler = LogUniformSampler { mu_min: cfg.mu_min, mu_max: cfg.mu_max };
    let e2 = build_e2_data(&sys, &model)?;
    let square = build_e3_data(&sys, &model, &sampler, cfg.seed, 0)?;
    let over = build_e3_data(&sys, &model, &sampler, cfg.seed, default_oversample(model.len()))?;
    println!("d = {}, cond(T) ~ {:.2e}; oversampled with {} columns, cond ~ {:.2e}", square.dim(), square.cond_estimate, over.n_samples(), over.cond_estimate);

    println!("\n{:>10} {:>12} {:>12} {:>12} {:>12}", "mu", "E1", "E2", "E3", "E3 (LS)");
    let mut mus = vec![2.0, 30.0, 150.0, 700.0];
    mus.extend(model.snapshot_params.iter().take(3));
    for mu in mus {
        let sol = solve_reduced(&model, mu)?;
        println!(
            "{mu:>10.4} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            estimator_e1(&sys, &model, &sol),
            estimator_e2(&e2, &sol)?.value,
            estimator_e3(&square, &sol)?.value,
            estimator_e3(&over, &sol)?.value
        );
    }
    Ok(())
}
