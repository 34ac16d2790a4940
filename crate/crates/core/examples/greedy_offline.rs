//! Greedy snapshot selection and the online reduced solve.
//!
//! Run with `cargo run --example greedy_offline`.

use rbcert::estimators::{estimator_e1, true_error};
use rbcert::experiments::ExperimentConfig;
use rbcert::fem::assemble;
use rbcert::reduced::{greedy_build, solve_reduced, GreedyOptions};

fn main() -> rbcert::Result<()> {
    let cfg = ExperimentConfig::default();
    let sys = assemble(cfg.n_cells)?;
    let (model, history) = greedy_build(&sys, &cfg.training_grid(), GreedyOptions::default())?;

    for (k, step) in history.iter().enumerate() {
        println!("step {}: picked mu = {:<20} max E1 before = {:.3e}", k + 1, step.mu, step.max_estimator);
    }

    println!("\n{:>10} {:>12} {:>12} {:>8}", "mu", "true error", "E1", "E1/err");
    for mu in [1.7, 25.0, 333.0, 999.0] {
        let sol = solve_reduced(&model, mu)?;
        let err = true_error(&sys, &model, &sol)?;
        let e1 = estimator_e1(&sys, &model, &sol);
        println!("{mu:>10} {err:>12.4e} {e1:>12.4e} {:>8.4}", e1 / err);
    }
    Ok(())
}
