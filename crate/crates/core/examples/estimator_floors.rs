//! E1, E2 and E2 in double-double near a snapshot parameter, where the
//! estimator should vanish and the compact formula hits its sqrt(eps) floor.
//!
//! Run with `cargo run --example estimator_floors`.

use rbcert::estimators::{build_e2_data, estimator_e1, estimator_e2, estimator_e2_dd};
use rbcert::experiments::ExperimentConfig;
use rbcert::fem::assemble;
use rbcert::precision::UNIT_ROUNDOFF;
use rbcert::reduced::{greedy_build, solve_reduced, GreedyOptions};

fn main() -> rbcert::Result<()> {
    let cfg = ExperimentConfig::default();
    let sys = assemble(cfg.n_cells)?;
    let (model, _) = greedy_build(&sys, &cfg.training_grid(), GreedyOptions::default())?;
    let data = build_e2_data(&sys, &model)?;
    println!("delta = {:.6}", data.delta);
    println!("predicted floors: E1 ~ {:.2e}, E2 ~ {:.2e}", data.delta * UNIT_ROUNDOFF, data.delta * UNIT_ROUNDOFF.sqrt());

    let anchor = model.snapshot_params[3];
    println!("\napproaching snapshot mu = {anchor}");
    println!("{:>12} {:>12} {:>12} {:>12} {:>12}", "offset", "E1", "E2", "E2 radicand", "E2 dd");
    for k in (0..=8).rev() {
        let offset = if k == 0 { 0.0 } else { 10f64.powi(-(8 - k as i32)) };
        let sol = solve_reduced(&model, anchor * (1.0 + offset))?;
        let e2 = estimator_e2(&data, &sol)?;
        println!(
            "{offset:>12.0e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            estimator_e1(&sys, &model, &sol),
            e2.value,
            e2.radicand,
            estimator_e2_dd(&data, &sol)?.value
        );
    }
    Ok(())
}
