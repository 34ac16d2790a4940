//! P1 finite elements for `-u'' + mu u = 1` on `(0, 1)`, checked against the
//! closed-form solution.
//!
//! Run with `cargo run --example truth_convergence`.

use rbcert::fem::{assemble, h1_error_vs_analytic, h1_norm, solve_truth};

fn main() -> rbcert::Result<()> {
    println!("{:>8} {:>8} {:>14} {:>8}", "mu", "cells", "H1 error", "rate");
    for mu in [1.0, 100.0, 1000.0] {
        let mut prev: Option<f64> = None;
        for n in [25, 50, 100, 200, 400] {
            let sys = assemble(n)?;
            let u = solve_truth(&sys, mu)?;
            let err = h1_error_vs_analytic(&sys, &u, mu)?;
            let rate = prev.map_or(String::new(), |p| format!("{:.3}", (p / err).log2()));
            println!("{mu:>8} {n:>8} {err:>14.6e} {rate:>8}");
            prev = Some(err);
        }
    }
    let sys = assemble(200)?;
    let u = solve_truth(&sys, 1.0)?;
    println!("||u_h||_H1 at mu = 1, h = 0.005: {:.12}", h1_norm(&sys, &u)?);
    Ok(())
}
