#![allow(dead_code)]

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbcert::precision::{two_prod, two_sum, DoubleDouble};

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn rat_dd(x: DoubleDouble) -> BigRational {
    rat(x.hi) + rat(x.lo)
}

pub fn rel_err(approx: &BigRational, exact: &BigRational) -> f64 {
    if exact.is_zero() {
        return if approx.is_zero() { 0.0 } else { f64::INFINITY };
    }
    ((approx - exact).abs() / exact.abs()).to_f64().unwrap()
}

/// Random `f64` with magnitude log-uniform in `[1e-8, 1e8]` and random sign.
pub fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    let e = rng.random_range(-8.0..8.0);
    let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
    s * 10f64.powf(e)
}

/// Random normalized double-double with a full-width trailing part.
pub fn random_dd(rng: &mut ChaCha8Rng) -> DoubleDouble {
    let hi = magnitude(rng);
    let lo = hi * f64::EPSILON * rng.random_range(-0.5..0.5);
    DoubleDouble::new(hi, lo)
}

#[derive(Debug, Default)]
pub struct OracleReport {
    pub cases: usize,
    pub two_sum_inexact: usize,
    pub two_prod_inexact: usize,
    pub add: f64,
    pub sub: f64,
    pub mul: f64,
    pub div: f64,
    pub sqrt: f64,
}

impl OracleReport {
    pub fn worst(&self) -> f64 {
        [self.add, self.sub, self.mul, self.div, self.sqrt].into_iter().fold(0.0, f64::max)
    }
}

/// Checks the error-free transforms for exactness and the double-double
/// operations against exact rational arithmetic.
pub fn run_precision_oracle(cases: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = OracleReport {
        cases,
        ..Default::default()
    };
    for _ in 0..cases {
        let (a, b) = (magnitude(&mut rng), magnitude(&mut rng));
        let (s, e) = two_sum(a, b);
        if rat(s) + rat(e) != rat(a) + rat(b) {
            rep.two_sum_inexact += 1;
        }
        let (p, e) = two_prod(a, b);
        if rat(p) + rat(e) != rat(a) * rat(b) {
            rep.two_prod_inexact += 1;
        }

        let (x, y) = (random_dd(&mut rng), random_dd(&mut rng));
        let (rx, ry) = (rat_dd(x), rat_dd(y));
        rep.add = rep.add.max(rel_err(&rat_dd(x + y), &(&rx + &ry)));
        rep.sub = rep.sub.max(rel_err(&rat_dd(x - y), &(&rx - &ry)));
        rep.mul = rep.mul.max(rel_err(&rat_dd(x * y), &(&rx * &ry)));
        rep.div = rep.div.max(rel_err(&rat_dd(x / y), &(&rx / &ry)));
        let ax = x.abs();
        let r = ax.sqrt().unwrap();
        let rr = rat_dd(r);
        // sqrt error is half the relative error of its square.
        rep.sqrt = rep.sqrt.max(0.5 * rel_err(&(&rr * &rr), &rat_dd(ax)));
    }
    rep
}

pub fn big(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

use rbcert::experiments::ExperimentConfig;
use rbcert::fem::{assemble, TruthSystem};
use rbcert::reduced::{greedy_build, GreedyOptions, ReducedModel};

/// Benchmark system (200 cells) and a greedy basis of size `n` on `[1, 1000]`.
pub fn benchmark(n: usize) -> (TruthSystem, ReducedModel) {
    let cfg = ExperimentConfig::default();
    let sys = assemble(cfg.n_cells).unwrap();
    let opts = GreedyOptions {
        n_max: n,
        ..Default::default()
    };
    let (model, _) = greedy_build(&sys, &cfg.training_grid(), opts).unwrap();
    assert_eq!(model.len(), n);
    (sys, model)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * (k as f64 + 0.5) / n as f64).exp())
        .collect()
}
