//! Error-free transformations and double-double arithmetic.
//!
//! Run with `cargo run --example double_double`.

use rbcert::precision::{two_prod, two_sum, DoubleDouble, TWO_PROD_USES_FMA, UNIT_ROUNDOFF};

fn main() {
    println!("two_prod uses FMA: {TWO_PROD_USES_FMA}");
    println!("unit roundoff eps = {UNIT_ROUNDOFF:e}");

    let (s, e) = two_sum(1.0, 1e-17);
    println!("two_sum(1, 1e-17) = {s} + {e:e}");

    let a = 1.0 + 2f64.powi(-30);
    let (p, e) = two_prod(a, a);
    println!("two_prod((1 + 2^-30)^2) = {p} + {e:e}  (tail is 2^-60 = {:e})", 2f64.powi(-60));

    // (1 + d)^2 - 1 - 2d for a tiny d: zero in double, d^2 in double-double.
    let d = 1e-9;
    let plain = (1.0 + d) * (1.0 + d) - 1.0 - 2.0 * d;
    let x = DoubleDouble::from_sum(1.0, d);
    let dd = x * x - DoubleDouble::ONE - DoubleDouble::from_f64(2.0 * d);
    println!("(1+d)^2 - 1 - 2d, d = 1e-9: double {plain:e}, double-double {:e}", dd.to_f64());

    let two = DoubleDouble::from_f64(2.0);
    let r = two.sqrt().unwrap();
    println!("sqrt(2) = {r}");
    println!("sqrt(2)^2 - 2 = {:e}", (r * r - two).to_f64());
    println!("1/3 = {}", DoubleDouble::ONE / DoubleDouble::from_f64(3.0));
}
