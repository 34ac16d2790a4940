mod common;

use common::{benchmark, log_grid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbcert::estimators::*;
use rbcert::reduced::{solve_reduced, ReducedSolution};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn dense(a: &rbcert::fem::SymTridiagonal) -> DMatrix<f64> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => a.diag[i],
        1 => a.off[i.min(j)],
        _ => 0.0,
    })
}

#[test]
fn zero_solution_gives_delta_everywhere() {
    let (sys, model) = benchmark(2);
    let e2 = build_e2_data(&sys, &model).unwrap();
    for mu in [1.0, 17.0, 900.0] {
        let zero = ReducedSolution::zero(mu, 2);
        let e1 = estimator_e1(&sys, &model, &zero);
        assert!(rel(e1, e2.delta) < 1e-12, "{e1} vs {}", e2.delta);
        let v = estimator_e2(&e2, &zero).unwrap();
        assert_eq!(v.value, e2.delta_sq.hi.sqrt());
        assert_eq!(v.radicand, e2.delta_sq.hi);
        assert!(rel(estimator_e2_dd(&e2, &zero).unwrap().value, e2.delta) < 1e-15);
    }
}

#[test]
fn delta_matches_dense_oracle() {
    let (sys, model) = benchmark(1);
    let e2 = build_e2_data(&sys, &model).unwrap();
    let gram = dense(&sys.gram);
    let f = DVector::from_vec(sys.load.0.clone());
    let y = gram.clone().lu().solve(&f).unwrap();
    let oracle = f.dot(&y).sqrt();
    assert!(rel(e2.delta, oracle) < 1e-12, "{} vs {oracle}", e2.delta);
    // both evaluation orders
    let d2 = rbcert::fem::h1_inner_dd(&sys, &model.riesz_b, &model.riesz_b).unwrap();
    assert!(rel(d2.to_f64(), e2.delta_sq.to_f64()) < 1e-13);
}

#[test]
fn s12_matches_matrix_product_oracle() {
    let (sys, model) = benchmark(1);
    let e2 = build_e2_data(&sys, &model).unwrap();
    assert_eq!(e2.dim(), 2);
    let u = DVector::from_vec(model.snapshots[0].0.clone());
    let k = dense(&sys.stiffness);
    let m = dense(&sys.mass);
    let gram = dense(&sys.gram);
    let oracle = (&k * &u).dot(&gram.lu().solve(&(&m * &u)).unwrap());
    assert!(rel(e2.s_entry(0, 1).to_f64(), oracle) < 1e-12);
    assert_eq!(e2.s_entry(0, 1), e2.s_entry(1, 0));
}

#[test]
fn s_is_symmetric_psd() {
    let (sys, model) = benchmark(6);
    let e2 = build_e2_data(&sys, &model).unwrap();
    let s = e2.s_matrix();
    assert_eq!(s, s.transpose());
    let eig = s.clone().symmetric_eigen().eigenvalues;
    assert!(eig.min() >= -1e-12 * s.norm(), "{}", eig.min());
    assert!((0..12).all(|i| e2.s_entry(i, i).hi >= 0.0));
}

/// Every column of `T` satisfies the reduced equations
/// `Â₀ x₀ + Â₁ x₁ = b̂ X₀`, so `X(γ = 0) = e₁` is outside the range of `T`
/// and E3 only interpolates at Galerkin coefficient vectors.
#[test]
fn interpolation_columns_satisfy_reduced_equations() {
    let (sys, model) = benchmark(2);
    let e3 = build_e3_data(&sys, &model, &LogUniformSampler { mu_min: 1.0, mu_max: 1000.0 }, 5, 0).unwrap();
    for col in e3.t_matrix.column_iter() {
        let x0 = DVector::from_column_slice(&col.as_slice()[1..3]);
        let x1 = DVector::from_column_slice(&col.as_slice()[3..5]);
        let lhs = &model.a0_hat * x0 + &model.a1_hat * x1;
        let rhs = &model.b_hat * col[0];
        assert!((lhs - &rhs).norm() < 1e-12 * rhs.norm());
    }
}

#[test]
fn x_vector_layout() {
    let sol = ReducedSolution { mu: 3.0, gamma: vec![2.0] };
    assert_eq!(x_vector(&sol).0, vec![1.0, 2.0, 6.0, 4.0, 12.0, 36.0]);
    assert_eq!(xvector_dim(1), 6);
    assert_eq!(xvector_dim(6), 91);
    let zero = ReducedSolution::zero(5.0, 3);
    let x = x_vector(&zero);
    assert_eq!(x.len(), xvector_dim(3));
    assert_eq!(x.0[0], 1.0);
    assert!(x.0[1..].iter().all(|&v| v == 0.0));
}

#[test]
fn linear_form_reproduces_radicand() {
    let (sys, model) = benchmark(4);
    let e2 = build_e2_data(&sys, &model).unwrap();
    let q = linear_form(&e2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let sol = ReducedSolution {
            mu: rng.random_range(1.0..1000.0),
            gamma: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let qx: f64 = q.iter().zip(&x_vector(&sol).0).map(|(a, b)| a * b).sum();
        let r = estimator_e2(&e2, &sol).unwrap().radicand;
        assert!(rel(qx, r) < 1e-13, "{qx} vs {r}");
    }
}

#[test]
fn e2_agrees_with_e1_before_convergence() {
    for n in [1, 2] {
        let (sys, model) = benchmark(n);
        let e2 = build_e2_data(&sys, &model).unwrap();
        let mut used = 0;
        for mu in log_grid(1.0, 1000.0, 100) {
            let sol = solve_reduced(&model, mu).unwrap();
            let a = estimator_e1(&sys, &model, &sol);
            if a < 1e-4 {
                continue;
            }
            used += 1;
            let b = estimator_e2(&e2, &sol).unwrap().value;
            let c = estimator_e2_dd(&e2, &sol).unwrap().value;
            assert!(rel(b, a) < 1e-9, "n={n} mu={mu}: {b} vs {a}");
            assert!(rel(c, a) < 1e-12);
        }
        assert!(used > 50);
    }
}

#[test]
fn e3_data_invariants_and_roundtrip() {
    let (sys, model) = benchmark(2);
    let sampler = LogUniformSampler { mu_min: 1.0, mu_max: 1000.0 };
    let e3 = build_e3_data(&sys, &model, &sampler, 11, 0).unwrap();
    assert_eq!(e3.n_samples(), 15);
    assert!(e3.values.iter().all(|&v| v >= 0.0));
    assert!(e3.cond_estimate.is_finite() && e3.cond_estimate > 1.0);
    for (r, &mu) in e3.interp_params.iter().enumerate() {
        let sol = solve_reduced(&model, mu).unwrap();
        assert_eq!(e3.t_matrix.column(r).as_slice(), x_vector(&sol).0.as_slice());
    }
    let json = serde_json::to_string(&e3).unwrap();
    let back: E3Data = serde_json::from_str(&json).unwrap();
    assert_eq!(back, e3);
    let sol = solve_reduced(&model, 77.0).unwrap();
    assert_eq!(estimator_e3(&back, &sol).unwrap(), estimator_e3(&e3, &sol).unwrap());
}

#[test]
fn e3_tracks_e1_and_oversampling_agrees() {
    let (sys, model) = benchmark(6);
    let sampler = LogUniformSampler { mu_min: 1.0, mu_max: 1000.0 };
    let square = build_e3_data(&sys, &model, &sampler, 42, 0).unwrap();
    let over = build_e3_data(&sys, &model, &sampler, 42, default_oversample(6)).unwrap();
    assert_eq!(over.n_samples(), 91 + 46);
    assert!(over.is_oversampled());
    for mu in log_grid(1.0, 1000.0, 120) {
        let sol = solve_reduced(&model, mu).unwrap();
        let e1 = estimator_e1(&sys, &model, &sol);
        let a = estimator_e3(&square, &sol).unwrap().value;
        let b = estimator_e3(&over, &sol).unwrap().value;
        assert!(rel(a, e1) < 1e-3, "mu={mu}: {a} vs {e1}");
        assert!(rel(b, e1) < 1e-3);
    }
}

#[test]
fn sampler_is_deterministic_and_in_range() {
    let s = LogUniformSampler { mu_min: 2.0, mu_max: 50.0 };
    let a = s.draw(500, 9);
    assert_eq!(a, s.draw(500, 9));
    assert_ne!(a, s.draw(500, 10));
    assert!(a.iter().all(|&m| (2.0..=50.0).contains(&m)));
}

#[test]
fn dimension_mismatch_is_reported() {
    let (sys, model) = benchmark(2);
    let e2 = build_e2_data(&sys, &model).unwrap();
    let wrong = ReducedSolution::zero(2.0, 3);
    assert!(estimator_e2(&e2, &wrong).is_err());
    assert!(estimator_e2_dd(&e2, &wrong).is_err());
}
