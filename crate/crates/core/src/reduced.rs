//! Reduced basis: snapshot storage, the online Galerkin solve and the
//! offline greedy loop.
//!
//! The bilinear form is affine, `a_mu = a₀ + mu a₁` with `a₀ = K` and
//! `a₁ = M`, and the residual operator splits as
//! `G_mu u = G₀₀ + G₀ u + mu G₁ u` with `G₀₀ = -J b`. The model stores the
//! Riesz representatives of all three pieces in double-double so that
//! offline inner products can be formed to ~32 digits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::estimator_e1;
use crate::fem::{riesz_representative_dd, solve_truth, SymTridiagonal, TruthSystem, TruthVector};
use crate::precision::{dot_dd, DoubleDouble};

/// Bound on `‖r‖² / ‖u‖²`, the squared relative size of the part of a new
/// snapshot orthogonal to the basis, below which it counts as dependent.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-24;

/// Greedy stopping tolerance on the maximal estimator.
pub const DEFAULT_GREEDY_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    /// Basis vectors; raw truth solutions unless `orthonormalize` is set.
    pub snapshots: Vec<TruthVector>,
    pub snapshot_params: Vec<f64>,
    /// `a₀(u_i, u_j)`.
    pub a0_hat: DMatrix<f64>,
    /// `a₁(u_i, u_j)`.
    pub a1_hat: DMatrix<f64>,
    /// `b(u_j)`.
    pub b_hat: DVector<f64>,
    /// Trailing double-double parts of `a0_hat`, `a1_hat`, `b_hat`.
    pub a0_hat_lo: DMatrix<f64>,
    pub a1_hat_lo: DMatrix<f64>,
    pub b_hat_lo: DVector<f64>,
    /// `G₀₀ = -J b`.
    pub riesz_b: Vec<DoubleDouble>,
    /// `G₀ u_i = J a₀(u_i, ·)`.
    pub riesz_a0: Vec<Vec<DoubleDouble>>,
    /// `G₁ u_i = J a₁(u_i, ·)`.
    pub riesz_a1: Vec<Vec<DoubleDouble>>,
    /// Lower bound of the coercivity constant, uniform in `mu`.
    pub beta: f64,
    pub orthonormalize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub mu: f64,
    pub gamma: Vec<f64>,
}

impl ReducedSolution {
    /// The zero reduced solution (`û = 0`), whose residual is `-b`.
    pub fn zero(mu: f64, n_rb: usize) -> Self {
        Self {
            mu,
            gamma: vec![0.0; n_rb],
        }
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

fn round_all(v: &[DoubleDouble]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

impl ReducedModel {
    /// An empty model; computes `G₀₀` once.
    pub fn new(sys: &TruthSystem) -> Result<Self> {
        Self::with_options(sys, 1.0, false)
    }

    pub fn with_options(sys: &TruthSystem, beta: f64, orthonormalize: bool) -> Result<Self> {
        let minus_b: Vec<DoubleDouble> = sys.load.iter().map(|&f| DoubleDouble::from_f64(-f)).collect();
        Ok(Self {
            snapshots: Vec::new(),
            snapshot_params: Vec::new(),
            a0_hat: DMatrix::zeros(0, 0),
            a1_hat: DMatrix::zeros(0, 0),
            b_hat: DVector::zeros(0),
            a0_hat_lo: DMatrix::zeros(0, 0),
            a1_hat_lo: DMatrix::zeros(0, 0),
            b_hat_lo: DVector::zeros(0),
            riesz_b: riesz_representative_dd(sys, &minus_b)?,
            riesz_a0: Vec::new(),
            riesz_a1: Vec::new(),
            beta,
            orthonormalize,
        })
    }

    /// Reduced dimension `N̂`.
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn truth_dim(&self) -> usize {
        self.riesz_b.len()
    }

    /// Riesz pieces in the `I = k N̂ + i` order: all `G₀ u_i`, then all `G₁ u_i`.
    pub fn riesz_pieces(&self) -> impl Iterator<Item = &[DoubleDouble]> {
        self.riesz_a0
            .iter()
            .chain(self.riesz_a1.iter())
            .map(|v| v.as_slice())
    }

    /// Solves the truth problem at `mu_new` and appends it to the basis.
    ///
    /// On error the model is left unchanged.
    pub fn add_snapshot(&mut self, sys: &TruthSystem, mu_new: f64) -> Result<()> {
        if self.snapshot_params.contains(&mu_new) {
            return Err(Error::DuplicateParameter(mu_new));
        }
        if sys.dim() != self.truth_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.truth_dim(),
                got: sys.dim(),
            });
        }
        let u = solve_truth(sys, mu_new)?;
        let (u, pivot) = self.orthogonal_residual(sys, &u);
        if pivot < DEPENDENCE_THRESHOLD {
            return Err(Error::LinearDependence { mu: mu_new, pivot });
        }
        let u_dd = u.to_dd();
        let ku = sys.stiffness.matvec_dd(&u_dd);
        let mu_ = sys.mass.matvec_dd(&u_dd);
        let g0 = riesz_representative_dd(sys, &ku)?;
        let g1 = riesz_representative_dd(sys, &mu_)?;

        let n = self.len();
        let mut a0 = self.a0_hat.clone().resize(n + 1, n + 1, 0.0);
        let mut a1 = self.a1_hat.clone().resize(n + 1, n + 1, 0.0);
        let mut a0_lo = self.a0_hat_lo.clone().resize(n + 1, n + 1, 0.0);
        let mut a1_lo = self.a1_hat_lo.clone().resize(n + 1, n + 1, 0.0);
        let project = |op: &SymTridiagonal, j: usize| -> DoubleDouble {
            let v = if j == n { &u } else { &self.snapshots[j] };
            op.bilinear_dd(&u_dd, &v.to_dd())
        };
        for j in 0..=n {
            let k = project(&sys.stiffness, j);
            let m = project(&sys.mass, j);
            for (hi, lo, x) in [(&mut a0, &mut a0_lo, k), (&mut a1, &mut a1_lo, m)] {
                hi[(n, j)] = x.hi;
                hi[(j, n)] = x.hi;
                lo[(n, j)] = x.lo;
                lo[(j, n)] = x.lo;
            }
        }
        let b_new = dot_dd(&sys.load, &u);
        let mut b_hat = self.b_hat.clone().resize_vertically(n + 1, 0.0);
        let mut b_hat_lo = self.b_hat_lo.clone().resize_vertically(n + 1, 0.0);
        b_hat[n] = b_new.hi;
        b_hat_lo[n] = b_new.lo;

        self.a0_hat = a0;
        self.a1_hat = a1;
        self.b_hat = b_hat;
        self.a0_hat_lo = a0_lo;
        self.a1_hat_lo = a1_lo;
        self.b_hat_lo = b_hat_lo;
        self.snapshots.push(u);
        self.snapshot_params.push(mu_new);
        self.riesz_a0.push(g0);
        self.riesz_a1.push(g1);
        Ok(())
    }

    /// Component of `u` H¹-orthogonal to the current basis and its squared
    /// norm relative to `‖u‖²`. When orthonormalizing, the returned vector
    /// is normalized.
    fn orthogonal_residual(&self, sys: &TruthSystem, u: &TruthVector) -> (TruthVector, f64) {
        let gram = &sys.gram;
        let u_norm2 = gram.bilinear_dd(&u.to_dd(), &u.to_dd()).to_f64();
        if self.is_empty() {
            let out = if self.orthonormalize {
                TruthVector(u.iter().map(|x| x / u_norm2.sqrt()).collect())
            } else {
                u.clone()
            };
            return (out, 1.0);
        }
        // Two passes of classical Gram-Schmidt against the (possibly raw) basis.
        let basis_dd: Vec<Vec<DoubleDouble>> = self.snapshots.iter().map(|s| s.to_dd()).collect();
        let n = self.len();
        let mut basis_gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let g = gram.bilinear_dd(&basis_dd[i], &basis_dd[j]).to_f64();
                basis_gram[(i, j)] = g;
                basis_gram[(j, i)] = g;
            }
        }
        let mut r = u.to_dd();
        let Some(chol) = basis_gram.cholesky() else {
            return (u.clone(), 0.0);
        };
        for _ in 0..2 {
            let c = DVector::from_iterator(
                n,
                basis_dd.iter().map(|b| gram.bilinear_dd(b, &r).to_f64()),
            );
            let coeff = chol.solve(&c);
            for (i, b) in basis_dd.iter().enumerate() {
                for (rj, &bj) in r.iter_mut().zip(b) {
                    *rj -= bj.mul_f64(coeff[i]);
                }
            }
        }
        let r_norm2 = gram.bilinear_dd(&r, &r).to_f64();
        let pivot = r_norm2 / u_norm2;
        let out = if self.orthonormalize {
            let s = r_norm2.sqrt();
            TruthVector(r.iter().map(|x| x.to_f64() / s).collect())
        } else {
            u.clone()
        };
        (out, pivot)
    }

    /// `Â_mu = Â₀ + mu Â₁`.
    pub fn reduced_matrix(&self, mu: f64) -> DMatrix<f64> {
        &self.a0_hat + &self.a1_hat * mu
    }

    /// `û = Σ γ_i u_i` in working precision.
    pub fn lift(&self, sol: &ReducedSolution) -> TruthVector {
        let mut out = vec![0.0; self.truth_dim()];
        for (g, u) in sol.gamma.iter().zip(&self.snapshots) {
            for (o, x) in out.iter_mut().zip(u.iter()) {
                *o += g * x;
            }
        }
        TruthVector(out)
    }

    /// `û = Σ γ_i u_i` with exact products and double-double sums.
    pub fn lift_dd(&self, sol: &ReducedSolution) -> Vec<DoubleDouble> {
        let mut out = vec![DoubleDouble::ZERO; self.truth_dim()];
        for (&g, u) in sol.gamma.iter().zip(&self.snapshots) {
            for (o, &x) in out.iter_mut().zip(u.iter()) {
                *o = o.add_prod(g, x);
            }
        }
        out
    }

    /// Raw-snapshot Gram matrix in H¹, rounded; used for diagnostics.
    pub fn snapshot_gram(&self, sys: &TruthSystem) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            round_all(&[sys.gram.bilinear_dd(&self.snapshots[i].to_dd(), &self.snapshots[j].to_dd())])[0]
        })
    }
}

/// Online Galerkin solve `(Â₀ + mu Â₁) γ = b̂`; touches no size-`N` data.
///
/// The `N̂ × N̂` system is assembled and eliminated in double-double, so the
/// computed `γ` is the exact Galerkin coefficient vector up to a final
/// rounding even when the raw snapshot basis is badly conditioned.
pub fn solve_reduced(model: &ReducedModel, mu: f64) -> Result<ReducedSolution> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    if !mu.is_finite() || mu < 1.0 {
        return Err(Error::OutOfDomain(mu));
    }
    let n = model.len();
    let dd = |hi: f64, lo: f64| DoubleDouble { hi, lo };
    let mut a: Vec<DoubleDouble> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            dd(model.a0_hat[(i, j)], model.a0_hat_lo[(i, j)])
                + dd(model.a1_hat[(i, j)], model.a1_hat_lo[(i, j)]).mul_f64(mu)
        })
        .collect();
    let mut b: Vec<DoubleDouble> = (0..n).map(|i| dd(model.b_hat[i], model.b_hat_lo[i])).collect();
    let gamma = gauss_solve_dd(n, &mut a, &mut b).ok_or(Error::ReducedSingular(mu))?;
    Ok(ReducedSolution {
        mu,
        gamma: gamma.iter().map(|g| g.to_f64()).collect(),
    })
}

/// Gaussian elimination with partial pivoting on a row-major `n × n` system.
fn gauss_solve_dd(n: usize, a: &mut [DoubleDouble], b: &mut [DoubleDouble]) -> Option<Vec<DoubleDouble>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())?;
        if a[piv * n + col].hi == 0.0 || !a[piv * n + col].is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            for k in col..n {
                let t = a[col * n + k] * f;
                a[row * n + k] -= t;
            }
            let t = b[col] * f;
            b[row] -= t;
        }
    }
    let mut x = vec![DoubleDouble::ZERO; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in i + 1..n {
            acc -= a[i * n + k] * x[k];
        }
        x[i] = acc / a[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Reduced solution, or the zero solution for an empty model.
pub(crate) fn solve_reduced_or_zero(model: &ReducedModel, mu: f64) -> Result<ReducedSolution> {
    if model.is_empty() {
        Ok(ReducedSolution::zero(mu, 0))
    } else {
        solve_reduced(model, mu)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyOptions {
    pub n_max: usize,
    pub tol: f64,
    pub orthonormalize: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            n_max: 6,
            tol: DEFAULT_GREEDY_TOL,
            orthonormalize: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    /// Parameter added at this step.
    pub mu: f64,
    /// Maximum of E1 over the training set before adding `mu`.
    pub max_estimator: f64,
}

/// Index and value of the largest estimator; ties go to the first (smallest `mu`) entry.
fn argmax(values: &[(f64, f64)]) -> Option<(f64, f64)> {
    values
        .iter()
        .copied()
        .fold(None, |best, cur| match best {
            Some((_, b)) if cur.1 <= b => best,
            _ => Some(cur),
        })
}

/// Greedy basis construction driven by the full-size estimator E1.
///
/// Candidates already in the basis are skipped. Returns the model and one
/// history entry per selected parameter.
pub fn greedy_build(
    sys: &TruthSystem,
    training_set: &[f64],
    options: GreedyOptions,
) -> Result<(ReducedModel, Vec<GreedyStep>)> {
    if training_set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if let Some(&bad) = training_set.iter().find(|&&mu| mu.is_nan() || mu < 1.0) {
        return Err(Error::OutOfDomain(bad));
    }
    let mut sorted = training_set.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let mut model = ReducedModel::with_options(sys, 1.0, options.orthonormalize)?;
    let mut history = Vec::new();
    while model.len() < options.n_max {
        let mut scores = Vec::with_capacity(sorted.len());
        for &mu in &sorted {
            if model.snapshot_params.contains(&mu) {
                continue;
            }
            let sol = solve_reduced_or_zero(&model, mu)?;
            scores.push((mu, estimator_e1(sys, &model, &sol)));
        }
        let Some((mu_star, max_est)) = argmax(&scores) else {
            break;
        };
        if max_est <= options.tol {
            break;
        }
        model.add_snapshot(sys, mu_star)?;
        history.push(GreedyStep {
            mu: mu_star,
            max_estimator: max_est,
        });
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, h1_norm};

    fn h1_dist(sys: &TruthSystem, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        h1_norm(sys, &d).unwrap()
    }

    #[test]
    fn first_snapshot_reduced_operators() {
        let sys = assemble(200).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        model.add_snapshot(&sys, 1.0).unwrap();
        let u = &model.snapshots[0];
        let a0 = sys.stiffness.bilinear(u, u);
        let b: f64 = sys.load.iter().zip(u.iter()).map(|(f, x)| f * x).sum();
        assert!((model.a0_hat[(0, 0)] - a0).abs() <= 1e-13 * a0);
        assert!((model.b_hat[0] - b).abs() <= 1e-13 * b);
        assert_eq!(model.len(), 1);
    }

    #[test]
    fn duplicate_rejected_and_model_unchanged() {
        let sys = assemble(50).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        model.add_snapshot(&sys, 3.0).unwrap();
        let before = model.clone();
        assert!(matches!(model.add_snapshot(&sys, 3.0), Err(Error::DuplicateParameter(_))));
        assert_eq!(model, before);
    }

    #[test]
    fn nearly_dependent_snapshot_rejected() {
        let sys = assemble(50).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        model.add_snapshot(&sys, 10.0).unwrap();
        let err = model.add_snapshot(&sys, 10.0 * (1.0 + 1e-12)).unwrap_err();
        assert!(matches!(err, Error::LinearDependence { .. }), "{err:?}");
        assert_eq!(model.len(), 1);
    }

    #[test]
    fn scalar_reduced_solve() {
        let sys = assemble(40).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        model.add_snapshot(&sys, 5.0).unwrap();
        let mu = 37.0;
        let sol = solve_reduced(&model, mu).unwrap();
        let expected = model.b_hat[0] / (model.a0_hat[(0, 0)] + mu * model.a1_hat[(0, 0)]);
        assert!((sol.gamma[0] - expected).abs() <= 1e-15 * expected.abs());
    }

    #[test]
    fn reduced_solve_errors() {
        let sys = assemble(10).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        assert!(matches!(solve_reduced(&model, 2.0), Err(Error::EmptyModel)));
        model.add_snapshot(&sys, 2.0).unwrap();
        assert!(matches!(solve_reduced(&model, 0.9), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn galerkin_reproduces_snapshots() {
        let sys = assemble(200).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        for &mu in &[1.0, 30.0, 700.0] {
            model.add_snapshot(&sys, mu).unwrap();
        }
        for (i, &mu) in model.snapshot_params.iter().enumerate() {
            let sol = solve_reduced(&model, mu).unwrap();
            let lifted = model.lift(&sol);
            let d = h1_dist(&sys, &lifted, &model.snapshots[i]);
            let norm = h1_norm(&sys, &model.snapshots[i]).unwrap();
            assert!(d <= 1e-10 * norm, "mu {mu}: {d}");
        }
    }

    #[test]
    fn affine_assembly_matches_projection() {
        let sys = assemble(100).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        for &mu in &[1.0, 8.0, 64.0] {
            model.add_snapshot(&sys, mu).unwrap();
        }
        let mu = 13.7;
        let a = model.reduced_matrix(mu);
        let op = sys.operator(mu);
        for i in 0..3 {
            for j in 0..3 {
                let direct = op.bilinear(&model.snapshots[i], &model.snapshots[j]);
                assert!((a[(i, j)] - direct).abs() <= 1e-13 * direct.abs());
            }
        }
        assert_eq!(model.a0_hat, model.a0_hat.transpose());
        assert_eq!(model.a1_hat, model.a1_hat.transpose());
    }

    #[test]
    fn riesz_pieces_are_consistent() {
        let sys = assemble(60).unwrap();
        let mut model = ReducedModel::new(&sys).unwrap();
        model.add_snapshot(&sys, 4.0).unwrap();
        let v: Vec<f64> = (0..59).map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.1).collect();
        let g0: Vec<f64> = model.riesz_a0[0].iter().map(|x| x.to_f64()).collect();
        let lhs = sys.gram.bilinear(&g0, &v);
        let rhs = sys.stiffness.bilinear(&model.snapshots[0], &v);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn orthonormal_option_keeps_span() {
        let sys = assemble(100).unwrap();
        let mut raw = ReducedModel::new(&sys).unwrap();
        let mut ortho = ReducedModel::with_options(&sys, 1.0, true).unwrap();
        for &mu in &[1.0, 20.0, 400.0] {
            raw.add_snapshot(&sys, mu).unwrap();
            ortho.add_snapshot(&sys, mu).unwrap();
        }
        let g = ortho.snapshot_gram(&sys);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-12);
            }
        }
        let mu = 77.0;
        let a = raw.lift(&solve_reduced(&raw, mu).unwrap());
        let b = ortho.lift(&solve_reduced(&ortho, mu).unwrap());
        assert!(h1_dist(&sys, &a, &b) < 1e-12);
    }

    #[test]
    fn greedy_picks_smallest_first_and_distinct() {
        let sys = assemble(100).unwrap();
        let train: Vec<f64> = (0..40).map(|k| 10f64.powf(3.0 * k as f64 / 39.0)).collect();
        let (model, hist) = greedy_build(&sys, &train, GreedyOptions { n_max: 4, ..Default::default() }).unwrap();
        assert_eq!(model.len(), 4);
        assert_eq!(hist[0].mu, 1.0);
        let delta = crate::fem::h1_norm(&sys, &round_all(&model.riesz_b)).unwrap();
        assert!((hist[0].max_estimator - delta).abs() <= 1e-14 * delta);
        let mut p = model.snapshot_params.clone();
        p.sort_by(f64::total_cmp);
        p.dedup();
        assert_eq!(p.len(), 4);
        for w in hist.windows(2) {
            assert!(w[1].max_estimator < w[0].max_estimator);
        }
    }

    #[test]
    fn greedy_input_errors() {
        let sys = assemble(10).unwrap();
        assert!(matches!(greedy_build(&sys, &[], GreedyOptions::default()), Err(Error::EmptyTrainingSet)));
        assert!(matches!(greedy_build(&sys, &[0.5, 2.0], GreedyOptions::default()), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn argmax_ties_prefer_first() {
        assert_eq!(argmax(&[(1.0, 2.0), (2.0, 2.0), (3.0, 1.0)]), Some((1.0, 2.0)));
        assert_eq!(argmax(&[(1.0, 1.0), (2.0, 3.0)]), Some((2.0, 3.0)));
        assert_eq!(argmax(&[]), None);
    }
}
