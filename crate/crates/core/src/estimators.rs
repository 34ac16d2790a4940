//! Four evaluations of the same residual-based a posteriori error bound
//! `β⁻¹ ‖G_mu û_mu‖_{H¹}`:
//!
//! * **E1**: forms the size-`N` residual representative and takes its norm.
//!   Accurate (floor `~ δ ε / β`) but costs `O(N N̂)`.
//! * **E2**: the compact quadratic form `δ² + 2 sᵀx + xᵀ S x`. Independent
//!   of `N`, but the radicand is a difference of `O(δ²)` terms, so the
//!   estimator cannot drop below `~ δ √ε / β`.
//! * **E2dd**: the same quadratic form evaluated in double-double from
//!   offline data stored to double-double accuracy.
//! * **E3**: interpolation. The radicand is a linear form `q · X(mu)` in
//!   the lifted vector `X(mu) = (1, x_I, x_I x_J)`. Given `d` sample
//!   parameters `mu_r` with accurate squared residuals `V_r`, solving
//!   `T λ = X(mu)` yields the radicand as `Σ λ_r V_r`, without ever forming
//!   the large cancelling terms.
//!
//! Index convention for the `2N̂` affine pieces: `I = k N̂ + i`, where
//! `k ∈ {0, 1}` selects `a₀` / `a₁` and `i` the basis vector (0-based).

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{h1_inner_dd, solve_truth_dd, TruthSystem};
use crate::precision::{pairwise_sum, DoubleDouble};
use crate::reduced::{solve_reduced_or_zero, ReducedModel, ReducedSolution};

/// Number of samples tried before the square interpolation build gives up.
pub const MAX_INTERPOLATION_ATTEMPTS: usize = 8;

/// `α_k(mu)` of the affine decomposition: `α₀ = 1`, `α₁ = mu`.
#[inline]
fn alpha(k: usize, mu: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        mu
    }
}

/// Coefficient vector `x_I = α_k(mu) γ_i(mu)`, length `2N̂`.
pub fn affine_coefficients(sol: &ReducedSolution) -> Vec<f64> {
    (0..2)
        .flat_map(|k| sol.gamma.iter().map(move |&g| alpha(k, sol.mu) * g))
        .collect()
}

/// E1: norm of the assembled residual representative, `O(N N̂)`.
///
/// Each entry of `g = G₀₀ + Σ γ_i G₀u_i + mu Σ γ_i G₁u_i` is summed pairwise
/// over its `2N̂ + 1` terms, then `‖g‖²` is one Gram quadratic form. An empty
/// solution (`γ = 0`) yields `‖G₀₀‖ = δ`.
pub fn estimator_e1(sys: &TruthSystem, model: &ReducedModel, sol: &ReducedSolution) -> f64 {
    let x = affine_coefficients(sol);
    let pieces: Vec<&[DoubleDouble]> = model.riesz_pieces().collect();
    let mut terms = Vec::with_capacity(pieces.len() + 1);
    let g: Vec<f64> = (0..model.truth_dim())
        .map(|j| {
            terms.clear();
            terms.push(model.riesz_b[j].hi);
            terms.extend(pieces.iter().zip(&x).map(|(p, &c)| c * p[j].hi));
            pairwise_sum(&terms)
        })
        .collect();
    sys.gram.bilinear(&g, &g).max(0.0).sqrt() / model.beta
}

/// `‖G_mu û_mu‖²` with the residual representative assembled and normed in
/// double-double. Offline use only.
pub fn residual_norm_sq_dd(sys: &TruthSystem, model: &ReducedModel, sol: &ReducedSolution) -> DoubleDouble {
    let x = affine_coefficients(sol);
    let pieces: Vec<&[DoubleDouble]> = model.riesz_pieces().collect();
    let g: Vec<DoubleDouble> = (0..model.truth_dim())
        .map(|j| {
            pieces
                .iter()
                .zip(&x)
                .fold(model.riesz_b[j], |acc, (p, &c)| acc + p[j].mul_f64(c))
        })
        .collect();
    sys.gram.bilinear_dd(&g, &g)
}

/// True H¹ error `‖u_mu - û_mu‖` against a double-double truth solve.
///
/// Diagnostic only: costs a truth solve.
pub fn true_error(sys: &TruthSystem, model: &ReducedModel, sol: &ReducedSolution) -> Result<f64> {
    let u = solve_truth_dd(sys, sol.mu)?;
    let u_hat = model.lift_dd(sol);
    let e: Vec<DoubleDouble> = u.iter().zip(&u_hat).map(|(&a, &b)| a - b).collect();
    Ok(h1_inner_dd(sys, &e, &e)?.to_f64().max(0.0).sqrt())
}

/// Offline data of the compact formula, stored to double-double accuracy.
///
/// The working-precision evaluator only reads the leading parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E2Data {
    pub n_rb: usize,
    pub beta: f64,
    /// `δ = ‖G₀₀‖`, rounded.
    pub delta: f64,
    /// `δ²`.
    pub delta_sq: DoubleDouble,
    /// `s_I = (G₀₀, G_k u_i)`, length `2N̂`.
    pub s: Vec<DoubleDouble>,
    /// `S_IJ = (G_k u_i, G_l u_j)`, `2N̂ × 2N̂` row-major, symmetric.
    pub s_mat: Vec<DoubleDouble>,
}

impl E2Data {
    pub fn dim(&self) -> usize {
        2 * self.n_rb
    }

    pub fn s_entry(&self, i: usize, j: usize) -> DoubleDouble {
        self.s_mat[i * self.dim() + j]
    }

    /// `S` rounded to working precision.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| self.s_entry(i, j).to_f64())
    }

    fn check(&self, sol: &ReducedSolution) -> Result<()> {
        if sol.len() != self.n_rb {
            return Err(Error::DimensionMismatch {
                expected: self.n_rb,
                got: sol.len(),
            });
        }
        Ok(())
    }
}

pub fn build_e2_data(sys: &TruthSystem, model: &ReducedModel) -> Result<E2Data> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    let pieces: Vec<&[DoubleDouble]> = model.riesz_pieces().collect();
    let m = pieces.len();
    let delta_sq = h1_inner_dd(sys, &model.riesz_b, &model.riesz_b)?;
    let s = pieces
        .iter()
        .map(|p| h1_inner_dd(sys, &model.riesz_b, p))
        .collect::<Result<Vec<_>>>()?;
    let mut raw = vec![DoubleDouble::ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            raw[i * m + j] = h1_inner_dd(sys, pieces[i], pieces[j])?;
        }
    }
    let mut s_mat = vec![DoubleDouble::ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            s_mat[i * m + j] = (raw[i * m + j] + raw[j * m + i]).mul_f64(0.5);
        }
    }
    Ok(E2Data {
        n_rb: model.len(),
        beta: model.beta,
        delta: delta_sq.sqrt()?.to_f64(),
        delta_sq,
        s,
        s_mat,
    })
}

/// Result of a square-root-of-radicand estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    /// `β⁻¹ sqrt(max(radicand, 0))`.
    pub value: f64,
    /// The signed radicand; negative values are the cancellation pathology.
    pub radicand: f64,
    /// Set when the radicand was negative and clamped to zero.
    pub clamped: bool,
}

impl Estimate {
    fn from_radicand(radicand: f64, beta: f64) -> Self {
        Self {
            value: radicand.max(0.0).sqrt() / beta,
            radicand,
            clamped: radicand < 0.0,
        }
    }
}

/// E2 in working precision.
pub fn estimator_e2(data: &E2Data, sol: &ReducedSolution) -> Result<Estimate> {
    data.check(sol)?;
    let x = affine_coefficients(sol);
    let m = x.len();
    let mut linear = 0.0;
    for i in 0..m {
        linear += data.s[i].hi * x[i];
    }
    let mut quad = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += data.s_entry(i, j).hi * x[j];
        }
        quad += x[i] * row;
    }
    let radicand = data.delta_sq.hi + 2.0 * linear + quad;
    Ok(Estimate::from_radicand(radicand, data.beta))
}

/// E2 with every sum and product carried in double-double.
///
/// `x` is promoted exactly; `δ²`, `s`, `S` are used at their stored
/// double-double accuracy.
pub fn estimator_e2_dd(data: &E2Data, sol: &ReducedSolution) -> Result<Estimate> {
    data.check(sol)?;
    let x = affine_coefficients(sol);
    let m = x.len();
    let mut acc = data.delta_sq;
    for i in 0..m {
        acc += data.s[i].mul_f64(x[i]).mul_f64(2.0);
    }
    for i in 0..m {
        let mut row = DoubleDouble::ZERO;
        for j in 0..m {
            row += data.s_entry(i, j).mul_f64(x[j]);
        }
        acc += row.mul_f64(x[i]);
    }
    let clamped = acc.hi < 0.0;
    let root = if clamped { DoubleDouble::ZERO } else { acc.sqrt()? };
    Ok(Estimate {
        value: root.to_f64() / data.beta,
        radicand: acc.to_f64(),
        clamped,
    })
}

/// `d = 1 + 3N̂ + 2N̂²`.
pub const fn xvector_dim(n_rb: usize) -> usize {
    1 + 3 * n_rb + 2 * n_rb * n_rb
}

/// Lifted vector `(1; x_I; x_I x_J for I <= J)`, quadratic part in lexicographic `(I, J)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct XVector(pub Vec<f64>);

impl XVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn x_vector(sol: &ReducedSolution) -> XVector {
    let x = affine_coefficients(sol);
    let m = x.len();
    let mut out = Vec::with_capacity(xvector_dim(sol.len()));
    out.push(1.0);
    out.extend_from_slice(&x);
    for i in 0..m {
        for j in i..m {
            out.push(x[i] * x[j]);
        }
    }
    XVector(out)
}

/// Coefficients `q` with `q · X(mu) = δ² + 2 sᵀx + xᵀ S x` (working precision).
pub fn linear_form(data: &E2Data) -> Vec<f64> {
    let m = data.dim();
    let mut q = Vec::with_capacity(xvector_dim(data.n_rb));
    q.push(data.delta_sq.to_f64());
    q.extend(data.s.iter().map(|s| 2.0 * s.to_f64()));
    for i in 0..m {
        for j in i..m {
            let s = data.s_entry(i, j).to_f64();
            q.push(if i == j { s } else { 2.0 * s });
        }
    }
    q
}

/// Rule for drawing interpolation parameters.
pub trait ParameterSampler {
    /// Draws `count` parameters, deterministically for a given `seed`.
    fn draw(&self, count: usize, seed: u64) -> Vec<f64>;
}

/// Uniform in `log(mu)` over `[mu_min, mu_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogUniformSampler {
    pub mu_min: f64,
    pub mu_max: f64,
}

impl ParameterSampler for LogUniformSampler {
    fn draw(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (self.mu_min.ln(), self.mu_max.ln());
        (0..count)
            .map(|_| (lo + (hi - lo) * rng.random::<f64>()).exp())
            .collect()
    }
}

#[derive(Clone, Debug)]
enum InterpolationSolver {
    Square(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    /// Minimum-norm solution of the underdetermined system via `Tᵀ = Q R`.
    MinNorm { q: DMatrix<f64>, r: DMatrix<f64> },
}

impl InterpolationSolver {
    fn new(t: &DMatrix<f64>) -> Self {
        if t.is_square() {
            Self::Square(t.clone().lu())
        } else {
            let qr = t.transpose().qr();
            Self::MinNorm { q: qr.q(), r: qr.r() }
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::Square(lu) => lu.solve(rhs),
            Self::MinNorm { q, r } => {
                let y = r.transpose().solve_lower_triangular(rhs)?;
                Some(q * y)
            }
        }
        .filter(|l| l.iter().all(|x| x.is_finite()))
    }
}

/// Offline data of the interpolation estimator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct E3Data {
    pub n_rb: usize,
    pub beta: f64,
    /// Seed that produced `interp_params`.
    pub seed: u64,
    /// `mu_r`, `r = 1..d'`.
    pub interp_params: Vec<f64>,
    /// `d × d'`, column `r` is `X(mu_r)`.
    pub t_matrix: DMatrix<f64>,
    /// `V_r = (β E1(mu_r))²`, with the residual norm taken in double-double.
    pub values: Vec<f64>,
    /// `‖T‖₁ ‖T⁺‖₁` from the computed factorization (`T⁺ = T⁻¹` when square).
    pub cond_estimate: f64,
    #[serde(skip)]
    solver: OnceLock<InterpolationSolver>,
}

impl PartialEq for E3Data {
    fn eq(&self, other: &Self) -> bool {
        self.n_rb == other.n_rb
            && self.beta == other.beta
            && self.seed == other.seed
            && self.interp_params == other.interp_params
            && self.t_matrix == other.t_matrix
            && self.values == other.values
            && self.cond_estimate == other.cond_estimate
    }
}

impl E3Data {
    pub fn dim(&self) -> usize {
        xvector_dim(self.n_rb)
    }

    pub fn n_samples(&self) -> usize {
        self.interp_params.len()
    }

    pub fn is_oversampled(&self) -> bool {
        self.n_samples() > self.dim()
    }

    fn solver(&self) -> &InterpolationSolver {
        self.solver.get_or_init(|| InterpolationSolver::new(&self.t_matrix))
    }

    /// Coefficients `λ(mu)` with `T λ = X(mu)`.
    pub fn lambda(&self, sol: &ReducedSolution) -> Result<DVector<f64>> {
        if sol.len() != self.n_rb {
            return Err(Error::DimensionMismatch {
                expected: self.n_rb,
                got: sol.len(),
            });
        }
        let x = DVector::from_vec(x_vector(sol).0);
        self.solver().solve(&x).ok_or(Error::SingularMatrix(0))
    }
}

/// Default number of extra interpolation samples when oversampling: `ceil(d / 2)`.
pub const fn default_oversample(n_rb: usize) -> usize {
    xvector_dim(n_rb).div_ceil(2)
}

impl InterpolationSolver {
    /// `‖T‖₁ ‖T⁺‖₁`, with `T⁺` applied column by column through the factorization.
    fn condition_number(&self, t: &DMatrix<f64>) -> Option<f64> {
        let norm1 = |m: &DMatrix<f64>| {
            m.column_iter()
                .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let d = t.nrows();
        let mut inv = DMatrix::zeros(t.ncols(), d);
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e)?);
        }
        Some(norm1(t) * norm1(&inv))
    }
}

/// Samples `d + oversample` parameters and tabulates `X(mu_r)` and `V_r`.
///
/// `T` built from `X(mu)` is rank deficient in exact arithmetic (the lifted
/// vectors satisfy the reduced equations), so its condition estimate is
/// reported but not used as a gate. Without oversampling, a sample whose LU
/// factorization breaks down is redrawn with the next seed, at most
/// [`MAX_INTERPOLATION_ATTEMPTS`] times.
pub fn build_e3_data(
    sys: &TruthSystem,
    model: &ReducedModel,
    sampler: &dyn ParameterSampler,
    seed: u64,
    oversample: usize,
) -> Result<E3Data> {
    if model.is_empty() {
        return Err(Error::EmptyModel);
    }
    let d = xvector_dim(model.len());
    let count = d + oversample;
    let attempts = if oversample == 0 { MAX_INTERPOLATION_ATTEMPTS } else { 1 };
    for attempt in 0..attempts {
        let seed = seed.wrapping_add(attempt as u64);
        let params = sampler.draw(count, seed);
        let mut t = DMatrix::zeros(d, count);
        let mut values = Vec::with_capacity(count);
        for (r, &mu) in params.iter().enumerate() {
            let sol = solve_reduced_or_zero(model, mu)?;
            t.set_column(r, &DVector::from_vec(x_vector(&sol).0));
            let v = residual_norm_sq_dd(sys, model, &sol).to_f64().max(0.0);
            values.push(v);
        }
        let solver = InterpolationSolver::new(&t);
        let Some(cond) = solver.condition_number(&t) else {
            continue;
        };
        let data = E3Data {
            n_rb: model.len(),
            beta: model.beta,
            seed,
            interp_params: params,
            t_matrix: t,
            values,
            cond_estimate: cond,
            solver: OnceLock::new(),
        };
        let _ = data.solver.set(solver);
        return Ok(data);
    }
    Err(Error::IllConditioned {
        cond: f64::INFINITY,
        attempts,
    })
}

/// E3: solve `T λ = X(mu)` and return `β⁻¹ sqrt(Σ λ_r V_r)`.
pub fn estimator_e3(data: &E3Data, sol: &ReducedSolution) -> Result<Estimate> {
    let lambda = data.lambda(sol)?;
    let radicand = crate::precision::dot_dd(lambda.as_slice(), &data.values).to_f64();
    Ok(Estimate::from_radicand(radicand, data.beta))
}
