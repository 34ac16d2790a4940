//! P1 finite elements for `-u'' + mu u = 1` on `]0, 1[` with homogeneous
//! Dirichlet conditions.
//!
//! Only the interior nodes carry unknowns, so every operator is a symmetric
//! tridiagonal matrix of size `N = n_cells - 1`. The 𝒱 inner product is the
//! H¹ one, represented by `gram = stiffness + mass`.
//!
//! Linear solves run a Thomas factorization in working precision followed by
//! a few steps of iterative refinement with double-double residuals, so the
//! returned vectors are accurate to (nearly) the last bit. Snapshots and Riesz
//! representatives computed this way keep the truth-solve error out of the
//! round-off floors measured downstream.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::DoubleDouble;

/// Number of iterative-refinement sweeps after the initial Thomas solve.
const REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub n_cells: usize,
    pub h: f64,
}

impl Mesh1D {
    pub fn uniform(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidMesh(n_cells));
        }
        Ok(Self {
            n_cells,
            h: 1.0 / n_cells as f64,
        })
    }

    /// Coordinate of node `j`, `0 <= j <= n_cells`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_cells {
            1.0
        } else {
            j as f64 / self.n_cells as f64
        }
    }

    pub fn n_interior(&self) -> usize {
        self.n_cells - 1
    }
}

/// Symmetric tridiagonal matrix: `diag.len() == n`, `off.len() == n - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn constant(n: usize, diag: f64, off: f64) -> Self {
        Self {
            diag: vec![diag; n],
            off: vec![off; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(n, 1.0, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// Entrywise `fl(self + scale * other)`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        let comb = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + scale * y).collect();
        Self {
            diag: comb(&self.diag, &other.diag),
            off: comb(&self.off, &other.off),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// `self * x` with exact products and double-double accumulation.
    pub fn matvec_dd(&self, x: &[DoubleDouble]) -> Vec<DoubleDouble> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = x[i].mul_f64(self.diag[i]);
                if i > 0 {
                    y += x[i - 1].mul_f64(self.off[i - 1]);
                }
                if i + 1 < n {
                    y += x[i + 1].mul_f64(self.off[i]);
                }
                y
            })
            .collect()
    }

    /// `uᵀ A v` in working precision.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(self.matvec(v)).map(|(a, b)| a * b).sum()
    }

    /// `uᵀ A v` in double-double.
    pub fn bilinear_dd(&self, u: &[DoubleDouble], v: &[DoubleDouble]) -> DoubleDouble {
        u.iter()
            .zip(self.matvec_dd(v))
            .map(|(&a, b)| a * b)
            .sum()
    }

    pub fn factor(&self) -> Result<ThomasFactor> {
        ThomasFactor::new(self)
    }
}

/// LDLᵀ-style forward elimination of a symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct ThomasFactor {
    off: Vec<f64>,
    pivots: Vec<f64>,
}

impl ThomasFactor {
    pub fn new(a: &SymTridiagonal) -> Result<Self> {
        let n = a.dim();
        let mut pivots = Vec::with_capacity(n);
        for i in 0..n {
            let p = if i == 0 {
                a.diag[0]
            } else {
                a.diag[i] - a.off[i - 1] * a.off[i - 1] / pivots[i - 1]
            };
            if p == 0.0 || !p.is_finite() {
                return Err(Error::SingularMatrix(i));
            }
            pivots.push(p);
        }
        Ok(Self {
            off: a.off.clone(),
            pivots,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] -= self.off[i - 1] / self.pivots[i - 1] * y[i - 1];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let upper = if i + 1 < n { self.off[i] * x[i + 1] } else { 0.0 };
            x[i] = (y[i] - upper) / self.pivots[i];
        }
        x
    }
}

/// Interior nodal values of a P1 function; boundary values are implicitly zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthVector(pub Vec<f64>);

impl TruthVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn to_dd(&self) -> Vec<DoubleDouble> {
        self.0.iter().map(|&x| DoubleDouble::from_f64(x)).collect()
    }
}

impl From<Vec<f64>> for TruthVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for TruthVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for TruthVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Rounds a double-double vector to working precision.
pub fn round_dd(v: &[DoubleDouble]) -> TruthVector {
    TruthVector(v.iter().map(|x| x.to_f64()).collect())
}

/// Thomas elimination, `O(N)`.
pub fn solve_tridiagonal(a: &SymTridiagonal, rhs: &[f64]) -> Result<TruthVector> {
    a.check_dim(rhs.len())?;
    Ok(TruthVector(a.factor()?.solve(rhs)))
}

/// Solves `A x = rhs` to double-double accuracy.
///
/// `residual(x)` must return `rhs - A x` in double-double; `factor` is any
/// working-precision factorization of (an approximation of) `A`.
fn refine_solve(
    factor: &ThomasFactor,
    rhs: &[DoubleDouble],
    residual: impl Fn(&[DoubleDouble]) -> Vec<DoubleDouble>,
) -> Vec<DoubleDouble> {
    let rounded: Vec<f64> = rhs.iter().map(|r| r.to_f64()).collect();
    let mut x: Vec<DoubleDouble> = factor
        .solve(&rounded)
        .into_iter()
        .map(DoubleDouble::from_f64)
        .collect();
    for _ in 0..REFINEMENT_STEPS {
        let r: Vec<f64> = residual(&x).iter().map(|r| r.to_f64()).collect();
        let c = factor.solve(&r);
        for (xi, ci) in x.iter_mut().zip(c) {
            *xi = xi.add_f64(ci);
        }
    }
    x
}

/// Thomas solve plus double-double iterative refinement against `a` itself.
pub fn solve_tridiagonal_refined(a: &SymTridiagonal, rhs: &[DoubleDouble]) -> Result<Vec<DoubleDouble>> {
    a.check_dim(rhs.len())?;
    let factor = a.factor()?;
    Ok(refine_solve(&factor, rhs, |x| {
        rhs.iter().zip(a.matvec_dd(x)).map(|(&b, ax)| b - ax).collect()
    }))
}

/// The discrete truth problem: stiffness `K` (a₀), mass `M` (a₁), load `F` (b)
/// and the H¹ Gram matrix `K + M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSystem {
    pub mesh: Mesh1D,
    pub stiffness: SymTridiagonal,
    pub mass: SymTridiagonal,
    pub gram: SymTridiagonal,
    pub load: TruthVector,
}

/// Assembles the uniform-mesh P1 system in closed form.
pub fn assemble(n_cells: usize) -> Result<TruthSystem> {
    let mesh = Mesh1D::uniform(n_cells)?;
    let n = mesh.n_interior();
    let inv_h = n_cells as f64;
    let h = mesh.h;
    let stiffness = SymTridiagonal::constant(n, 2.0 * inv_h, -inv_h);
    let mass = SymTridiagonal::constant(n, 2.0 * h / 3.0, h / 6.0);
    let gram = stiffness.add_scaled(1.0, &mass);
    Ok(TruthSystem {
        mesh,
        stiffness,
        mass,
        gram,
        load: TruthVector(vec![h; n]),
    })
}

impl TruthSystem {
    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    /// `fl(K + mu M)`.
    pub fn operator(&self, mu: f64) -> SymTridiagonal {
        self.stiffness.add_scaled(mu, &self.mass)
    }

    /// `F - (K + mu M) u` with `mu M` applied exactly.
    pub fn residual_dd(&self, mu: f64, u: &[DoubleDouble]) -> Vec<DoubleDouble> {
        let ku = self.stiffness.matvec_dd(u);
        let mu_u: Vec<DoubleDouble> = u.iter().map(|x| x.mul_f64(mu)).collect();
        let mmu = self.mass.matvec_dd(&mu_u);
        self.load
            .iter()
            .zip(ku.into_iter().zip(mmu))
            .map(|(&f, (a, b))| DoubleDouble::from_f64(f) - a - b)
            .collect()
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !mu.is_finite() || mu < 1.0 {
        return Err(Error::OutOfDomain(mu));
    }
    Ok(())
}

/// Truth solution `u_mu` of `(K + mu M) u = F`, in double-double.
pub fn solve_truth_dd(sys: &TruthSystem, mu: f64) -> Result<Vec<DoubleDouble>> {
    check_mu(mu)?;
    let factor = sys.operator(mu).factor()?;
    let rhs = sys.load.to_dd();
    Ok(refine_solve(&factor, &rhs, |u| sys.residual_dd(mu, u)))
}

/// Truth solution `u_mu`, rounded to working precision.
pub fn solve_truth(sys: &TruthSystem, mu: f64) -> Result<TruthVector> {
    Ok(round_dd(&solve_truth_dd(sys, mu)?))
}

/// Closed-form solution of `-u'' + mu u = 1`, `u(0) = u(1) = 0`.
///
/// Written as `(1 - (e^{-s(1-x)} + e^{-sx}) / (1 + e^{-s})) / mu` with
/// `s = sqrt(mu)`, which never overflows and is exactly zero at both ends.
pub fn analytic_solution(mu: f64, x: f64) -> f64 {
    let s = mu.sqrt();
    let num = (-s * (1.0 - x)).exp() + (-s * x).exp();
    let den = 1.0 + (-s).exp();
    (1.0 - num / den) / mu
}

/// Derivative of [`analytic_solution`] in `x`.
pub fn analytic_derivative(mu: f64, x: f64) -> f64 {
    let s = mu.sqrt();
    let num = s * ((-s * (1.0 - x)).exp() - (-s * x).exp());
    let den = 1.0 + (-s).exp();
    -num / den / mu
}

/// `(u, v)_{H¹} = uᵀ Gram v`.
pub fn h1_inner(sys: &TruthSystem, u: &[f64], v: &[f64]) -> Result<f64> {
    sys.gram.check_dim(u.len())?;
    sys.gram.check_dim(v.len())?;
    Ok(sys.gram.bilinear(u, v))
}

pub fn h1_inner_dd(sys: &TruthSystem, u: &[DoubleDouble], v: &[DoubleDouble]) -> Result<DoubleDouble> {
    sys.gram.check_dim(u.len())?;
    sys.gram.check_dim(v.len())?;
    Ok(sys.gram.bilinear_dd(u, v))
}

pub fn h1_norm(sys: &TruthSystem, u: &[f64]) -> Result<f64> {
    Ok(h1_inner(sys, u, u)?.max(0.0).sqrt())
}

/// Riesz representative `Gram⁻¹ l` of a functional given by its values on the hat functions.
pub fn riesz_representative(sys: &TruthSystem, functional: &[f64]) -> Result<TruthVector> {
    let l: Vec<DoubleDouble> = functional.iter().map(|&x| x.into()).collect();
    Ok(round_dd(&riesz_representative_dd(sys, &l)?))
}

pub fn riesz_representative_dd(sys: &TruthSystem, functional: &[DoubleDouble]) -> Result<Vec<DoubleDouble>> {
    solve_tridiagonal_refined(&sys.gram, functional)
}

// 5-point Gauss-Legendre on [-1, 1].
const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// `‖u_h - u‖_{H¹}` against the closed-form solution, by per-cell Gauss quadrature.
pub fn h1_error_vs_analytic(sys: &TruthSystem, u: &[f64], mu: f64) -> Result<f64> {
    sys.gram.check_dim(u.len())?;
    let mesh = sys.mesh;
    let nodal = |j: usize| if j == 0 || j == mesh.n_cells { 0.0 } else { u[j - 1] };
    let mut acc = 0.0;
    for cell in 0..mesh.n_cells {
        let (x0, x1) = (mesh.node(cell), mesh.node(cell + 1));
        let (u0, u1) = (nodal(cell), nodal(cell + 1));
        let slope = (u1 - u0) / mesh.h;
        for (&t, &w) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            let lam = 0.5 * (t + 1.0);
            let x = x0 + lam * (x1 - x0);
            let uh = u0 + lam * (u1 - u0);
            let e = uh - analytic_solution(mu, x);
            let de = slope - analytic_derivative(mu, x);
            acc += 0.5 * mesh.h * w * (e * e + de * de);
        }
    }
    Ok(acc.sqrt())
}
