//! Solvers for the reduced symmetric positive definite system.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

/// Systems up to this size go to the direct solver under `Method::Auto`.
pub const DIRECT_LIMIT: usize = 400_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Sparse Cholesky; fails with `NotSpd` on indefinite systems.
    Direct,
    /// Sparse LU with partial pivoting, for symmetric indefinite systems.
    Lu,
    /// Conjugate gradients.
    Cg,
    /// `Direct` up to [`DIRECT_LIMIT`] unknowns, Jacobi-preconditioned CG
    /// above; either falls back to `Lu` when the system is not positive
    /// definite.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Relative residual target `|Ax - b| <= tol |b|`.
    pub tol: f64,
    /// CG iteration cap; `None` means `2 n`. The high-contrast systems
    /// need a sizeable fraction of `n` iterations even with Jacobi.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            tol: 1e-12,
            max_iterations: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        Self {
            method: Method::Direct,
            ..Self::default()
        }
    }

    pub fn cg() -> Self {
        Self {
            method: Method::Cg,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig(format!("tolerance {} not in (0, 1)", self.tol)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a solve, with the achieved relative residual.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn solve(matrix: &CsrMatrix, rhs: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    solve_detailed(matrix, rhs, config).map(|s| s.x)
}

pub fn solve_detailed(matrix: &CsrMatrix, rhs: &[f64], config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    assert_eq!(rhs.len(), matrix.n);
    let method = match config.method {
        Method::Auto if matrix.n <= DIRECT_LIMIT => Method::Direct,
        Method::Auto => Method::Cg,
        m => m,
    };
    let result = match method {
        Method::Direct => direct_solve(matrix, rhs, Factorization::Cholesky),
        Method::Lu => direct_solve(matrix, rhs, Factorization::Lu),
        _ => {
            let pre = if config.method == Method::Auto {
                Preconditioner::Jacobi
            } else {
                config.preconditioner
            };
            conjugate_gradient(matrix, rhs, config, pre)
        }
    };
    match result {
        // Small penalties make the system indefinite but still solvable.
        Err(Error::NotSpd) if config.method == Method::Auto => {
            direct_solve(matrix, rhs, Factorization::Lu)
        }
        r => r,
    }
}

fn relative_residual(matrix: &CsrMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = matrix.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = norm2(b);
    let rel = if nb == 0.0 { norm2(&r) } else { norm2(&r) / nb };
    (r, rel)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Factorization {
    Cholesky,
    Lu,
}

/// Sparse factorization with fill-reducing ordering, followed by up to two
/// steps of iterative refinement.
fn direct_solve(matrix: &CsrMatrix, rhs: &[f64], kind: Factorization) -> Result<Solution> {
    let n = matrix.n;
    let mut triplets = Vec::with_capacity(matrix.nnz());
    for i in 0..n {
        for (j, v) in matrix.row(i) {
            // Cholesky only reads the lower triangle.
            if kind == Factorization::Lu || j <= i {
                triplets.push(Triplet::new(i, j, v));
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::InvalidConfig(format!("sparse matrix construction: {e:?}")))?;
    let factor: Box<dyn Fn(&Mat<f64>) -> Mat<f64>> = match kind {
        Factorization::Cholesky => {
            let llt = a.sp_cholesky(faer::Side::Lower).map_err(|_| Error::NotSpd)?;
            Box::new(move |b| llt.solve(b))
        }
        Factorization::Lu => {
            let lu = a.sp_lu().map_err(|e| Error::InvalidConfig(format!("sparse LU failed: {e:?}")))?;
            Box::new(move |b| lu.solve(b))
        }
    };

    let solve_col = |b: &[f64]| -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = factor(&rhs);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve_col(rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(match kind {
            Factorization::Cholesky => Error::NotSpd,
            Factorization::Lu => Error::InvalidConfig("singular system".into()),
        });
    }
    let (mut r, mut rel) = relative_residual(matrix, &x, rhs);
    for _ in 0..2 {
        if rel < 1e-15 {
            break;
        }
        let dx = solve_col(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let (r2, rel2) = relative_residual(matrix, &candidate, rhs);
        if rel2 >= rel {
            break;
        }
        x = candidate;
        r = r2;
        rel = rel2;
    }
    Ok(Solution {
        x,
        iterations: 1,
        relative_residual: rel,
    })
}

fn conjugate_gradient(
    matrix: &CsrMatrix,
    b: &[f64],
    config: &SolverConfig,
    pre: Preconditioner,
) -> Result<Solution> {
    let n = matrix.n;
    let max_iter = config
        .max_iterations
        .unwrap_or_else(|| (2 * n).max(1));
    let inv_diag: Vec<f64> = match pre {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Jacobi => matrix
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
    };
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(Solution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        matrix.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotSpd);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / nb;
        if rel <= config.tol {
            // Confirm against the true residual; the recurrence drifts.
            let (_, true_rel) = relative_residual(matrix, &x, b);
            if true_rel <= config.tol {
                return Ok(Solution {
                    x,
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let (_, rel) = relative_residual(matrix, &x, b);
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: rel,
    })
}
