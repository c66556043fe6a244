//! Lanczos iteration for the smallest eigenpairs of a normalized-Laplacian-like
//! operator.
//!
//! The spectrum of a normalized Laplacian lies in [0, 2], so the smallest
//! eigenvalues of A are the largest of the shifted operator S = 2I - A, which
//! is where Lanczos converges first. Full reorthogonalization keeps the basis
//! usable; on breakdown (an exhausted invariant subspace) the iteration
//! restarts with a fresh random vector orthogonal to everything found so far,
//! which is also what recovers repeated eigenvalues.

use super::eigen::{select_above_threshold, EigenOptions, EigenPairs};
use super::{dot, norm2, DenseMatrix, SymmetricOperator};
use crate::error::{Error, Result};
use crate::rng::Rng;

const BREAKDOWN_EPS: f64 = 1e-12;

pub fn lanczos_smallest(
    op: &dyn SymmetricOperator,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis[j] and basis[j+1]; zero marks a block boundary.
    let mut beta: Vec<f64> = Vec::new();
    let mut restarts = 0usize;
    let mut best_residual = f64::INFINITY;

    let mut target = n.min((2 * k + 30).max(50));
    loop {
        extend_basis(op, &mut basis, &mut alpha, &mut beta, target, opts.seed, &mut restarts)?;
        let m = basis.len();

        // Ritz pairs of the tridiagonal projection, as eigenvalues of A.
        // The newest basis vector may not have been processed by the
        // recurrence yet; its diagonal entry is computed here without
        // touching the recurrence state.
        let mut t_diag = alpha.clone();
        if t_diag.len() < m {
            let q = &basis[m - 1];
            let mut y = vec![0.0; n];
            apply_shifted(op, q, &mut y);
            t_diag.push(dot(&y, q));
        }
        let t = tridiagonal(&t_diag, &beta);
        let (mu, y) = super::eigen::jacobi_eigen(&t)?;
        // mu are eigenvalues of S = 2I - A ascending; lambda = 2 - mu, so
        // reversing gives lambda ascending.
        let order: Vec<usize> = (0..m).rev().collect();

        // How many leading Ritz pairs we need: k above the threshold plus
        // every zero-mode that precedes them.
        let mut needed = 0usize;
        let mut nonzero = 0usize;
        for &idx in &order {
            needed += 1;
            if 2.0 - mu[idx] > opts.zero_threshold {
                nonzero += 1;
                if nonzero == k {
                    break;
                }
            }
        }
        let enough_candidates = nonzero == k;

        if enough_candidates {
            let mut values = Vec::with_capacity(needed);
            let mut vectors = DenseMatrix::zeros(n, needed);
            for (col, &idx) in order.iter().take(needed).enumerate() {
                values.push(2.0 - mu[idx]);
                // u = Q y
                for (j, q) in basis.iter().enumerate() {
                    let w = y.get(j, idx);
                    if w == 0.0 {
                        continue;
                    }
                    for r in 0..n {
                        let cur = vectors.get(r, col);
                        vectors.set(r, col, cur + w * q[r]);
                    }
                }
            }
            let worst = worst_residual(op, &values, &vectors);
            best_residual = best_residual.min(worst);
            if worst <= opts.tol {
                return select_above_threshold(&values, &vectors, k, opts.zero_threshold);
            }
        }

        if m >= n {
            // The basis spans the whole space; if the residual still misses
            // the tolerance the request cannot be met.
            if !enough_candidates {
                return Err(Error::Infeasible(format!(
                    "requested {k} nonzero eigenpairs but the operator has fewer above {:.1e}",
                    opts.zero_threshold
                )));
            }
            return Err(Error::NonConvergence {
                best_residual,
                iterations: m,
            });
        }
        target = n.min(target + (k + 16).max(32));
    }
}

/// Grow the orthonormal Lanczos basis up to `target` vectors.
///
/// State invariant: `alpha.len()` counts processed vectors. Normally the
/// newest basis vector is unprocessed (`basis.len() == alpha.len() + 1`);
/// right after a breakdown every vector is processed
/// (`basis.len() == alpha.len()`) and the next vector starts a new block,
/// recorded as a zero in `beta`.
fn extend_basis(
    op: &dyn SymmetricOperator,
    basis: &mut Vec<Vec<f64>>,
    alpha: &mut Vec<f64>,
    beta: &mut Vec<f64>,
    target: usize,
    seed: u64,
    restarts: &mut usize,
) -> Result<()> {
    let n = op.dim();
    let mut w = vec![0.0; n];

    while basis.len() < target {
        if basis.len() == alpha.len() {
            // every vector processed: previous block ended, start a new one
            let v = fresh_start_vector(basis, n, seed, restarts)?;
            basis.push(v);
            continue;
        }

        // Standard three-term step on S = 2I - A from the last basis vector.
        let j = basis.len();
        let v = &basis[j - 1];
        apply_shifted(op, v, &mut w);
        if j >= 2 && beta[j - 2] != 0.0 {
            let prev = &basis[j - 2];
            let b = beta[j - 2];
            for i in 0..n {
                w[i] -= b * prev[i];
            }
        }
        let a_j = dot(&w, v);
        alpha.push(a_j);
        for i in 0..n {
            w[i] -= a_j * v[i];
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for q in basis.iter() {
                let proj = dot(&w, q);
                for i in 0..n {
                    w[i] -= proj * q[i];
                }
            }
        }
        let b_next = norm2(&w);
        if b_next < BREAKDOWN_EPS {
            beta.push(0.0);
            if basis.len() == n {
                break; // the whole space is spanned; nothing left to add
            }
            continue; // next iteration starts a fresh block
        }
        beta.push(b_next);
        let mut v_next = w.clone();
        for x in v_next.iter_mut() {
            *x /= b_next;
        }
        basis.push(v_next);
    }
    Ok(())
}

/// Random vector orthogonal to the current basis, for block starts.
fn fresh_start_vector(
    basis: &[Vec<f64>],
    n: usize,
    seed: u64,
    restarts: &mut usize,
) -> Result<Vec<f64>> {
    for _attempt in 0..32 {
        let mut rng = Rng::child(seed, &format!("lanczos.start.{}", *restarts));
        *restarts += 1;
        let mut v: Vec<f64> = (0..n).map(|_| rng.uniform() - 0.5).collect();
        for _ in 0..2 {
            for q in basis {
                let proj = dot(&v, q);
                for i in 0..n {
                    v[i] -= proj * q[i];
                }
            }
        }
        let nrm = norm2(&v);
        if nrm > 1e-8 {
            for x in v.iter_mut() {
                *x /= nrm;
            }
            return Ok(v);
        }
    }
    Err(Error::NonConvergence {
        best_residual: f64::INFINITY,
        iterations: basis.len(),
    })
}

fn apply_shifted(op: &dyn SymmetricOperator, x: &[f64], y: &mut [f64]) {
    op.apply(x, y);
    for i in 0..x.len() {
        y[i] = 2.0 * x[i] - y[i];
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DenseMatrix {
    let m = alpha.len();
    let mut t = DenseMatrix::zeros(m, m);
    for i in 0..m {
        t.set(i, i, alpha[i]);
        if i + 1 < m {
            let b = beta.get(i).copied().unwrap_or(0.0);
            t.set(i, i + 1, b);
            t.set(i + 1, i, b);
        }
    }
    t
}

fn worst_residual(op: &dyn SymmetricOperator, values: &[f64], vectors: &DenseMatrix) -> f64 {
    let n = op.dim();
    let mut y = vec![0.0; n];
    let mut worst = 0.0f64;
    for (i, &lambda) in values.iter().enumerate() {
        let u = vectors.column(i);
        op.apply(&u, &mut y);
        let mut r2 = 0.0;
        for j in 0..n {
            let d = y[j] - lambda * u[j];
            r2 += d * d;
        }
        worst = worst.max(r2.sqrt());
    }
    worst
}
