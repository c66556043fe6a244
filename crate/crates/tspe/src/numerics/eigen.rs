//! Symmetric eigensolver: k smallest eigenpairs above a zero threshold.
//!
//! Two paths behind one entry point. Small operators are materialized and
//! solved densely by cyclic Jacobi rotations; large ones go through Lanczos
//! on the shifted operator (see `lanczos`). The dense path doubles as the
//! oracle the iterative path is tested against.

use super::lanczos;
use super::{DenseMatrix, SymmetricOperator};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense when `dim <= dense_cutoff`, iterative otherwise.
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    /// Eigenvalues at or below this are treated as zero-modes and excluded.
    pub zero_threshold: f64,
    pub seed: u64,
    pub method: EigenMethod,
    pub dense_cutoff: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            zero_threshold: 1e-8,
            seed: 0,
            method: EigenMethod::Auto,
            dense_cutoff: 2000,
        }
    }
}

/// Eigenpairs with values ascending and vectors as matching columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// The k smallest eigenpairs with eigenvalue strictly above the zero
/// threshold. Columns are orthonormal and sign-canonicalized.
pub fn sym_eigs_smallest(
    op: &dyn SymmetricOperator,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k >= n {
        return Err(Error::Infeasible(format!(
            "requested {k} eigenpairs from a {n}-dimensional operator"
        )));
    }
    if opts.tol <= 0.0 {
        return Err(Error::Config("eigensolver tol must be positive".into()));
    }
    let dense = match opts.method {
        EigenMethod::Dense => true,
        EigenMethod::Iterative => false,
        EigenMethod::Auto => n <= opts.dense_cutoff,
    };
    let mut pairs = if dense {
        dense_smallest(op, k, opts)?
    } else {
        lanczos::lanczos_smallest(op, k, opts)?
    };
    verify_residuals(op, &pairs, opts.tol)?;
    canonicalize_columns(&mut pairs.vectors);
    Ok(pairs)
}

fn dense_smallest(op: &dyn SymmetricOperator, k: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let a = op.to_dense();
    let (values, vectors) = jacobi_eigen(&a)?;
    select_above_threshold(&values, &vectors, k, opts.zero_threshold)
}

/// Filter out zero-modes, keep the k smallest of the rest.
pub(crate) fn select_above_threshold(
    values: &[f64],
    vectors: &DenseMatrix,
    k: usize,
    zero_threshold: f64,
) -> Result<EigenPairs> {
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > zero_threshold)
        .collect();
    if keep.len() < k {
        return Err(Error::Infeasible(format!(
            "requested {k} nonzero eigenpairs but only {} eigenvalues exceed {zero_threshold:.1e}",
            keep.len()
        )));
    }
    let n = vectors.rows();
    let mut out_vals = Vec::with_capacity(k);
    let mut out_vecs = DenseMatrix::zeros(n, k);
    for (col, &idx) in keep.iter().take(k).enumerate() {
        out_vals.push(values[idx]);
        for r in 0..n {
            out_vecs.set(r, col, vectors.get(r, idx));
        }
    }
    Ok(EigenPairs {
        values: out_vals,
        vectors: out_vecs,
    })
}

fn verify_residuals(op: &dyn SymmetricOperator, pairs: &EigenPairs, tol: f64) -> Result<()> {
    let n = op.dim();
    let mut y = vec![0.0; n];
    let mut worst = 0.0f64;
    for (i, &lambda) in pairs.values.iter().enumerate() {
        let u = pairs.vectors.column(i);
        op.apply(&u, &mut y);
        let mut r2 = 0.0;
        for j in 0..n {
            let d = y[j] - lambda * u[j];
            r2 += d * d;
        }
        worst = worst.max(r2.sqrt());
    }
    if worst > tol {
        return Err(Error::NonConvergence {
            best_residual: worst,
            iterations: 0,
        });
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi.
/// Returns eigenvalues ascending with eigenvector columns aligned.
pub fn jacobi_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if a.rows() != a.cols() {
        return Err(Error::Dimension(format!(
            "jacobi_eigen on {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a
        .data()
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);
    let stop = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= stop * 1e-2 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    if i != p && i != q {
                        let aip = m.get(i, p);
                        let aiq = m.get(i, q);
                        let new_ip = c * aip - s * aiq;
                        let new_iq = s * aip + c * aiq;
                        m.set(i, p, new_ip);
                        m.set(p, i, new_ip);
                        m.set(i, q, new_iq);
                        m.set(q, i, new_iq);
                    }
                }
                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);

                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, col, v.get(r, idx));
        }
    }
    Ok((values, vectors))
}

/// Flip column signs so the entry of largest magnitude is positive. Entries
/// within 1e-9 relative of the maximum count as tied; the lowest index wins.
pub fn canonicalize_columns(m: &mut DenseMatrix) {
    let (rows, cols) = (m.rows(), m.cols());
    for c in 0..cols {
        let mut max_abs = 0.0f64;
        for r in 0..rows {
            max_abs = max_abs.max(m.get(r, c).abs());
        }
        if max_abs == 0.0 {
            continue;
        }
        let mut lead = 0.0;
        for r in 0..rows {
            let v = m.get(r, c);
            if v.abs() >= max_abs * (1.0 - 1e-9) {
                lead = v;
                break;
            }
        }
        if lead < 0.0 {
            for r in 0..rows {
                let v = m.get(r, c);
                m.set(r, c, -v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseSym;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn jacobi_diagonal_matrix() {
        let a = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let (vals, _) = jacobi_eigen(&a).unwrap();
        assert_eq!(vals, vec![1.0, 3.0]);
    }

    #[test]
    fn jacobi_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (vals, vecs) = jacobi_eigen(&a).unwrap();
        assert_close(vals[0], 1.0, 1e-12);
        assert_close(vals[1], 3.0, 1e-12);
        // eigenvector for 3 is (1,1)/sqrt(2)
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert_close(vecs.get(0, 1).abs(), inv_sqrt2, 1e-12);
        assert_close(vecs.get(1, 1).abs(), inv_sqrt2, 1e-12);
    }

    #[test]
    fn jacobi_matches_nalgebra_on_random_matrices() {
        let mut rng = crate::rng::Rng::new(42);
        for trial in 0..10 {
            let n = 3 + rng.below(20);
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.range_f64(-1.0, 1.0);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            let (vals, vecs) = jacobi_eigen(&a).unwrap();

            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let sym = nalgebra::SymmetricEigen::new(na);
            let mut expected: Vec<f64> = sym.eigenvalues.iter().copied().collect();
            expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (got, want) in vals.iter().zip(expected.iter()) {
                assert_close(*got, *want, 1e-10);
            }
            // residuals
            for c in 0..n {
                let u = vecs.column(c);
                let mut r = 0.0f64;
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += a.get(i, j) * u[j];
                    }
                    let d = acc - vals[c] * u[i];
                    r += d * d;
                }
                assert!(r.sqrt() < 1e-10, "trial {trial} residual {}", r.sqrt());
            }
        }
    }

    #[test]
    fn identity_operator_k1() {
        let a = DenseMatrix::identity(4);
        let op = DenseSym(&a);
        let pairs = sym_eigs_smallest(&op, 1, &EigenOptions::default()).unwrap();
        assert_close(pairs.values[0], 1.0, 1e-12);
    }

    #[test]
    fn k_too_large_errors() {
        let a = DenseMatrix::identity(3);
        let op = DenseSym(&a);
        assert!(sym_eigs_smallest(&op, 3, &EigenOptions::default()).is_err());
    }

    #[test]
    fn zero_modes_excluded() {
        // diag(0, 0, 0.5, 2): two zero-modes, k=2 -> (0.5, 2)
        let mut a = DenseMatrix::zeros(4, 4);
        a.set(2, 2, 0.5);
        a.set(3, 3, 2.0);
        let op = DenseSym(&a);
        let pairs = sym_eigs_smallest(&op, 2, &EigenOptions::default()).unwrap();
        assert_eq!(pairs.values, vec![0.5, 2.0]);
    }

    #[test]
    fn canonicalization_prefers_lowest_index_on_ties() {
        let mut m = DenseMatrix::from_rows(&[&[-0.7071067811865475], &[0.0], &[0.7071067811865476]]);
        canonicalize_columns(&mut m);
        assert!(m.get(0, 0) > 0.0);
        assert!(m.get(2, 0) < 0.0);
    }

    #[test]
    fn eigenvalues_nondecreasing_and_orthonormal() {
        let mut rng = crate::rng::Rng::new(9);
        let n = 12;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.range_f64(-1.0, 1.0);
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        // shift to make eigenvalues positive so none are filtered
        for i in 0..n {
            a.set(i, i, a.get(i, i) + 10.0);
        }
        let op = DenseSym(&a);
        let pairs = sym_eigs_smallest(&op, 5, &EigenOptions::default()).unwrap();
        for w in pairs.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for c1 in 0..5 {
            for c2 in 0..5 {
                let d = crate::numerics::dot(&pairs.vectors.column(c1), &pairs.vectors.column(c2));
                let want = if c1 == c2 { 1.0 } else { 0.0 };
                assert_close(d, want, 1e-8);
            }
        }
    }
}
