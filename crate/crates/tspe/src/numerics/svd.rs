//! Thin singular value decomposition by one-sided Jacobi.
//!
//! Hestenes rotations orthogonalize the columns of the working matrix; the
//! surviving column norms are the singular values. Accurate for the tall
//! skinny matrices this crate feeds it (node count by label count).

use super::eigen::canonicalize_columns;
use super::{dot, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ThinSvd {
    /// n x d left singular vectors, orthonormal columns.
    pub u: DenseMatrix,
    /// d singular values, descending, all strictly positive.
    pub sigma: Vec<f64>,
    /// k x d right singular vectors.
    pub v: DenseMatrix,
}

/// Best rank-d factorization Z ~ U diag(sigma) V^T.
///
/// Errors if d exceeds min(rows, cols) or if Z has fewer than d numerically
/// positive singular values (a rank-deficient request has no meaningful
/// d-th direction).
pub fn thin_svd(z: &DenseMatrix, d: usize) -> Result<ThinSvd> {
    let (n, k) = (z.rows(), z.cols());
    if d == 0 || d > n.min(k) {
        return Err(Error::Dimension(format!(
            "thin_svd rank {d} out of range for a {n}x{k} matrix"
        )));
    }
    if k > n {
        // Work on the transpose and swap the factors back.
        let t = thin_svd(&z.transpose(), d)?;
        return Ok(ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }

    let mut b: Vec<Vec<f64>> = (0..k).map(|c| z.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut e = vec![0.0; k];
            e[c] = 1.0;
            e
        })
        .collect();

    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha = dot(&b[i], &b[i]);
                let beta = dot(&b[j], &b[j]);
                let gamma = dot(&b[i], &b[j]);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let bi = b[i][r];
                    let bj = b[j][r];
                    b[i][r] = c * bi - s * bj;
                    b[j][r] = s * bi + c * bj;
                }
                for r in 0..k {
                    let vi = v[i][r];
                    let vj = v[j][r];
                    v[i][r] = c * vi - s * vj;
                    v[j][r] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = b.iter().map(|col| dot(col, col).sqrt()).collect();
    order.sort_by(|&a, &c| norms[c].partial_cmp(&norms[a]).unwrap());

    let largest = norms[order[0]];
    let cutoff = largest * 1e-13;
    let rank = order.iter().filter(|&&i| norms[i] > cutoff).count();
    if largest == 0.0 || rank < d {
        return Err(Error::Degenerate(format!(
            "matrix has numerical rank {rank}, fewer than the {d} requested singular triplets"
        )));
    }

    let mut u = DenseMatrix::zeros(n, d);
    let mut vv = DenseMatrix::zeros(k, d);
    let mut sigma = Vec::with_capacity(d);
    for (col, &idx) in order.iter().take(d).enumerate() {
        let s = norms[idx];
        sigma.push(s);
        for r in 0..n {
            u.set(r, col, b[idx][r] / s);
        }
        for r in 0..k {
            vv.set(r, col, v[idx][r]);
        }
    }

    // Canonical signs on U, mirrored onto V so the product is unchanged.
    let before: Vec<f64> = (0..d).map(|c| u.get(0, c)).collect();
    canonicalize_columns(&mut u);
    for c in 0..d {
        let flipped = before[c] != 0.0 && before[c].signum() != u.get(0, c).signum();
        if flipped {
            for r in 0..k {
                let x = vv.get(r, c);
                vv.set(r, c, -x);
            }
        }
    }

    Ok(ThinSvd { u, sigma, v: vv })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &ThinSvd) -> DenseMatrix {
        let (n, k, d) = (svd.u.rows(), svd.v.rows(), svd.sigma.len());
        let mut out = DenseMatrix::zeros(n, k);
        for c in 0..d {
            for i in 0..n {
                for j in 0..k {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + svd.sigma[c] * svd.u.get(i, c) * svd.v.get(j, c));
                }
            }
        }
        out
    }

    #[test]
    fn diagonal_matrix() {
        let z = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let svd = thin_svd(&z, 2).unwrap();
        assert!((svd.sigma[0] - 3.0).abs() < 1e-12);
        assert!((svd.sigma[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_matrix() {
        let z = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let svd = thin_svd(&z, 1).unwrap();
        assert!((svd.sigma[0] - 2.0).abs() < 1e-12);
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((svd.u.get(0, 0) - inv_sqrt2).abs() < 1e-12);
        assert!((svd.u.get(1, 0) - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_request_errors() {
        let z = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(thin_svd(&z, 2).is_err());
        let zero = DenseMatrix::zeros(3, 2);
        assert!(thin_svd(&zero, 1).is_err());
    }

    #[test]
    fn random_full_rank_reconstruction() {
        let mut rng = crate::rng::Rng::new(21);
        let (n, k) = (20, 7);
        let mut z = DenseMatrix::zeros(n, k);
        for r in 0..n {
            for c in 0..k {
                z.set(r, c, rng.range_f64(-1.0, 1.0));
            }
        }
        let svd = thin_svd(&z, k).unwrap();
        let rec = reconstruct(&svd);
        let mut err = 0.0f64;
        for (a, b) in rec.data().iter().zip(z.data().iter()) {
            err += (a - b) * (a - b);
        }
        assert!(err.sqrt() < 1e-10, "reconstruction error {}", err.sqrt());

        // orthonormality of U and V
        for c1 in 0..k {
            for c2 in 0..k {
                let du = dot(&svd.u.column(c1), &svd.u.column(c2));
                let dv = dot(&svd.v.column(c1), &svd.v.column(c2));
                let want = if c1 == c2 { 1.0 } else { 0.0 };
                assert!((du - want).abs() < 1e-10);
                assert!((dv - want).abs() < 1e-10);
            }
        }
        // descending, nonnegative
        for w in svd.sigma.windows(2) {
            assert!(w[0] >= w[1] && w[1] >= 0.0);
        }
    }

    #[test]
    fn matches_nalgebra_singular_values() {
        let mut rng = crate::rng::Rng::new(5);
        let (n, k) = (12, 5);
        let mut z = DenseMatrix::zeros(n, k);
        for r in 0..n {
            for c in 0..k {
                z.set(r, c, rng.range_f64(-2.0, 2.0));
            }
        }
        let svd = thin_svd(&z, k).unwrap();
        let na = nalgebra::DMatrix::from_fn(n, k, |i, j| z.get(i, j));
        let mut expected: Vec<f64> = na.svd(false, false).singular_values.iter().copied().collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in svd.sigma.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn wide_matrix_transposes() {
        let z = DenseMatrix::from_rows(&[&[1.0, 0.0, 2.0, 0.0, 1.0]]);
        let svd = thin_svd(&z, 1).unwrap();
        assert_eq!(svd.u.rows(), 1);
        assert_eq!(svd.v.rows(), 5);
        let want = (1.0f64 + 4.0 + 1.0).sqrt();
        assert!((svd.sigma[0] - want).abs() < 1e-12);
    }
}
