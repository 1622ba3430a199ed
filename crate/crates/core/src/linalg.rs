//! Small dense symmetric linear algebra helpers on flat row-major buffers.
//!
//! The matrices in this crate stay small (a few hundred rows), so plain
//! Cholesky and Jacobi routines are enough.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// In-place Cholesky factorization of a symmetric positive definite matrix.
/// On success the lower triangle holds L with `A = L L^T`; the strict upper
/// triangle is zeroed.
pub(crate) fn cholesky_in_place<S: Scalar>(a: &mut [S], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            let l = a[j * n + k];
            diag -= l * l;
        }
        if !diag.is_finite() || diag <= S::zero() {
            return Err(Error::SingularMatrix);
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / diag;
        }
        for k in (j + 1)..n {
            a[j * n + k] = S::zero();
        }
    }
    Ok(())
}

/// Solves `A x = b` given the Cholesky factor L of A.
pub(crate) fn chol_solve<S: Scalar>(l: &[S], n: usize, b: &[S]) -> Vec<S> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Log-determinant of A from its Cholesky factor.
pub(crate) fn chol_logdet<S: Scalar>(l: &[S], n: usize) -> S {
    let two = S::cast(2.0);
    let mut acc = S::zero();
    for i in 0..n {
        acc += l[i * n + i].ln();
    }
    two * acc
}

/// Full inverse of a symmetric positive definite matrix via Cholesky.
pub(crate) fn spd_inverse<S: Scalar>(a: &[S], n: usize) -> Result<Vec<S>> {
    let mut l = a.to_vec();
    cholesky_in_place(&mut l, n)?;
    let mut inv = vec![S::zero(); n * n];
    let mut e = vec![S::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = S::zero());
        e[j] = S::one();
        let col = chol_solve(&l, n, &e);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(inv)
}

/// Symmetric matrix-vector product.
pub(crate) fn mat_vec<S: Scalar>(a: &[S], n: usize, x: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); n];
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let mut s = S::zero();
        for (aij, xj) in row.iter().zip(x.iter()) {
            s += *aij * *xj;
        }
        out[i] = s;
    }
    out
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
/// Used by tests to certify positive semi-definiteness.
#[cfg(test)]
pub(crate) fn sym_eigenvalues<S: Scalar>(a: &[S], n: usize) -> Vec<S> {
    let mut m = a.to_vec();
    let tol = S::cast(1e-14);
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        let mut norm = S::zero();
        for v in &m {
            norm += *v * *v;
        }
        if off <= tol * norm || off == S::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == S::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (S::cast(2.0) * apq);
                let t = {
                    let sign = if theta >= S::zero() { S::one() } else { -S::one() };
                    sign / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], b = [1, 2] -> x = [-1/8, 3/4]
        let a: Vec<f64> = vec![4.0, 2.0, 2.0, 3.0];
        let mut l = a.clone();
        cholesky_in_place(&mut l, 2).unwrap();
        let x = chol_solve(&l, 2, &[1.0, 2.0]);
        assert!((x[0] + 0.125).abs() < 1e-12);
        assert!((x[1] - 0.75).abs() < 1e-12);
        let logdet = chol_logdet(&l, 2);
        assert!((logdet - (8.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a: Vec<f64> = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_in_place(&mut a, 2).is_err());
    }

    #[test]
    fn inverse_matches_hand_computation() {
        let a: Vec<f64> = vec![4.0, 2.0, 2.0, 3.0];
        let inv = spd_inverse(&a, 2).unwrap();
        // inverse of [[4,2],[2,3]] is (1/8)[[3,-2],[-2,4]]
        let expect = [0.375, -0.25, -0.25, 0.5];
        for (got, want) in inv.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_eigenvalues_of_diagonalizable_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a: Vec<f64> = vec![2.0, 1.0, 1.0, 2.0];
        let mut ev = sym_eigenvalues(&a, 2);
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-10);
        assert!((ev[1] - 3.0).abs() < 1e-10);
    }
}
