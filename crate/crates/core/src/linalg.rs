//! Dense linear-algebra helpers shared by the graph, wavelet and stability code.
//!
//! The symmetric eigensolver is nalgebra's; this module only fixes ordering
//! and eigenvector signs so results are reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Symmetric eigendecomposition `M = V diag(values) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Eigenvalues in ascending order.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    /// Rebuilds `V diag(f(values)) V^T`.
    pub fn apply_kernel(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        &scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply_kernel(|l| l)
    }
}

/// Largest absolute entry of `M - M^T`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues and
/// each eigenvector's largest-magnitude component made positive.
///
/// Only the lower triangle is trusted; callers check symmetry first.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<Eigen> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigen {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        fix_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(Eigen { values, vectors })
}

// Ties within a relative 1e-9 go to the lowest index.
fn fix_sign(v: &mut DVector<f64>) {
    let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap_or(0);
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Spectral norm `||M||_2`, via the largest eigenvalue of `M^T M`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let top = sym_eigenvalues(&gram).last().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// Kronecker product with block `(i, j)` equal to `a[(i, j)] * b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Evaluates `sum_k coeffs[k] * S^k` by Horner's rule.
pub fn matrix_polynomial(coeffs: &[f64], s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * s;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// Evaluates `sum_k coeffs[k] * S^k x` by Horner's rule without forming `S^k`.
pub fn polynomial_apply(coeffs: &[f64], s: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut acc = DVector::zeros(x.len());
    for &c in coeffs.iter().rev() {
        acc = s * acc;
        acc.axpy(c, x, 1.0);
    }
    acc
}

/// Permutation matrix `P` with `(P^T x)[i] = x[perm[i]]`.
pub fn permutation_matrix(perm: &[usize]) -> Result<DMatrix<f64>> {
    check_permutation(perm)?;
    let n = perm.len();
    let mut p = DMatrix::zeros(n, n);
    for (i, &src) in perm.iter().enumerate() {
        p[(src, i)] = 1.0;
    }
    Ok(p)
}

pub fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::invalid(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention_on_p2() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - r).abs() < 1e-12);
        assert!((e.vectors[(1, 0)] + r).abs() < 1e-12);
        assert!((e.vectors[(0, 1)] - r).abs() < 1e-12);
        assert!((e.vectors[(1, 1)] - r).abs() < 1e-12);
    }

    #[test]
    fn identity_keeps_identity_basis() {
        let e = sym_eigen(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.vectors, DMatrix::identity(3, 3));
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn horner_matches_explicit_powers() {
        let s = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.1, 0.3]);
        let coeffs = [1.0, -2.0, 0.5];
        let explicit = DMatrix::identity(2, 2) * 1.0 - &s * 2.0 + &s * &s * 0.5;
        assert!((matrix_polynomial(&coeffs, &s) - &explicit).amax() < 1e-15);
        let x = DVector::from_vec(vec![1.0, -1.0]);
        assert!((polynomial_apply(&coeffs, &s, &x) - &explicit * &x).amax() < 1e-15);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_permutation() {
        assert!(permutation_matrix(&[0, 0, 1]).is_err());
        assert!(permutation_matrix(&[0, 3, 1]).is_err());
        let p = permutation_matrix(&[2, 0, 1]).unwrap();
        let x = DVector::from_vec(vec![10.0, 20.0, 30.0]);
        assert_eq!((p.transpose() * x).as_slice(), &[30.0, 10.0, 20.0]);
    }
}
