use nalgebra::{DMatrix, DVector, Matrix3};

use crate::linalg;
use crate::product::ProductKind;
use crate::{Error, Result};

/// Coefficients `h_0 .. h_{K-1}` of `h(S) = sum_k h_k S^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFilter {
    coeffs: Vec<f64>,
}

impl PolynomialFilter {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("polynomial filter needs K >= 1 coefficients"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::invalid("polynomial filter needs a nonzero coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * lambda + c)
    }
}

/// Separable filtering `H X G^T`, costing `O(N^2 T + N T^2)`.
pub fn apply_separable(x: &DMatrix<f64>, h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, t) = x.shape();
    if h.shape() != (n, n) || g.shape() != (t, t) {
        return Err(Error::invalid(format!(
            "separable filter shapes {:?} and {:?} do not match a {n}x{t} signal",
            h.shape(),
            g.shape()
        )));
    }
    Ok(h * x * g.transpose())
}

/// Joint filtering `sum_k h_k S^k x` by Horner's rule, `O(K (NT)^2)`.
pub fn apply_joint(x: &DVector<f64>, filter: &PolynomialFilter, shift: &DMatrix<f64>) -> Result<DVector<f64>> {
    if shift.nrows() != x.len() || shift.ncols() != x.len() {
        return Err(Error::invalid(format!(
            "joint shift {:?} does not match a signal of length {}",
            shift.shape(),
            x.len()
        )));
    }
    Ok(linalg::polynomial_apply(filter.coeffs(), shift, x))
}

/// Coefficient of `lambda_s^i lambda_t^j` in `h(combine(lambda_s, lambda_t))`,
/// as a `K x K` matrix for a length-`K` joint filter.
pub fn joint_coefficient_matrix(h: &PolynomialFilter, kind: ProductKind) -> DMatrix<f64> {
    let k = h.len();
    // bivariate polynomial of the joint argument, entry (i, j) ~ a^i b^j
    let mut arg = DMatrix::zeros(2, 2);
    match kind {
        ProductKind::Kronecker => arg[(1, 1)] = 1.0,
        ProductKind::Cartesian => {
            arg[(1, 0)] = 1.0;
            arg[(0, 1)] = 1.0;
        }
        ProductKind::Strong => {
            arg[(1, 0)] = 1.0;
            arg[(0, 1)] = 1.0;
            arg[(1, 1)] = 1.0;
        }
    }
    let mut power = DMatrix::zeros(k, k);
    power[(0, 0)] = 1.0;
    let mut out = DMatrix::zeros(k, k);
    for (deg, &c) in h.coeffs().iter().enumerate() {
        if deg > 0 {
            power = bivariate_mul(&power, &arg, k);
        }
        out += &power * c;
    }
    out
}

fn bivariate_mul(p: &DMatrix<f64>, q: &DMatrix<f64>, size: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(size, size);
    for (i, j, a) in nz(p) {
        for (u, v, b) in nz(q) {
            if i + u < size && j + v < size {
                out[(i + u, j + v)] += a * b;
            }
        }
    }
    out
}

fn nz(m: &DMatrix<f64>) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    (0..m.nrows())
        .flat_map(move |i| (0..m.ncols()).map(move |j| (i, j, m[(i, j)])))
        .filter(|&(_, _, v)| v != 0.0)
}

/// Coefficient matrices of a length-3 strong-product joint filter (`C1`)
/// and of a 3x3-tap separable filter (`C2 = h g^T`).
pub fn coefficient_matrices(h: &PolynomialFilter, g: &PolynomialFilter) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    if h.len() != 3 || g.len() != 3 {
        return Err(Error::invalid("coefficient matrices are defined for length-3 filters"));
    }
    let c1 = joint_coefficient_matrix(h, ProductKind::Strong);
    let c1 = Matrix3::from_fn(|i, j| c1[(i, j)]);
    let c2 = Matrix3::from_fn(|i, j| h.coeffs()[i] * g.coeffs()[j]);
    Ok((c1, c2))
}
