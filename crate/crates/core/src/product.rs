//! Joint spatio-temporal product graphs.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, ShiftMatrix};
use crate::linalg::kron;
use crate::{Error, Result};

/// Largest joint graph (`N * T` nodes) that will be assembled densely.
pub const MAX_JOINT_NODES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    Kronecker,
    Cartesian,
    Strong,
}

impl ProductKind {
    pub const ALL: [ProductKind; 3] = [ProductKind::Kronecker, ProductKind::Cartesian, ProductKind::Strong];

    pub fn name(self) -> &'static str {
        match self {
            ProductKind::Kronecker => "kronecker",
            ProductKind::Cartesian => "cartesian",
            ProductKind::Strong => "strong",
        }
    }

    /// Joint graph frequency from a spatial/temporal eigenvalue pair.
    pub fn combine(self, ls: f64, lt: f64) -> f64 {
        match self {
            ProductKind::Kronecker => ls * lt,
            ProductKind::Cartesian => ls + lt,
            ProductKind::Strong => ls * lt + ls + lt,
        }
    }

    /// Same combination applied to matrices (shift operators).
    pub fn combine_matrices(self, ss: &DMatrix<f64>, st: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, t) = (ss.nrows(), st.nrows());
        let kr = || kron(ss, st);
        let cart = || kron(ss, &DMatrix::identity(t, t)) + kron(&DMatrix::identity(n, n), st);
        match self {
            ProductKind::Kronecker => kr(),
            ProductKind::Cartesian => cart(),
            ProductKind::Strong => kr() + cart(),
        }
    }
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProductKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProductKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown product kind '{s}'")))
    }
}

/// An `NT`-node product graph; node `(s, t)` sits at index `s * T + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGraph {
    pub kind: ProductKind,
    pub n_spatial: usize,
    pub n_time: usize,
    graph: Graph,
}

impl ProductGraph {
    pub fn adjacency(&self) -> &DMatrix<f64> {
        self.graph.adjacency()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }
}

pub fn check_joint_size(n: usize, t: usize) -> Result<()> {
    if n * t > MAX_JOINT_NODES {
        return Err(Error::invalid(format!(
            "joint graph with N*T = {} exceeds the dense limit of {MAX_JOINT_NODES}",
            n * t
        )));
    }
    Ok(())
}

/// Assembles the product of a spatial and a temporal graph.
pub fn product(spatial: &Graph, temporal: &Graph, kind: ProductKind) -> Result<ProductGraph> {
    let (n, t) = (spatial.n(), temporal.n());
    check_joint_size(n, t)?;
    let a = kind.combine_matrices(spatial.adjacency(), temporal.adjacency());
    Ok(ProductGraph {
        kind,
        n_spatial: n,
        n_time: t,
        graph: Graph::from_adjacency(a)?,
    })
}

/// Shared Fourier basis `V = V_s (x) V_t` of all three products.
#[derive(Debug, Clone)]
pub struct JointBasis {
    pub vectors: DMatrix<f64>,
    /// `(lambda_s[i], lambda_t[j])` at index `i * T + j`.
    pub pairs: Vec<(f64, f64)>,
}

impl JointBasis {
    pub fn joint_eigenvalues(&self, kind: ProductKind) -> Vec<f64> {
        self.pairs.iter().map(|&(a, b)| kind.combine(a, b)).collect()
    }

    /// `V diag(h(lambda_joint)) V^T x`.
    pub fn apply_kernel(
        &self,
        kind: ProductKind,
        h: impl Fn(f64) -> f64,
        x: &nalgebra::DVector<f64>,
    ) -> nalgebra::DVector<f64> {
        let mut coeffs = self.vectors.tr_mul(x);
        for (c, &(a, b)) in coeffs.iter_mut().zip(&self.pairs) {
            *c *= h(kind.combine(a, b));
        }
        &self.vectors * coeffs
    }
}

pub fn joint_fourier_basis(ss: &ShiftMatrix, st: &ShiftMatrix) -> Result<JointBasis> {
    let (es, et) = match (ss.eig(), st.eig()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("joint Fourier basis needs both eigendecompositions")),
    };
    check_joint_size(ss.n(), st.n())?;
    let pairs = es
        .values
        .iter()
        .flat_map(|&a| et.values.iter().map(move |&b| (a, b)))
        .collect();
    Ok(JointBasis {
        vectors: kron(&es.vectors, &et.vectors),
        pairs,
    })
}
