//! Spatial and temporal graphs, graph shift operators and the
//! row-major flattening convention used by every other module.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Eigen};
use crate::{Error, Result};

/// Undirected weighted graph stored as a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

/// On-disk form: `{"n": 4, "edges": [[0, 1, 1.0], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Wraps an adjacency matrix after checking symmetry, non-negativity
    /// and an empty diagonal.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || !adjacency.is_square() {
            return Err(Error::invalid("adjacency must be a non-empty square matrix"));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!(
                        "weight ({i},{j}) = {w} must be finite and >= 0"
                    )));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::invalid(format!("adjacency not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { adjacency })
    }

    /// Builds a graph from an edge list; duplicate edges keep the last weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::invalid(format!("edge ({i},{j}) weight {w} must be positive")));
            }
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        Ok(Self { adjacency: a })
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        Self::from_edges(json.n, &json.edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json: GraphJson = serde_json::from_str(&text)?;
        Self::from_json(&json)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> GraphJson {
        let n = self.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.adjacency[(i, j)];
                if w != 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        GraphJson { n, edges }
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.adjacency.row_iter().map(|r| r.sum()))
    }

    /// Relabels nodes so that new node `i` is old node `perm[i]`,
    /// i.e. `P^T A P`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        linalg::check_permutation(perm)?;
        if perm.len() != self.n() {
            return Err(Error::invalid("permutation length differs from node count"));
        }
        let n = self.n();
        let a = DMatrix::from_fn(n, n, |i, j| self.adjacency[(perm[i], perm[j])]);
        Ok(Self { adjacency: a })
    }
}

/// Path graph on `t` nodes linking consecutive time stamps.
pub fn build_line_graph(t: usize) -> Result<Graph> {
    if t == 0 {
        return Err(Error::invalid("line graph needs T >= 1"));
    }
    let edges: Vec<_> = (0..t.saturating_sub(1)).map(|i| (i, i + 1, 1.0)).collect();
    Graph::from_edges(t, &edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Adjacency,
    NormalizedAdjacency,
    LazyRandomWalk,
    NormalizedLaplacian,
}

impl ShiftKind {
    pub const ALL: [ShiftKind; 4] = [
        ShiftKind::Adjacency,
        ShiftKind::NormalizedAdjacency,
        ShiftKind::LazyRandomWalk,
        ShiftKind::NormalizedLaplacian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShiftKind::Adjacency => "adjacency",
            ShiftKind::NormalizedAdjacency => "normalized_adjacency",
            ShiftKind::LazyRandomWalk => "lazy_random_walk",
            ShiftKind::NormalizedLaplacian => "normalized_laplacian",
        }
    }
}

impl fmt::Display for ShiftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShiftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShiftKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shift kind '{s}'")))
    }
}

/// A concrete graph shift operator, optionally carrying its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMatrix {
    kind: ShiftKind,
    matrix: DMatrix<f64>,
    symmetric: bool,
    eig: Option<Eigen>,
}

impl ShiftMatrix {
    /// Wraps an arbitrary square matrix; the symmetric flag is measured.
    pub fn from_matrix(kind: ShiftKind, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("shift must be a non-empty square matrix"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("shift has non-finite entries"));
        }
        let symmetric = linalg::asymmetry(&matrix) <= 1e-12;
        Ok(Self {
            kind,
            matrix,
            symmetric,
            eig: None,
        })
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn eig(&self) -> Option<&Eigen> {
        self.eig.as_ref()
    }

    /// `(min, max)` eigenvalue when the decomposition is present.
    pub fn spectral_range(&self) -> Option<(f64, f64)> {
        let e = self.eig.as_ref()?;
        let n = e.values.len();
        Some((e.values[0], e.values[n - 1]))
    }

    /// Convenience for the common `make_shift` + `eigendecompose` pair.
    pub fn with_eig(self) -> Result<Self> {
        eigendecompose(&self)
    }
}

/// Derives a shift operator of the requested kind from a graph.
///
/// Isolated nodes get a zero inverse degree: the lazy walk keeps `1/2` on
/// their diagonal and the normalized Laplacian keeps `1`.
pub fn make_shift(g: &Graph, kind: ShiftKind) -> ShiftMatrix {
    let a = g.adjacency();
    let n = g.n();
    let deg = g.degrees();
    let inv = |d: f64| if d > 0.0 { 1.0 / d } else { 0.0 };
    let matrix = match kind {
        ShiftKind::Adjacency => a.clone(),
        ShiftKind::NormalizedAdjacency => {
            let top = linalg::sym_eigenvalues(a).last().copied().unwrap_or(0.0);
            if top > 0.0 {
                a / top
            } else {
                a.clone()
            }
        }
        ShiftKind::LazyRandomWalk => DMatrix::from_fn(n, n, |i, j| {
            let walk = a[(i, j)] * inv(deg[j]);
            let eye = if i == j { 1.0 } else { 0.0 };
            0.5 * (eye + walk)
        }),
        ShiftKind::NormalizedLaplacian => {
            let s: Vec<f64> = deg.iter().map(|&d| inv(d).sqrt()).collect();
            DMatrix::from_fn(n, n, |i, j| {
                let eye = if i == j { 1.0 } else { 0.0 };
                eye - a[(i, j)] * (s[i] * s[j])
            })
        }
    };
    let symmetric = match kind {
        ShiftKind::LazyRandomWalk => linalg::asymmetry(&matrix) == 0.0,
        _ => true,
    };
    ShiftMatrix {
        kind,
        matrix,
        symmetric,
        eig: None,
    }
}

/// Returns a copy of `s` with its eigendecomposition populated.
pub fn eigendecompose(s: &ShiftMatrix) -> Result<ShiftMatrix> {
    if !s.symmetric {
        return Err(Error::invalid(format!(
            "{} shift is not symmetric; eigendecomposition needs a symmetric shift",
            s.kind
        )));
    }
    let eig = linalg::sym_eigen(&s.matrix)?;
    Ok(ShiftMatrix {
        eig: Some(eig),
        ..s.clone()
    })
}

/// Row-major flattening: `z[s * T + t] = Z[(s, t)]`.
pub fn flatten(z: &DMatrix<f64>) -> DVector<f64> {
    let (n, t) = z.shape();
    DVector::from_fn(n * t, |k, _| z[(k / t, k % t)])
}

pub fn unflatten(z: &DVector<f64>, n: usize, t: usize) -> Result<DMatrix<f64>> {
    if z.len() != n * t {
        return Err(Error::invalid(format!(
            "vector of length {} cannot be reshaped to {n}x{t}",
            z.len()
        )));
    }
    Ok(DMatrix::from_fn(n, t, |s, k| z[s * t + k]))
}

/// Multi-channel spatio-temporal signal: one `N x T` matrix per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct StSignal {
    channels: Vec<DMatrix<f64>>,
}

impl StSignal {
    pub fn new(channels: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::invalid("signal needs at least one channel"))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::invalid("signal dimensions must be positive"));
        }
        for c in &channels {
            if c.shape() != shape {
                return Err(Error::invalid("all channels must share the N x T shape"));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("signal has non-finite entries"));
            }
        }
        Ok(Self { channels })
    }

    pub fn single(z: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![z])
    }

    pub fn zeros(channels: usize, n: usize, t: usize) -> Result<Self> {
        Self::new(vec![DMatrix::zeros(n, t); channels])
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_spatial(&self) -> usize {
        self.channels[0].nrows()
    }

    pub fn n_time(&self) -> usize {
        self.channels[0].ncols()
    }

    pub fn channel(&self, c: usize) -> &DMatrix<f64> {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[DMatrix<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<DMatrix<f64>> {
        self.channels
    }

    /// Frobenius norm over all channels.
    pub fn norm(&self) -> f64 {
        self.channels.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt()
    }

    /// Applies `P^T` to every channel (row `i` becomes old row `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        linalg::check_permutation(perm)?;
        if perm.len() != self.n_spatial() {
            return Err(Error::invalid("permutation length differs from node count"));
        }
        let channels = self
            .channels
            .iter()
            .map(|z| DMatrix::from_fn(z.nrows(), z.ncols(), |i, t| z[(perm[i], t)]))
            .collect();
        Ok(Self { channels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn line_graph_examples() {
        assert_eq!(
            build_line_graph(3).unwrap().adjacency(),
            &m(3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.])
        );
        assert_eq!(build_line_graph(1).unwrap().adjacency(), &DMatrix::zeros(1, 1));
        assert_eq!(build_line_graph(2).unwrap().adjacency(), &m(2, &[0., 1., 1., 0.]));
        assert!(matches!(build_line_graph(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn edges_examples() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.adjacency(), &m(2, &[0., 1., 1., 0.]));
        assert_eq!(Graph::from_edges(3, &[]).unwrap().adjacency(), &DMatrix::zeros(3, 3));
        let c4 = Graph::from_edges(4, &[(0, 1, 1.), (1, 2, 1.), (2, 3, 1.), (3, 0, 1.)]).unwrap();
        assert!(c4.degrees().iter().all(|&d| d == 2.0));
        assert_eq!(c4.adjacency()[(0, 3)], 1.0);
        assert_eq!(c4.adjacency()[(0, 2)], 0.0);
    }

    #[test]
    fn edges_last_write_wins_and_errors() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(g.adjacency()[(0, 1)], 3.0);
        assert!(Graph::from_edges(2, &[(0, 0, 1.0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 2, 1.0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 2.5]]}"#;
        let json: GraphJson = serde_json::from_str(text).unwrap();
        let g = Graph::from_json(&json).unwrap();
        assert_eq!(g.to_json(), json);
    }

    #[test]
    fn lazy_walk_examples() {
        let k2 = build_line_graph(2).unwrap();
        let s = make_shift(&k2, ShiftKind::LazyRandomWalk);
        assert_eq!(s.matrix(), &m(2, &[0.5, 0.5, 0.5, 0.5]));
        let p3 = build_line_graph(3).unwrap();
        let s = make_shift(&p3, ShiftKind::LazyRandomWalk);
        // oracle: 0.5 * (I + A D^-1) with D = diag(1, 2, 1)
        let a = p3.adjacency();
        let dinv = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 1.0]));
        let oracle = (DMatrix::identity(3, 3) + a * dinv) * 0.5;
        assert_eq!(s.matrix(), &oracle);
        assert_eq!(s.matrix(), &m(3, &[0.5, 0.25, 0., 0.5, 0.5, 0.5, 0., 0.25, 0.5]));
        assert!(!s.is_symmetric());
    }

    #[test]
    fn normalized_laplacian_of_k2() {
        let s = make_shift(&build_line_graph(2).unwrap(), ShiftKind::NormalizedLaplacian);
        assert_eq!(s.matrix(), &m(2, &[1., -1., -1., 1.]));
        let e = eigendecompose(&s).unwrap();
        let vals = &e.eig().unwrap().values;
        assert!(vals[0].abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn p3_laplacian_spectrum() {
        // characteristic polynomial of [[1,-a,0],[-a,1,-a],[0,-a,1]] with a = 1/sqrt2:
        // (1-x)((1-x)^2 - 1) = 0  ->  x in {0, 1, 2}
        let s = make_shift(&build_line_graph(3).unwrap(), ShiftKind::NormalizedLaplacian);
        let e = eigendecompose(&s).unwrap();
        let vals = &e.eig().unwrap().values;
        for (got, want) in vals.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn isolated_nodes() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        let lazy = make_shift(&g, ShiftKind::LazyRandomWalk);
        assert_eq!(lazy.matrix()[(2, 2)], 0.5);
        assert_eq!(lazy.matrix().column(2).sum(), 0.5);
        let lap = make_shift(&g, ShiftKind::NormalizedLaplacian);
        assert_eq!(lap.matrix()[(2, 2)], 1.0);
    }

    #[test]
    fn normalized_adjacency_has_unit_top_eigenvalue() {
        let g = Graph::from_edges(4, &[(0, 1, 1.), (1, 2, 2.), (2, 3, 1.), (0, 2, 0.5)]).unwrap();
        let s = eigendecompose(&make_shift(&g, ShiftKind::NormalizedAdjacency)).unwrap();
        assert!((s.spectral_range().unwrap().1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigendecompose_rejects_asymmetric() {
        let s = make_shift(&build_line_graph(3).unwrap(), ShiftKind::LazyRandomWalk);
        assert!(matches!(eigendecompose(&s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(flatten(&m(2, &[1., 2., 3., 4.])).as_slice(), &[1., 2., 3., 4.]);
        assert_eq!(unflatten(&DVector::from_vec(vec![5.0]), 1, 1).unwrap(), m(1, &[5.]));
        assert_eq!(flatten(&m(1, &[1., 2., 3.])).as_slice(), &[1., 2., 3.]);
        assert!(unflatten(&DVector::from_vec(vec![1.0, 2.0]), 3, 1).is_err());
    }

    #[test]
    fn shift_kind_names() {
        for k in ShiftKind::ALL {
            assert_eq!(k.name().parse::<ShiftKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("laplacian".parse::<ShiftKind>().is_err());
    }
}
