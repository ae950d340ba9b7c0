//! Scattering-tree forward pass: separable (`H Z G^T`) and joint
//! (product-graph) variants, pooling, and the feature map layout.
//!
//! Feature ordering is fixed: channel-major, then breadth-first by layer,
//! then lexicographic by path within a layer. The root contributes a
//! feature, so a tree with `L` layers and `J` children per node has
//! `sum_{l<L} J^l` entries.

use std::fmt;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::graph::{
    build_line_graph, eigendecompose, flatten, make_shift, unflatten, Graph, ShiftKind, ShiftMatrix, StSignal,
};
use crate::product::{product, ProductKind};
use crate::wavelet::{BankSpec, FilterBank, WaveletFamily, DEFAULT_MONIC_CUBIC_SCALE_RANGE};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Separable,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    SpatialAvg,
    TemporalAvg,
    FullAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    Abs,
}

fn one() -> usize {
    1
}
fn default_layers() -> usize {
    3
}
fn geometric() -> WaveletFamily {
    WaveletFamily::Geometric
}
fn spatial_avg() -> Pooling {
    Pooling::SpatialAvg
}
fn scale_range() -> (f64, f64) {
    DEFAULT_MONIC_CUBIC_SCALE_RANGE
}

/// Transform configuration, read from JSON such as
/// `{"mode": "separable", "L": 3, "Js": 2, "Jt": 2, "pooling": "spatial_avg"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    pub mode: Mode,
    /// Product graph for joint mode (default strong).
    #[serde(default)]
    pub product: Option<ProductKind>,
    #[serde(rename = "L", default = "default_layers")]
    pub layers: usize,
    #[serde(rename = "Js", default = "one")]
    pub js: usize,
    #[serde(rename = "Jt", default = "one")]
    pub jt: usize,
    /// Joint scale count; defaults to `Js * Jt`.
    #[serde(rename = "J", default)]
    pub j: Option<usize>,
    #[serde(default = "geometric")]
    pub spatial_family: WaveletFamily,
    #[serde(default = "geometric")]
    pub temporal_family: WaveletFamily,
    /// Joint-mode family; defaults to `spatial_family`.
    #[serde(default)]
    pub joint_family: Option<WaveletFamily>,
    #[serde(default)]
    pub spatial_shift: Option<ShiftKind>,
    #[serde(default)]
    pub temporal_shift: Option<ShiftKind>,
    #[serde(default)]
    pub joint_shift: Option<ShiftKind>,
    #[serde(default = "spatial_avg")]
    pub pooling: Pooling,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    /// Skip the nonlinearity (linear ablation).
    #[serde(default)]
    pub linear_bypass: bool,
    #[serde(default)]
    pub keep_tree_signals: bool,
    #[serde(default = "scale_range")]
    pub monic_cubic_scale_range: (f64, f64),
    #[serde(default)]
    pub custom_spatial: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub custom_temporal: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub custom_joint: Option<Vec<Vec<f64>>>,
    /// Spatial graph JSON; overrides the dataset manifest's graph.
    #[serde(default)]
    pub spatial_graph: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ScatteringConfig {
    pub fn separable(js: usize, jt: usize, layers: usize) -> Self {
        Self {
            mode: Mode::Separable,
            product: None,
            layers,
            js,
            jt,
            j: None,
            spatial_family: WaveletFamily::Geometric,
            temporal_family: WaveletFamily::Geometric,
            joint_family: None,
            spatial_shift: None,
            temporal_shift: None,
            joint_shift: None,
            pooling: Pooling::SpatialAvg,
            nonlinearity: Nonlinearity::Abs,
            linear_bypass: false,
            keep_tree_signals: false,
            monic_cubic_scale_range: DEFAULT_MONIC_CUBIC_SCALE_RANGE,
            custom_spatial: None,
            custom_temporal: None,
            custom_joint: None,
            spatial_graph: None,
            seed: 0,
        }
    }

    pub fn joint(kind: ProductKind, j: usize, layers: usize) -> Self {
        Self {
            mode: Mode::Joint,
            product: Some(kind),
            j: Some(j),
            ..Self::separable(1, 1, layers)
        }
    }

    pub fn with_families(mut self, spatial: WaveletFamily, temporal: WaveletFamily) -> Self {
        self.spatial_family = spatial;
        self.temporal_family = temporal;
        self
    }

    pub fn with_pooling(mut self, pooling: Pooling) -> Self {
        self.pooling = pooling;
        self
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        if let (Some(g), Some(dir)) = (&cfg.spatial_graph, path.parent()) {
            if g.is_relative() {
                cfg.spatial_graph = Some(dir.join(g));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::invalid("L must be >= 1"));
        }
        match self.mode {
            Mode::Separable if self.js == 0 || self.jt == 0 => Err(Error::invalid("Js and Jt must be >= 1")),
            Mode::Joint if self.branching() == 0 => Err(Error::invalid("J must be >= 1")),
            _ => Ok(()),
        }
    }

    pub fn product_kind(&self) -> ProductKind {
        self.product.unwrap_or(ProductKind::Strong)
    }

    /// Children per tree node: `Js * Jt` (separable) or `J` (joint).
    pub fn branching(&self) -> usize {
        match self.mode {
            Mode::Separable => self.js * self.jt,
            Mode::Joint => self.j.unwrap_or(self.js * self.jt),
        }
    }

    /// Number of tree nodes, `sum_{l<L} J^l`.
    pub fn node_count(&self) -> usize {
        tree_size(self.branching(), self.layers)
    }

    fn bank_spec(&self, family: WaveletFamily, scales: usize, custom: &Option<Vec<Vec<f64>>>) -> BankSpec {
        BankSpec {
            family,
            scales,
            monic_cubic_scale_range: self.monic_cubic_scale_range,
            custom: custom.clone(),
        }
    }

    pub fn spatial_spec(&self) -> BankSpec {
        self.bank_spec(self.spatial_family, self.js, &self.custom_spatial)
    }

    pub fn temporal_spec(&self) -> BankSpec {
        self.bank_spec(self.temporal_family, self.jt, &self.custom_temporal)
    }

    pub fn joint_family(&self) -> WaveletFamily {
        self.joint_family.unwrap_or(self.spatial_family)
    }

    pub fn joint_spec(&self) -> BankSpec {
        self.bank_spec(self.joint_family(), self.branching(), &self.custom_joint)
    }
}

pub fn tree_size(branching: usize, layers: usize) -> usize {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..layers {
        total = total.saturating_add(level);
        level = level.saturating_mul(branching);
    }
    total
}

/// Path from the root: 1-based `(j1, j2)` pairs (separable) or `j` (joint).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreePath {
    Separable(Vec<(usize, usize)>),
    Joint(Vec<usize>),
}

impl TreePath {
    pub fn depth(&self) -> usize {
        match self {
            TreePath::Separable(p) => p.len(),
            TreePath::Joint(p) => p.len(),
        }
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreePath::Separable(p) if p.is_empty() => f.write_str("root"),
            TreePath::Joint(p) if p.is_empty() => f.write_str("root"),
            TreePath::Separable(p) => {
                let parts: Vec<_> = p.iter().map(|(a, b)| format!("({a},{b})")).collect();
                f.write_str(&parts.join("/"))
            }
            TreePath::Joint(p) => {
                let parts: Vec<_> = p.iter().map(|j| j.to_string()).collect();
                f.write_str(&parts.join("/"))
            }
        }
    }
}

/// Pooled features of every tree node, per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    layers: usize,
    branching: usize,
    /// Temporal scales for separable trees, `None` for joint trees.
    jt: Option<usize>,
    /// `phi[c][k]`: channel `c`, node `k` in breadth-first order.
    phi: Vec<Vec<DVector<f64>>>,
    signals: Option<Vec<Vec<DMatrix<f64>>>>,
}

/// One tree node's pooled features across channels.
#[derive(Debug, Clone)]
pub struct FeatureEntry<'a> {
    pub path: TreePath,
    pub phi: Vec<&'a DVector<f64>>,
}

impl FeatureMap {
    /// Number of tree nodes.
    pub fn len(&self) -> usize {
        self.phi[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.phi.len()
    }

    pub fn entry_dim(&self) -> usize {
        self.phi[0][0].len() * self.channels()
    }

    pub fn total_dim(&self) -> usize {
        self.phi.iter().flatten().map(|v| v.len()).sum()
    }

    pub fn path(&self, node: usize) -> TreePath {
        let mut layer = 0;
        let mut start = 0;
        let mut width = 1;
        while node >= start + width {
            start += width;
            width *= self.branching;
            layer += 1;
        }
        let mut idx = node - start;
        let mut digits = vec![0; layer];
        for d in digits.iter_mut().rev() {
            *d = idx % self.branching;
            idx /= self.branching;
        }
        match self.jt {
            Some(jt) => TreePath::Separable(digits.iter().map(|&c| (c / jt + 1, c % jt + 1)).collect()),
            None => TreePath::Joint(digits.iter().map(|&c| c + 1).collect()),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = FeatureEntry<'_>> + '_ {
        (0..self.len()).map(move |k| FeatureEntry {
            path: self.path(k),
            phi: self.phi.iter().map(|ch| &ch[k]).collect(),
        })
    }

    pub fn phi(&self, channel: usize, node: usize) -> &DVector<f64> {
        &self.phi[channel][node]
    }

    /// Node signals when the config asked to keep them.
    pub fn tree_signals(&self, channel: usize) -> Option<&[DMatrix<f64>]> {
        self.signals.as_ref().map(|s| s[channel].as_slice())
    }

    /// Flat feature vector in canonical (channel-major) order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_dim());
        for ch in &self.phi {
            for v in ch {
                out.extend_from_slice(v.as_slice());
            }
        }
        out
    }

    /// Euclidean distance between two maps of the same layout.
    pub fn distance(&self, other: &FeatureMap) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn pool(z: &DMatrix<f64>, mode: Pooling) -> DVector<f64> {
    let (n, t) = z.shape();
    match mode {
        Pooling::SpatialAvg => DVector::from_fn(t, |j, _| z.column(j).sum() / n as f64),
        Pooling::TemporalAvg => DVector::from_fn(n, |i, _| z.row(i).sum() / t as f64),
        Pooling::FullAvg => DVector::from_element(1, z.sum() / (n * t) as f64),
    }
}

/// Elementwise absolute value, or identity when `bypass` is set.
pub fn nonlinearity_apply(z: DMatrix<f64>, bypass: bool) -> DMatrix<f64> {
    if bypass {
        z
    } else {
        z.abs()
    }
}

pub fn pooled_dim(pooling: Pooling, n: usize, t: usize) -> usize {
    match pooling {
        Pooling::SpatialAvg => t,
        Pooling::TemporalAvg => n,
        Pooling::FullAvg => 1,
    }
}

/// `C * (per-node dimension) * sum_{l<L} J^l`.
pub fn feature_dimension(cfg: &ScatteringConfig, n: usize, t: usize, channels: usize) -> usize {
    channels
        .saturating_mul(pooled_dim(cfg.pooling, n, t))
        .saturating_mul(cfg.node_count())
}

type PoolFn<S> = dyn Fn(&S) -> DVector<f64> + Sync;
type KeepFn<S> = dyn Fn(&S) -> DMatrix<f64> + Sync;

struct Tree<'a, S, F> {
    layers: usize,
    branching: usize,
    offsets: Vec<usize>,
    child: F,
    pool: &'a PoolFn<S>,
    keep: Option<&'a KeepFn<S>>,
}

type NodeOut = (usize, DVector<f64>, Option<DMatrix<f64>>);

impl<S: Sync + Send, F: Fn(&S, usize) -> S + Sync> Tree<'_, S, F> {
    fn visit(&self, z: &S, layer: usize, idx: usize, out: &mut Vec<NodeOut>) {
        let kept = self.keep.map(|k| k(z));
        out.push((self.offsets[layer] + idx, (self.pool)(z), kept));
        if layer + 1 < self.layers {
            for c in 0..self.branching {
                let child = (self.child)(z, c);
                self.visit(&child, layer + 1, idx * self.branching + c, out);
            }
        }
    }

    fn run(&self, root: &S) -> (Vec<DVector<f64>>, Option<Vec<DMatrix<f64>>>) {
        let total = tree_size(self.branching, self.layers);
        let mut nodes: Vec<NodeOut> = Vec::with_capacity(total);
        let kept = self.keep.map(|k| k(root));
        nodes.push((0, (self.pool)(root), kept));
        if self.layers > 1 {
            let subtree = |c: usize| {
                let mut out = Vec::new();
                let child = (self.child)(root, c);
                self.visit(&child, 1, c, &mut out);
                out
            };
            #[cfg(feature = "parallel")]
            let parts: Vec<Vec<NodeOut>> = {
                use rayon::prelude::*;
                (0..self.branching).into_par_iter().map(subtree).collect()
            };
            #[cfg(not(feature = "parallel"))]
            let parts: Vec<Vec<NodeOut>> = (0..self.branching).map(subtree).collect();
            nodes.extend(parts.into_iter().flatten());
        }
        nodes.sort_by_key(|n| n.0);
        debug_assert_eq!(nodes.len(), total);
        let keep = self.keep.is_some();
        let mut phi = Vec::with_capacity(total);
        let mut sig = Vec::new();
        for (_, p, s) in nodes {
            phi.push(p);
            if let Some(s) = s {
                sig.push(s);
            }
        }
        (phi, keep.then_some(sig))
    }
}

fn offsets(branching: usize, layers: usize) -> Vec<usize> {
    (0..layers).map(|l| tree_size(branching, l)).collect()
}

/// Separable tree: children `sigma(H_j1 Z G_j2^T)` in `(j1, j2)` lexicographic order.
pub fn scatter_separable(
    x: &StSignal,
    cfg: &ScatteringConfig,
    spatial: &FilterBank,
    temporal: &FilterBank,
) -> Result<FeatureMap> {
    cfg.validate()?;
    let (n, t) = (x.n_spatial(), x.n_time());
    if spatial.len() != cfg.js || temporal.len() != cfg.jt {
        return Err(Error::invalid(format!(
            "bank sizes ({}, {}) differ from Js={} Jt={}",
            spatial.len(),
            temporal.len(),
            cfg.js,
            cfg.jt
        )));
    }
    if spatial.dim() != n || temporal.dim() != t {
        return Err(Error::invalid(format!(
            "signal is {n}x{t} but banks act on {} nodes and {} time stamps",
            spatial.dim(),
            temporal.dim()
        )));
    }
    let jt = cfg.jt;
    let bypass = cfg.linear_bypass;
    let temporal_t: Vec<DMatrix<f64>> = temporal.filters().iter().map(|g| g.transpose()).collect();
    let pooling = cfg.pooling;
    let pool_fn = move |z: &DMatrix<f64>| pool(z, pooling);
    let keep_fn = |z: &DMatrix<f64>| z.clone();
    let tree = Tree {
        layers: cfg.layers,
        branching: cfg.branching(),
        offsets: offsets(cfg.branching(), cfg.layers),
        child: |z: &DMatrix<f64>, c: usize| {
            let h = &spatial.filters()[c / jt];
            let gt = &temporal_t[c % jt];
            nonlinearity_apply(h * z * gt, bypass)
        },
        pool: &pool_fn,
        keep: cfg.keep_tree_signals.then_some(&keep_fn as &KeepFn<DMatrix<f64>>),
    };
    let mut phi = Vec::with_capacity(x.n_channels());
    let mut signals = Vec::new();
    for z in x.channels() {
        let (p, s) = tree.run(z);
        phi.push(p);
        if let Some(s) = s {
            signals.push(s);
        }
    }
    Ok(FeatureMap {
        layers: cfg.layers,
        branching: cfg.branching(),
        jt: Some(jt),
        phi,
        signals: cfg.keep_tree_signals.then_some(signals),
    })
}

/// Joint tree over an `NT`-node product shift; signals are flattened
/// row-major and unflattened for pooling.
pub fn scatter_joint(x: &StSignal, cfg: &ScatteringConfig, bank: &FilterBank) -> Result<FeatureMap> {
    cfg.validate()?;
    let (n, t) = (x.n_spatial(), x.n_time());
    if bank.dim() != n * t {
        return Err(Error::invalid(format!(
            "joint bank acts on {} nodes but the signal has N*T = {}",
            bank.dim(),
            n * t
        )));
    }
    if bank.len() != cfg.branching() {
        return Err(Error::invalid(format!(
            "joint bank has {} filters, config expects J={}",
            bank.len(),
            cfg.branching()
        )));
    }
    let bypass = cfg.linear_bypass;
    let pooling = cfg.pooling;
    let pool_fn = move |z: &DVector<f64>| pool(&unflatten(z, n, t).expect("length checked"), pooling);
    let keep_fn = move |z: &DVector<f64>| unflatten(z, n, t).expect("length checked");
    let tree = Tree {
        layers: cfg.layers,
        branching: cfg.branching(),
        offsets: offsets(cfg.branching(), cfg.layers),
        child: |z: &DVector<f64>, c: usize| {
            let y = &bank.filters()[c] * z;
            if bypass {
                y
            } else {
                y.abs()
            }
        },
        pool: &pool_fn,
        keep: cfg.keep_tree_signals.then_some(&keep_fn as &KeepFn<DVector<f64>>),
    };
    let mut phi = Vec::with_capacity(x.n_channels());
    let mut signals = Vec::new();
    for z in x.channels() {
        let (p, s) = tree.run(&flatten(z));
        phi.push(p);
        if let Some(s) = s {
            signals.push(s);
        }
    }
    Ok(FeatureMap {
        layers: cfg.layers,
        branching: cfg.branching(),
        jt: None,
        phi,
        signals: cfg.keep_tree_signals.then_some(signals),
    })
}

/// Banks ready for a forward pass.
// built once per transform, so the variant size gap does not matter
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Banks {
    Separable {
        spatial_shift: ShiftMatrix,
        spatial: FilterBank,
        temporal: FilterBank,
    },
    Joint {
        bank: FilterBank,
    },
}

fn shift_for(g: &Graph, kind: ShiftKind, family: WaveletFamily) -> Result<ShiftMatrix> {
    let s = make_shift(g, kind);
    if family.requires_symmetric_shift() {
        eigendecompose(&s)
    } else {
        Ok(s)
    }
}

/// A configured transform for signals of a fixed `N x T` shape.
#[derive(Debug, Clone)]
pub struct Transform {
    cfg: ScatteringConfig,
    banks: Banks,
    n: usize,
    t: usize,
}

impl Transform {
    pub fn new(cfg: ScatteringConfig, spatial_graph: &Graph, t: usize) -> Result<Self> {
        cfg.validate()?;
        let temporal_graph = build_line_graph(t)?;
        let banks = match cfg.mode {
            Mode::Separable => {
                let sf = cfg.spatial_family;
                let tf = cfg.temporal_family;
                let ss = shift_for(spatial_graph, cfg.spatial_shift.unwrap_or(sf.default_shift()), sf)?;
                let st = shift_for(&temporal_graph, cfg.temporal_shift.unwrap_or(tf.default_shift()), tf)?;
                Banks::Separable {
                    spatial: cfg.spatial_spec().build(&ss)?,
                    temporal: cfg.temporal_spec().build(&st)?,
                    spatial_shift: ss,
                }
            }
            Mode::Joint => {
                let pg = product(spatial_graph, &temporal_graph, cfg.product_kind())?;
                let fam = cfg.joint_family();
                let s = shift_for(pg.graph(), cfg.joint_shift.unwrap_or(fam.default_shift()), fam)?;
                Banks::Joint {
                    bank: cfg.joint_spec().build(&s)?,
                }
            }
        };
        Ok(Self {
            cfg,
            banks,
            n: spatial_graph.n(),
            t,
        })
    }

    /// Builds a separable transform from prebuilt banks.
    pub fn from_separable(
        cfg: ScatteringConfig,
        spatial_shift: ShiftMatrix,
        spatial: FilterBank,
        temporal: FilterBank,
    ) -> Result<Self> {
        cfg.validate()?;
        let (n, t) = (spatial.dim(), temporal.dim());
        Ok(Self {
            cfg,
            banks: Banks::Separable {
                spatial_shift,
                spatial,
                temporal,
            },
            n,
            t,
        })
    }

    pub fn config(&self) -> &ScatteringConfig {
        &self.cfg
    }

    pub fn banks(&self) -> &Banks {
        &self.banks
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.t)
    }

    pub fn features(&self, x: &StSignal) -> Result<FeatureMap> {
        match &self.banks {
            Banks::Separable { spatial, temporal, .. } => scatter_separable(x, &self.cfg, spatial, temporal),
            Banks::Joint { bank } => scatter_joint(x, &self.cfg, bank),
        }
    }

    pub fn feature_dimension(&self, channels: usize) -> usize {
        feature_dimension(&self.cfg, self.n, self.t, channels)
    }
}
