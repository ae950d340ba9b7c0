use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::graph::{eigendecompose, make_shift, Graph, ShiftKind, StSignal};
use crate::rng::substream;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_samples: usize,
    pub n: usize,
    pub t: usize,
    pub channels: usize,
    pub classes: usize,
    /// Standard deviation of the additive white noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_samples: 200,
            n: 20,
            t: 64,
            channels: 1,
            classes: 2,
            noise: 0.1,
            seed: 7,
        }
    }
}

/// Connected random graph: a random tree plus about `n / 2` extra edges,
/// weights in `[0.5, 2)`.
pub fn random_graph(n: usize, rng: &mut impl Rng) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i, rng.random_range(0.5..2.0)));
    }
    for _ in 0..n / 2 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            edges.push((i.min(j), i.max(j), rng.random_range(0.5..2.0)));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Graph-smooth pattern: random mix of the lowest graph frequencies,
/// scaled to unit RMS.
fn smooth_pattern(low: &DMatrix<f64>, rng: &mut impl Rng) -> DVector<f64> {
    let c = DVector::from_fn(low.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = low * c;
    let rms = s.norm() / (s.len() as f64).sqrt();
    if rms > 0.0 {
        s / rms
    } else {
        s
    }
}

/// Cycles per clip for class `c`.
fn class_cycles(c: usize, classes: usize, t: usize) -> f64 {
    let top = (t as f64 / 2.0 - 2.0).max(2.0);
    let step = ((top - 2.0) / classes as f64).min(6.0);
    2.0 + step * c as f64
}

/// Class `c` is a graph-smooth pattern on a random spatial graph times a
/// sinusoid whose frequency depends on `c`, with random phase, sign,
/// pattern, frequency jitter and white noise. All classes share the same
/// amplitude distribution, so per-node energy does not separate them.
pub fn generate_synthetic_dataset(p: &SynthParams) -> Result<Dataset> {
    if p.n_samples == 0 || p.n == 0 || p.t == 0 || p.channels == 0 || p.classes == 0 {
        return Err(Error::invalid("synthetic parameters must be positive"));
    }
    if p.n_samples < p.classes {
        return Err(Error::invalid("fewer samples than classes"));
    }
    let graph = random_graph(p.n, &mut substream(p.seed, 0))?;
    let lap = eigendecompose(&make_shift(&graph, ShiftKind::NormalizedLaplacian))?;
    let k = p.n.min(4);
    let low = lap.eig().expect("eigendecomposed").vectors.columns(0, k).into_owned();
    let mut samples = Vec::with_capacity(p.n_samples);
    for i in 0..p.n_samples {
        let label = i % p.classes;
        let mut rng = substream(p.seed, 1 + i as u64);
        let base = class_cycles(label, p.classes, p.t);
        let mut channels = Vec::with_capacity(p.channels);
        for _ in 0..p.channels {
            let cycles = base + rng.random_range(-1.0..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            let amp = rng.random_range(0.8..1.2);
            let s = smooth_pattern(&low, &mut rng);
            let z = DMatrix::from_fn(p.n, p.t, |v, t| {
                let w = (2.0 * PI * cycles * t as f64 / p.t as f64 + phase).sin();
                amp * s[v] * w
            });
            let noise = DMatrix::from_fn(p.n, p.t, |_, _| rng.sample::<f64, _>(StandardNormal));
            channels.push(z + noise * p.noise);
        }
        samples.push((format!("s{i:04}"), label, StSignal::new(channels)?));
    }
    Dataset::new(samples, Some(graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_single_class() {
        let p = SynthParams {
            n_samples: 6,
            n: 5,
            t: 16,
            classes: 1,
            ..SynthParams::default()
        };
        let a = generate_synthetic_dataset(&p).unwrap();
        assert_eq!(a, generate_synthetic_dataset(&p).unwrap());
        assert!(a.labels().iter().all(|&l| l == 0));
        assert_eq!((a.n_spatial, a.n_time, a.channels), (5, 16, 1));
        let other = generate_synthetic_dataset(&SynthParams { seed: 8, ..p }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn balanced_labels() {
        let p = SynthParams {
            n_samples: 9,
            classes: 3,
            channels: 2,
            ..SynthParams::default()
        };
        let ds = generate_synthetic_dataset(&p).unwrap();
        assert_eq!(ds.labels(), vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
        assert_eq!(ds.samples[0].signal.n_channels(), 2);
    }
}
