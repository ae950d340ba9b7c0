use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::rng::substream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Knn { k: usize },
    NearestCentroid,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Knn { k } => write!(f, "knn(k={k})"),
            Method::NearestCentroid => f.write_str("nearest_centroid"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `knn`, `knn:7` or `nearest_centroid`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "knn" => Ok(Method::Knn { k: 5 }),
            None if s == "nearest_centroid" || s == "centroid" => Ok(Method::NearestCentroid),
            Some(("knn", k)) => k
                .parse()
                .map(|k| Method::Knn { k })
                .map_err(|_| Error::invalid(format!("bad k in '{s}'"))),
            _ => Err(Error::invalid(format!(
                "unknown method '{s}' (knn, knn:K, nearest_centroid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class shuffle with `substream(seed, label)`; each class sends
/// `round(fraction * count)` samples to training.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (&label, idx) in &by_class {
        let mut idx = idx.clone();
        idx.shuffle(&mut substream(seed, label as u64));
        let n_train = (train_fraction * idx.len() as f64).round() as usize;
        if n_train == 0 {
            return Err(Error::invalid(format!(
                "class {label} has no training samples at fraction {train_fraction}; use a larger train fraction"
            )));
        }
        split.train.extend_from_slice(&idx[..n_train]);
        split.test.extend_from_slice(&idx[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    if by_class.len() < 2 {
        return Err(Error::invalid("classification needs at least 2 classes"));
    }
    if split.test.is_empty() {
        return Err(Error::invalid("test split is empty; use a smaller train fraction"));
    }
    Ok(split)
}

fn zscore(features: &[Vec<f64>], train: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = features[0].len();
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in train {
        for (m, v) in mean.iter_mut().zip(&features[i]) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; d];
    for &i in train {
        for ((s, v), m) in sd.iter_mut().zip(&features[i]).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut sd {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    (mean, sd)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

type Predictor = Box<dyn Fn(&[f64]) -> usize>;

/// Test accuracy of a split after z-scoring on training statistics.
pub fn classify_split(features: &[Vec<f64>], labels: &[usize], method: Method, split: &Split) -> Result<f64> {
    if let Method::Knn { k } = method {
        if k == 0 || k > split.train.len() {
            return Err(Error::invalid(format!(
                "k = {k} must be in 1..={} (training set size)",
                split.train.len()
            )));
        }
    }
    let (mean, sd) = zscore(features, &split.train);
    let norm = |i: usize| -> Vec<f64> {
        features[i]
            .iter()
            .zip(&mean)
            .zip(&sd)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    };
    let train: Vec<(Vec<f64>, usize)> = split.train.iter().map(|&i| (norm(i), labels[i])).collect();
    let predict: Predictor = match method {
        Method::Knn { k } => Box::new(move |x: &[f64]| {
            let mut d: Vec<(f64, usize)> = train.iter().map(|(f, l)| (dist2(f, x), *l)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for &(_, l) in &d[..k] {
                *votes.entry(l).or_default() += 1;
            }
            // BTreeMap iterates labels ascending; keep the first maximum
            let mut best = (0, 0);
            for (l, c) in votes {
                if c > best.1 {
                    best = (l, c);
                }
            }
            best.0
        }),
        Method::NearestCentroid => {
            let mut sums: BTreeMap<usize, (Vec<f64>, f64)> = BTreeMap::new();
            for (f, l) in &train {
                let e = sums.entry(*l).or_insert_with(|| (vec![0.0; f.len()], 0.0));
                for (s, v) in e.0.iter_mut().zip(f) {
                    *s += v;
                }
                e.1 += 1.0;
            }
            let centroids: Vec<(usize, Vec<f64>)> = sums
                .into_iter()
                .map(|(l, (s, c))| (l, s.into_iter().map(|v| v / c).collect()))
                .collect();
            Box::new(move |x: &[f64]| {
                let mut best = (f64::INFINITY, 0);
                for (l, c) in &centroids {
                    let d = dist2(c, x);
                    if d < best.0 {
                        best = (d, *l);
                    }
                }
                best.1
            })
        }
    };
    let correct = split.test.iter().filter(|&&i| predict(&norm(i)) == labels[i]).count();
    Ok(correct as f64 / split.test.len() as f64)
}

/// Stratified split by `seed`, z-score, then kNN or nearest centroid;
/// returns the test accuracy.
pub fn classify(
    features: &[Vec<f64>],
    labels: &[usize],
    method: Method,
    train_fraction: f64,
    seed: u64,
) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != labels.len() {
        return Err(Error::invalid("feature and label counts differ"));
    }
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::invalid("feature rows differ in length"));
    }
    let split = stratified_split(labels, train_fraction, seed)?;
    classify_split(features, labels, method, &split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn clusters(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = substream(seed, 0);
        let mut f = Vec::new();
        let mut l = Vec::new();
        for i in 0..40 {
            let c = i % 2;
            let centre = if c == 0 { -10.0 } else { 10.0 };
            f.push(vec![centre + rng.random_range(-0.1..0.1)]);
            l.push(c);
        }
        (f, l)
    }

    #[test]
    fn separated_clusters() {
        let (f, l) = clusters(0);
        assert_eq!(classify(&f, &l, Method::Knn { k: 1 }, 0.5, 3).unwrap(), 1.0);
        assert_eq!(classify(&f, &l, Method::NearestCentroid, 0.5, 3).unwrap(), 1.0);
    }

    #[test]
    fn shuffled_labels_are_chance() {
        let mut total = 0.0;
        let runs = 20;
        for seed in 0..runs {
            let mut rng = substream(100 + seed, 0);
            let f: Vec<Vec<f64>> = (0..100)
                .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
                .collect();
            let mut l: Vec<usize> = (0..100).map(|i| i % 2).collect();
            l.shuffle(&mut rng);
            total += classify(&f, &l, Method::Knn { k: 5 }, 0.5, seed).unwrap();
        }
        let mean = total / runs as f64;
        assert!((mean - 0.5).abs() < 0.15, "{mean}");
    }

    #[test]
    fn preconditions() {
        let (f, l) = clusters(1);
        assert!(classify(&f, &l, Method::Knn { k: 21 }, 0.5, 0).is_err());
        assert!(classify(&f, &[0; 40], Method::Knn { k: 1 }, 0.5, 0).is_err());
        let mut rare = l.clone();
        rare[0] = 2;
        let err = classify(&f, &rare, Method::Knn { k: 1 }, 0.3, 0).unwrap_err();
        assert!(err.to_string().contains("larger train fraction"));
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let f = vec![vec![-1.0], vec![1.0], vec![0.0], vec![5.0], vec![-5.0]];
        let l = vec![1, 0, 0, 1, 0];
        let split = Split {
            train: vec![0, 1],
            test: vec![2],
        };
        assert_eq!(classify_split(&f, &l, Method::Knn { k: 2 }, &split).unwrap(), 1.0);
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let l: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let a = stratified_split(&l, 0.5, 9).unwrap();
        assert_eq!(a, stratified_split(&l, 0.5, 9).unwrap());
        for c in 0..3 {
            assert_eq!(a.train.iter().filter(|&&i| l[i] == c).count(), 5);
        }
        assert!("knn:3".parse::<Method>().unwrap() == Method::Knn { k: 3 });
        assert!("forest".parse::<Method>().is_err());
    }
}
