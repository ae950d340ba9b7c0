use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use super::synth::random_graph;
use crate::graph::StSignal;
use crate::product::{check_joint_size, ProductKind};
use crate::rng::{gaussian_matrix, substream};
use crate::scattering::{tree_size, ScatteringConfig, Transform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMode {
    Separable,
    Joint(ProductKind),
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchMode::Separable => f.write_str("separable"),
            BenchMode::Joint(k) => write!(f, "joint-{k}"),
        }
    }
}

impl FromStr for BenchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("joint-") {
            _ if s == "separable" => Ok(BenchMode::Separable),
            Some(kind) => Ok(BenchMode::Joint(kind.parse()?)),
            None if s == "joint" => Ok(BenchMode::Joint(ProductKind::Strong)),
            None => Err(Error::invalid(format!("unknown bench mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub mode: String,
    pub wall_time_seconds: f64,
    pub flops_estimate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    /// Sizes left out by the joint size guard.
    pub skipped: Vec<String>,
}

impl BenchResult {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<bench>", e))?;
        Ok(())
    }

    pub fn time_of(&self, n: usize, t: usize, mode: BenchMode) -> Option<f64> {
        let name = mode.to_string();
        self.rows
            .iter()
            .find(|r| r.n == n && r.t == t && r.mode == name)
            .map(|r| r.wall_time_seconds)
    }
}

fn flops(mode: BenchMode, n: usize, t: usize, j: usize, layers: usize) -> f64 {
    let filtered = (tree_size(j, layers) - 1) as f64;
    let (n, t) = (n as f64, t as f64);
    match mode {
        BenchMode::Separable => filtered * 2.0 * n * t * (n + t),
        BenchMode::Joint(_) => filtered * 2.0 * (n * t) * (n * t),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median wall time of one full scattering pass per mode and size, with
/// banks built before timing. Joint modes use `J = Js * Jt`.
pub fn bench_separable_vs_joint(
    sizes: &[(usize, usize)],
    modes: &[BenchMode],
    base: &ScatteringConfig,
    repeats: usize,
    seed: u64,
) -> Result<BenchResult> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    let j = base.js * base.jt;
    let mut out = BenchResult::default();
    for &(n, t) in sizes {
        let graph = random_graph(n, &mut substream(seed, n as u64))?;
        let x = StSignal::single(gaussian_matrix(&mut substream(seed, 1_000_000 + (n * t) as u64), n, t))?;
        for &mode in modes {
            let cfg = match mode {
                BenchMode::Separable => ScatteringConfig {
                    mode: crate::scattering::Mode::Separable,
                    ..base.clone()
                },
                BenchMode::Joint(kind) => {
                    if let Err(e) = check_joint_size(n, t) {
                        log::warn!("skipping {mode} at {n}x{t}: {e}");
                        out.skipped.push(format!("{n}x{t} {mode}: {e}"));
                        continue;
                    }
                    ScatteringConfig {
                        mode: crate::scattering::Mode::Joint,
                        product: Some(kind),
                        j: Some(j),
                        joint_family: Some(base.spatial_family),
                        ..base.clone()
                    }
                }
            };
            let tr = Transform::new(cfg, &graph, t)?;
            tr.features(&x)?;
            let mut times = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let start = Instant::now();
                std::hint::black_box(tr.features(std::hint::black_box(&x))?);
                times.push(start.elapsed().as_secs_f64().max(1e-9));
            }
            out.rows.push(BenchRow {
                n,
                t,
                mode: mode.to_string(),
                wall_time_seconds: median(times),
                flops_estimate: flops(mode, n, t, j, base.layers),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_parse() {
        assert_eq!("separable".parse::<BenchMode>().unwrap(), BenchMode::Separable);
        assert_eq!(
            "joint-strong".parse::<BenchMode>().unwrap(),
            BenchMode::Joint(ProductKind::Strong)
        );
        assert_eq!(
            "joint-kronecker".parse::<BenchMode>().unwrap().to_string(),
            "joint-kronecker"
        );
        assert!("joint-weird".parse::<BenchMode>().is_err());
    }

    #[test]
    fn small_bench_has_both_modes() {
        let cfg = ScatteringConfig::separable(2, 2, 2);
        let modes = [BenchMode::Separable, BenchMode::Joint(ProductKind::Strong)];
        let r = bench_separable_vs_joint(&[(4, 6), (5, 8)], &modes, &cfg, 2, 1).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.wall_time_seconds > 0.0));
        assert!(r.time_of(5, 8, BenchMode::Separable).is_some());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("N,T,mode,wall_time_seconds,flops_estimate\n"));
    }

    #[test]
    fn guard_skips_joint() {
        let cfg = ScatteringConfig::separable(1, 1, 1);
        let modes = [BenchMode::Joint(ProductKind::Strong)];
        let r = bench_separable_vs_joint(&[(3, 1700)], &modes, &cfg, 1, 0).unwrap();
        assert!(r.rows.is_empty());
        assert_eq!(r.skipped.len(), 1);
    }
}
