use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, StSignal};
use crate::scattering::Transform;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub id: String,
    pub label: usize,
    pub path: PathBuf,
}

/// `{"n_spatial": N, "channels": C, "samples": [...], "graph": "graph.json"}`;
/// paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n_spatial: usize,
    #[serde(default = "one")]
    pub channels: usize,
    pub samples: Vec<ManifestSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: usize,
    pub signal: StSignal,
    /// Zero columns appended to reach the dataset's `T`.
    pub pad: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub n_spatial: usize,
    pub n_time: usize,
    pub channels: usize,
    pub graph: Option<Graph>,
}

impl Dataset {
    /// Pads every sample with zero columns up to the longest clip.
    pub fn new(samples: Vec<(String, usize, StSignal)>, graph: Option<Graph>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let (c, n) = (first.2.n_channels(), first.2.n_spatial());
        let t = samples.iter().map(|s| s.2.n_time()).max().unwrap_or(0);
        let mut out = Vec::with_capacity(samples.len());
        for (id, label, sig) in samples {
            if sig.n_channels() != c || sig.n_spatial() != n {
                return Err(Error::invalid(format!(
                    "sample {id} is {}x{} but the dataset is {c} channels x {n} nodes",
                    sig.n_channels(),
                    sig.n_spatial()
                )));
            }
            let pad = t - sig.n_time();
            if pad > 0 {
                log::info!("sample {id}: padded {pad} time stamps");
            }
            let signal = StSignal::new(
                sig.into_channels()
                    .into_iter()
                    .map(|m| m.resize_horizontally(t, 0.0))
                    .collect(),
            )?;
            out.push(Sample { id, label, signal, pad });
        }
        if let Some(g) = &graph {
            if g.n() != n {
                return Err(Error::invalid(format!("graph has {} nodes, samples have {n}", g.n())));
            }
        }
        Ok(Self {
            samples: out,
            n_spatial: n,
            n_time: t,
            channels: c,
            graph,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    /// Writes `manifest.json`, one CSV per sample and `graph.json` if present.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("samples")).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.len());
        for s in &self.samples {
            let rel = PathBuf::from("samples").join(format!("{}.csv", s.id));
            write_sample_csv(&dir.join(&rel), &s.signal)?;
            entries.push(ManifestSample {
                id: s.id.clone(),
                label: s.label,
                path: rel,
            });
        }
        let graph = match &self.graph {
            Some(g) => {
                let p = dir.join("graph.json");
                let text = serde_json::to_string_pretty(&g.to_json())?;
                fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
                Some(PathBuf::from("graph.json"))
            }
            None => None,
        };
        let manifest = Manifest {
            n_spatial: self.n_spatial,
            channels: self.channels,
            samples: entries,
            graph,
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn write_sample_csv(path: &Path, x: &StSignal) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["channel", "node", "time", "value"])?;
    for (c, z) in x.channels().iter().enumerate() {
        for n in 0..z.nrows() {
            for t in 0..z.ncols() {
                w.write_record(&[c.to_string(), n.to_string(), t.to_string(), z[(n, t)].to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

type Triples = Vec<(usize, usize, usize, f64)>;

fn read_sample_csv(path: &Path, n: usize, channels: usize) -> Result<Triples> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };
    let header = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["channel", "node", "time", "value"] {
        return Err(bad(
            1,
            format!(
                "expected header channel,node,time,value, got {}",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(bad(line, format!("expected 4 fields, got {}", rec.len())));
        }
        let idx = |i: usize, name: &str| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| bad(line, format!("{name} '{}' is not a nonnegative integer", &rec[i])))
        };
        let (c, node, t) = (idx(0, "channel")?, idx(1, "node")?, idx(2, "time")?);
        let v: f64 = rec[3]
            .parse()
            .map_err(|_| bad(line, format!("value '{}' is not a number", &rec[3])))?;
        if node >= n {
            return Err(bad(line, format!("node {node} out of range for N = {n}")));
        }
        if c >= channels {
            return Err(bad(line, format!("channel {c} out of range for C = {channels}")));
        }
        out.push((c, node, t, v));
    }
    Ok(out)
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let path = manifest_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: Manifest = serde_json::from_str(&text)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    if m.samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if m.n_spatial == 0 || m.channels == 0 {
        return Err(Error::invalid("n_spatial and channels must be positive"));
    }
    let mut raw = Vec::with_capacity(m.samples.len());
    for s in &m.samples {
        raw.push(read_sample_csv(&dir.join(&s.path), m.n_spatial, m.channels)?);
    }
    let t = raw.iter().flatten().map(|r| r.2 + 1).max().unwrap_or(1);
    let samples = m
        .samples
        .iter()
        .zip(raw)
        .map(|(s, triples)| {
            let own_t = triples.iter().map(|r| r.2 + 1).max().unwrap_or(t);
            let mut ch = vec![DMatrix::zeros(m.n_spatial, own_t); m.channels];
            for (c, node, time, v) in triples {
                ch[c][(node, time)] = v;
            }
            Ok((s.id.clone(), s.label, StSignal::new(ch)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let graph = m.graph.as_ref().map(|g| Graph::load(dir.join(g))).transpose()?;
    let ds = Dataset::new(samples, graph)?;
    debug_assert_eq!(ds.n_time, t);
    Ok(ds)
}

/// One feature row per sample, in sample order; sample-parallel.
pub fn transform_dataset(ds: &Dataset, transform: &Transform) -> Result<Vec<Vec<f64>>> {
    let (n, t) = transform.shape();
    if (ds.n_spatial, ds.n_time) != (n, t) {
        return Err(Error::invalid(format!(
            "transform expects {n}x{t} signals, dataset is {}x{}",
            ds.n_spatial, ds.n_time
        )));
    }
    let one = |s: &Sample| {
        transform
            .features(&s.signal)
            .map(|f| f.to_vec())
            .map_err(|e| Error::Sample {
                id: s.id.clone(),
                source: Box::new(e),
            })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ds.samples.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ds.samples.iter().map(one).collect()
    }
}

/// Rows of `sample_id,label,f0,f1,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

pub fn write_features(w: impl Write, table: &FeatureTable) -> Result<()> {
    let dim = table.rows.first().map_or(0, |r| r.len());
    let mut w = csv::Writer::from_writer(w);
    let mut header = vec!["sample_id".to_string(), "label".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for ((id, label), row) in table.ids.iter().zip(&table.labels).zip(&table.rows) {
        let mut rec = Vec::with_capacity(row.len() + 2);
        rec.push(id.clone());
        rec.push(label.to_string());
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<features>", e))?;
    Ok(())
}

pub fn read_features(mut r: impl Read, name: &str) -> Result<FeatureTable> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| Error::io(name, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |line: u64, message: String| Error::Parse {
        path: PathBuf::from(name),
        line: line as usize,
        message,
    };
    let header = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.len() < 2 || &header[0] != "sample_id" || &header[1] != "label" {
        return Err(bad(1, "expected header sample_id,label,f0,...".into()));
    }
    let mut table = FeatureTable {
        ids: Vec::new(),
        labels: Vec::new(),
        rows: Vec::new(),
    };
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = rec[1]
            .parse()
            .map_err(|_| bad(line, format!("label '{}' is not a nonnegative integer", &rec[1])))?;
        let row = rec
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| bad(line, format!("feature '{v}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if seen.insert(rec[0].to_string(), line).is_some() {
            return Err(bad(line, format!("duplicate sample id {}", &rec[0])));
        }
        table.ids.push(rec[0].to_string());
        table.labels.push(label);
        table.rows.push(row);
    }
    if table.rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(table)
}
