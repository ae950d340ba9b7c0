//! Browser bindings: wavelet kernel curves, a scattering tree of one
//! synthetic clip, and stability curves against their bounds. Each entry
//! point returns a JSON string; the `*_json` functions are the same logic
//! callable natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use stgst_core::graph::{eigendecompose, make_shift, ShiftKind, StSignal};
use stgst_core::pipeline::{epsilon_sweep, generate_synthetic_dataset, PlotRow, SynthParams};
use stgst_core::rng::substream;
use stgst_core::scattering::{Banks, ScatteringConfig, Transform};
use stgst_core::skeleton::kinect20;
use stgst_core::stability::{check_theorem1, noise_at_snr};
use stgst_core::wavelet::{build_spectral_bank, SpectralKernel, WaveletFamily, DEFAULT_MONIC_CUBIC_SCALE_RANGE};
use stgst_core::{Error, Result};

const DEMO_T: usize = 32;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn family(name: &str) -> Result<WaveletFamily> {
    name.parse()
}

/// Kernels of a `scales`-filter bank sampled on `points` spectral values.
/// Spectral families live on the skeleton's normalized Laplacian; the
/// geometric family is drawn on the lazy walk's `[0, 1]` spectrum.
pub fn kernel_curves_json(family_name: &str, scales: usize, points: usize) -> Result<String> {
    if points < 2 {
        return Err(invalid("need at least 2 points"));
    }
    let fam = family(family_name)?;
    let (kernels, lo, hi, eigenvalues, frame) = match fam {
        WaveletFamily::Geometric => {
            if scales == 0 || scales > 12 {
                return Err(invalid("geometric demo needs 1 <= J <= 12"));
            }
            let ks: Vec<_> = (0..scales)
                .map(|j| SpectralKernel::Dyadic { exponent: 1 << j })
                .collect();
            (ks, 0.0, 1.0, Vec::new(), None)
        }
        _ => {
            let s = eigendecompose(&make_shift(&kinect20(), ShiftKind::NormalizedLaplacian))?;
            let bank = build_spectral_bank(&s, fam, scales, DEFAULT_MONIC_CUBIC_SCALE_RANGE)?;
            let (lo, hi) = bank.spectral_range().expect("spectral bank has a range");
            let ks = bank.kernels().expect("spectral bank has kernels").to_vec();
            let f = bank.frame();
            (
                ks,
                lo,
                hi,
                s.eig().unwrap().values.iter().copied().collect(),
                Some((f.lower, f.upper)),
            )
        }
    };
    let lambda: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let curves: Vec<Vec<f64>> = kernels
        .iter()
        .map(|k| lambda.iter().map(|&l| k.eval(l)).collect())
        .collect();
    let energy: Vec<f64> = (0..points).map(|i| curves.iter().map(|c| c[i] * c[i]).sum()).collect();
    Ok(json!({
        "family": fam.to_string(),
        "lambda": lambda,
        "curves": curves,
        "energy": energy,
        "eigenvalues": eigenvalues,
        "frame": frame.map(|(a, b)| json!({"lower": a, "upper": b})),
    })
    .to_string())
}

/// Scattering tree of one synthetic clip of class `label` (0 or 1).
pub fn scattering_tree_json(js: usize, jt: usize, layers: usize, label: usize, seed: u64) -> Result<String> {
    if js * jt > 6 || layers > 3 {
        return Err(invalid("demo keeps Js * Jt <= 6 and L <= 3"));
    }
    let ds = generate_synthetic_dataset(&SynthParams {
        n_samples: 2,
        n: 20,
        t: DEMO_T,
        channels: 1,
        classes: 2,
        noise: 0.1,
        seed,
    })?;
    let sample = ds
        .samples
        .iter()
        .find(|s| s.label == label)
        .ok_or_else(|| invalid("label must be 0 or 1"))?;
    let cfg =
        ScatteringConfig::separable(js, jt, layers).with_families(WaveletFamily::Itersine, WaveletFamily::Itersine);
    let tr = Transform::new(cfg, ds.graph.as_ref().expect("synthetic data has a graph"), DEMO_T)?;
    let fm = tr.features(&sample.signal)?;
    let nodes: Vec<Value> = (0..fm.len())
        .map(|k| {
            let phi = fm.phi(0, k);
            json!({
                "path": fm.path(k).to_string(),
                "layer": fm.path(k).depth(),
                "energy": phi.iter().map(|v| v * v).sum::<f64>(),
                "phi": phi.as_slice(),
            })
        })
        .collect();
    let x = &sample.signal.channels()[0];
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(json!({"label": label, "signal": rows, "nodes": nodes}).to_string())
}

/// Measured deviation against the bound, either over SNR in dB (signal
/// noise) or over epsilon (relative structure perturbation).
pub fn stability_curve_json(kind: &str, seed: u64) -> Result<String> {
    let graph = kinect20();
    let cfg = ScatteringConfig::separable(2, 2, 3).with_families(WaveletFamily::Itersine, WaveletFamily::MonicCubic);
    let tr = Transform::new(cfg.clone(), &graph, DEMO_T)?;
    let Banks::Separable {
        spatial_shift,
        spatial,
        temporal,
    } = tr.banks()
    else {
        unreachable!("separable config")
    };
    let x = StSignal::single(stgst_core::rng::gaussian_matrix(
        &mut substream(seed, 0),
        graph.n(),
        DEMO_T,
    ))?;
    let (xs, lhs, rhs): (Vec<f64>, Vec<f64>, Vec<f64>) = match kind {
        "snr" => {
            let mut out = (Vec::new(), Vec::new(), Vec::new());
            for snr in (0..=8).map(|k| 5.0 * k as f64) {
                let d = noise_at_snr(&x, snr, &mut substream(seed, 1 + snr as u64))?;
                let r = check_theorem1(&cfg, spatial, temporal, &x, &d)?;
                out.0.push(snr);
                out.1.push(r.lhs);
                out.2.push(r.rhs);
            }
            out
        }
        "epsilon" => {
            let eps: Vec<f64> = (0..=10).map(|k| 0.01 * k as f64).collect();
            let rows = epsilon_sweep(&cfg, spatial_shift, spatial, temporal, &x, &eps, seed)?;
            let mut out = (Vec::new(), Vec::new(), Vec::new());
            for r in rows {
                if let PlotRow::Bound { x, lhs, rhs } = r {
                    out.0.push(x);
                    out.1.push(lhs);
                    out.2.push(rhs);
                }
            }
            out
        }
        other => return Err(invalid(format!("unknown curve '{other}' (snr, epsilon)"))),
    };
    Ok(json!({"kind": kind, "x": xs, "lhs": lhs, "rhs": rhs}).to_string())
}

fn to_js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn kernel_curves(family: &str, scales: usize, points: usize) -> std::result::Result<String, JsError> {
    to_js(kernel_curves_json(family, scales, points))
}

// seeds are u32 so JavaScript can pass plain numbers rather than BigInt
#[wasm_bindgen]
pub fn scattering_tree(
    js: usize,
    jt: usize,
    layers: usize,
    label: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(scattering_tree_json(js, jt, layers, label, seed.into()))
}

#[wasm_bindgen]
pub fn stability_curve(kind: &str, seed: u32) -> std::result::Result<String, JsError> {
    to_js(stability_curve_json(kind, seed.into()))
}
