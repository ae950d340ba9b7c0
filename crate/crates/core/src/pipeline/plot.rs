use std::io::Write;

use super::classify::{classify_split, stratified_split, Method};
use super::dataset::{transform_dataset, Dataset};
use crate::graph::{ShiftMatrix, StSignal};
use crate::rng::substream;
use crate::scattering::{ScatteringConfig, Transform};
use crate::stability::{
    add_signals, noise_at_snr, structure_constants, structure_deviation, theorem2_bound, StructurePerturbation,
};
use crate::wavelet::FilterBank;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PlotRow {
    Accuracy { x: f64, accuracy: f64 },
    Bound { x: f64, lhs: f64, rhs: f64 },
}

/// `x,accuracy` or `x,lhs,rhs` depending on the row kind.
pub fn write_plot_csv(w: impl Write, rows: &[PlotRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    match rows.first() {
        Some(PlotRow::Bound { .. }) => w.write_record(["x", "lhs", "rhs"])?,
        _ => w.write_record(["x", "accuracy"])?,
    }
    for r in rows {
        match r {
            PlotRow::Accuracy { x, accuracy } => w.write_record(&[x.to_string(), accuracy.to_string()])?,
            PlotRow::Bound { x, lhs, rhs } => w.write_record(&[x.to_string(), lhs.to_string(), rhs.to_string()])?,
        }
    }
    w.flush().map_err(|e| Error::io("<plot>", e))?;
    Ok(())
}

/// Accuracy against the training fraction; features are computed once.
pub fn training_ratio_sweep(
    ds: &Dataset,
    tr: &Transform,
    ratios: &[f64],
    method: Method,
    seed: u64,
) -> Result<Vec<PlotRow>> {
    let features = transform_dataset(ds, tr)?;
    let labels = ds.labels();
    ratios
        .iter()
        .map(|&r| {
            let split = stratified_split(&labels, r, seed)?;
            Ok(PlotRow::Accuracy {
                x: r,
                accuracy: classify_split(&features, &labels, method, &split)?,
            })
        })
        .collect()
}

/// Accuracy when every sample carries noise at the given SNR (dB); an
/// infinite SNR leaves the data untouched. The split is the same for all
/// points.
pub fn snr_sweep(
    ds: &Dataset,
    tr: &Transform,
    snrs: &[f64],
    method: Method,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<PlotRow>> {
    let labels = ds.labels();
    let split = stratified_split(&labels, train_fraction, seed)?;
    snrs.iter()
        .map(|&snr| {
            let noisy = if snr.is_infinite() && snr > 0.0 {
                ds.clone()
            } else {
                let mut d = ds.clone();
                for (i, s) in d.samples.iter_mut().enumerate() {
                    let delta = noise_at_snr(&s.signal, snr, &mut substream(seed.wrapping_add(1), i as u64))?;
                    s.signal = add_signals(&s.signal, &delta)?;
                }
                d
            };
            let features = transform_dataset(&noisy, tr)?;
            Ok(PlotRow::Accuracy {
                x: snr,
                accuracy: classify_split(&features, &labels, method, &split)?,
            })
        })
        .collect()
}

/// Structure-perturbation deviation and bound along one random diagonal
/// direction; `rhs` is NaN when the bank has no integral-Lipschitz constant.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_sweep(
    cfg: &ScatteringConfig,
    ss: &ShiftMatrix,
    h: &FilterBank,
    g: &FilterBank,
    x: &StSignal,
    epsilons: &[f64],
    seed: u64,
) -> Result<Vec<PlotRow>> {
    let (sign, u) = StructurePerturbation::random_direction(&mut substream(seed, 0), ss.n());
    let consts = structure_constants(h, g)?.ok();
    epsilons
        .iter()
        .map(|&eps| {
            let p = StructurePerturbation::along(sign, &u, eps)?;
            let lhs = structure_deviation(cfg, ss, h, g, x, &p)?;
            let rhs = consts.map_or(f64::NAN, |k| theorem2_bound(cfg, h.dim(), g.dim(), eps, k, x.norm()));
            Ok(PlotRow::Bound { x: eps, lhs, rhs })
        })
        .collect()
}
