//! Dataset ingestion, batch transforms, classification, benchmarks and
//! sweep data for plotting.

mod bench;
mod classify;
mod dataset;
mod plot;
mod synth;

pub use bench::{bench_separable_vs_joint, BenchMode, BenchResult, BenchRow};
pub use classify::{classify, stratified_split, Method, Split};
pub use dataset::{
    load_dataset, read_features, transform_dataset, write_features, Dataset, FeatureTable, Manifest, ManifestSample,
    Sample,
};
pub use plot::{epsilon_sweep, snr_sweep, training_ratio_sweep, write_plot_csv, PlotRow};
pub use synth::{generate_synthetic_dataset, random_graph, SynthParams};
