use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use stgst_core::graph::{build_line_graph, eigendecompose, make_shift, Graph, ShiftKind, StSignal};
use stgst_core::pipeline::{
    bench_separable_vs_joint, classify, epsilon_sweep, generate_synthetic_dataset, load_dataset, read_features,
    snr_sweep, training_ratio_sweep, transform_dataset, write_features, write_plot_csv, BenchMode, Dataset,
    FeatureTable, Method, SynthParams,
};
use stgst_core::product::ProductKind;
use stgst_core::rng::{gaussian_matrix, substream};
use stgst_core::scattering::{feature_dimension, Banks, Mode, ScatteringConfig, Transform};
use stgst_core::skeleton::kinect20;
use stgst_core::stability::{
    certify_permutation, certify_theorem1, certify_theorem2, certify_wavelet_stability, check_spectral_equivalence,
    verify_lemma1, StabilityReport,
};
use stgst_core::wavelet::PolynomialFilter;

#[derive(Parser)]
#[command(name = "stgst", version, about = "Spatio-temporal graph scattering transform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graph utilities.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Print the feature dimension of a configuration.
    Dims {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        channels: usize,
    },
    /// Transform every sample of a dataset into a feature CSV.
    Transform {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Output CSV, stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a numerical check and print a JSON report array.
    Verify(VerifyArgs),
    /// Time separable against joint scattering.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "separable,joint-strong")]
        modes: Vec<BenchMode>,
        #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "10x50,20x100")]
        sizes: Vec<(usize, usize)>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Base configuration; defaults to (Js, Jt, L) = (2, 2, 3).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train/test accuracy on a feature CSV.
    Classify {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "knn")]
        method: MethodArg,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Write a synthetic labelled dataset.
    Synth {
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        channels: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Emit CSV series for plotting.
    #[command(subcommand)]
    PlotData(PlotCommand),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Build a shift matrix from a graph JSON file.
    Build {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, value_parser = parse_shift, default_value = "normalized_laplacian")]
        shift: ShiftKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Frame,
    Theorem1,
    Theorem2,
    Permutation,
    SpectralEquivalence,
    WaveletStability,
}

#[derive(Args)]
struct VerifyArgs {
    check: Check,
    #[arg(long)]
    config: PathBuf,
    /// Signal length; the spatial graph comes from the config or defaults to the 20-joint skeleton.
    #[arg(long, default_value_t = 32)]
    t: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Knn,
    NearestCentroid,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "knn")]
    method: MethodArg,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Accuracy against the training fraction.
    TrainingRatio {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        ratios: Vec<f64>,
    },
    /// Accuracy against additive noise level in dB (`inf` for clean data).
    Snr {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,inf")]
        snrs: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
    },
    /// Structure-perturbation deviation and its bound against epsilon.
    Epsilon {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 32)]
        t: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.05,0.1")]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, t) = s.split_once('x').ok_or_else(|| format!("size '{s}' is not NxT"))?;
    let n = n.trim().parse().map_err(|_| format!("bad N in '{s}'"))?;
    let t = t.trim().parse().map_err(|_| format!("bad T in '{s}'"))?;
    Ok((n, t))
}

fn parse_shift(s: &str) -> std::result::Result<ShiftKind, String> {
    ShiftKind::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown shift '{s}'"))
}

fn method(m: MethodArg, k: usize) -> Method {
    match m {
        MethodArg::Knn => Method::Knn { k },
        MethodArg::NearestCentroid => Method::NearestCentroid,
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn spatial_graph(cfg: &ScatteringConfig) -> Result<Graph> {
    match &cfg.spatial_graph {
        Some(p) => Graph::load(p).with_context(|| format!("loading spatial graph {}", p.display())),
        None => {
            info!("no spatial_graph in config, using the 20-joint skeleton");
            Ok(kinect20())
        }
    }
}

fn dataset_transform(cfg_path: &Path, ds: &Dataset) -> Result<Transform> {
    let cfg = ScatteringConfig::load(cfg_path)?;
    let graph = match (&cfg.spatial_graph, &ds.graph) {
        (Some(p), _) => Graph::load(p)?,
        (None, Some(g)) => g.clone(),
        (None, None) => bail!("neither the config nor the manifest names a spatial graph"),
    };
    Ok(Transform::new(cfg, &graph, ds.n_time)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = stgst_core::configure_threads_from_env() {
        info!("worker pool capped at {n} threads");
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but a check failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Graph(GraphCommand::Build { edges, shift, out }) => {
            let g = Graph::load(&edges)?;
            let s = make_shift(&g, shift);
            let rows: Vec<Vec<f64>> = s.matrix().row_iter().map(|r| r.iter().copied().collect()).collect();
            let doc = serde_json::json!({
                "kind": shift.name(),
                "n": s.n(),
                "symmetric": s.is_symmetric(),
                "matrix": rows,
            });
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
        Command::Dims { config, n, t, channels } => {
            let cfg = ScatteringConfig::load(&config)?;
            println!("{}", feature_dimension(&cfg, n, t, channels));
        }
        Command::Transform { config, manifest, out } => {
            let ds = load_dataset(&manifest)?;
            let tr = dataset_transform(&config, &ds)?;
            let table = FeatureTable {
                ids: ds.ids(),
                labels: ds.labels(),
                rows: transform_dataset(&ds, &tr)?,
            };
            write_features(output(out.as_deref())?, &table)?;
            info!(
                "{} samples, {} features each",
                table.rows.len(),
                tr.feature_dimension(ds.channels)
            );
        }
        Command::Verify(args) => return verify(args),
        Command::Bench {
            modes,
            sizes,
            repeats,
            config,
            seed,
            out,
        } => {
            let base = match config {
                Some(p) => ScatteringConfig::load(p)?,
                None => ScatteringConfig::separable(2, 2, 3),
            };
            let res = bench_separable_vs_joint(&sizes, &modes, &base, repeats, seed)?;
            for s in &res.skipped {
                eprintln!("skipped {s}");
            }
            res.write_csv(output(out.as_deref())?)?;
        }
        Command::Classify {
            features,
            method: m,
            k,
            train_fraction,
            seed,
        } => {
            let f = File::open(&features).with_context(|| format!("opening {}", features.display()))?;
            let table = read_features(f, &features.display().to_string())?;
            let method = method(m, k);
            let acc = classify(&table.rows, &table.labels, method, train_fraction, seed)?;
            let doc = serde_json::json!({
                "method": method.to_string(),
                "train_fraction": train_fraction,
                "seed": seed,
                "samples": table.rows.len(),
                "accuracy": acc,
            });
            println!("{doc}");
        }
        Command::Synth {
            classes,
            samples,
            n,
            t,
            channels,
            noise,
            seed,
            out_dir,
        } => {
            let ds = generate_synthetic_dataset(&SynthParams {
                n_samples: samples,
                n,
                t,
                channels,
                classes,
                noise,
                seed,
            })?;
            let manifest = ds.write(&out_dir)?;
            println!("{}", manifest.display());
        }
        Command::PlotData(cmd) => plot_data(cmd)?,
    }
    Ok(true)
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let cfg = ScatteringConfig::load(&a.config)?;
    if cfg.mode != Mode::Separable {
        bail!("verify works on separable configurations");
    }
    let graph = spatial_graph(&cfg)?;
    let tr = Transform::new(cfg.clone(), &graph, a.t)?;
    let Banks::Separable {
        spatial_shift,
        spatial,
        temporal,
    } = tr.banks()
    else {
        unreachable!("separable mode builds separable banks")
    };
    let x = StSignal::single(gaussian_matrix(&mut substream(a.seed, u64::MAX), graph.n(), a.t))?;
    let reports: Vec<StabilityReport> = match a.check {
        Check::Frame => verify_lemma1(spatial, temporal, a.trials, a.seed)?.to_vec(),
        Check::Theorem1 => vec![certify_theorem1(&cfg, spatial, temporal, &x, a.snr, a.trials, a.seed)?],
        Check::Theorem2 => vec![certify_theorem2(
            &cfg,
            spatial_shift,
            spatial,
            temporal,
            &x,
            a.epsilon,
            a.trials,
            a.seed,
        )?],
        Check::Permutation => vec![certify_permutation(
            &cfg,
            spatial_shift,
            spatial,
            temporal,
            &x,
            a.trials,
            a.seed,
        )?],
        Check::WaveletStability => certify_wavelet_stability(spatial_shift, spatial, temporal, a.trials, a.seed)?,
        Check::SpectralEquivalence => {
            let symmetric = |kind: ShiftKind, g: &Graph| {
                let s = make_shift(g, kind);
                if s.is_symmetric() {
                    s
                } else {
                    info!("{kind} is not symmetric, using normalized_laplacian");
                    make_shift(g, ShiftKind::NormalizedLaplacian)
                }
            };
            let ss = eigendecompose(&symmetric(spatial_shift.kind(), &graph))?;
            let line = build_line_graph(a.t)?;
            let st = eigendecompose(&symmetric(
                cfg.temporal_shift.unwrap_or(ShiftKind::NormalizedLaplacian),
                &line,
            ))?;
            let coeffs = gaussian_matrix(&mut substream(a.seed, 1), 2, 3);
            let h = PolynomialFilter::new(coeffs.row(0).iter().copied().collect())?;
            let g = PolynomialFilter::new(coeffs.row(1).iter().copied().collect())?;
            let mut out = Vec::new();
            for kind in [ProductKind::Kronecker, ProductKind::Cartesian, ProductKind::Strong] {
                let [joint, sep] = check_spectral_equivalence(&ss, &st, kind, &h, &g, a.seed)?;
                out.push(joint);
                if kind == ProductKind::Strong {
                    out.push(sep);
                }
            }
            out
        }
    };
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(reports.iter().all(|r| r.pass))
}

fn plot_data(cmd: PlotCommand) -> Result<()> {
    let (rows, out) = match cmd {
        PlotCommand::TrainingRatio { data, ratios } => {
            let ds = load_dataset(&data.manifest)?;
            let tr = dataset_transform(&data.config, &ds)?;
            let rows = training_ratio_sweep(&ds, &tr, &ratios, method(data.method, data.k), data.seed)?;
            (rows, data.out)
        }
        PlotCommand::Snr {
            data,
            snrs,
            train_fraction,
        } => {
            let ds = load_dataset(&data.manifest)?;
            let tr = dataset_transform(&data.config, &ds)?;
            let rows = snr_sweep(&ds, &tr, &snrs, method(data.method, data.k), train_fraction, data.seed)?;
            (rows, data.out)
        }
        PlotCommand::Epsilon {
            config,
            t,
            epsilons,
            seed,
            out,
        } => {
            let cfg = ScatteringConfig::load(&config)?;
            let graph = spatial_graph(&cfg)?;
            let tr = Transform::new(cfg.clone(), &graph, t)?;
            let Banks::Separable {
                spatial_shift,
                spatial,
                temporal,
            } = tr.banks()
            else {
                bail!("epsilon sweeps need a separable configuration");
            };
            let x = StSignal::single(gaussian_matrix(&mut substream(seed, u64::MAX), graph.n(), t))?;
            let rows = epsilon_sweep(&cfg, spatial_shift, spatial, temporal, &x, &epsilons, seed)?;
            (rows, out)
        }
    };
    write_plot_csv(output(out.as_deref())?, &rows)?;
    Ok(())
}
