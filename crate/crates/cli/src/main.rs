//! Command-line pipeline: ingestion, traits, skeleton evaluation, time
//! series, and synthetic data generation.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strawkit::cloud::SemanticClass;
use strawkit::skeletor::SkeletonParams;
use strawkit::skelmatch::MatchParams;
use strawkit::synth::SynthKind;

use commands::eval::LMatchedDenom;
use commands::leaf_area::MeshMethod;
use commands::skeletonize::SkeletonMethod;
use config::Config;

#[derive(Parser)]
#[command(
    name = "strawkit",
    version,
    about = "Trait extraction and skeleton evaluation for labelled 3D plant scans"
)]
struct Cli {
    /// Key-value config file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for batch stages (default: STRAWKIT_THREADS or all
    /// cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the effective configuration of this run to a file.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate every scan, skeleton and mesh file under a directory.
    Validate {
        dir: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate plant volume by voxel occupancy.
    Volume {
        scan: PathBuf,
        /// Voxel edge length in millimetres.
        #[arg(long)]
        resolution: Option<f64>,
        /// Comma-separated class codes to ignore.
        #[arg(long)]
        exclude: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct leaf surfaces and report per-leaf areas.
    LeafArea {
        scan: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MeshMethod>,
        /// Ball radius in millimetres (bpa method; default auto).
        #[arg(long)]
        radius: Option<f64>,
        /// Directory of ground-truth meshes (<scan>_leaf_<id>.ply).
        #[arg(long)]
        gt_mesh: Option<PathBuf>,
        /// CSV output (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// MAPE summary JSON (requires --gt-mesh; default stdout).
        #[arg(long)]
        mape_out: Option<PathBuf>,
    },
    /// Estimate stem skeletons, one PLY per instance.
    Skeletonize {
        scan: PathBuf,
        /// Semantic class code to skeletonise.
        #[arg(long)]
        class: Option<u8>,
        #[arg(long, value_enum)]
        method: Option<SkeletonMethod>,
        /// Explicit root position "x,y,z" (default: lowest point).
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Geodesic bins for the sp method.
        #[arg(long)]
        bins: Option<usize>,
        /// Neighbour count of the k-NN graph.
        #[arg(long)]
        knn: Option<usize>,
        /// SOM node fraction of the point count.
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        min_nodes: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Directory for the skeleton PLY files.
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON (default stdout).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Score estimated skeletons against ground truth.
    EvalSkeleton {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        s_dense: Option<f64>,
        #[arg(long)]
        t_match: Option<f64>,
        #[arg(long)]
        t_line: Option<f64>,
        #[arg(long)]
        unmatched_cost: Option<f64>,
        /// Denominator of the matched-length fraction.
        #[arg(long, value_enum)]
        l_matched_denom: Option<LMatchedDenom>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Assemble per-plant trait time series from a directory of scans.
    Track {
        plant_dir: PathBuf,
        #[arg(long, value_enum)]
        mesh_method: Option<MeshMethod>,
        #[arg(long, value_enum)]
        skeleton_method: Option<SkeletonMethod>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        exclude: Option<String>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Generate a synthetic dataset with exact ground truth.
    Synth {
        /// One of: stem-straight, stem-curved, stem-occluded, leaf-flat,
        /// leaf-furled, plant-mini.
        kind: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    /// Bad arguments or configuration: exit code 2.
    Usage(anyhow::Error),
    /// Runtime failure: exit code 1.
    Runtime(anyhow::Error),
}

fn usage<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn runtime<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("strawkit: invalid configuration: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("strawkit: error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut cfg = usage(Config::load(cli.config.as_deref()))?;

    let env_threads = std::env::var("STRAWKIT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let threads = usage(cfg.resolve("threads", cli.threads, env_threads))?;
    if threads > 0 {
        // A failure here means a pool already exists (e.g. repeated calls in
        // tests); the run stays valid either way.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }

    let code = match &cli.command {
        Command::Validate { dir, out } => runtime(commands::validate::run(dir, out.as_ref()))?,
        Command::Volume { scan, resolution, exclude, out } => {
            let resolution = usage(cfg.resolve("resolution", *resolution, 1.0))?;
            let exclude = usage(cfg.resolve("exclude", exclude.clone(), "6,8".to_string()))?;
            if resolution <= 0.0 {
                return Err(Failure::Usage(anyhow::anyhow!("resolution must be positive")));
            }
            usage(commands::parse_classes(&exclude))?;
            runtime(commands::volume::run(scan, resolution, &exclude, out.as_ref()))?
        }
        Command::LeafArea { scan, method, radius, gt_mesh, out, mape_out } => {
            let method = usage(cfg.resolve("method", *method, MeshMethod::Zabawa))?;
            let radius = usage(cfg.resolve_opt("radius", *radius))?;
            runtime(commands::leaf_area::run(
                scan,
                method,
                radius,
                gt_mesh.as_ref(),
                out.as_ref(),
                mape_out.as_ref(),
            ))?
        }
        Command::Skeletonize {
            scan,
            class,
            method,
            root,
            seed,
            bins,
            knn,
            fraction,
            min_nodes,
            epochs,
            out,
            summary,
        } => {
            let class_code = usage(cfg.resolve("class", *class, 2))?;
            let class = usage(
                SemanticClass::from_code(class_code as i64)
                    .ok_or_else(|| anyhow::anyhow!("unknown class code {class_code}")),
            )?;
            let method = usage(cfg.resolve("method", *method, SkeletonMethod::Sp))?;
            let root = usage(cfg.resolve_opt("root", root.clone()))?;
            let root = match root {
                Some(spec) => Some(usage(commands::parse_point(&spec))?),
                None => None,
            };
            let defaults = SkeletonParams::default();
            let params = SkeletonParams {
                bin_count: usage(cfg.resolve("bins", *bins, defaults.bin_count))?,
                root,
                knn: usage(cfg.resolve("knn", *knn, defaults.knn))?,
                som_fraction: usage(cfg.resolve("fraction", *fraction, defaults.som_fraction))?,
                som_min_nodes: usage(cfg.resolve("min-nodes", *min_nodes, defaults.som_min_nodes))?,
                som_epochs: usage(cfg.resolve("epochs", *epochs, defaults.som_epochs))?,
                rng_seed: usage(cfg.resolve("seed", *seed, 0))?,
                ..defaults
            };
            usage(params.validate().map_err(anyhow::Error::from))?;
            runtime(commands::skeletonize::run(scan, class, method, &params, out, summary.as_ref()))?
        }
        Command::EvalSkeleton {
            gt,
            est,
            s_dense,
            t_match,
            t_line,
            unmatched_cost,
            l_matched_denom,
            out_csv,
            out_json,
        } => {
            let defaults = MatchParams::default();
            let params = MatchParams {
                s_dense: usage(cfg.resolve("s-dense", *s_dense, defaults.s_dense))?,
                t_match: usage(cfg.resolve("t-match", *t_match, defaults.t_match))?,
                t_line: usage(cfg.resolve("t-line", *t_line, defaults.t_line))?,
                unmatched_cost: usage(cfg.resolve(
                    "unmatched-cost",
                    *unmatched_cost,
                    defaults.unmatched_cost,
                ))?,
            };
            usage(params.validate().map_err(anyhow::Error::from))?;
            let denom =
                usage(cfg.resolve("l-matched-denom", *l_matched_denom, LMatchedDenom::Gt))?;
            runtime(commands::eval::run(gt, est, &params, denom, out_csv.as_ref(), out_json.as_ref()))?
        }
        Command::Track {
            plant_dir,
            mesh_method,
            skeleton_method,
            seed,
            bins,
            resolution,
            exclude,
            out_csv,
            out_json,
        } => {
            let defaults = SkeletonParams::default();
            let exclude_spec = usage(cfg.resolve("exclude", exclude.clone(), "6,8".to_string()))?;
            let opts = commands::track::TrackOptions {
                mesh_method: usage(cfg.resolve("mesh-method", *mesh_method, MeshMethod::Zabawa))?,
                skeleton_method: usage(cfg.resolve(
                    "skeleton-method",
                    *skeleton_method,
                    SkeletonMethod::Sp,
                ))?,
                skeleton_params: SkeletonParams {
                    bin_count: usage(cfg.resolve("bins", *bins, defaults.bin_count))?,
                    rng_seed: usage(cfg.resolve("seed", *seed, 0))?,
                    ..defaults
                },
                resolution: usage(cfg.resolve("resolution", *resolution, 1.0))?,
                exclude: usage(commands::parse_classes(&exclude_spec))?,
            };
            runtime(commands::track::run(plant_dir, &opts, out_csv.as_ref(), out_json.as_ref()))?
        }
        Command::Synth { kind, seed, out } => {
            let kind = usage(
                SynthKind::parse(kind)
                    .ok_or_else(|| anyhow::anyhow!("unknown synthetic kind {kind:?}")),
            )?;
            let seed = usage(cfg.resolve("seed", *seed, 7))?;
            runtime(commands::synth::run(kind, seed, out))?
        }
    };

    if let Some(path) = &cli.save_config {
        usage(cfg.save_effective(path))?;
    }
    Ok(code)
}
