//! `pith`: detect the pith of a cross-section image, evaluate a dataset,
//! run the parameter grid, or emit synthetic test data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use pith_core::debug::write_pipeline_images;
use pith_core::eval::{
    evaluate_dataset, grid_search, load_manifest, write_grid_csv, write_manifest, write_reports, GridSpec,
};
use pith_core::imageprep::load_and_prepare;
use pith_core::synth::{write_case, SpiderWeb};
use pith_core::{detect_pith, AccType, LoMethod, PithError, PithParams, Point};
use serde::Serialize;

const RESULT_FILE: &str = "pith.json";
const ERROR_FILE: &str = "error.json";

#[derive(Parser, Debug)]
#[command(
    name = "pith",
    version,
    about = "Pith localisation on tree cross-section images",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    detect: DetectArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect the pith of one image (same as the top-level flags).
    Detect(DetectArgs),
    /// Evaluate every image of a manifest and write CSV reports.
    Eval(EvalArgs),
    /// Evaluate the 96-point parameter grid on a manifest.
    #[command(name = "grid-search")]
    GridSearch(GridArgs),
    /// Write synthetic spider-web images and a manifest.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// Side of the square working image.
    #[arg(long = "new_shape", default_value_t = 1000)]
    new_shape: u32,
    #[arg(long = "block_width_size", default_value_t = 100)]
    block_width_size: usize,
    #[arg(long = "block_height_size", default_value_t = 100)]
    block_height_size: usize,
    /// Patch overlap fraction in [0, 1).
    #[arg(long = "block_overlap", default_value_t = 0.2)]
    block_overlap: f64,
    /// Orientation estimator: peak, lsr, wlsr or pca.
    #[arg(long = "lo_method", default_value = "pca")]
    lo_method: LoMethod,
    /// Estimates with certainty at or below this are dropped.
    #[arg(long = "lo_certainty_th", default_value_t = 0.9)]
    lo_certainty_th: f64,
    /// Relative spectrum magnitude threshold.
    #[arg(long = "fft_peak_th", default_value_t = 0.8)]
    fft_peak_th: f64,
    /// Standard deviation of the accumulator blur, in pixels.
    #[arg(long = "peak_blur_sigma", default_value_t = 3.0)]
    peak_blur_sigma: f64,
    /// 0: pass-through voting, 1: pairwise intersections.
    #[arg(long = "acc_type", default_value_t = 0, value_parser = clap::value_parser!(i64).range(0..=1))]
    acc_type: i64,
}

impl ParamArgs {
    fn params(&self) -> anyhow::Result<PithParams> {
        let p = PithParams {
            new_shape: self.new_shape,
            block_width_size: self.block_width_size,
            block_height_size: self.block_height_size,
            block_overlap: self.block_overlap,
            fft_peak_th: self.fft_peak_th,
            lo_method: self.lo_method,
            lo_certainty_th: self.lo_certainty_th,
            acc_type: AccType::from_code(self.acc_type)?,
            peak_blur_sigma: self.peak_blur_sigma,
            ..PithParams::default()
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Clone)]
struct DetectArgs {
    /// Input image.
    #[arg(long, required = true)]
    filename: Option<PathBuf>,
    /// Directory for pith.json and debug images.
    #[arg(long = "output_dir", default_value = "output")]
    output_dir: PathBuf,
    /// Foreground mask (nonzero = wood). Derived from the white background when absent.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Also write the pipeline PNGs.
    #[arg(long)]
    debug: bool,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// CSV or JSON manifest.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long = "output_dir", default_value = "eval")]
    output_dir: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long = "output_dir", default_value = "grid")]
    output_dir: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long = "new_shape", default_value_t = 1000)]
    new_shape: u32,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long = "output_dir")]
    output_dir: PathBuf,
    /// Number of images.
    #[arg(long, default_value_t = 2)]
    count: usize,
    #[arg(long, default_value_t = 1000)]
    size: usize,
    #[arg(long = "ring_spacing", default_value_t = 8.0)]
    ring_spacing: f64,
    #[arg(long = "noise_sigma", default_value_t = 0.05)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct ParamsJson {
    new_shape: u32,
    block_width_size: usize,
    block_height_size: usize,
    block_overlap: f64,
    lo_method: LoMethod,
    lo_certainty_th: f64,
    fft_peak_th: f64,
    peak_blur_sigma: f64,
    acc_type: u8,
}

impl From<&PithParams> for ParamsJson {
    fn from(p: &PithParams) -> Self {
        Self {
            new_shape: p.new_shape,
            block_width_size: p.block_width_size,
            block_height_size: p.block_height_size,
            block_overlap: p.block_overlap,
            lo_method: p.lo_method,
            lo_certainty_th: p.lo_certainty_th,
            fft_peak_th: p.fft_peak_th,
            peak_blur_sigma: p.peak_blur_sigma,
            acc_type: p.acc_type.code(),
        }
    }
}

#[derive(Serialize)]
struct DetectResult {
    image_id: String,
    filename: String,
    x: f64,
    y: f64,
    parameters: ParamsJson,
    elapsed_ms: f64,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport {
    image_id: String,
    filename: String,
    error: ErrorBody,
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn jobs(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<String> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    Ok(text)
}

fn run_detection(args: &DetectArgs, filename: &Path, params: &PithParams) -> Result<(Point, f64), PithError> {
    let start = Instant::now();
    let prepared = load_and_prepare(filename, args.mask.as_deref(), params.new_shape)?;
    let detection = detect_pith(&prepared, params)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    if args.debug {
        write_pipeline_images(&args.output_dir, &prepared, &detection)?;
    }
    Ok((detection.pith_original, elapsed_ms))
}

fn detect(args: DetectArgs) -> anyhow::Result<ExitCode> {
    let Some(filename) = args.filename.clone() else {
        bail!("--filename is required");
    };
    let params = args.params.params()?;
    fs::create_dir_all(&args.output_dir).with_context(|| format!("creating {}", args.output_dir.display()))?;
    let pool = rayon_pool(jobs(args.jobs))?;
    match pool.install(|| run_detection(&args, &filename, &params)) {
        Ok((pith, elapsed_ms)) => {
            let result = DetectResult {
                image_id: image_id(&filename),
                filename: filename.display().to_string(),
                x: pith.x,
                y: pith.y,
                parameters: ParamsJson::from(&params),
                elapsed_ms,
            };
            println!("{}", write_json(&args.output_dir.join(RESULT_FILE), &result)?);
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            let report = ErrorReport {
                image_id: image_id(&filename),
                filename: filename.display().to_string(),
                error: ErrorBody {
                    kind: e.kind(),
                    message: e.to_string(),
                },
            };
            println!("{}", write_json(&args.output_dir.join(ERROR_FILE), &report)?);
            log::error!("{e}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn rayon_pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn eval(args: EvalArgs) -> anyhow::Result<ExitCode> {
    let params = args.params.params()?;
    let entries = load_manifest(&args.manifest)?;
    let outcomes = evaluate_dataset(&entries, &params, jobs(args.jobs));
    write_reports(&args.output_dir, &outcomes)?;
    let ok = outcomes.iter().filter(|o| o.result.is_ok()).count();
    println!(
        "evaluated {ok}/{} images, reports in {}",
        outcomes.len(),
        args.output_dir.display()
    );
    Ok(if ok == 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn grid(args: GridArgs) -> anyhow::Result<ExitCode> {
    let entries: Vec<_> = load_manifest(&args.manifest)?
        .into_iter()
        .filter_map(|(id, e)| match e {
            Ok(e) => Some(e),
            Err(err) => {
                log::warn!("{id}: {err}");
                None
            }
        })
        .collect();
    let mut spec = GridSpec::experiment();
    spec.base.new_shape = args.new_shape;
    let rows = grid_search(&entries, &spec, jobs(args.jobs))?;
    fs::create_dir_all(&args.output_dir)?;
    let path = args.output_dir.join("grid_search.csv");
    write_grid_csv(&path, &rows)?;
    if let Some(best) = rows.first().filter(|r| r.dist.is_some()) {
        let p = &best.params;
        println!(
            "best: block {} overlap {} method {} threshold {} mean distance {:.2} px",
            p.block_width_size,
            p.block_overlap,
            p.lo_method,
            p.lo_certainty_th,
            best.mean_dist().unwrap_or(f64::NAN)
        );
    }
    println!("{} configurations written to {}", rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn synth(args: SynthArgs) -> anyhow::Result<ExitCode> {
    let size = args.size as f64;
    let mut rows = Vec::new();
    for i in 0..args.count {
        let seed = args.seed + i as u64;
        // Centers drift around the middle so that images differ.
        let offset = 0.05 * size * ((i as f64 * 2.4).sin());
        let web = SpiderWeb {
            center: Point::new((size - 1.0) / 2.0 + offset, (size - 1.0) / 2.0 - 0.5 * offset),
            noise_sigma: args.noise_sigma,
            seed,
            ..SpiderWeb::new(args.size, args.ring_spacing)
        };
        rows.push(write_case(&args.output_dir, &web, &format!("web_{i:03}"))?);
    }
    let manifest = args.output_dir.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    println!("{} images, manifest {}", rows.len(), manifest.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Detect(args)) => detect(args),
        Some(Command::Eval(args)) => eval(args),
        Some(Command::GridSearch(args)) => grid(args),
        Some(Command::Synth(args)) => synth(args),
        None => detect(cli.detect),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
