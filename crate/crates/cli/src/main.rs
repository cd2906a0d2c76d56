mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use aerolift_core::motmetrics::evaluate;
use aerolift_core::pipeline::{
    fit_tracks, kitti_from_store, lift_scene, summarize_lift, synth_to_dir, track_scene, viewpoint_reports, write_viewpoint_outputs, PipelineError,
};
use aerolift_core::refine::{interpolate_span, InterpolationMode};
use aerolift_core::sceneio::{
    load_annotations, load_scene, load_track_records, save_annotations, save_track_records, to_json_bytes, write_atomic, SceneBundle, SceneIoError,
};
use aerolift_core::synthgen::Preset;
use aerolift_core::Execution;
use aerolift_server::ServerError;

use config::FileConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<SceneIoError> for CliError {
    fn from(e: SceneIoError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<ServerError> for CliError {
    fn from(e: ServerError) -> Self {
        match e {
            ServerError::Scene(e) => e.into(),
            other => CliError::Io(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "aerolift", version, about = "Lift drone-video pointmaps into 3D tracks, boxes and viewpoint coverage")]
struct Cli {
    /// TOML file with [lift], [tracker], [quality], [eval] sections and `up_axis`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthetic generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Geometric,
    Semantic,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene bundle with ground truth.
    Synth {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lift every mask instance and write a per-cluster summary.
    Lift {
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track lifted clusters and write track records.
    Track {
        scene: PathBuf,
        /// Greedy nearest-neighbour baseline instead of the full tracker.
        #[arg(long)]
        ablation: bool,
        /// Drop tracks at k_miss instead of parking them for re-identification.
        #[arg(long)]
        no_dormant: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one oriented box per track record and write annotations.
    Fit {
        scene: PathBuf,
        tracks: PathBuf,
        /// Ignore gimbal telemetry and fall back to plain PCA.
        #[arg(long)]
        no_gimbal: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill a keyframe span of one track in the scene's annotations.
    Interpolate {
        scene: PathBuf,
        #[arg(long)]
        track: u32,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Annotations file to update; defaults to SCENE/annotations.json.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Score viewpoints and write reports, filmstrip manifests and heatmaps.
    Viewpoint {
        scene: PathBuf,
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted track records against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Match distance; defaults to half the smallest ground-truth box's longest side.
        #[arg(long)]
        threshold: Option<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write annotations as KITTI tracking label lines.
    ExportKitti {
        scene: PathBuf,
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the annotation API for one scene.
    Serve {
        scene: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn scene_bundle(path: &Path) -> Result<SceneBundle, CliError> {
    Ok(load_scene(path)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    Ok(write_atomic(path, bytes)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let mut config = file.pipeline();
    let exec = match cli.jobs {
        Some(0) => return Err(CliError::Validation("--jobs must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Validation(e.to_string()))?;
            Execution::Parallel
        }
        None => Execution::default(),
    };

    match cli.command {
        Command::Synth { preset, out } => {
            let (bundle, _) = synth_to_dir(&preset.config(), cli.seed, &out, exec)?;
            log::info!("wrote {} frames to {}", bundle.frames.len(), out.display());
        }
        Command::Lift { scene, out } => {
            let bundle = scene_bundle(&scene)?;
            let clusters = lift_scene(&bundle, &config.lift, exec)?;
            write_file(&out, &to_json_bytes(&summarize_lift(&clusters)))?;
        }
        Command::Track { scene, ablation, no_dormant, out } => {
            config.tracker.ablation |= ablation;
            config.tracker.enable_dormant &= !no_dormant;
            let bundle = scene_bundle(&scene)?;
            let result = track_scene(&bundle, &config, exec)?;
            log::info!("{} tracks, {} records", result.track_count, result.records.records.len());
            save_track_records(&result.records, &out)?;
        }
        Command::Fit { scene, tracks, no_gimbal, out } => {
            let bundle = scene_bundle(&scene)?;
            let records = load_track_records(&tracks)?;
            let store = fit_tracks(&bundle, &records, &config, !no_gimbal, exec)?;
            write_file(&out, &store.to_json_bytes())?;
        }
        Command::Interpolate { scene, track, from, to, mode, annotations } => {
            let bundle = scene_bundle(&scene)?;
            let path = annotations.unwrap_or_else(|| scene.join(aerolift_server::ANNOTATIONS_FILE));
            let mut store = load_annotations(&path)?;
            if to >= bundle.frames.len() {
                return Err(CliError::Validation(format!("frame {to} beyond the scene's {} frames", bundle.frames.len())));
            }
            let mode = match mode {
                Mode::Geometric => InterpolationMode::Geometric,
                Mode::Semantic => InterpolationMode::Semantic,
            };
            let written = store
                .mutate(|tracks| {
                    let t = tracks.get_mut(&track).ok_or_else(|| CliError::Validation(format!("unknown track {track}")))?;
                    interpolate_span(track, t, from, to, mode).map_err(|e| CliError::Validation(e.to_string()))
                })?;
            save_annotations(&store, &path)?;
            println!("{}", serde_json::json!({ "revision": store.revision(), "written": written }));
        }
        Command::Viewpoint { scene, annotations, out } => {
            let bundle = scene_bundle(&scene)?;
            let store = load_annotations(&annotations)?;
            let reports = viewpoint_reports(&bundle, &store, &config.quality, exec)?;
            write_viewpoint_outputs(&reports, &out)?;
            for r in &reports {
                print!("{}", r.summary_text());
            }
        }
        Command::Eval { gt, pred, threshold, out } => {
            let gt = load_track_records(&gt)?;
            let pred = load_track_records(&pred)?;
            let report = evaluate(&gt, &pred, threshold.or(file.eval.threshold)).map_err(|e| CliError::Validation(e.to_string()))?;
            print!("{}", report.table());
            if let Some(out) = out {
                write_file(&out, &to_json_bytes(&report))?;
            }
        }
        Command::ExportKitti { scene, annotations, out } => {
            let bundle = scene_bundle(&scene)?;
            let store = load_annotations(&annotations)?;
            let export = kitti_from_store(&bundle, &store)?;
            if export.omitted > 0 {
                log::warn!("{} boxes behind the camera were left out", export.omitted);
            }
            write_file(&out, export.text().as_bytes())?;
        }
        Command::Serve { scene, port } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
            runtime.block_on(aerolift_server::serve(&scene, port, config.quality))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
