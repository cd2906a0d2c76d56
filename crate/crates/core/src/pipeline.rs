//! End-to-end stages over scene bundles, shared by the command-line tool and
//! the integration tests. Every stage is deterministic for fixed inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxfit::{fit_with_gimbal, UpAxisMode};
use crate::exec::Execution;
use crate::frame::PointCluster;
use crate::geometry::SemanticFaceMap;
use crate::lifting::{lift_sequence, LiftError, LiftParams};
use crate::motmetrics::MotError;
use crate::refine::RefineError;
use crate::sceneio::{
    export_kitti, save_scene, to_json_bytes, write_atomic, AnnotationEntry, AnnotationStore, KittiExport, KittiInput, SceneBundle, SceneIoError,
    TrackRecordFile,
};
use crate::synthgen::{generate_scene, GroundTruthScene, SynthConfig, SynthError};
use crate::tracking::{run, Detection, TrackError, TrackerParams, TrackingResult};
use crate::viewpoint::{build_report, CoverageReport, QualityWeights, ReportScene, ViewError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scene(#[from] SceneIoError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Mot(#[from] MotError),
    #[error("{0}")]
    Validation(String),
}

impl PipelineError {
    pub fn is_io(&self) -> bool {
        matches!(self, PipelineError::Scene(e) if e.is_io())
    }
}

/// Tunables for every stage, as read from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub lift: LiftParams,
    pub tracker: TrackerParams,
    pub quality: QualityWeights,
    pub up_axis: UpAxisMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        // Single-view clusters show one flank and the back, which tilts the
        // covariance axes; the gimbal normal itself is the steadier vertical.
        Self { lift: LiftParams::default(), tracker: TrackerParams::default(), quality: QualityWeights::default(), up_axis: UpAxisMode::GimbalNormal }
    }
}

/// Generates a synthetic scene and writes it as a bundle.
pub fn synth_to_dir(config: &SynthConfig, seed: u64, dir: &Path, exec: Execution) -> Result<(SceneBundle, GroundTruthScene), PipelineError> {
    let (bundle, gt) = generate_scene(config, seed, exec)?;
    save_scene(&bundle, dir)?;
    Ok((bundle, gt))
}

pub fn lift_scene(bundle: &SceneBundle, params: &LiftParams, exec: Execution) -> Result<Vec<Vec<PointCluster>>, PipelineError> {
    let pairs: Vec<_> = bundle.frames.iter().map(|f| (&f.pointmap, &f.mask)).collect();
    Ok(lift_sequence(&pairs, params, exec)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub frame: usize,
    pub instance_id: u16,
    pub class: String,
    pub points: usize,
    pub centroid: crate::geometry::Vec3,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LiftSummary {
    pub clusters: Vec<ClusterSummary>,
}

pub fn summarize_lift(clusters: &[Vec<PointCluster>]) -> LiftSummary {
    let clusters = clusters
        .iter()
        .flatten()
        .filter_map(|c| {
            Some(ClusterSummary { frame: c.frame, instance_id: c.instance_id, class: c.class.clone(), points: c.len(), centroid: c.centroid()? })
        })
        .collect();
    LiftSummary { clusters }
}

pub fn track_clusters(clusters: &[Vec<PointCluster>], params: &TrackerParams, scale_hint: f64) -> Result<TrackingResult, PipelineError> {
    let frames: Vec<(usize, Vec<Detection>)> = clusters
        .iter()
        .enumerate()
        .map(|(f, cs)| (f, cs.iter().filter_map(Detection::from_cluster).collect()))
        .collect();
    Ok(run(&frames, &params.scaled(scale_hint))?)
}

pub fn track_scene(bundle: &SceneBundle, config: &PipelineConfig, exec: Execution) -> Result<TrackingResult, PipelineError> {
    let clusters = lift_scene(bundle, &config.lift, exec)?;
    track_clusters(&clusters, &config.tracker, bundle.meta.scale_hint)
}

/// Fits one box per track record that carries a mask instance id. Records
/// whose cluster cannot support a box are skipped with a warning. Boxes get
/// the default face map (front along the longer horizontal axis).
pub fn fit_tracks(
    bundle: &SceneBundle,
    tracks: &TrackRecordFile,
    config: &PipelineConfig,
    use_gimbal: bool,
    exec: Execution,
) -> Result<AnnotationStore, PipelineError> {
    let clusters = lift_scene(bundle, &config.lift, exec)?;
    let jobs: Vec<_> = tracks
        .records
        .iter()
        .filter_map(|r| {
            let inst = r.instance_id?;
            let cluster = clusters.get(r.frame)?.iter().find(|c| c.instance_id == inst)?;
            Some((r, cluster))
        })
        .collect();
    let fitted = exec.map(&jobs, |(r, cluster)| {
        let fd = &bundle.frames[r.frame];
        let gimbal = if use_gimbal { fd.gimbal.or_else(|| bundle.nearest_gimbal(r.frame)) } else { None };
        fit_with_gimbal(&cluster.points, fd.pose(), gimbal.as_ref(), config.up_axis)
    });
    let mut store = AnnotationStore::new(bundle.meta.scene_id.clone());
    let mut skipped = 0usize;
    store
        .mutate::<(), PipelineError>(|t| {
            for ((r, _), fit) in jobs.iter().zip(fitted) {
                let Ok(mut b) = fit else {
                    skipped += 1;
                    continue;
                };
                b.track_id = r.track_id;
                b.frame = r.frame;
                let track = t.entry(r.track_id).or_insert_with(|| crate::sceneio::TrackAnnotations { class: r.class.clone(), frames: Default::default() });
                let mut entry = AnnotationEntry::new(b);
                entry.faces = Some(SemanticFaceMap::default());
                entry.instance_id = r.instance_id;
                track.frames.insert(r.frame, entry);
            }
            Ok(())
        })?;
    if skipped > 0 {
        log::warn!("skipped {skipped} records whose clusters could not be fitted");
    }
    Ok(store)
}

pub fn viewpoint_reports(bundle: &SceneBundle, store: &AnnotationStore, weights: &QualityWeights, exec: Execution) -> Result<Vec<CoverageReport>, PipelineError> {
    let poses = bundle.poses();
    let masks: Vec<_> = bundle.frames.iter().map(|f| f.mask.clone()).collect();
    let scene = ReportScene { poses: &poses, intrinsics: &bundle.meta.intrinsics, masks: Some(&masks) };
    let ids: Vec<u32> = store.tracks().iter().filter(|(_, t)| !t.frames.is_empty()).map(|(id, _)| *id).collect();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        out.push(build_report(store, id, scene, weights, exec)?);
    }
    Ok(out)
}

/// Writes `track_<id>.json`, `track_<id>_heatmap.csv`, `track_<id>_filmstrip.json`
/// per report and a combined `summary.txt`.
pub fn write_viewpoint_outputs(reports: &[CoverageReport], dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| SceneIoError::Io { path: dir.to_path_buf(), source: e })?;
    let mut summary = String::new();
    for r in reports {
        write_atomic(&dir.join(format!("track_{}.json", r.track_id)), &to_json_bytes(r))?;
        write_atomic(&dir.join(format!("track_{}_heatmap.csv", r.track_id)), r.heatmap_csv().as_bytes())?;
        write_atomic(&dir.join(format!("track_{}_filmstrip.json", r.track_id)), &to_json_bytes(&r.filmstrip))?;
        summary.push_str(&r.summary_text());
    }
    write_atomic(&dir.join("summary.txt"), summary.as_bytes())?;
    Ok(())
}

pub fn kitti_from_store(bundle: &SceneBundle, store: &AnnotationStore) -> Result<KittiExport, PipelineError> {
    let mut entries: Vec<KittiInput> = Vec::new();
    for t in store.tracks().values() {
        for e in t.frames.values() {
            entries.push(KittiInput { bbox: e.bbox, class: t.class.clone() });
        }
    }
    entries.sort_by_key(|e| (e.bbox.frame, e.bbox.track_id));
    Ok(export_kitti(&entries, &bundle.poses(), &bundle.meta.intrinsics)?)
}
