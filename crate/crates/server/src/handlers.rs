use std::collections::BTreeMap;

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use aerolift_core::geometry::{FaceId, SemanticFaceMap};
use aerolift_core::lifting::lift_mask;
use aerolift_core::pipeline::kitti_from_store;
use aerolift_core::refine::{gather_neighbourhood, interpolate_span, propagate as propagate_track, snap_to_ground, InterpolationMode, PropagateMode, SnapContext, SnapMethod};
use aerolift_core::sceneio::{AnnotationEntry, AnnotationStore, BoxGeometry, FrameData, TrackAnnotations};
use aerolift_core::viewpoint::{build_report, ReportScene};
use aerolift_core::Execution;

use crate::error::ApiError;
use crate::points::decimate_points;
use crate::SharedState;

type ApiResult<T> = Result<T, ApiError>;

fn frame_data(state: &SharedState, t: usize) -> ApiResult<&FrameData> {
    state.bundle.frames.get(t).ok_or_else(|| ApiError::NotFound(format!("frame {t} out of range")))
}

fn track_mut(tracks: &mut BTreeMap<u32, TrackAnnotations>, id: u32) -> ApiResult<&mut TrackAnnotations> {
    tracks.get_mut(&id).ok_or_else(|| ApiError::NotFound(format!("unknown track {id}")))
}

fn entry_mut(tracks: &mut BTreeMap<u32, TrackAnnotations>, id: u32, t: usize) -> ApiResult<&mut AnnotationEntry> {
    track_mut(tracks, id)?.frames.get_mut(&t).ok_or_else(|| ApiError::NotFound(format!("track {id} has no box at frame {t}")))
}

#[derive(Serialize)]
struct Written {
    revision: u64,
    written: Vec<usize>,
}

#[derive(Serialize)]
pub(crate) struct BoxView {
    revision: u64,
    track_id: u32,
    frame: usize,
    #[serde(rename = "box")]
    geometry: BoxGeometry,
    faces: Option<SemanticFaceMap>,
    keyframe: bool,
    accepted: bool,
    instance_id: Option<u16>,
}

impl BoxView {
    fn of(store: &AnnotationStore, id: u32, t: usize) -> ApiResult<Self> {
        let e = store.entry(id, t).ok_or_else(|| ApiError::NotFound(format!("track {id} has no box at frame {t}")))?;
        Ok(Self {
            revision: store.revision(),
            track_id: id,
            frame: t,
            geometry: BoxGeometry::from_box(&e.bbox),
            faces: e.faces,
            keyframe: e.keyframe,
            accepted: e.accepted,
            instance_id: e.instance_id,
        })
    }
}

pub async fn scene(State(state): State<SharedState>) -> Json<Value> {
    let meta = &state.bundle.meta;
    Json(json!({
        "scene_id": meta.scene_id,
        "intrinsics": meta.intrinsics,
        "fps": meta.fps,
        "frame_count": meta.frame_count,
        "scale_hint": meta.scale_hint,
        "revision": state.revision().await,
    }))
}

#[derive(Deserialize)]
pub struct PointsQuery {
    stride: Option<usize>,
    track: Option<u32>,
}

pub async fn points(State(state): State<SharedState>, Path(t): Path<usize>, Query(q): Query<PointsQuery>) -> ApiResult<impl IntoResponse> {
    let stride = q.stride.unwrap_or(1);
    if stride == 0 {
        return Err(ApiError::BadRequest("stride must be at least 1".into()));
    }
    let fd = frame_data(&state, t)?;
    let store = state.snapshot().await;
    let tracks: BTreeMap<u16, u32> = store
        .tracks()
        .iter()
        .filter_map(|(&id, tr)| tr.frames.get(&t)?.instance_id.map(|inst| (inst, id)))
        .collect();
    let selected = match q.track {
        Some(id) => {
            store.track(id).ok_or_else(|| ApiError::NotFound(format!("unknown track {id}")))?;
            store.entry(id, t).and_then(|e| e.instance_id)
        }
        None => None,
    };
    let mut payload = decimate_points(&fd.pointmap, &fd.mask, stride, selected);
    payload.tracks = tracks;
    Ok(Json(payload))
}

pub async fn image(State(state): State<SharedState>, Path(t): Path<usize>) -> ApiResult<impl IntoResponse> {
    frame_data(&state, t)?;
    let path = state.scene_dir.join("frames").join(format!("{t:06}.png"));
    match tokio::fs::read(&path).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, "image/png")], bytes)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(ApiError::NotFound(format!("no preview image for frame {t}"))),
        Err(e) => Err(ApiError::Internal(format!("{}: {e}", path.display()))),
    }
}

pub async fn tracks(State(state): State<SharedState>) -> Json<Value> {
    let store = state.snapshot().await;
    let list: Vec<Value> = store
        .tracks()
        .iter()
        .map(|(id, t)| {
            let frames: Vec<usize> = t.frames.keys().copied().collect();
            let keyframes: Vec<usize> = t.frames.iter().filter(|(_, e)| e.keyframe).map(|(f, _)| *f).collect();
            json!({ "track_id": id, "class": t.class, "frames": frames, "keyframes": keyframes })
        })
        .collect();
    Json(json!({ "revision": store.revision(), "tracks": list }))
}

pub async fn get_box(State(state): State<SharedState>, Path((id, t)): Path<(u32, usize)>) -> ApiResult<Json<BoxView>> {
    Ok(Json(BoxView::of(&state.snapshot().await, id, t)?))
}

#[derive(Deserialize)]
pub struct PutBox {
    expected_revision: u64,
    #[serde(rename = "box")]
    geometry: BoxGeometry,
    /// Needed only when the track does not exist yet.
    class: Option<String>,
    #[serde(default)]
    accepted: bool,
}

pub async fn put_box(State(state): State<SharedState>, Path((id, t)): Path<(u32, usize)>, Json(body): Json<PutBox>) -> ApiResult<Json<BoxView>> {
    frame_data(&state, t)?;
    let bbox = body.geometry.to_box(id, t);
    bbox.validate().map_err(|e| ApiError::BadRequest(e.to_string()))?;
    state
        .mutate(body.expected_revision, |tracks| {
            let track = match (tracks.contains_key(&id), body.class) {
                (true, _) => tracks.get_mut(&id).expect("checked"),
                (false, Some(class)) => tracks.entry(id).or_insert_with(|| TrackAnnotations { class, frames: BTreeMap::new() }),
                (false, None) => return Err(ApiError::BadRequest(format!("track {id} does not exist; give a class to create it"))),
            };
            let entry = track.frames.entry(t).or_insert_with(|| AnnotationEntry::new(bbox));
            entry.bbox = bbox;
            entry.accepted = body.accepted;
            Ok(())
        })
        .await?;
    Ok(Json(BoxView::of(&state.snapshot().await, id, t)?))
}

#[derive(Deserialize)]
pub struct PrimaryFaces {
    front: FaceId,
    top: FaceId,
    left: FaceId,
}

#[derive(Deserialize)]
pub struct PutFaces {
    expected_revision: u64,
    faces: Option<SemanticFaceMap>,
    /// Front, top and left faces; the rest is completed from them.
    primary: Option<PrimaryFaces>,
}

pub async fn put_faces(State(state): State<SharedState>, Path((id, t)): Path<(u32, usize)>, Json(body): Json<PutFaces>) -> ApiResult<Json<BoxView>> {
    let faces = match (body.faces, body.primary) {
        (Some(f), None) => f,
        (None, Some(p)) => aerolift_core::refine::infer_opposing_faces(p.front, p.top, p.left)?,
        _ => return Err(ApiError::BadRequest("give exactly one of `faces` or `primary`".into())),
    };
    state
        .mutate(body.expected_revision, |tracks| {
            entry_mut(tracks, id, t)?.faces = Some(faces);
            Ok(())
        })
        .await?;
    Ok(Json(BoxView::of(&state.snapshot().await, id, t)?))
}

#[derive(Deserialize)]
pub struct PutKeyframe {
    expected_revision: u64,
    keyframe: bool,
}

pub async fn put_keyframe(State(state): State<SharedState>, Path((id, t)): Path<(u32, usize)>, Json(body): Json<PutKeyframe>) -> ApiResult<Json<BoxView>> {
    state
        .mutate(body.expected_revision, |tracks| {
            entry_mut(tracks, id, t)?.keyframe = body.keyframe;
            Ok(())
        })
        .await?;
    Ok(Json(BoxView::of(&state.snapshot().await, id, t)?))
}

#[derive(Deserialize)]
pub struct InterpolateBody {
    expected_revision: u64,
    from: usize,
    to: usize,
    mode: InterpolationMode,
}

pub async fn interpolate(State(state): State<SharedState>, Path(id): Path<u32>, Json(body): Json<InterpolateBody>) -> ApiResult<Json<Value>> {
    let (revision, written) = state
        .mutate(body.expected_revision, |tracks| Ok(interpolate_span(id, track_mut(tracks, id)?, body.from, body.to, body.mode)?))
        .await?;
    Ok(Json(json!(Written { revision, written })))
}

#[derive(Deserialize)]
pub struct SnapBody {
    expected_revision: u64,
    #[serde(flatten)]
    method: SnapMethod,
    /// Horizontal neighbourhood radius; defaults to 1.5 times the longer footprint side.
    radius: Option<f64>,
    #[serde(default)]
    seed: u64,
}

pub async fn snap(State(state): State<SharedState>, Path((id, t)): Path<(u32, usize)>, Json(body): Json<SnapBody>) -> ApiResult<Json<BoxView>> {
    let fd = frame_data(&state, t)?;
    let store = state.snapshot().await;
    if store.revision() != body.expected_revision {
        return Err(ApiError::Conflict { expected: body.expected_revision, current: store.revision() });
    }
    let entry = store.entry(id, t).ok_or_else(|| ApiError::NotFound(format!("track {id} has no box at frame {t}")))?;
    let radius = body.radius.unwrap_or(1.5 * entry.bbox.dims.x.max(entry.bbox.dims.y));
    if radius.is_nan() || radius <= 0.0 {
        return Err(ApiError::BadRequest(format!("radius {radius} must be positive")));
    }
    let cluster = match entry.instance_id {
        Some(inst) => lift_mask(&fd.pointmap, &fd.mask, inst).map(|c| c.points).unwrap_or_default(),
        None => Vec::new(),
    };
    let ctx = SnapContext { neighbourhood: gather_neighbourhood(&fd.pointmap, &entry.bbox, radius), cluster, seed: body.seed };
    let snapped = snap_to_ground(&entry.bbox, &ctx, &body.method)?;
    state
        .mutate(body.expected_revision, |tracks| {
            let e = entry_mut(tracks, id, t)?;
            e.bbox = snapped;
            e.accepted = false;
            Ok(())
        })
        .await?;
    Ok(Json(BoxView::of(&state.snapshot().await, id, t)?))
}

#[derive(Deserialize)]
pub struct PropagateBody {
    expected_revision: u64,
    #[serde(flatten)]
    mode: PropagateMode,
}

pub async fn propagate(State(state): State<SharedState>, Path(id): Path<u32>, Json(body): Json<PropagateBody>) -> ApiResult<Json<Value>> {
    if let PropagateMode::CopyAdjacent { target, .. } = body.mode {
        frame_data(&state, target)?;
    }
    let (revision, written) = state
        .mutate(body.expected_revision, |tracks| Ok(propagate_track(id, track_mut(tracks, id)?, body.mode)?))
        .await?;
    Ok(Json(json!(Written { revision, written })))
}

pub async fn report(State(state): State<SharedState>, Path(id): Path<u32>) -> ApiResult<impl IntoResponse> {
    let store = state.snapshot().await;
    let report = tokio::task::spawn_blocking(move || {
        let poses = state.bundle.poses();
        let masks: Vec<_> = state.bundle.frames.iter().map(|f| f.mask.clone()).collect();
        let scene = ReportScene { poses: &poses, intrinsics: &state.bundle.meta.intrinsics, masks: Some(&masks) };
        build_report(&store, id, scene, &state.weights, Execution::default())
    })
    .await
    .map_err(|e| ApiError::Internal(format!("report task failed: {e}")))??;
    Ok(Json(report))
}

pub async fn export_kitti(State(state): State<SharedState>) -> ApiResult<impl IntoResponse> {
    let store = state.snapshot().await;
    let export = kitti_from_store(&state.bundle, &store).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], export.text()))
}
