use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use aerolift_core::lifting::lift_mask;
use aerolift_core::pipeline::{fit_tracks, synth_to_dir, track_scene, PipelineConfig};
use aerolift_core::refine::interpolate_geometric;
use aerolift_core::sceneio::{load_annotations, save_annotations, BoxGeometry};
use aerolift_core::synthgen::Preset;
use aerolift_core::viewpoint::QualityWeights;
use aerolift_core::Execution;
use aerolift_server::{router, AppState, ANNOTATIONS_FILE};

/// Short crossover scene with fitted boxes saved as annotations.
fn scene(dir: &Path) {
    let mut config = Preset::Crossover.config();
    config.frame_count = 16;
    let (bundle, _) = synth_to_dir(&config, 3, dir, Execution::default()).unwrap();
    let pc = PipelineConfig::default();
    let tracks = track_scene(&bundle, &pc, Execution::default()).unwrap();
    let store = fit_tracks(&bundle, &tracks.records, &pc, true, Execution::default()).unwrap();
    save_annotations(&store, &dir.join(ANNOTATIONS_FILE)).unwrap();
}

fn app(dir: &Path) -> (Router, Arc<AppState>) {
    let state = Arc::new(AppState::open(dir, QualityWeights::default()).unwrap());
    (router(state.clone()), state)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn geometry(v: &Value) -> BoxGeometry {
    serde_json::from_value(v["box"].clone()).unwrap()
}

#[tokio::test]
async fn scene_meta_matches_bundle() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let (status, v) = json_call(&app, Method::GET, "/api/scene", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["frame_count"], 16);
    assert_eq!(v["scene_id"], state.bundle.meta.scene_id.as_str());
    assert_eq!(v["intrinsics"], serde_json::to_value(state.bundle.meta.intrinsics).unwrap());
}

#[tokio::test]
async fn stale_revision_conflicts_and_leaves_store() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let before = state.snapshot().await;
    let file_before = std::fs::read(dir.path().join(ANNOTATIONS_FILE)).unwrap();
    let rev = before.revision();

    let (_, current) = json_call(&app, Method::GET, "/api/tracks/1/frames/2/box", None).await;
    let mut moved = current["box"].clone();
    moved["center"][0] = json!(moved["center"][0].as_f64().unwrap() + 1.0);

    let (status, v) =
        json_call(&app, Method::PUT, "/api/tracks/1/frames/2/box", Some(json!({ "expected_revision": rev + 5, "box": moved }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["current_revision"], rev);
    assert_eq!(state.snapshot().await, before);
    assert_eq!(std::fs::read(dir.path().join(ANNOTATIONS_FILE)).unwrap(), file_before);

    let (status, v) =
        json_call(&app, Method::PUT, "/api/tracks/1/frames/2/box", Some(json!({ "expected_revision": rev, "box": moved }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["revision"], rev + 1);
    assert_eq!(v["box"], moved);
    assert_eq!(load_annotations(&dir.path().join(ANNOTATIONS_FILE)).unwrap(), state.snapshot().await);
}

#[tokio::test]
async fn concurrent_writers_exactly_one_wins() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let rev = state.revision().await;
    let calls = (0..8).map(|i| {
        let app = app.clone();
        async move {
            let body = json!({ "expected_revision": rev, "keyframe": i % 2 == 0 });
            call(&app, Method::PUT, "/api/tracks/1/frames/4/keyframe", Some(body)).await.0
        }
    });
    let handles: Vec<_> = calls.map(tokio::spawn).collect();
    let mut ok = 0;
    for h in handles {
        match h.await.unwrap() {
            StatusCode::OK => ok += 1,
            s => assert_eq!(s, StatusCode::CONFLICT),
        }
    }
    assert_eq!(ok, 1);
    assert_eq!(state.revision().await, rev + 1);
}

#[tokio::test]
async fn geometric_interpolation_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let mut rev = state.revision().await;

    // Rotate and resize the second keyframe so every channel changes.
    let (_, end) = json_call(&app, Method::GET, "/api/tracks/1/frames/12/box", None).await;
    let mut edited = end["box"].clone();
    edited["dims"] = json!([3.1, 0.9, 1.6]);
    edited["rotation"] = json!([0.9238795325112867, 0.0, 0.0, 0.3826834323650898]);
    let (status, _) = json_call(&app, Method::PUT, "/api/tracks/1/frames/12/box", Some(json!({ "expected_revision": rev, "box": edited }))).await;
    assert_eq!(status, StatusCode::OK);
    rev += 1;
    for t in [2, 12] {
        let (status, _) =
            json_call(&app, Method::PUT, &format!("/api/tracks/1/frames/{t}/keyframe"), Some(json!({ "expected_revision": rev, "keyframe": true }))).await;
        assert_eq!(status, StatusCode::OK);
        rev += 1;
    }

    let store = state.snapshot().await;
    let kf1 = store.entry(1, 2).unwrap().bbox;
    let kf2 = store.entry(1, 12).unwrap().bbox;
    let (status, v) = json_call(
        &app,
        Method::POST,
        "/api/tracks/1/interpolate",
        Some(json!({ "expected_revision": rev, "from": 2, "to": 12, "mode": "geometric" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["written"], json!((3..12).collect::<Vec<_>>()));
    rev += 1;

    for t in 3..12 {
        let expected = interpolate_geometric(&kf1, &kf2, t).unwrap();
        let (_, got) = json_call(&app, Method::GET, &format!("/api/tracks/1/frames/{t}/box"), None).await;
        let g = geometry(&got);
        assert_eq!(g.center, expected.center, "frame {t}");
        assert_eq!(g.dims, expected.dims, "frame {t}");
        assert_eq!(g.rotation, expected.rotation, "frame {t}");
    }

    // A semantic pass afterwards leaves geometry untouched.
    let geometry_before: Vec<_> = state.snapshot().await.track(1).unwrap().frames.values().map(|e| e.bbox).collect();
    let (status, _) = json_call(
        &app,
        Method::PUT,
        "/api/tracks/1/frames/2/faces",
        Some(json!({ "expected_revision": rev, "primary": { "front": "-x", "top": "+z", "left": "-y" } })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    rev += 1;
    let (status, _) = json_call(
        &app,
        Method::POST,
        "/api/tracks/1/interpolate",
        Some(json!({ "expected_revision": rev, "from": 2, "to": 12, "mode": "semantic" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let after = state.snapshot().await;
    let geometry_after: Vec<_> = after.track(1).unwrap().frames.values().map(|e| e.bbox).collect();
    assert_eq!(geometry_before, geometry_after);
    assert_eq!(after.entry(1, 5).unwrap().faces, after.entry(1, 2).unwrap().faces);
}

#[tokio::test]
async fn points_highlight_equals_mask_lifting() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let t = 5;
    let inst = state.snapshot().await.entry(2, t).unwrap().instance_id.unwrap();
    let (status, v) = json_call(&app, Method::GET, &format!("/api/frames/{t}/points?stride=1&track=2"), None).await;
    assert_eq!(status, StatusCode::OK);
    let fd = &state.bundle.frames[t];
    assert_eq!(v["count"], fd.pointmap.valid_count());
    let pixels: Vec<u32> = serde_json::from_value(v["pixels"].clone()).unwrap();
    let highlight: Vec<usize> = serde_json::from_value(v["highlight"].clone()).unwrap();
    let highlighted: Vec<u32> = highlight.iter().map(|&i| pixels[i]).collect();
    let lifted = lift_mask(&fd.pointmap, &fd.mask, inst).unwrap();
    assert!(!lifted.pixels.is_empty());
    assert_eq!(highlighted, lifted.pixels);
    assert_eq!(v["tracks"][inst.to_string()], 2);

    let (_, v) = json_call(&app, Method::GET, &format!("/api/frames/{t}/points?stride=4"), None).await;
    assert_eq!(v["count"].as_u64().unwrap() as usize, fd.pointmap.valid_count().div_ceil(4));
    let (status, _) = call(&app, Method::GET, &format!("/api/frames/{t}/points?stride=0"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn missing_resources_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let rev = state.revision().await;
    for uri in ["/api/frames/0/image", "/api/frames/99/points", "/api/tracks/42/frames/0/box", "/api/tracks/42/report"] {
        assert_eq!(call(&app, Method::GET, uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (status, _) =
        call(&app, Method::PUT, "/api/tracks/42/frames/3/keyframe", Some(json!({ "expected_revision": rev, "keyframe": true }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(state.revision().await, rev);
    let bad = json!({ "expected_revision": rev, "box": { "center": [0, 0, 0], "dims": [0, 1, 1], "rotation": [1, 0, 0, 0] } });
    assert_eq!(call(&app, Method::PUT, "/api/tracks/1/frames/3/box", Some(bad)).await.0, StatusCode::BAD_REQUEST);

    std::fs::write(dir.path().join("frames").join("000000.png"), b"\x89PNG").unwrap();
    let (status, bytes) = call(&app, Method::GET, "/api/frames/0/image", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, b"\x89PNG");
}

#[tokio::test]
async fn snap_rests_box_on_ground() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let rev = state.revision().await;
    let lifted = {
        let mut b = state.snapshot().await.entry(1, 6).unwrap().bbox;
        b.center.z += 0.7;
        BoxGeometry::from_box(&b)
    };
    let (status, _) = call(&app, Method::PUT, "/api/tracks/1/frames/6/box", Some(json!({ "expected_revision": rev, "box": lifted }))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, v) = json_call(
        &app,
        Method::POST,
        "/api/tracks/1/frames/6/snap",
        Some(json!({ "expected_revision": rev + 1, "method": "ransac_plane", "iterations": 200, "tolerance_frac": 0.02 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let g = geometry(&v);
    assert!((g.center.z - g.dims.z / 2.0).abs() < 0.05, "bottom at {}", g.center.z - g.dims.z / 2.0);
    assert_eq!(v["revision"], rev + 2);
}

#[tokio::test]
async fn propagate_report_and_export() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let rev = state.revision().await;
    let (status, v) = json_call(
        &app,
        Method::POST,
        "/api/tracks/2/propagate",
        Some(json!({ "expected_revision": rev, "mode": "dims_and_rotation_all_frames", "source": 3 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let store = state.snapshot().await;
    let src = store.entry(2, 3).unwrap().bbox;
    assert_eq!(v["written"].as_array().unwrap().len(), store.track(2).unwrap().frames.len() - 1);
    assert!(store.track(2).unwrap().frames.values().all(|e| e.bbox.dims == src.dims && e.bbox.rotation == src.rotation));

    let (status, report) = json_call(&app, Method::GET, "/api/tracks/2/report", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["track_id"], 2);
    assert_eq!(report["frames"].as_array().unwrap().len(), store.track(2).unwrap().frames.len());

    let (status, text) = call(&app, Method::GET, "/api/export/kitti", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), store.box_count());

    let (_, listing) = json_call(&app, Method::GET, "/api/tracks", None).await;
    assert_eq!(listing["revision"], rev + 1);
    assert_eq!(listing["tracks"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn restart_keeps_revision_and_creates_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    scene(dir.path());
    let (app, state) = app(dir.path());
    let rev = state.revision().await;
    call(&app, Method::PUT, "/api/tracks/1/frames/1/keyframe", Some(json!({ "expected_revision": rev, "keyframe": true }))).await;
    let reopened = AppState::open(dir.path(), QualityWeights::default()).unwrap();
    assert_eq!(reopened.revision().await, rev + 1);
    assert_eq!(reopened.snapshot().await, state.snapshot().await);

    std::fs::remove_file(dir.path().join(ANNOTATIONS_FILE)).unwrap();
    let fresh = AppState::open(dir.path(), QualityWeights::default()).unwrap();
    assert_eq!(fresh.revision().await, 0);
    assert!(dir.path().join(ANNOTATIONS_FILE).exists());
    assert!(AppState::open(&dir.path().join("missing"), QualityWeights::default()).is_err());
}
