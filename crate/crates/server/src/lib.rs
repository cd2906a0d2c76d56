//! HTTP annotation service for one scene bundle.
//!
//! Reads run concurrently against the current snapshot. Mutations go through a
//! single writer: each request names the revision it was based on, a stale
//! revision is refused with 409, and an accepted change is written to disk
//! (temp file then rename) before it becomes visible.

mod error;
mod handlers;
mod points;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::routing::{get, post, put};
use axum::Router;
use tokio::sync::RwLock;

use aerolift_core::sceneio::{load_annotations, load_scene, save_annotations, AnnotationStore, SceneBundle, TrackAnnotations};
use aerolift_core::viewpoint::QualityWeights;

pub use error::{ApiError, ServerError};
pub use points::{decimate_points, PointPayload};

pub const ANNOTATIONS_FILE: &str = "annotations.json";

pub struct AppState {
    pub bundle: SceneBundle,
    pub scene_dir: PathBuf,
    pub weights: QualityWeights,
    annotations_path: PathBuf,
    store: RwLock<AnnotationStore>,
}

pub type SharedState = Arc<AppState>;

impl AppState {
    /// Loads the bundle and its annotations, creating an empty annotations
    /// file when none exists.
    pub fn open(scene_dir: &Path, weights: QualityWeights) -> Result<Self, ServerError> {
        let bundle = load_scene(scene_dir)?;
        let annotations_path = scene_dir.join(ANNOTATIONS_FILE);
        let store = if annotations_path.exists() {
            load_annotations(&annotations_path)?
        } else {
            let store = AnnotationStore::new(bundle.meta.scene_id.clone());
            save_annotations(&store, &annotations_path)?;
            store
        };
        Ok(Self { bundle, scene_dir: scene_dir.to_path_buf(), weights, annotations_path, store: RwLock::new(store) })
    }

    pub async fn snapshot(&self) -> AnnotationStore {
        self.store.read().await.clone()
    }

    pub async fn revision(&self) -> u64 {
        self.store.read().await.revision()
    }

    /// Applies `f` if `expected` matches the current revision, persists the
    /// new store and only then publishes it.
    pub async fn mutate<T>(
        &self,
        expected: u64,
        f: impl FnOnce(&mut BTreeMap<u32, TrackAnnotations>) -> Result<T, ApiError>,
    ) -> Result<(u64, T), ApiError> {
        let mut guard = self.store.write().await;
        if guard.revision() != expected {
            return Err(ApiError::Conflict { expected, current: guard.revision() });
        }
        let mut next = guard.clone();
        let out = next.mutate(f)?;
        save_annotations(&next, &self.annotations_path)?;
        *guard = next;
        Ok((guard.revision(), out))
    }
}

pub fn router(state: SharedState) -> Router {
    let api = Router::new()
        .route("/scene", get(handlers::scene))
        .route("/frames/{t}/points", get(handlers::points))
        .route("/frames/{t}/image", get(handlers::image))
        .route("/tracks", get(handlers::tracks))
        .route("/tracks/{id}/frames/{t}/box", get(handlers::get_box).put(handlers::put_box))
        .route("/tracks/{id}/frames/{t}/faces", put(handlers::put_faces))
        .route("/tracks/{id}/frames/{t}/keyframe", put(handlers::put_keyframe))
        .route("/tracks/{id}/frames/{t}/snap", post(handlers::snap))
        .route("/tracks/{id}/interpolate", post(handlers::interpolate))
        .route("/tracks/{id}/propagate", post(handlers::propagate))
        .route("/tracks/{id}/report", get(handlers::report))
        .route("/export/kitti", get(handlers::export_kitti));
    Router::new().nest("/api", api).with_state(state)
}

/// Opens the scene and serves until the process is stopped.
pub async fn serve(scene_dir: &Path, port: u16, weights: QualityWeights) -> Result<(), ServerError> {
    let state = Arc::new(AppState::open(scene_dir, weights)?);
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServerError::Bind { addr: addr.to_string(), source })?;
    log::info!("serving {} on http://{addr}/api", state.bundle.meta.scene_id);
    axum::serve(listener, router(state)).await.map_err(ServerError::Serve)
}
