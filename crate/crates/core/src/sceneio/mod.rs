//! Scene bundles, telemetry, annotations, track records and KITTI labels.
//!
//! Bundle layout on disk:
//!
//! ```text
//! meta.json                  intrinsics, fps, frame count, scale hint
//! instances.json             per-frame instance id -> class table
//! frames/000000.pts          "WLPM", u32 width, u32 height, f32 xyz row-major
//! frames/000000.mask.png     16-bit grayscale, pixel = instance id
//! frames/000000.pose.txt     16 numbers, row-major world-from-camera
//! telemetry.csv | .srt       optional gimbal pitch/roll
//! gt_tracks.json             optional ground-truth track records
//! annotations.json           annotation store (top-level `revision`)
//! ```

mod annotations;
mod bundle;
mod kitti;
mod records;
mod telemetry;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use annotations::{load_annotations, save_annotations, AnnotationEntry, AnnotationStore, BoxGeometry, TrackAnnotations};
pub use bundle::{load_scene, save_scene, FrameData, SceneBundle, SceneMeta};
pub use kitti::{export_kitti, KittiExport, KittiInput, KittiTrackingLine};
pub use records::{load_track_records, save_track_records, TrackRecord, TrackRecordFile, TrackStatus};
pub use telemetry::{parse_srt_telemetry, parse_telemetry_csv, write_telemetry_csv, TelemetryTrack};

pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const GT_TRACKS_FILE: &str = "gt_tracks.json";

#[derive(Debug, Error)]
pub enum SceneIoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: format error at byte {offset}: {message}", path.display())]
    Format { path: PathBuf, offset: u64, message: String },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("telemetry parse error: {0}")]
    Telemetry(String),
}

impl SceneIoError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        SceneIoError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, offset: u64, message: impl Into<String>) -> Self {
        SceneIoError::Format { path: path.to_path_buf(), offset, message: message.into() }
    }

    pub(crate) fn json(path: &Path, source: serde_json::Error) -> Self {
        SceneIoError::Json { path: path.to_path_buf(), source }
    }

    /// Whether the failure came from the filesystem rather than file contents.
    pub fn is_io(&self) -> bool {
        matches!(self, SceneIoError::Io { .. })
    }
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), SceneIoError> {
    use std::io::Write;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let write = || -> io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        SceneIoError::io(path, e)
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, SceneIoError> {
    let bytes = std::fs::read(path).map_err(|e| SceneIoError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| SceneIoError::json(path, e))
}

pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("in-memory values serialise");
    bytes.push(b'\n');
    bytes
}
