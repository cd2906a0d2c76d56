//! Revisioned annotation store: per track, per frame oriented boxes with face
//! labels and review flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{to_json_bytes, write_atomic, SceneIoError};
use crate::geometry::{OrientedBox, Rotation, SemanticFaceMap, Vec3};

/// Box geometry as persisted: identity and frame live in the enclosing entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub center: Vec3,
    pub dims: Vec3,
    pub rotation: Rotation,
}

impl BoxGeometry {
    pub fn from_box(b: &OrientedBox) -> Self {
        Self { center: b.center, dims: b.dims, rotation: b.rotation }
    }

    pub fn to_box(&self, track_id: u32, frame: usize) -> OrientedBox {
        OrientedBox { center: self.center, dims: self.dims, rotation: self.rotation, track_id, frame }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationEntry {
    pub bbox: OrientedBox,
    pub faces: Option<SemanticFaceMap>,
    pub keyframe: bool,
    /// Geometry reviewed and accepted without correction.
    pub accepted: bool,
    /// Mask instance id the box was fitted from, when known.
    pub instance_id: Option<u16>,
}

impl AnnotationEntry {
    pub fn new(bbox: OrientedBox) -> Self {
        Self { bbox, faces: None, keyframe: false, accepted: false, instance_id: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrackAnnotations {
    pub class: String,
    pub frames: BTreeMap<usize, AnnotationEntry>,
}

/// Annotations for one scene. Every mutation goes through [`AnnotationStore::mutate`]
/// (or a method built on it), which bumps the revision.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotationStore {
    pub scene_id: String,
    revision: u64,
    tracks: BTreeMap<u32, TrackAnnotations>,
}

impl AnnotationStore {
    pub fn new(scene_id: impl Into<String>) -> Self {
        Self { scene_id: scene_id.into(), revision: 0, tracks: BTreeMap::new() }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn tracks(&self) -> &BTreeMap<u32, TrackAnnotations> {
        &self.tracks
    }

    pub fn track(&self, id: u32) -> Option<&TrackAnnotations> {
        self.tracks.get(&id)
    }

    pub fn entry(&self, track: u32, frame: usize) -> Option<&AnnotationEntry> {
        self.tracks.get(&track)?.frames.get(&frame)
    }

    pub fn box_count(&self) -> usize {
        self.tracks.values().map(|t| t.frames.len()).sum()
    }

    /// Applies `f` to the track map and bumps the revision if `f` succeeds.
    pub fn mutate<T, E>(&mut self, f: impl FnOnce(&mut BTreeMap<u32, TrackAnnotations>) -> Result<T, E>) -> Result<T, E> {
        let mut tracks = self.tracks.clone();
        let out = f(&mut tracks)?;
        self.tracks = tracks;
        self.revision += 1;
        Ok(out)
    }

    /// Inserts or replaces the box of `(track, frame)`, keeping flags and faces.
    pub fn put_box(&mut self, class: &str, bbox: OrientedBox) {
        let _ = self.mutate::<(), ()>(|tracks| {
            let t = tracks.entry(bbox.track_id).or_insert_with(|| TrackAnnotations { class: class.to_string(), frames: BTreeMap::new() });
            t.frames
                .entry(bbox.frame)
                .and_modify(|e| e.bbox = bbox)
                .or_insert_with(|| AnnotationEntry::new(bbox));
            Ok(())
        });
    }

    /// Boxes of every track in `frame`.
    pub fn boxes_in_frame(&self, frame: usize) -> Vec<OrientedBox> {
        self.tracks.values().filter_map(|t| t.frames.get(&frame).map(|e| e.bbox)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    scene_id: String,
    revision: u64,
    tracks: Vec<TrackFile>,
}

#[derive(Serialize, Deserialize)]
struct TrackFile {
    track_id: u32,
    class: String,
    frames: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    frame: usize,
    #[serde(rename = "box")]
    geometry: BoxGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    faces: Option<SemanticFaceMap>,
    keyframe: bool,
    accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance_id: Option<u16>,
}

impl AnnotationStore {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let file = StoreFile {
            scene_id: self.scene_id.clone(),
            revision: self.revision,
            tracks: self
                .tracks
                .iter()
                .map(|(&id, t)| TrackFile {
                    track_id: id,
                    class: t.class.clone(),
                    frames: t
                        .frames
                        .iter()
                        .map(|(&frame, e)| EntryFile {
                            frame,
                            geometry: BoxGeometry::from_box(&e.bbox),
                            faces: e.faces,
                            keyframe: e.keyframe,
                            accepted: e.accepted,
                            instance_id: e.instance_id,
                        })
                        .collect(),
                })
                .collect(),
        };
        to_json_bytes(&file)
    }

    pub fn from_json_bytes(bytes: &[u8], path: &Path) -> Result<Self, SceneIoError> {
        let file: StoreFile = serde_json::from_slice(bytes).map_err(|e| SceneIoError::json(path, e))?;
        let mut tracks = BTreeMap::new();
        for t in file.tracks {
            if tracks.contains_key(&t.track_id) {
                return Err(SceneIoError::Validation(format!("duplicate track {}", t.track_id)));
            }
            let mut frames = BTreeMap::new();
            for e in t.frames {
                let bbox = e.geometry.to_box(t.track_id, e.frame);
                bbox.validate().map_err(|err| SceneIoError::Validation(format!("track {} frame {}: {err}", t.track_id, e.frame)))?;
                let entry = AnnotationEntry { bbox, faces: e.faces, keyframe: e.keyframe, accepted: e.accepted, instance_id: e.instance_id };
                if frames.insert(e.frame, entry).is_some() {
                    return Err(SceneIoError::Validation(format!("duplicate entry for track {} frame {}", t.track_id, e.frame)));
                }
            }
            tracks.insert(t.track_id, TrackAnnotations { class: t.class, frames });
        }
        Ok(Self { scene_id: file.scene_id, revision: file.revision, tracks })
    }
}

/// Persists atomically (temporary file then rename).
pub fn save_annotations(store: &AnnotationStore, path: &Path) -> Result<(), SceneIoError> {
    write_atomic(path, &store.to_json_bytes())
}

pub fn load_annotations(path: &Path) -> Result<AnnotationStore, SceneIoError> {
    let bytes = std::fs::read(path).map_err(|e| SceneIoError::io(path, e))?;
    AnnotationStore::from_json_bytes(&bytes, path)
}
