//! Per-frame track records, shared by tracker output and ground truth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, to_json_bytes, write_atomic, SceneIoError};
use crate::geometry::{Rotation, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Active,
    Dormant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame: usize,
    pub track_id: u32,
    pub class: String,
    pub centroid: Vec3,
    /// Mask instance id of the cluster this record was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<u16>,
    pub status: TrackStatus,
    /// Box dimensions, present for ground-truth records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Rotation>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackRecordFile {
    pub records: Vec<TrackRecord>,
}

impl TrackRecordFile {
    pub fn track_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.records.iter().map(|r| r.track_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn frame_range(&self) -> Option<(usize, usize)> {
        let lo = self.records.iter().map(|r| r.frame).min()?;
        let hi = self.records.iter().map(|r| r.frame).max()?;
        Some((lo, hi))
    }

    pub fn for_frame(&self, frame: usize) -> impl Iterator<Item = &TrackRecord> {
        self.records.iter().filter(move |r| r.frame == frame)
    }
}

pub fn save_track_records(file: &TrackRecordFile, path: &Path) -> Result<(), SceneIoError> {
    write_atomic(path, &to_json_bytes(file))
}

pub fn load_track_records(path: &Path) -> Result<TrackRecordFile, SceneIoError> {
    read_json(path)
}
