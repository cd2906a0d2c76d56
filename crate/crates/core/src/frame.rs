//! Per-frame observations: pointmaps, instance masks and lifted clusters.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{CameraPose, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("frame {frame}: grid has {got} entries, expected {width}x{height}")]
    GridSize { frame: usize, width: u32, height: u32, got: usize },
    #[error("frame {frame}: mask ids {ids:?} missing from class table")]
    UnlistedIds { frame: usize, ids: Vec<u16> },
    #[error("frame {frame}: class table lists ids {ids:?} absent from mask")]
    AbsentIds { frame: usize, ids: Vec<u16> },
    #[error("frame {frame}: class table uses reserved background id 0")]
    BackgroundInTable { frame: usize },
}

/// Pixel-aligned grid of world points. A NaN triple marks an invalid pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct PointmapFrame {
    pub frame: usize,
    pub width: u32,
    pub height: u32,
    pub points: Vec<[f32; 3]>,
    pub pose: CameraPose,
}

pub const INVALID_POINT: [f32; 3] = [f32::NAN; 3];

impl PointmapFrame {
    pub fn new(frame: usize, width: u32, height: u32, points: Vec<[f32; 3]>, pose: CameraPose) -> Result<Self, FrameError> {
        if points.len() != width as usize * height as usize {
            return Err(FrameError::GridSize { frame, width, height, got: points.len() });
        }
        Ok(Self { frame, width, height, points, pose })
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.points[idx].iter().all(|c| !c.is_nan())
    }

    pub fn point(&self, idx: usize) -> Option<Vec3> {
        let p = self.points[idx];
        self.is_valid(idx).then(|| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64))
    }

    pub fn valid_count(&self) -> usize {
        (0..self.points.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// Bitwise equality, treating NaN payloads as equal.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.frame == other.frame
            && self.width == other.width
            && self.height == other.height
            && self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

/// Instance label image (0 = background) with its class table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceMask {
    pub frame: usize,
    pub width: u32,
    pub height: u32,
    pub ids: Vec<u16>,
    pub classes: BTreeMap<u16, String>,
}

impl InstanceMask {
    pub fn new(frame: usize, width: u32, height: u32, ids: Vec<u16>, classes: BTreeMap<u16, String>) -> Result<Self, FrameError> {
        let m = Self { frame, width, height, ids, classes };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if self.ids.len() != self.width as usize * self.height as usize {
            return Err(FrameError::GridSize { frame: self.frame, width: self.width, height: self.height, got: self.ids.len() });
        }
        if self.classes.contains_key(&0) {
            return Err(FrameError::BackgroundInTable { frame: self.frame });
        }
        let present = self.present_ids();
        let unlisted: Vec<u16> = present.keys().copied().filter(|id| !self.classes.contains_key(id)).collect();
        if !unlisted.is_empty() {
            return Err(FrameError::UnlistedIds { frame: self.frame, ids: unlisted });
        }
        let absent: Vec<u16> = self.classes.keys().copied().filter(|id| !present.contains_key(id)).collect();
        if !absent.is_empty() {
            return Err(FrameError::AbsentIds { frame: self.frame, ids: absent });
        }
        Ok(())
    }

    /// Non-background ids with their pixel counts.
    pub fn present_ids(&self) -> BTreeMap<u16, usize> {
        let mut counts = BTreeMap::new();
        for &id in self.ids.iter().filter(|&&id| id != 0) {
            *counts.entry(id).or_insert(0) += 1;
        }
        counts
    }

    /// Row-major linear indices of the pixels carrying `id`, ascending.
    pub fn pixels_of(&self, id: u16) -> Vec<u32> {
        self.ids
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == id)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Removes `id` from the label image and the class table.
    pub fn erase(&mut self, id: u16) {
        for v in self.ids.iter_mut().filter(|v| **v == id) {
            *v = 0;
        }
        self.classes.remove(&id);
    }
}

/// The 3D points of one instance in one frame, with their source pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCluster {
    pub instance_id: u16,
    pub frame: usize,
    pub points: Vec<Vec3>,
    /// Row-major linear pixel indices, parallel to `points`.
    pub pixels: Vec<u32>,
    pub class: String,
}

impl PointCluster {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vec3>() / self.points.len() as f64)
    }
}

/// Intersection-over-union of two ascending pixel-index sets.
pub fn footprint_iou(a: &[u32], b: &[u32]) -> f64 {
    let inter = sorted_intersection(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Size of the intersection of two ascending index sets.
pub fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(ids: Vec<u16>, table: &[(u16, &str)]) -> Result<InstanceMask, FrameError> {
        let classes = table.iter().map(|(i, c)| (*i, c.to_string())).collect();
        InstanceMask::new(0, 2, 2, ids, classes)
    }

    #[test]
    fn class_table_must_cover_ids() {
        assert!(mask(vec![0, 1, 1, 2], &[(1, "zebra"), (2, "zebra")]).is_ok());
        assert!(matches!(mask(vec![0, 1, 1, 3], &[(1, "zebra")]), Err(FrameError::UnlistedIds { ids, .. }) if ids == vec![3]));
        assert!(matches!(mask(vec![0, 1, 1, 0], &[(1, "zebra"), (5, "x")]), Err(FrameError::AbsentIds { .. })));
    }

    #[test]
    fn iou_of_footprints() {
        assert_eq!(footprint_iou(&[1, 2, 3, 4], &[3, 4, 5, 6]), 2.0 / 6.0);
        assert_eq!(footprint_iou(&[], &[]), 0.0);
        assert_eq!(footprint_iou(&[1, 2], &[1, 2]), 1.0);
    }
}
