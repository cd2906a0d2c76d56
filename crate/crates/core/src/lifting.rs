//! Mask lifting: gather the pointmap pixels of one instance into a 3D cluster,
//! then drop distance outliers with a Tukey fence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::frame::{InstanceMask, PointCluster, PointmapFrame};

#[derive(Debug, Error, PartialEq)]
pub enum LiftError {
    #[error("instance {id} is not present in mask of frame {frame}")]
    EmptyInstance { id: u16, frame: usize },
    #[error("pointmap {pointmap}x{ph} and mask {mask}x{mh} differ in size", pointmap = .sizes.0, ph = .sizes.1, mask = .sizes.2, mh = .sizes.3)]
    SizeMismatch { sizes: (u32, u32, u32, u32) },
    #[error("pointmap frame {pointmap} paired with mask frame {mask}")]
    FrameMismatch { pointmap: usize, mask: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiftParams {
    /// Fence factor applied to the interquartile range on both sides.
    pub iqr_factor: f64,
    /// Clusters smaller than this after filtering are not reported as detections.
    pub min_points: usize,
}

impl Default for LiftParams {
    fn default() -> Self {
        Self { iqr_factor: 1.5, min_points: 4 }
    }
}

fn check_pair(frame: &PointmapFrame, mask: &InstanceMask) -> Result<(), LiftError> {
    if frame.width != mask.width || frame.height != mask.height {
        return Err(LiftError::SizeMismatch { sizes: (frame.width, frame.height, mask.width, mask.height) });
    }
    if frame.frame != mask.frame {
        return Err(LiftError::FrameMismatch { pointmap: frame.frame, mask: mask.frame });
    }
    Ok(())
}

/// Collects every valid pointmap pixel labelled `id`. A present instance whose
/// pixels are all invalid yields an empty cluster.
pub fn lift_mask(frame: &PointmapFrame, mask: &InstanceMask, id: u16) -> Result<PointCluster, LiftError> {
    check_pair(frame, mask)?;
    let class = match mask.classes.get(&id) {
        Some(c) if id != 0 => c.clone(),
        _ => return Err(LiftError::EmptyInstance { id, frame: mask.frame }),
    };
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for (idx, &m) in mask.ids.iter().enumerate() {
        if m == id {
            if let Some(p) = frame.point(idx) {
                points.push(p);
                pixels.push(idx as u32);
            }
        }
    }
    if pixels.is_empty() && !mask.ids.contains(&id) {
        return Err(LiftError::EmptyInstance { id, frame: mask.frame });
    }
    Ok(PointCluster { instance_id: id, frame: mask.frame, points, pixels, class })
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Flags values inside `[Q1 - factor*IQR, Q3 + factor*IQR]`.
pub fn tukey_keep(values: &[f64], factor: f64) -> Vec<bool> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - factor * iqr, q3 + factor * iqr);
    values.iter().map(|&v| v >= lo && v <= hi).collect()
}

/// Keeps the points whose distance to the input centroid lies within
/// `[Q1 - factor*IQR, Q3 + factor*IQR]`. Clusters with fewer than four points
/// come back unchanged.
pub fn filter_outliers_iqr(cluster: &PointCluster, factor: f64) -> PointCluster {
    let Some(c) = cluster.centroid() else { return cluster.clone() };
    if cluster.len() < 4 {
        return cluster.clone();
    }
    let d: Vec<f64> = cluster.points.iter().map(|p| (p - c).norm()).collect();
    let keep = tukey_keep(&d, factor);
    let mut out = PointCluster { points: Vec::new(), pixels: Vec::new(), ..cluster.clone() };
    for (i, _) in keep.iter().enumerate().filter(|(_, k)| **k) {
        out.points.push(cluster.points[i]);
        out.pixels.push(cluster.pixels[i]);
    }
    out
}

/// Lifts and filters every instance of one frame, in ascending id order.
/// Clusters below `params.min_points` are dropped.
pub fn lift_frame(frame: &PointmapFrame, mask: &InstanceMask, params: &LiftParams) -> Result<Vec<PointCluster>, LiftError> {
    check_pair(frame, mask)?;
    let mut out = Vec::new();
    for &id in mask.present_ids().keys() {
        let raw = lift_mask(frame, mask, id)?;
        let filtered = filter_outliers_iqr(&raw, params.iqr_factor);
        if filtered.len() >= params.min_points {
            out.push(filtered);
        }
    }
    Ok(out)
}

/// Lifts a whole sequence; `pairs[i]` is frame `i`.
pub fn lift_sequence(
    pairs: &[(&PointmapFrame, &InstanceMask)],
    params: &LiftParams,
    exec: Execution,
) -> Result<Vec<Vec<PointCluster>>, LiftError> {
    exec.map(pairs, |(f, m)| lift_frame(f, m, params)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CameraPose, Rotation, Vec3};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn pose() -> CameraPose {
        CameraPose::new(Rotation::identity(), Vec3::zeros(), 0)
    }

    fn cluster_from(points: Vec<Vec3>) -> PointCluster {
        let pixels = (0..points.len() as u32).collect();
        PointCluster { instance_id: 1, frame: 0, points, pixels, class: "zebra".into() }
    }

    #[test]
    fn ten_pixel_mask_lifts_ten_points() {
        let (w, h) = (5u32, 4u32);
        let points: Vec<[f32; 3]> = (0..20).map(|i| [i as f32, 0.0, 1.0]).collect();
        let frame = PointmapFrame::new(0, w, h, points, pose()).unwrap();
        let ids: Vec<u16> = (0..20).map(|i| if i % 2 == 0 { 1 } else { 0 }).collect();
        let mask = InstanceMask::new(0, w, h, ids, BTreeMap::from([(1, "zebra".to_string())])).unwrap();
        let c = lift_mask(&frame, &mask, 1).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c.pixels, (0..20).step_by(2).collect::<Vec<u32>>());
        for (p, &px) in c.points.iter().zip(&c.pixels) {
            assert_eq!(p.x, px as f64);
        }
        assert_eq!(c.class, "zebra");
    }

    #[test]
    fn absent_id_is_an_error() {
        let frame = PointmapFrame::new(0, 2, 2, vec![[0.0; 3]; 4], pose()).unwrap();
        let mask = InstanceMask::new(0, 2, 2, vec![1, 1, 0, 0], BTreeMap::from([(1, "zebra".to_string())])).unwrap();
        assert_eq!(lift_mask(&frame, &mask, 3), Err(LiftError::EmptyInstance { id: 3, frame: 0 }));
    }

    #[test]
    fn invalid_pixels_give_empty_cluster() {
        let frame = PointmapFrame::new(0, 2, 2, vec![crate::frame::INVALID_POINT; 4], pose()).unwrap();
        let mask = InstanceMask::new(0, 2, 2, vec![1, 1, 0, 0], BTreeMap::from([(1, "zebra".to_string())])).unwrap();
        let c = lift_mask(&frame, &mask, 1).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn quartiles_match_hand_computation() {
        let s = [1.0, 2.0, 3.0, 4.0, 100.0];
        assert_eq!(quantile_sorted(&s, 0.25), 2.0);
        assert_eq!(quantile_sorted(&s, 0.75), 4.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
    }

    #[test]
    fn fence_on_hand_distances() {
        assert_eq!(tukey_keep(&[1.0, 2.0, 3.0, 4.0, 100.0], 1.5), vec![true, true, true, true, false]);
        // Lower fence: Q1 = 10, Q3 = 10.5, bound 9.25.
        assert_eq!(tukey_keep(&[0.0, 10.0, 10.0, 10.5, 10.5], 1.5), vec![false, true, true, true, true]);
    }

    #[test]
    fn far_outlier_removed() {
        let mut pts: Vec<Vec3> = (0..20).map(|i| Vec3::new((i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1, 0.0)).collect();
        pts.push(Vec3::new(0.0, 0.0, 100.0));
        let c = cluster_from(pts);
        let out = filter_outliers_iqr(&c, 1.5);
        assert_eq!(out.len(), 20);
        assert!(out.points.iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn identical_points_all_kept_and_small_unchanged() {
        let c = cluster_from(vec![Vec3::new(1.0, 2.0, 3.0); 6]);
        assert_eq!(filter_outliers_iqr(&c, 1.5).len(), 6);
        let small = cluster_from(vec![Vec3::zeros(), Vec3::x(), Vec3::new(50.0, 0.0, 0.0)]);
        assert_eq!(filter_outliers_iqr(&small, 1.5), small);
    }

    proptest! {
        #[test]
        fn filter_is_order_preserving_subset(raw in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 0..60)) {
            let c = cluster_from(raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect());
            let out = filter_outliers_iqr(&c, 1.5);
            prop_assert!(out.len() <= c.len());
            let mut j = 0;
            for px in &out.pixels {
                while c.pixels[j] != *px { j += 1; }
                prop_assert_eq!(c.points[j], out.points[out.pixels.iter().position(|q| q == px).unwrap()]);
            }
        }
    }
}
