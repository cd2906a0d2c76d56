use serde::{Deserialize, Serialize};

use super::RefineError;
use crate::geometry::{OrientedBox, Vec3};
use crate::sceneio::{AnnotationEntry, TrackAnnotations};

/// Length : width : height ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionConstraint {
    pub ratios: [f64; 3],
}

impl ProportionConstraint {
    pub fn new(l: f64, w: f64, h: f64) -> Result<Self, RefineError> {
        let c = Self { ratios: [l, w, h] };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        if self.ratios.iter().all(|r| r.is_finite() && *r > 0.0) {
            Ok(())
        } else {
            Err(RefineError::Param(format!("proportion ratios {:?} must be positive", self.ratios)))
        }
    }
}

/// Replaces dims with `s * ratios`, `s` chosen to keep the volume.
pub fn apply_proportions(b: &OrientedBox, c: &ProportionConstraint) -> Result<OrientedBox, RefineError> {
    c.validate()?;
    let [l, w, h] = c.ratios;
    let s = (b.volume() / (l * w * h)).cbrt();
    Ok(OrientedBox { dims: Vec3::new(l, w, h) * s, ..*b })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PropagateMode {
    /// Copy the whole box of `source` onto `target`.
    CopyAdjacent { source: usize, target: usize },
    /// Copy dims and rotation of `source` onto every annotated frame, keeping centres.
    DimsAndRotationAllFrames { source: usize },
}

/// Applies `mode` to one track and returns the frames written.
pub fn propagate(track_id: u32, track: &mut TrackAnnotations, mode: PropagateMode) -> Result<Vec<usize>, RefineError> {
    let source_frame = match mode {
        PropagateMode::CopyAdjacent { source, .. } | PropagateMode::DimsAndRotationAllFrames { source } => source,
    };
    let src = track.frames.get(&source_frame).ok_or(RefineError::Unannotated { track: track_id, frame: source_frame })?.bbox;
    match mode {
        PropagateMode::CopyAdjacent { target, .. } => {
            let bbox = OrientedBox { frame: target, track_id, ..src };
            let entry = track.frames.entry(target).or_insert_with(|| AnnotationEntry::new(bbox));
            entry.bbox = bbox;
            entry.accepted = false;
            Ok(vec![target])
        }
        PropagateMode::DimsAndRotationAllFrames { .. } => {
            let mut written = Vec::new();
            for (&t, e) in track.frames.iter_mut() {
                if t == source_frame {
                    continue;
                }
                e.bbox.dims = src.dims;
                e.bbox.rotation = src.rotation;
                written.push(t);
            }
            Ok(written)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use crate::refine::{interpolate_geometric, InterpolationMode};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn bx(c: f64, frame: usize, yaw: f64, l: f64) -> OrientedBox {
        OrientedBox::new(Vec3::new(c, 0.0, 0.0), Vec3::new(l, 2.0, 1.0), Rotation::from_yaw(yaw), 1, frame).unwrap()
    }

    #[test]
    fn proportion_examples() {
        let b = bx(0.0, 0, 0.0, 4.0);
        assert_eq!(apply_proportions(&b, &ProportionConstraint::new(4.0, 2.0, 1.0).unwrap()).unwrap().dims, b.dims);
        let unit = OrientedBox::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), Rotation::identity(), 1, 0).unwrap();
        let d = apply_proportions(&unit, &ProportionConstraint::new(2.0, 1.0, 1.0).unwrap()).unwrap().dims;
        let expect = Vec3::new(2f64.powf(2.0 / 3.0), 2f64.powf(-1.0 / 3.0), 2f64.powf(-1.0 / 3.0));
        assert!((d - expect).norm() < 1e-12);
        assert!(ProportionConstraint::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn copy_adjacent() {
        let mut t = TrackAnnotations { class: "zebra".into(), frames: BTreeMap::from([(41, AnnotationEntry::new(bx(3.0, 41, 0.2, 4.0)))]) };
        propagate(1, &mut t, PropagateMode::CopyAdjacent { source: 41, target: 42 }).unwrap();
        let (a, b) = (t.frames[&41].bbox, t.frames[&42].bbox);
        assert_eq!((a.center, a.dims, a.rotation), (b.center, b.dims, b.rotation));
        assert_eq!(b.frame, 42);
        assert!(matches!(propagate(1, &mut t, PropagateMode::CopyAdjacent { source: 7, target: 8 }), Err(RefineError::Unannotated { .. })));
    }

    #[test]
    fn dims_propagation_then_interpolation() {
        let mut t = TrackAnnotations { class: "zebra".into(), frames: BTreeMap::new() };
        for f in 0..10 {
            t.frames.insert(f, AnnotationEntry::new(bx(f as f64, f, 0.1 * f as f64, 3.0 + f as f64 * 0.1)));
        }
        let centres: Vec<Vec3> = t.frames.values().map(|e| e.bbox.center).collect();
        propagate(1, &mut t, PropagateMode::DimsAndRotationAllFrames { source: 4 }).unwrap();
        let src = t.frames[&4].bbox;
        for (e, c) in t.frames.values().zip(&centres) {
            assert_eq!(e.bbox.dims, src.dims);
            assert_eq!(e.bbox.center, *c);
        }
        let (b0, b9) = (t.frames[&0].bbox, t.frames[&9].bbox);
        for f in 0..=9 {
            assert!((interpolate_geometric(&b0, &b9, f).unwrap().dims - src.dims).norm() < 1e-12);
        }
        t.frames.get_mut(&0).unwrap().keyframe = true;
        t.frames.get_mut(&9).unwrap().keyframe = true;
        crate::refine::interpolate_span(1, &mut t, 0, 9, InterpolationMode::Geometric).unwrap();
        assert!(t.frames.values().all(|e| (e.bbox.dims - src.dims).norm() < 1e-12));
    }

    proptest! {
        #[test]
        fn proportions_hold(l in 0.1f64..10.0, w in 0.1f64..10.0, h in 0.1f64..10.0, rl in 0.1f64..5.0, rw in 0.1f64..5.0, rh in 0.1f64..5.0) {
            let b = OrientedBox::new(Vec3::zeros(), Vec3::new(l, w, h), Rotation::identity(), 1, 0).unwrap();
            let out = apply_proportions(&b, &ProportionConstraint::new(rl, rw, rh).unwrap()).unwrap();
            prop_assert!((out.dims.x / out.dims.y - rl / rw).abs() <= 1e-9 * (rl / rw).max(1.0));
            prop_assert!((out.dims.y / out.dims.z - rw / rh).abs() <= 1e-9 * (rw / rh).max(1.0));
            prop_assert!((out.volume() - b.volume()).abs() <= 1e-9 * b.volume());
        }
    }
}
