use nalgebra::{Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::RefineError;
use crate::geometry::{OrientedBox, Rotation, SemanticFaceMap};
use crate::sceneio::{AnnotationEntry, TrackAnnotations};

/// Shortest-arc spherical interpolation; `alpha` 0 and 1 return the endpoints.
pub fn slerp(r1: &Rotation, r2: &Rotation, alpha: f64) -> Rotation {
    if alpha == 0.0 {
        return *r1;
    }
    if alpha == 1.0 {
        return *r2;
    }
    let q1 = r1.unit_quaternion().into_inner();
    let mut q2 = r2.unit_quaternion().into_inner();
    let mut dot = q1.dot(&q2);
    if dot < 0.0 {
        q2 = -q2;
        dot = -dot;
    }
    let q: Quaternion<f64> = if dot > 1.0 - 1e-12 {
        q1 * (1.0 - alpha) + q2 * alpha
    } else {
        let theta = dot.min(1.0).acos();
        let s = theta.sin();
        q1 * (((1.0 - alpha) * theta).sin() / s) + q2 * ((alpha * theta).sin() / s)
    };
    Rotation::from_unit_quaternion(UnitQuaternion::from_quaternion(q))
}

/// Linear centre and dims, spherical rotation, at fraction `alpha` from `b1`.
/// Identity and frame are taken from `b1`.
pub fn interpolate_alpha(b1: &OrientedBox, b2: &OrientedBox, alpha: f64) -> OrientedBox {
    if alpha == 0.0 {
        return *b1;
    }
    if alpha == 1.0 {
        return OrientedBox { track_id: b1.track_id, frame: b1.frame, ..*b2 };
    }
    OrientedBox {
        center: b1.center * (1.0 - alpha) + b2.center * alpha,
        dims: b1.dims * (1.0 - alpha) + b2.dims * alpha,
        rotation: slerp(&b1.rotation, &b2.rotation, alpha),
        track_id: b1.track_id,
        frame: b1.frame,
    }
}

/// Box at frame `t` between keyframe boxes `kf1` (at `kf1.frame`) and `kf2`.
pub fn interpolate_geometric(kf1: &OrientedBox, kf2: &OrientedBox, t: usize) -> Result<OrientedBox, RefineError> {
    let (t1, t2) = (kf1.frame, kf2.frame);
    if t1 >= t2 {
        return Err(RefineError::BadSpan { t1, t2 });
    }
    if t < t1 || t > t2 {
        return Err(RefineError::OutOfRange { t, t1, t2 });
    }
    let alpha = (t - t1) as f64 / (t2 - t1) as f64;
    Ok(OrientedBox { frame: t, ..interpolate_alpha(kf1, kf2, alpha) })
}

/// Face map of the temporally nearest keyframe; the earlier one wins a tie.
pub fn interpolate_semantic(keyframes: &[(usize, SemanticFaceMap)], t: usize) -> Result<SemanticFaceMap, RefineError> {
    keyframes
        .iter()
        .min_by_key(|(k, _)| (k.abs_diff(t), *k))
        .map(|(_, m)| *m)
        .ok_or(RefineError::NoKeyframes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationMode {
    /// Geometry between the two endpoint boxes, face labels from the nearest keyframe.
    Geometric,
    /// Face labels only; geometry untouched.
    Semantic,
}

/// Fills `(from, to)` of one track in place and returns the frames written.
///
/// Geometric mode writes boxes on every frame strictly between the endpoints
/// that is not itself a keyframe. Semantic mode relabels every annotated frame
/// in `[from, to]` from the keyframes of that span (endpoints count as
/// keyframes when they hold a face map).
pub fn interpolate_span(
    track_id: u32,
    track: &mut TrackAnnotations,
    from: usize,
    to: usize,
    mode: InterpolationMode,
) -> Result<Vec<usize>, RefineError> {
    if from >= to {
        return Err(RefineError::BadSpan { t1: from, t2: to });
    }
    let keyframes: Vec<(usize, SemanticFaceMap)> = track
        .frames
        .range(from..=to)
        .filter(|(t, e)| e.keyframe || **t == from || **t == to)
        .filter_map(|(t, e)| e.faces.map(|f| (*t, f)))
        .collect();
    let mut written = Vec::new();
    match mode {
        InterpolationMode::Geometric => {
            let b1 = track.frames.get(&from).ok_or(RefineError::Unannotated { track: track_id, frame: from })?.bbox;
            let b2 = track.frames.get(&to).ok_or(RefineError::Unannotated { track: track_id, frame: to })?.bbox;
            for t in from + 1..to {
                if track.frames.get(&t).is_some_and(|e| e.keyframe) {
                    continue;
                }
                let bbox = interpolate_geometric(&b1, &b2, t)?;
                let faces = if keyframes.is_empty() { None } else { Some(interpolate_semantic(&keyframes, t)?) };
                let entry = track.frames.entry(t).or_insert_with(|| AnnotationEntry::new(bbox));
                entry.bbox = bbox;
                if faces.is_some() {
                    entry.faces = faces;
                }
                entry.accepted = false;
                written.push(t);
            }
        }
        InterpolationMode::Semantic => {
            if keyframes.is_empty() {
                return Err(RefineError::NoKeyframes);
            }
            for (t, e) in track.frames.range_mut(from..=to) {
                if e.keyframe && e.faces.is_some() {
                    continue;
                }
                e.faces = Some(interpolate_semantic(&keyframes, *t)?);
                written.push(*t);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FaceId, FaceLabel, Vec3};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn bx(c: Vec3, d: Vec3, r: Rotation, frame: usize) -> OrientedBox {
        OrientedBox::new(c, d, r, 1, frame).unwrap()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let b1 = bx(Vec3::zeros(), Vec3::new(4.0, 2.0, 1.0), Rotation::identity(), 0);
        let b2 = bx(Vec3::new(2.0, 0.0, 0.0), Vec3::new(5.0, 2.0, 1.0), Rotation::from_yaw(std::f64::consts::FRAC_PI_2), 10);
        assert_eq!(interpolate_geometric(&b1, &b2, 0).unwrap(), b1);
        let end = interpolate_geometric(&b1, &b2, 10).unwrap();
        assert_eq!((end.center, end.dims, end.rotation), (b2.center, b2.dims, b2.rotation));
        let mid = interpolate_geometric(&b1, &b2, 5).unwrap();
        assert_eq!(mid.center, Vec3::new(1.0, 0.0, 0.0));
        assert!(mid.rotation.angle_to(&Rotation::from_yaw(std::f64::consts::FRAC_PI_4)) < 1e-9);
        assert!(matches!(interpolate_geometric(&b1, &b2, 11), Err(RefineError::OutOfRange { .. })));
        assert!(matches!(interpolate_geometric(&b2, &b1, 5), Err(RefineError::BadSpan { .. })));
    }

    #[test]
    fn slerp_takes_short_arc() {
        let r1 = Rotation::identity();
        let q = Rotation::from_yaw(0.2).unit_quaternion().into_inner();
        let r2 = Rotation::from_wxyz(-q.w, -q.i, -q.j, -q.k).unwrap();
        let mid = slerp(&r1, &r2, 0.5);
        assert!(mid.angle_to(&Rotation::from_yaw(0.1)) < 1e-12);
    }

    #[test]
    fn semantic_nearest_with_earlier_tie() {
        let a = SemanticFaceMap::default();
        let b = crate::refine::infer_opposing_faces(FaceId::NegX, FaceId::PosZ, FaceId::NegY).unwrap();
        let kfs = [(0, a), (100, b)];
        assert_eq!(interpolate_semantic(&kfs, 30).unwrap(), a);
        assert_eq!(interpolate_semantic(&kfs, 50).unwrap(), a);
        assert_eq!(interpolate_semantic(&kfs, 51).unwrap(), b);
        assert_eq!(interpolate_semantic(&kfs[1..], 3).unwrap(), b);
        assert_eq!(interpolate_semantic(&[], 3), Err(RefineError::NoKeyframes));
    }

    #[test]
    fn semantic_span_leaves_geometry() {
        let mut track = TrackAnnotations { class: "zebra".into(), frames: BTreeMap::new() };
        for t in 0..=10 {
            let mut e = AnnotationEntry::new(bx(Vec3::new(t as f64, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), Rotation::from_yaw(t as f64 * 0.1), t));
            if t == 0 || t == 10 {
                e.keyframe = true;
                e.faces = Some(SemanticFaceMap::default());
            }
            track.frames.insert(t, e);
        }
        let flipped = infer(FaceId::NegX);
        track.frames.get_mut(&10).unwrap().faces = Some(flipped);
        let before: Vec<OrientedBox> = track.frames.values().map(|e| e.bbox).collect();
        let written = interpolate_span(1, &mut track, 0, 10, InterpolationMode::Semantic).unwrap();
        assert_eq!(written, (1..10).collect::<Vec<_>>());
        let after: Vec<OrientedBox> = track.frames.values().map(|e| e.bbox).collect();
        assert_eq!(before, after);
        assert_eq!(track.frames[&5].faces.unwrap().label(FaceId::PosX), FaceLabel::Front);
        assert_eq!(track.frames[&6].faces.unwrap().label(FaceId::PosX), FaceLabel::Back);
    }

    fn infer(front: FaceId) -> SemanticFaceMap {
        crate::refine::infer_opposing_faces(front, FaceId::PosZ, FaceId::PosY).unwrap()
    }

    #[test]
    fn geometric_span_fills_gaps() {
        let mut track = TrackAnnotations { class: "zebra".into(), frames: BTreeMap::new() };
        let b1 = bx(Vec3::zeros(), Vec3::new(4.0, 2.0, 1.0), Rotation::identity(), 0);
        let b2 = bx(Vec3::new(8.0, 0.0, 0.0), Vec3::new(4.0, 2.0, 1.0), Rotation::from_yaw(1.0), 84);
        for b in [b1, b2] {
            let mut e = AnnotationEntry::new(b);
            e.keyframe = true;
            track.frames.insert(b.frame, e);
        }
        let written = interpolate_span(1, &mut track, 0, 84, InterpolationMode::Geometric).unwrap();
        assert_eq!(written.len(), 83);
        assert_eq!(track.frames[&42].bbox, interpolate_geometric(&b1, &b2, 42).unwrap());
    }

    fn rot() -> impl Strategy<Value = Rotation> {
        (prop::array::uniform3(-1.0f64..1.0), -3.1f64..3.1).prop_filter_map("axis", |(a, ang)| {
            let a = Vec3::from(a);
            (a.norm() > 0.1).then(|| Rotation::from_axis_angle(&a.normalize(), ang))
        })
    }

    proptest! {
        #[test]
        fn slerp_is_geodesic(r1 in rot(), r2 in rot(), alpha in 0.0f64..1.0) {
            let r = slerp(&r1, &r2, alpha);
            prop_assert!((r.unit_quaternion().norm() - 1.0).abs() < 1e-9);
            prop_assert!((r1.angle_to(&r) - alpha * r1.angle_to(&r2)).abs() < 1e-6);
        }

        #[test]
        fn time_reversal(r1 in rot(), r2 in rot(), alpha in 0.0f64..1.0, c in prop::array::uniform3(-5.0f64..5.0)) {
            let b1 = bx(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), r1, 0);
            let b2 = bx(Vec3::from(c), Vec3::new(3.0, 1.0, 2.0), r2, 0);
            let f = interpolate_alpha(&b1, &b2, alpha);
            let g = interpolate_alpha(&b2, &b1, 1.0 - alpha);
            prop_assert!((f.center - g.center).norm() < 1e-9);
            prop_assert!((f.dims - g.dims).norm() < 1e-9);
            prop_assert!(f.rotation.angle_to(&g.rotation) < 1e-6);
        }
    }
}
