use nalgebra::Vector2;

use crate::frame::sorted_intersection;
use crate::geometry::{CameraPose, FaceId, Intrinsics, OrientedBox, Vec3};
use crate::raycast::segment_blocked;

/// Percentage of an `n × n` grid of face samples hidden from the camera by
/// any box in `others`. Samples sit at cell centres.
pub fn occlusion_fraction(target: &OrientedBox, face: FaceId, others: &[OrientedBox], camera: &Vec3, n: usize) -> f64 {
    if others.is_empty() || n == 0 {
        return 0.0;
    }
    let coord = |i: usize| -1.0 + (2 * i + 1) as f64 / n as f64;
    let mut blocked = 0usize;
    for i in 0..n {
        for j in 0..n {
            let sample = target.face_point(face, coord(i), coord(j));
            let dir = sample - camera;
            if others.iter().any(|o| segment_blocked(camera, &dir, o)) {
                blocked += 1;
            }
        }
    }
    100.0 * blocked as f64 / (n * n) as f64
}

pub fn effective_visibility(v: f64, occlusion_pct: f64) -> f64 {
    v * (1.0 - occlusion_pct / 100.0)
}

/// Share of the farther instance's pixels also covered by the nearer one, in
/// percent. Both slices are ascending pixel indices. `None` when the farther
/// mask is empty.
pub fn mask_overlap_2d(farther: &[u32], nearer: &[u32]) -> Option<f64> {
    if farther.is_empty() {
        return None;
    }
    Some(100.0 * sorted_intersection(farther, nearer) as f64 / farther.len() as f64)
}

fn cross(o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
fn convex_hull(mut pts: Vec<Vector2<f64>>) -> Vec<Vector2<f64>> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Ascending indices of the pixels whose centres fall inside the convex hull
/// of the projected box corners. Empty unless every corner is in front of the
/// camera.
pub fn rasterize_box_hull(b: &OrientedBox, pose: &CameraPose, k: &Intrinsics) -> Vec<u32> {
    let projected: Option<Vec<Vector2<f64>>> = b.corners().iter().map(|c| k.project_camera(&pose.to_camera(c))).collect();
    let Some(projected) = projected else { return Vec::new() };
    let hull = convex_hull(projected);
    if hull.len() < 3 {
        return Vec::new();
    }
    let (w, h) = (k.width as i64, k.height as i64);
    let lo = hull.iter().fold(Vector2::repeat(f64::INFINITY), |m, p| m.inf(p));
    let hi = hull.iter().fold(Vector2::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
    let (u0, u1) = ((lo.x - 0.5).floor().max(0.0) as i64, ((hi.x - 0.5).ceil() as i64).min(w - 1));
    let (v0, v1) = ((lo.y - 0.5).floor().max(0.0) as i64, ((hi.y - 0.5).ceil() as i64).min(h - 1));
    let mut out = Vec::new();
    for v in v0..=v1 {
        for u in u0..=u1 {
            let c = Vector2::new(u as f64 + 0.5, v as f64 + 0.5);
            let inside = (0..hull.len()).all(|i| cross(&hull[i], &hull[(i + 1) % hull.len()], &c) >= 0.0);
            if inside {
                out.push((v * w + u) as u32);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;
    use proptest::prelude::*;

    fn target() -> OrientedBox {
        OrientedBox::new(Vec3::zeros(), Vec3::new(2.0, 2.0, 2.0), Rotation::identity(), 1, 0).unwrap()
    }

    #[test]
    fn no_occluders_and_full_wall() {
        let cam = Vec3::new(10.0, 0.0, 0.0);
        assert_eq!(occlusion_fraction(&target(), FaceId::PosX, &[], &cam, 8), 0.0);
        let wall = OrientedBox::new(Vec3::new(5.0, 0.0, 0.0), Vec3::new(0.5, 10.0, 10.0), Rotation::identity(), 2, 0).unwrap();
        assert_eq!(occlusion_fraction(&target(), FaceId::PosX, &[wall], &cam, 8), 100.0);
    }

    #[test]
    fn half_covering_occluder() {
        // Occluder covers y > 0 half of the +x face, as seen from far away on the +x axis.
        let cam = Vec3::new(1000.0, 0.0, 0.0);
        let half = OrientedBox::new(Vec3::new(5.0, 2.0, 0.0), Vec3::new(0.5, 4.0, 10.0), Rotation::identity(), 2, 0).unwrap();
        assert_eq!(occlusion_fraction(&target(), FaceId::PosX, &[half], &cam, 8), 50.0);
    }

    #[test]
    fn box_behind_face_does_not_occlude() {
        let cam = Vec3::new(10.0, 0.0, 0.0);
        let behind = OrientedBox::new(Vec3::new(-5.0, 0.0, 0.0), Vec3::new(1.0, 10.0, 10.0), Rotation::identity(), 2, 0).unwrap();
        assert_eq!(occlusion_fraction(&target(), FaceId::PosX, &[behind], &cam, 8), 0.0);
    }

    #[test]
    fn hull_raster_of_head_on_square() {
        // Camera frame = world; a 2x2 face at depth 10 spans 60 px around the principal point.
        let k = Intrinsics::new(300.0, 300.0, 160.0, 120.0, 320, 240).unwrap();
        let pose = CameraPose::new(Rotation::identity(), Vec3::zeros(), 0);
        let b = OrientedBox::new(Vec3::new(0.0, 0.0, 10.0), Vec3::new(2.0, 2.0, 0.001), Rotation::identity(), 1, 0).unwrap();
        let px = rasterize_box_hull(&b, &pose, &k);
        // Hull spans roughly [130, 190] x [90, 150]: 60 x 60 pixel centres.
        assert!((px.len() as i64 - 3600).abs() <= 121, "{}", px.len());
        assert!(px.windows(2).all(|w| w[0] < w[1]));
        assert!(px.contains(&(120 * 320 + 160)));
        let behind = OrientedBox::new(Vec3::new(0.0, 0.0, -10.0), Vec3::new(2.0, 2.0, 2.0), Rotation::identity(), 1, 0).unwrap();
        assert!(rasterize_box_hull(&behind, &pose, &k).is_empty());
    }

    #[test]
    fn effective_visibility_arithmetic() {
        assert!((effective_visibility(0.8, 50.0) - 0.4).abs() < 1e-15);
        assert_eq!(effective_visibility(0.7, 0.0), 0.7);
        assert_eq!(effective_visibility(0.7, 100.0), 0.0);
    }

    #[test]
    fn overlap_percentages() {
        assert_eq!(mask_overlap_2d(&[1, 2, 3], &[4, 5]), Some(0.0));
        assert_eq!(mask_overlap_2d(&[1, 2, 3], &[1, 2, 3]), Some(100.0));
        let farther: Vec<u32> = (0..10).collect();
        assert_eq!(mask_overlap_2d(&farther, &[6, 7, 8, 9, 20]), Some(40.0));
        assert_eq!(mask_overlap_2d(&[], &[1]), None);
    }

    fn arb_box() -> impl Strategy<Value = OrientedBox> {
        ((-6.0f64..6.0, -6.0f64..6.0, 0.0f64..3.0), (0.3f64..3.0, 0.3f64..3.0, 0.3f64..3.0), -3.2f64..3.2).prop_map(|(c, d, yaw)| {
            OrientedBox::new(Vec3::new(c.0, c.1, c.2), Vec3::new(d.0, d.1, d.2), Rotation::from_yaw(yaw), 2, 0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn adding_occluders_never_lowers_occlusion(extra in prop::collection::vec(arb_box(), 1..4), base in prop::collection::vec(arb_box(), 0..3)) {
            let cam = Vec3::new(15.0, 3.0, 12.0);
            let t = OrientedBox::new(Vec3::new(-8.0, 0.0, 1.0), Vec3::new(2.0, 1.0, 1.0), Rotation::identity(), 1, 0).unwrap();
            for face in FaceId::ALL {
                let before = occlusion_fraction(&t, face, &base, &cam, 6);
                let mut more = base.clone();
                more.extend(extra.iter().copied());
                let after = occlusion_fraction(&t, face, &more, &cam, 6);
                prop_assert!(after >= before);
                prop_assert!((0.0..=100.0).contains(&after));
            }
        }

        #[test]
        fn effective_never_exceeds_visibility(v in 0.0f64..=1.0, o in 0.0f64..=100.0) {
            let e = effective_visibility(v, o);
            prop_assert!(e <= v && e >= 0.0);
            prop_assert_eq!(e == v, o == 0.0 || v == 0.0);
        }
    }
}
