use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraPose, FaceId, Intrinsics, OrientedBox, Vec3};

/// Smallest camera depth kept when clipping face polygons.
const NEAR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub q: f64,
    pub v: f64,
    pub a: f64,
    pub d: f64,
    pub r: f64,
    /// The face lies entirely behind the camera.
    pub behind: bool,
}

/// Clips a camera-frame polygon to `z >= NEAR`.
fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= NEAR, b.z >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR - a.z) / (b.z - a.z);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Shoelace area and area centroid; falls back to the vertex mean when the
/// polygon has no area.
fn area_centroid(poly: &[Vector2<f64>]) -> (f64, Vector2<f64>) {
    let n = poly.len();
    let mut a2 = 0.0;
    let mut c = Vector2::zeros();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        c += (p + q) * cross;
    }
    if a2.abs() < 1e-12 {
        let mean = poly.iter().sum::<Vector2<f64>>() / n as f64;
        return (0.0, mean);
    }
    (a2.abs() / 2.0, c / (3.0 * a2))
}

/// Quality of one face seen from `pose`: mean of head-on-ness, projected
/// area, centrality and aspect ratio. Zero when the face is not raw-visible.
pub fn quality_score(b: &OrientedBox, face: FaceId, pose: &CameraPose, k: &Intrinsics, area_gain: f64) -> QualityScore {
    let Some(view) = (pose.centre() - b.center).try_normalize(1e-12) else { return QualityScore::default() };
    let dot = b.face_normal(face).dot(&view);
    if dot <= 0.0 {
        return QualityScore::default();
    }
    let cam: Vec<Vec3> = b.face_corners(face).iter().map(|p| pose.to_camera(p)).collect();
    let clipped = clip_near(&cam);
    if clipped.len() < 3 {
        return QualityScore { behind: true, ..Default::default() };
    }
    let proj: Vec<Vector2<f64>> = clipped.iter().map(|p| k.project_camera(p).expect("clipped to positive depth")).collect();
    let (area, centroid) = area_centroid(&proj);
    let (w, h) = (k.width as f64, k.height as f64);
    let v = dot.abs();
    let a = (area / (w * h) * area_gain).clamp(0.0, 1.0);
    let half_diag = 0.5 * (w * w + h * h).sqrt();
    let d = (1.0 - (centroid - Vector2::new(w / 2.0, h / 2.0)).norm() / half_diag).clamp(0.0, 1.0);
    let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
    for p in &proj {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let (bw, bh) = (hi.x - lo.x, hi.y - lo.y);
    let r = if bw.max(bh) > 0.0 { bw.min(bh) / bw.max(bh) } else { 0.0 };
    QualityScore { q: (v + a + d + r) / 4.0, v, a, d, r, behind: false }
}
