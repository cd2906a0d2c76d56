//! KITTI tracking-style label lines.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;

use super::SceneIoError;
use crate::geometry::{CameraPose, Intrinsics, OrientedBox};

/// One label line, fields in KITTI tracking order.
#[derive(Clone, Debug, PartialEq)]
pub struct KittiTrackingLine {
    pub frame: usize,
    pub track_id: u32,
    pub class: String,
    pub truncated: f64,
    pub occluded: u8,
    pub alpha: f64,
    /// left, top, right, bottom in pixels.
    pub bbox: [f64; 4],
    /// h, w, l.
    pub dimensions: [f64; 3],
    /// Box centre in camera coordinates.
    pub location: [f64; 3],
    pub rotation_y: f64,
}

impl fmt::Display for KittiTrackingLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {:.6} {} {:.6}", self.frame, self.track_id, self.class, self.truncated, self.occluded, self.alpha)?;
        for v in self.bbox.iter().chain(&self.dimensions).chain(&self.location) {
            write!(f, " {v:.6}")?;
        }
        write!(f, " {:.6}", self.rotation_y)
    }
}

impl FromStr for KittiTrackingLine {
    type Err = SceneIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if fields.len() != 17 {
            return Err(SceneIoError::Validation(format!("expected 17 KITTI fields, found {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64, SceneIoError> {
            fields[i].parse::<f64>().map_err(|_| SceneIoError::Validation(format!("field {i}: `{}` is not a number", fields[i])))
        };
        let int = |i: usize| -> Result<u64, SceneIoError> {
            fields[i].parse::<u64>().map_err(|_| SceneIoError::Validation(format!("field {i}: `{}` is not an integer", fields[i])))
        };
        let line = KittiTrackingLine {
            frame: int(0)? as usize,
            track_id: u32::try_from(int(1)?).map_err(|_| SceneIoError::Validation("track id out of range".into()))?,
            class: fields[2].to_string(),
            truncated: num(3)?,
            occluded: u8::try_from(int(4)?).map_err(|_| SceneIoError::Validation("occluded out of range".into()))?,
            alpha: num(5)?,
            bbox: [num(6)?, num(7)?, num(8)?, num(9)?],
            dimensions: [num(10)?, num(11)?, num(12)?],
            location: [num(13)?, num(14)?, num(15)?],
            rotation_y: num(16)?,
        };
        line.validate()?;
        Ok(line)
    }
}

impl KittiTrackingLine {
    pub fn validate(&self) -> Result<(), SceneIoError> {
        let [l, t, r, b] = self.bbox;
        if !(l <= r && t <= b) {
            return Err(SceneIoError::Validation(format!("bbox {:?} is not ordered", self.bbox)));
        }
        if !self.dimensions.iter().all(|d| *d > 0.0) {
            return Err(SceneIoError::Validation(format!("dimensions {:?} must be positive", self.dimensions)));
        }
        Ok(())
    }

    /// Parses a whole label file; blank lines are ignored.
    pub fn parse_all(text: &str) -> Result<Vec<Self>, SceneIoError> {
        text.lines().filter(|l| !l.trim().is_empty()).map(str::parse).collect()
    }
}

#[derive(Clone, Debug)]
pub struct KittiInput {
    pub bbox: OrientedBox,
    pub class: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KittiExport {
    pub lines: Vec<KittiTrackingLine>,
    /// Boxes left out because every corner lies behind the camera.
    pub omitted: usize,
}

impl KittiExport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(&l.to_string());
            s.push('\n');
        }
        s
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    if w <= -std::f64::consts::PI {
        w + std::f64::consts::TAU
    } else {
        w
    }
}

/// Converts boxes to label lines. `poses` is indexed by frame number.
pub fn export_kitti(entries: &[KittiInput], poses: &[CameraPose], k: &Intrinsics) -> Result<KittiExport, SceneIoError> {
    let mut out = KittiExport::default();
    for e in entries {
        let b = &e.bbox;
        let pose = poses
            .get(b.frame)
            .ok_or_else(|| SceneIoError::Validation(format!("no pose for frame {} (track {})", b.frame, b.track_id)))?;
        let projected: Vec<Vector2<f64>> = b.corners().iter().filter_map(|c| k.project_camera(&pose.to_camera(c))).collect();
        if projected.is_empty() {
            out.omitted += 1;
            continue;
        }
        let (mut l, mut t, mut r, mut btm) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &projected {
            l = l.min(p.x);
            t = t.min(p.y);
            r = r.max(p.x);
            btm = btm.max(p.y);
        }
        let full_area = (r - l) * (btm - t);
        let (w, h) = (k.width as f64, k.height as f64);
        let cl = [l.clamp(0.0, w), t.clamp(0.0, h), r.clamp(0.0, w), btm.clamp(0.0, h)];
        let clipped_area = (cl[2] - cl[0]) * (cl[3] - cl[1]);
        let truncated = if full_area > 0.0 { (1.0 - clipped_area / full_area).clamp(0.0, 1.0) } else { 0.0 };

        let centre = pose.to_camera(&b.center);
        let front = pose.rotation.inverse_rotate(&b.axis(0));
        let rotation_y = front.x.atan2(front.z);
        let alpha = wrap_angle(rotation_y - centre.x.atan2(centre.z));
        out.lines.push(KittiTrackingLine {
            frame: b.frame,
            track_id: b.track_id,
            class: e.class.replace(char::is_whitespace, "_"),
            truncated,
            occluded: 0,
            alpha,
            bbox: cl,
            dimensions: [b.dims.z, b.dims.y, b.dims.x],
            location: [centre.x, centre.y, centre.z],
            rotation_y,
        });
    }
    Ok(out)
}
