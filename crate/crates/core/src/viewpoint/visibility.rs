use serde::{Deserialize, Serialize};

use super::ViewError;
use crate::geometry::{FaceId, FaceLabel, OrientedBox, SemanticFaceMap, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceVisibility {
    pub label: FaceLabel,
    pub face: FaceId,
    /// Outward normal dotted with the unit vector towards the camera.
    pub dot: f64,
    /// `dot > 0`.
    pub visible: bool,
    /// `dot > threshold`.
    pub classified: bool,
}

/// Scores the five non-bottom faces, in [`FaceLabel::SCORED`] order.
pub fn face_visibility(b: &OrientedBox, faces: &SemanticFaceMap, camera: &Vec3, threshold: f64) -> Result<[FaceVisibility; 5], ViewError> {
    let v = (camera - b.center).try_normalize(1e-12).ok_or(ViewError::DegenerateView(b.frame))?;
    Ok(FaceLabel::SCORED.map(|label| {
        let face = faces.face(label);
        let dot = b.face_normal(face).dot(&v);
        FaceVisibility { label, face, dot, visible: dot > 0.0, classified: dot > threshold }
    }))
}
