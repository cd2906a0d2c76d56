use super::RefineError;
use crate::geometry::{FaceId, FaceLabel, SemanticFaceMap};

/// Completes a face map from the faces labelled front, top and left; the
/// remaining labels go to the faces with anti-parallel normals.
pub fn infer_opposing_faces(front: FaceId, top: FaceId, left: FaceId) -> Result<SemanticFaceMap, RefineError> {
    let primary = [front, top, left];
    for i in 0..3 {
        for j in i + 1..3 {
            if primary[i].axis() == primary[j].axis() {
                return Err(RefineError::Contradiction(primary[i].as_str(), primary[j].as_str()));
            }
        }
    }
    let mut labels = [FaceLabel::Front; 6];
    for (face, label) in [(front, FaceLabel::Front), (top, FaceLabel::Top), (left, FaceLabel::Left)] {
        labels[face.index()] = label;
        labels[face.opposite().index()] = label.opposite();
    }
    Ok(SemanticFaceMap::new(labels).expect("opposite pairs assigned together"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_assignment() {
        let m = infer_opposing_faces(FaceId::PosX, FaceId::PosZ, FaceId::PosY).unwrap();
        assert_eq!(m, SemanticFaceMap::default());
        assert_eq!(m.label(FaceId::NegX), FaceLabel::Back);
        assert_eq!(m.label(FaceId::NegZ), FaceLabel::Bottom);
        assert_eq!(m.label(FaceId::NegY), FaceLabel::Right);
    }

    #[test]
    fn opposite_primaries_rejected() {
        assert!(matches!(infer_opposing_faces(FaceId::PosX, FaceId::NegX, FaceId::PosY), Err(RefineError::Contradiction(..))));
        assert!(infer_opposing_faces(FaceId::PosX, FaceId::PosY, FaceId::PosY).is_err());
    }

    #[test]
    fn every_valid_input_is_valid_map() {
        for f in FaceId::ALL {
            for t in FaceId::ALL {
                for l in FaceId::ALL {
                    if let Ok(m) = infer_opposing_faces(f, t, l) {
                        assert!(m.validate().is_ok());
                        assert_eq!(m.face(FaceLabel::Front), f);
                        assert_eq!(m.face(FaceLabel::Top), t);
                        assert_eq!(m.face(FaceLabel::Left), l);
                    }
                }
            }
        }
    }
}
