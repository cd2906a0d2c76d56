//! Viewpoint analytics: per-face visibility and quality, exemplar selection,
//! ray-cast occlusion, coverage, diversity and grading.

mod coverage;
mod exemplars;
mod occlusion;
mod quality;
mod report;
mod visibility;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coverage::{coverage_and_grade, entropy, grade_for, CoverageSummary, Grade};
pub use exemplars::select_exemplars;
pub use occlusion::{effective_visibility, mask_overlap_2d, occlusion_fraction, rasterize_box_hull};
pub use quality::{quality_score, QualityScore};
pub use report::{build_report, CoverageReport, ExemplarPick, FilmstripEntry, ReportFrame, ReportScene};
pub use visibility::{face_visibility, FaceVisibility};

#[derive(Debug, Error, PartialEq)]
pub enum ViewError {
    #[error("camera coincides with the box centre at frame {0}")]
    DegenerateView(usize),
    #[error("no annotations for track {0}")]
    UnknownTrack(u32),
    #[error("no camera pose for frame {0}")]
    MissingPose(usize),
    #[error("track has no frames to report")]
    EmptyTrack,
    #[error("frames without a face map: {0:?}")]
    MissingFaces(Vec<usize>),
    #[error("invalid viewpoint parameter: {0}")]
    Param(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityWeights {
    /// Dot-product threshold for the binary visibility classification.
    pub visibility_threshold: f64,
    /// Minimum frame separation between exemplars.
    pub exemplar_min_separation: usize,
    pub exemplars_per_face: usize,
    /// Faces whose best quality stays below this are reported as never seen.
    pub never_seen_threshold: f64,
    /// Best quality needed for a face to count as a covered viewpoint.
    pub high_quality_threshold: f64,
    /// Mean effective visibility below this flags the track as hard to photograph.
    pub hard_to_photograph_threshold: f64,
    /// Samples per face side for occlusion rays.
    pub occlusion_grid: usize,
    /// Multiplier applied to the projected-area fraction before clamping.
    pub area_gain: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self {
            visibility_threshold: 0.1,
            exemplar_min_separation: 10,
            exemplars_per_face: 3,
            never_seen_threshold: 0.25,
            high_quality_threshold: 0.4,
            hard_to_photograph_threshold: 0.5,
            occlusion_grid: 8,
            area_gain: 20.0,
        }
    }
}

impl QualityWeights {
    pub fn validate(&self) -> Result<(), ViewError> {
        let unit = [
            ("visibility_threshold", self.visibility_threshold),
            ("never_seen_threshold", self.never_seen_threshold),
            ("high_quality_threshold", self.high_quality_threshold),
            ("hard_to_photograph_threshold", self.hard_to_photograph_threshold),
        ];
        if let Some((name, v)) = unit.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
            return Err(ViewError::Param(format!("{name} = {v} outside [0, 1]")));
        }
        if self.occlusion_grid < 2 {
            return Err(ViewError::Param(format!("occlusion_grid = {} must be at least 2", self.occlusion_grid)));
        }
        if self.exemplar_min_separation < 1 || self.exemplars_per_face < 1 {
            return Err(ViewError::Param("exemplar separation and count must be at least 1".into()));
        }
        if self.area_gain.is_nan() || self.area_gain <= 0.0 {
            return Err(ViewError::Param(format!("area_gain = {} must be positive", self.area_gain)));
        }
        Ok(())
    }
}
