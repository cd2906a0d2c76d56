//! Keyframe refinement: geometric and semantic interpolation, face-label
//! completion, ground snapping, proportion constraints and propagation.

mod faces;
mod interp;
mod propagate;
mod snap;

use thiserror::Error;

pub use faces::infer_opposing_faces;
pub use interp::{interpolate_alpha, interpolate_geometric, interpolate_semantic, interpolate_span, slerp, InterpolationMode};
pub use propagate::{apply_proportions, propagate, ProportionConstraint, PropagateMode};
pub use snap::{gather_neighbourhood, snap_to_ground, SnapContext, SnapMethod};

#[derive(Debug, Error, PartialEq)]
pub enum RefineError {
    #[error("time {t} outside keyframe span [{t1}, {t2}]")]
    OutOfRange { t: usize, t1: usize, t2: usize },
    #[error("keyframes must satisfy t1 < t2, got {t1} and {t2}")]
    BadSpan { t1: usize, t2: usize },
    #[error("no keyframe with a face map available")]
    NoKeyframes,
    #[error("faces {0} and {1} are opposite and cannot both carry primary labels")]
    Contradiction(&'static str, &'static str),
    #[error("snap needs at least {needed} support points, got {got}")]
    SnapSupport { needed: usize, got: usize },
    #[error("track {track} has no box at frame {frame}")]
    Unannotated { track: u32, frame: usize },
    #[error("unknown track {0}")]
    UnknownTrack(u32),
    #[error("invalid parameter: {0}")]
    Param(String),
}
