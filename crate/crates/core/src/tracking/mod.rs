//! 3D multi-object tracking: Kalman prediction, gated Hungarian association,
//! active/dormant track pools with re-identification, and a nearest-neighbour
//! ablation mode.

pub mod assign;
pub mod kalman;
mod tracker;

pub use assign::{solve, solve_canonical, Assignment, CostMatrix};
pub use kalman::{KalmanNoise, KalmanState};
pub use tracker::{
    association_cost, run, Detection, KalmanTrack, TrackError, TrackEvent, TrackEventKind, Tracker, TrackerParams, TrackingResult,
};
