//! Lifting of drone-video pointmaps and instance masks into identity-consistent
//! 3D tracks, oriented box annotations and viewpoint coverage reports.

pub mod boxfit;
pub mod exec;
pub mod frame;
pub mod geometry;
pub mod lifting;
pub mod motmetrics;
pub mod pipeline;
pub mod raycast;
pub mod refine;
pub mod sceneio;
pub mod synthgen;
pub mod tracking;
pub mod viewpoint;

pub use exec::Execution;
pub use frame::{InstanceMask, PointCluster, PointmapFrame};
pub use geometry::{CameraPose, FaceId, FaceLabel, GimbalSample, Intrinsics, OrientedBox, Rotation, SemanticFaceMap, Vec3};
