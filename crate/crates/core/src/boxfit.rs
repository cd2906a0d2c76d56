//! Oriented box fitting by principal axes, optionally constrained by the
//! gimbal-derived ground normal.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sin_cos_deg, CameraPose, GimbalSample, OrientedBox, Rotation, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 4 points to fit a box, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate point covariance (rank {0})")]
    Degenerate(usize),
    #[error("constraint vector must be finite and non-zero")]
    BadConstraint,
}

/// How the vertical axis is chosen when a ground normal is available.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpAxisMode {
    /// The covariance eigenvector most aligned with the normal.
    #[default]
    Eigenvector,
    /// The normal itself.
    GimbalNormal,
}

/// Ground-plane normal from gimbal pitch and roll, in the gimbal frame
/// (x right, y up, z backward): nadir gives `(0, 0, 1)`.
pub fn ground_normal(pitch_deg: f64, roll_deg: f64) -> Vec3 {
    let (sp, cp) = sin_cos_deg(pitch_deg);
    let (sr, cr) = sin_cos_deg(roll_deg);
    let n = Vec3::new(sr, cp * cr, -sp * cr);
    n / n.norm()
}

/// The same normal expressed in the pose's camera frame (x right, y down, z forward).
pub fn ground_normal_camera(pitch_deg: f64, roll_deg: f64) -> Vec3 {
    let n = ground_normal(pitch_deg, roll_deg);
    Vec3::new(n.x, -n.y, -n.z)
}

/// World-frame up direction implied by a gimbal sample at `pose`.
pub fn gimbal_up_world(pose: &CameraPose, g: &GimbalSample) -> Vec3 {
    pose.rotation.rotate(&ground_normal_camera(g.pitch_deg, g.roll_deg))
}

/// Flips `v` so its largest-magnitude component is positive.
fn canonical_sign(v: Vec3) -> Vec3 {
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

fn extents(points: &[Vec3], axis: &Vec3) -> (f64, f64) {
    points.iter().map(|p| p.dot(axis)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// Fits an oriented box to `points`.
///
/// With `up`, the vertical (local z) axis is the eigenvector most aligned
/// with it (or `up` itself under [`UpAxisMode::GimbalNormal`]) and local x is
/// the longer horizontal extent. Without it the axes follow descending
/// eigenvalues.
pub fn fit_obb_pca(points: &[Vec3], up: Option<Vec3>, mode: UpAxisMode) -> Result<OrientedBox, FitError> {
    if points.len() < 4 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]].max(0.0);
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > lmax * 1e-12 && eig.eigenvalues[i] > 0.0).count();
    if rank < 2 {
        return Err(FitError::Degenerate(rank));
    }
    let e = |i: usize| -> Vec3 { eig.eigenvectors.column(order[i]).into_owned().normalize() };

    let (x, y, z) = match up {
        Some(u) => {
            let u = u.try_normalize(1e-12).filter(|v| v.iter().all(|c| c.is_finite())).ok_or(FitError::BadConstraint)?;
            let k = (0..3).max_by(|&a, &b| e(a).dot(&u).abs().total_cmp(&e(b).dot(&u).abs())).unwrap();
            let z = match mode {
                UpAxisMode::Eigenvector => {
                    let ek = e(k);
                    if ek.dot(&u) < 0.0 {
                        -ek
                    } else {
                        ek
                    }
                }
                UpAxisMode::GimbalNormal => u,
            };
            // Largest remaining eigenvector, projected onto the horizontal plane.
            let other = (0..3).find(|&i| i != k).unwrap();
            let mut a = e(other) - z * e(other).dot(&z);
            if a.norm() < 1e-9 {
                let fallback = (0..3).filter(|&i| i != k).nth(1).unwrap();
                a = e(fallback) - z * e(fallback).dot(&z);
            }
            let a = a.normalize();
            let b = z.cross(&a);
            let (alo, ahi) = extents(points, &a);
            let (blo, bhi) = extents(points, &b);
            let x = canonical_sign(if bhi - blo > ahi - alo { b } else { a });
            (x, z.cross(&x), z)
        }
        None => {
            let x = canonical_sign(e(0));
            let y = canonical_sign(e(1) - x * e(1).dot(&x)).normalize();
            (x, y, x.cross(&y))
        }
    };

    let mut dims = Vec3::zeros();
    let mut centre = Vec3::zeros();
    let axes = [x, y, z];
    let scale = points.iter().map(|p| (p - mean).norm()).fold(0.0, f64::max).max(1e-300);
    for (i, axis) in axes.iter().enumerate() {
        let (lo, hi) = extents(points, axis);
        dims[i] = (hi - lo).max(scale * 1e-12);
        centre += axis * ((lo + hi) / 2.0);
    }
    let rotation = Rotation::from_matrix(&Matrix3::from_columns(&axes));
    Ok(OrientedBox { center: centre, dims, rotation, track_id: 0, frame: 0 })
}

/// Fits with the ground normal of the nearest gimbal sample, if any.
pub fn fit_with_gimbal(points: &[Vec3], pose: &CameraPose, gimbal: Option<&GimbalSample>, mode: UpAxisMode) -> Result<OrientedBox, FitError> {
    fit_obb_pca(points, gimbal.map(|g| gimbal_up_world(pose, g)), mode)
}

/// Yaw of the local x axis about world z, in degrees within `[0, 180)`.
pub fn yaw_mod_180(b: &OrientedBox) -> f64 {
    let x = b.axis(0);
    x.y.atan2(x.x).to_degrees().rem_euclid(180.0)
}
