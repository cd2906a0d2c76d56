use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RefineError;
use crate::frame::PointmapFrame;
use crate::geometry::{OrientedBox, Vec3};
use crate::lifting::quantile_sorted;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SnapMethod {
    /// Consensus plane through the neighbourhood; tolerance is a fraction of box height.
    RansacPlane { iterations: usize, tolerance_frac: f64 },
    /// Low percentile (0..100) of neighbourhood heights.
    PercentileLow { percentile: f64 },
    /// Lowest point of the animal's own cluster.
    TrackFeet,
}

impl SnapMethod {
    pub fn ransac() -> Self {
        SnapMethod::RansacPlane { iterations: 200, tolerance_frac: 0.02 }
    }

    pub fn percentile() -> Self {
        SnapMethod::PercentileLow { percentile: 5.0 }
    }

    fn min_support(&self) -> usize {
        match self {
            SnapMethod::RansacPlane { .. } => 3,
            SnapMethod::PercentileLow { .. } => 3,
            SnapMethod::TrackFeet => 1,
        }
    }

    fn validate(&self) -> Result<(), RefineError> {
        match *self {
            SnapMethod::RansacPlane { iterations, tolerance_frac } if iterations == 0 || tolerance_frac.is_nan() || tolerance_frac <= 0.0 => {
                Err(RefineError::Param(format!("ransac iterations {iterations}, tolerance {tolerance_frac}")))
            }
            SnapMethod::PercentileLow { percentile } if !(0.0..=100.0).contains(&percentile) => {
                Err(RefineError::Param(format!("percentile {percentile} outside [0, 100]")))
            }
            _ => Ok(()),
        }
    }
}

/// Support data for one snap.
#[derive(Clone, Debug, Default)]
pub struct SnapContext {
    /// Scene points around the box (terrain and whatever stands on it).
    pub neighbourhood: Vec<Vec3>,
    /// The animal's own points.
    pub cluster: Vec<Vec3>,
    pub seed: u64,
}

/// Valid points of `frame` whose distance from the box centre, measured
/// perpendicular to the box up axis, is at most `radius`.
pub fn gather_neighbourhood(frame: &PointmapFrame, b: &OrientedBox, radius: f64) -> Vec<Vec3> {
    let up = b.axis(2);
    (0..frame.points.len())
        .filter_map(|i| frame.point(i))
        .filter(|p| {
            let d = p - b.center;
            (d - up * d.dot(&up)).norm() <= radius
        })
        .collect()
}

fn plane_through(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(Vec3, f64)> {
    let n = (b - a).cross(&(c - a)).try_normalize(1e-12)?;
    Some((n, n.dot(a)))
}

fn ransac_plane(points: &[Vec3], iterations: usize, tol: f64, seed: u64) -> Option<(Vec3, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec3, f64)> = None;
    let n = points.len();
    for _ in 0..iterations {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let k = rng.random_range(0..n);
        if i == j || j == k || i == k {
            continue;
        }
        let Some((normal, d)) = plane_through(&points[i], &points[j], &points[k]) else { continue };
        let inliers = points.iter().filter(|p| (normal.dot(p) - d).abs() <= tol).count();
        if best.as_ref().is_none_or(|b| inliers > b.0) {
            best = Some((inliers, normal, d));
        }
    }
    let (_, normal, d) = best?;
    // Least-squares refit on the consensus set.
    let inliers: Vec<&Vec3> = points.iter().filter(|p| (normal.dot(p) - d).abs() <= tol).collect();
    if inliers.len() < 3 {
        return Some((normal, d));
    }
    let mean = inliers.iter().copied().sum::<Vec3>() / inliers.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in &inliers {
        let q = *p - mean;
        cov += q * q.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let imin = eig.eigenvalues.imin();
    let mut refined: Vec3 = eig.eigenvectors.column(imin).into_owned();
    if refined.dot(&normal) < 0.0 {
        refined = -refined;
    }
    Some((refined, refined.dot(&mean)))
}

/// Moves the box along its up axis so its bottom face rests on the ground
/// height estimated by `method`.
pub fn snap_to_ground(b: &OrientedBox, ctx: &SnapContext, method: &SnapMethod) -> Result<OrientedBox, RefineError> {
    method.validate()?;
    let up = b.axis(2);
    let support = match method {
        SnapMethod::TrackFeet => &ctx.cluster,
        _ => &ctx.neighbourhood,
    };
    if support.len() < method.min_support() {
        return Err(RefineError::SnapSupport { needed: method.min_support(), got: support.len() });
    }
    let ground = match *method {
        SnapMethod::TrackFeet => support.iter().map(|p| p.dot(&up)).fold(f64::INFINITY, f64::min),
        SnapMethod::PercentileLow { percentile } => {
            let mut h: Vec<f64> = support.iter().map(|p| p.dot(&up)).collect();
            h.sort_by(f64::total_cmp);
            quantile_sorted(&h, percentile / 100.0)
        }
        SnapMethod::RansacPlane { iterations, tolerance_frac } => {
            let tol = tolerance_frac * b.dims.z;
            let (n, d) = ransac_plane(support, iterations, tol, ctx.seed)
                .ok_or(RefineError::SnapSupport { needed: 3, got: support.len() })?;
            let denom = n.dot(&up);
            if denom.abs() < 1e-9 {
                return Err(RefineError::Param("ground plane is parallel to the box up axis".into()));
            }
            // Where the vertical line through the centre meets the plane.
            let s = (d - n.dot(&b.center)) / denom;
            (b.center + up * s).dot(&up)
        }
    };
    let shift = ground + b.dims.z / 2.0 - b.center.dot(&up);
    Ok(OrientedBox { center: b.center + up * shift, ..*b })
}
