//! Ray–box intersection by the slab method.

use crate::geometry::{OrientedBox, Vec3};

/// Half-width slack applied when a ray runs parallel to a slab.
pub const PARALLEL_TOLERANCE: f64 = 1e-9;

/// Parametric interval `[t_enter, t_exit]` where the ray `o + t·d` lies inside
/// the axis-aligned box `[-half, half]`, or `None` when the slabs do not
/// overlap. `t` is unrestricted in sign.
pub fn slab_interval(origin: &Vec3, dir: &Vec3, half: &Vec3) -> Option<(f64, f64)> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for i in 0..3 {
        if dir[i] == 0.0 {
            if origin[i].abs() > half[i] + PARALLEL_TOLERANCE {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[i];
        let mut t0 = (-half[i] - origin[i]) * inv;
        let mut t1 = (half[i] - origin[i]) * inv;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return None;
        }
    }
    Some((t_enter, t_exit))
}

/// Slab interval of a world-space ray against an oriented box.
pub fn ray_obb_interval(origin: &Vec3, dir: &Vec3, b: &OrientedBox) -> Option<(f64, f64)> {
    let o = b.to_local(origin);
    let d = b.rotation.inverse_rotate(dir);
    slab_interval(&o, &d, &b.half_extents())
}

/// Nearest non-negative entry parameter of the ray into the box, if the ray
/// reaches it for some `t ≥ 0`. Returns 0 when the origin is inside.
pub fn ray_obb_entry(origin: &Vec3, dir: &Vec3, b: &OrientedBox) -> Option<f64> {
    let (t0, t1) = ray_obb_interval(origin, dir, b)?;
    if t1 < 0.0 {
        return None;
    }
    Some(t0.max(0.0))
}

/// Whether the segment from `origin` (t = 0) to `origin + dir` (t = 1) passes
/// through the box strictly before its end point.
pub fn segment_blocked(origin: &Vec3, dir: &Vec3, b: &OrientedBox) -> bool {
    matches!(ray_obb_entry(origin, dir, b), Some(t) if t < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation;

    #[test]
    fn axis_ray_hits_unit_box() {
        let (t0, t1) = slab_interval(&Vec3::new(-5.0, 0.0, 0.0), &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.5, 0.5, 0.5)).unwrap();
        assert_eq!((t0, t1), (4.5, 5.5));
    }

    #[test]
    fn parallel_ray_outside_slab_misses() {
        assert!(slab_interval(&Vec3::new(-5.0, 0.6, 0.0), &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.5, 0.5, 0.5)).is_none());
        // On the slab boundary within tolerance.
        assert!(slab_interval(&Vec3::new(-5.0, 0.5 + 1e-10, 0.0), &Vec3::new(1.0, 0.0, 0.0), &Vec3::new(0.5, 0.5, 0.5)).is_some());
    }

    #[test]
    fn segment_stops_short_of_box() {
        let b = OrientedBox::new(Vec3::new(10.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), Rotation::from_yaw(0.4), 1, 0).unwrap();
        assert!(segment_blocked(&Vec3::zeros(), &Vec3::new(20.0, 0.0, 0.0), &b));
        assert!(!segment_blocked(&Vec3::zeros(), &Vec3::new(5.0, 0.0, 0.0), &b));
        assert!(!segment_blocked(&Vec3::zeros(), &Vec3::new(-20.0, 0.0, 0.0), &b));
    }
}
