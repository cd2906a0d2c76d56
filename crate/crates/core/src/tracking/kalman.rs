//! Constant-velocity Kalman filter over a 3D centroid.

use nalgebra::{Matrix3, Matrix3x6, Matrix6, Vector6};

use crate::geometry::Vec3;

/// Noise settings: `q_pos`, `q_vel` on the diagonal of the process noise,
/// `r` on the diagonal of the measurement noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KalmanNoise {
    pub q_pos: f64,
    pub q_vel: f64,
    pub r: f64,
}

/// State `(c, c_dot)` with covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct KalmanState {
    pub x: Vector6<f64>,
    pub p: Matrix6<f64>,
}

fn transition(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    f.fixed_view_mut::<3, 3>(0, 3).copy_from(&(Matrix3::identity() * dt));
    f
}

fn observation() -> Matrix3x6<f64> {
    let mut h = Matrix3x6::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    h
}

impl KalmanState {
    /// Track initialised at `c` with zero velocity; velocity variance is ten
    /// times the process velocity noise.
    pub fn new(c: Vec3, noise: &KalmanNoise) -> Self {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&c);
        let mut p = Matrix6::zeros();
        for i in 0..3 {
            p[(i, i)] = noise.r;
            p[(i + 3, i + 3)] = 10.0 * noise.q_vel;
        }
        Self { x, p }
    }

    pub fn position(&self) -> Vec3 {
        self.x.fixed_rows::<3>(0).into_owned()
    }

    pub fn velocity(&self) -> Vec3 {
        self.x.fixed_rows::<3>(3).into_owned()
    }

    pub fn predict(&mut self, dt: f64, noise: &KalmanNoise) {
        let f = transition(dt);
        self.x = f * self.x;
        let mut q = Matrix6::zeros();
        for i in 0..3 {
            q[(i, i)] = noise.q_pos;
            q[(i + 3, i + 3)] = noise.q_vel;
        }
        self.p = f * self.p * f.transpose() + q;
        self.symmetrize();
    }

    /// Position measurement update in Joseph form.
    pub fn update(&mut self, z: &Vec3, noise: &KalmanNoise) {
        let h = observation();
        let r = Matrix3::identity() * noise.r;
        let s = h * self.p * h.transpose() + r;
        let s_inv = s.try_inverse().expect("innovation covariance is positive definite");
        let k = self.p * h.transpose() * s_inv;
        let y = z - h * self.x;
        self.x += k * y;
        let ikh = Matrix6::identity() - k * h;
        self.p = ikh * self.p * ikh.transpose() + k * r * k.transpose();
        self.symmetrize();
    }

    fn symmetrize(&mut self) {
        self.p = (self.p + self.p.transpose()) * 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NOISE: KalmanNoise = KalmanNoise { q_pos: 0.5, q_vel: 0.1, r: 1.0 };

    fn moving(c: Vec3, v: Vec3) -> KalmanState {
        let mut s = KalmanState::new(c, &NOISE);
        s.x.fixed_rows_mut::<3>(3).copy_from(&v);
        s
    }

    #[test]
    fn predict_moves_by_velocity() {
        let mut s = moving(Vec3::zeros(), Vec3::x());
        s.predict(1.0, &NOISE);
        assert_eq!(s.position(), Vec3::x());
        assert_eq!(s.velocity(), Vec3::x());
        let mut still = moving(Vec3::new(1.0, 2.0, 3.0), Vec3::zeros());
        still.predict(1.0, &NOISE);
        assert_eq!(still.position(), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn two_unit_steps_equal_one_double_step_for_the_mean() {
        let mut a = moving(Vec3::new(0.5, -1.0, 2.0), Vec3::new(0.3, 0.2, -0.1));
        let mut b = a.clone();
        a.predict(1.0, &NOISE);
        a.predict(1.0, &NOISE);
        b.predict(2.0, &NOISE);
        assert!((a.x - b.x).norm() < 1e-12);
        assert!((transition(1.0) * transition(1.0) - transition(2.0)).norm() == 0.0);
    }

    proptest! {
        #[test]
        fn update_lies_between_prediction_and_measurement(
            c in prop::array::uniform3(-10.0f64..10.0),
            v in prop::array::uniform3(-1.0f64..1.0),
            z in prop::array::uniform3(-10.0f64..10.0),
            steps in 1usize..5,
        ) {
            let mut s = moving(Vec3::from(c), Vec3::from(v));
            for _ in 0..steps {
                s.predict(1.0, &NOISE);
            }
            let pred = s.position();
            let z = Vec3::from(z);
            s.update(&z, &NOISE);
            let post = s.position();
            let d = z - pred;
            if d.norm() > 1e-9 {
                let t = (post - pred).dot(&d) / d.norm_squared();
                prop_assert!(t > 0.0 && t < 1.0);
                prop_assert!((pred + d * t - post).norm() < 1e-9);
            }
            let sym = (s.p - s.p.transpose()).norm();
            prop_assert!(sym < 1e-12);
            prop_assert!(s.p.symmetric_eigenvalues().iter().all(|&e| e > -1e-12));
        }
    }
}
