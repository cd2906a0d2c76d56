use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Crossover,
    OcclusionGap,
    Orbit,
    Herd,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Crossover, Preset::OcclusionGap, Preset::Orbit, Preset::Herd];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Crossover => "crossover",
            Preset::OcclusionGap => "occlusion_gap",
            Preset::Orbit => "orbit",
            Preset::Herd => "herd",
        }
    }

    pub fn config(self) -> SynthConfig {
        match self {
            Preset::Crossover => crossover(),
            Preset::OcclusionGap => occlusion_gap(),
            Preset::Orbit => orbit(),
            Preset::Herd => herd(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| SynthError::Config(format!("unknown preset `{s}` (expected crossover, occlusion_gap, orbit or herd)")))
    }
}

/// Path of a box centre over frame indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// Linear between `(frame, position)` waypoints, held constant outside them.
    Piecewise { waypoints: Vec<(usize, Vec3)> },
    /// Circle around `centre` in the horizontal plane.
    Circular { centre: Vec3, radius: f64, rate_deg: f64, phase_deg: f64 },
}

impl Trajectory {
    pub fn fixed(p: Vec3) -> Self {
        Trajectory::Piecewise { waypoints: vec![(0, p)] }
    }

    pub fn linear(start: Vec3, end: Vec3, frames: usize) -> Self {
        Trajectory::Piecewise { waypoints: vec![(0, start), (frames.saturating_sub(1), end)] }
    }

    pub fn position(&self, frame: usize) -> Vec3 {
        match self {
            Trajectory::Piecewise { waypoints } => {
                let t = frame as f64;
                let first = waypoints[0];
                if frame <= first.0 {
                    return first.1;
                }
                for w in waypoints.windows(2) {
                    let ((f0, p0), (f1, p1)) = (w[0], w[1]);
                    if frame <= f1 {
                        let a = (t - f0 as f64) / (f1 - f0) as f64;
                        return p0 + (p1 - p0) * a;
                    }
                }
                waypoints[waypoints.len() - 1].1
            }
            Trajectory::Circular { centre, radius, rate_deg, phase_deg } => {
                let a = (phase_deg + rate_deg * frame as f64).to_radians();
                centre + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
            }
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        match self {
            Trajectory::Piecewise { waypoints } => {
                if waypoints.is_empty() {
                    return Err(SynthError::Config("trajectory without waypoints".into()));
                }
                if waypoints.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(SynthError::Config("waypoint frames must increase".into()));
                }
                Ok(())
            }
            Trajectory::Circular { radius, .. } if radius.is_nan() || *radius < 0.0 => Err(SynthError::Config(format!("radius {radius} must be non-negative"))),
            Trajectory::Circular { .. } => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnimalSpec {
    pub class: String,
    /// Length, width, height.
    pub dims: Vec3,
    /// Path of the box's ground contact point; the box centre sits `dims.z / 2` above it.
    pub path: Trajectory,
    /// Fixed heading in degrees. When absent the animal faces its direction of travel.
    #[serde(default)]
    pub yaw_deg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CameraPath {
    Fixed { eye: Vec3, target: Vec3 },
    /// Circles `target` at `radius` and `height` above it, always looking at it.
    Orbit { target: Vec3, radius: f64, height: f64, rate_deg: f64, phase_deg: f64 },
}

impl CameraPath {
    pub fn eye_and_target(&self, frame: usize) -> (Vec3, Vec3) {
        match self {
            CameraPath::Fixed { eye, target } => (*eye, *target),
            CameraPath::Orbit { target, radius, height, rate_deg, phase_deg } => {
                let a = (phase_deg + rate_deg * frame as f64).to_radians();
                (target + Vec3::new(radius * a.cos(), radius * a.sin(), *height), *target)
            }
        }
    }
}

/// Frames `from..=to` in which an animal's mask is erased.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropout {
    pub animal: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub name: String,
    pub animals: Vec<AnimalSpec>,
    pub camera: CameraPath,
    pub width: u32,
    pub height: u32,
    pub focal: f64,
    pub frame_count: usize,
    /// Standard deviation of the isotropic Gaussian noise added to every point.
    pub noise_sigma: f64,
    pub fps: f64,
    #[serde(default)]
    pub dropouts: Vec<Dropout>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.frame_count < 2 {
            return Err(SynthError::Config(format!("frame_count {} must be at least 2", self.frame_count)));
        }
        if self.animals.is_empty() || self.animals.len() > u16::MAX as usize - 1 {
            return Err(SynthError::Config(format!("animal count {} out of range", self.animals.len())));
        }
        for (i, a) in self.animals.iter().enumerate() {
            if !a.dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Err(SynthError::Config(format!("animal {i}: dims {:?} must be positive", a.dims)));
            }
            a.path.validate()?;
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err(SynthError::Config(format!("noise_sigma {} must be non-negative", self.noise_sigma)));
        }
        if self.width < 2 || self.height < 2 || (self.focal.is_nan() || self.focal <= 0.0) || (self.fps.is_nan() || self.fps <= 0.0) {
            return Err(SynthError::Config("image size, focal length and fps must be positive".into()));
        }
        for d in &self.dropouts {
            if d.animal >= self.animals.len() || d.from > d.to || d.to >= self.frame_count {
                return Err(SynthError::Config(format!("dropout {d:?} outside the scene")));
            }
        }
        Ok(())
    }

    /// A single animal watched side-on by a camera that never moves.
    pub fn static_flank() -> Self {
        SynthConfig {
            name: "static_flank".into(),
            animals: vec![AnimalSpec { class: "rhino".into(), dims: Vec3::new(3.5, 1.2, 1.7), path: Trajectory::fixed(Vec3::zeros()), yaw_deg: Some(0.0) }],
            camera: CameraPath::Fixed { eye: Vec3::new(0.0, 12.0, 2.5), target: Vec3::new(0.0, 0.0, 0.85) },
            frame_count: 60,
            ..base("static_flank")
        }
    }
}

fn base(name: &str) -> SynthConfig {
    SynthConfig {
        name: name.into(),
        animals: Vec::new(),
        camera: CameraPath::Fixed { eye: Vec3::new(0.0, -25.0, 12.0), target: Vec3::zeros() },
        width: 320,
        height: 240,
        focal: 300.0,
        frame_count: 100,
        noise_sigma: 0.0,
        fps: 30.0,
        dropouts: Vec::new(),
    }
}

fn zebra(path: Trajectory) -> AnimalSpec {
    AnimalSpec { class: "zebra".into(), dims: Vec3::new(2.5, 0.8, 1.4), path, yaw_deg: None }
}

/// Two zebras in adjacent lanes passing each other head-on.
fn crossover() -> SynthConfig {
    let n = 100;
    SynthConfig {
        animals: vec![
            zebra(Trajectory::linear(Vec3::new(-10.0, -1.75, 0.0), Vec3::new(10.0, -1.75, 0.0), n)),
            zebra(Trajectory::linear(Vec3::new(10.0, 1.75, 0.0), Vec3::new(-10.0, 1.75, 0.0), n)),
        ],
        frame_count: n,
        ..base("crossover")
    }
}

/// A walking giraffe loses its mask for 30 frames (frames 10 to 39) next to a grazing zebra.
fn occlusion_gap() -> SynthConfig {
    let n = 80;
    SynthConfig {
        animals: vec![
            AnimalSpec {
                class: "giraffe".into(),
                dims: Vec3::new(2.0, 0.9, 2.8),
                path: Trajectory::linear(Vec3::new(-8.0, 2.0, 0.0), Vec3::new(8.0, 2.0, 0.0), n),
                yaw_deg: None,
            },
            zebra(Trajectory::Piecewise { waypoints: vec![(0, Vec3::new(-2.0, -4.0, 0.0)), (n - 1, Vec3::new(2.0, -4.0, 0.0))] }),
        ],
        camera: CameraPath::Fixed { eye: Vec3::new(0.0, -26.0, 14.0), target: Vec3::zeros() },
        frame_count: n,
        dropouts: vec![Dropout { animal: 0, from: 10, to: 39 }],
        ..base("occlusion_gap")
    }
}

/// One resting rhino and a drone completing a full circle around it.
fn orbit() -> SynthConfig {
    let n = 120;
    SynthConfig {
        animals: vec![AnimalSpec { class: "rhino".into(), dims: Vec3::new(3.5, 1.2, 1.7), path: Trajectory::fixed(Vec3::zeros()), yaw_deg: Some(0.0) }],
        camera: CameraPath::Orbit { target: Vec3::new(0.0, 0.0, 0.85), radius: 11.0, height: 6.0, rate_deg: 360.0 / n as f64, phase_deg: 0.0 },
        frame_count: n,
        ..base("orbit")
    }
}

/// Five zebras walking abreast.
fn herd() -> SynthConfig {
    let n = 60;
    let animals = (0..5)
        .map(|i| {
            let y = -8.0 + 4.0 * i as f64;
            let x0 = -6.0 + if i % 2 == 0 { 0.0 } else { 1.5 };
            zebra(Trajectory::linear(Vec3::new(x0, y, 0.0), Vec3::new(x0 + 6.0, y, 0.0), n))
        })
        .collect();
    SynthConfig {
        animals,
        camera: CameraPath::Fixed { eye: Vec3::new(0.0, -30.0, 20.0), target: Vec3::new(0.0, 0.0, 0.0) },
        frame_count: n,
        ..base("herd")
    }
}
