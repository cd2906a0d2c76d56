//! Deterministic synthetic drone scenes with exact ground truth.
//!
//! Animals are rigid boxes standing on the ground plane `z = 0` of a z-up
//! world. Every pixel ray is intersected analytically with the boxes and the
//! ground; the nearest hit gives the pointmap entry and, for boxes, the mask id
//! (`animal index + 1`, which is also the ground-truth track id).

mod config;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub use config::{AnimalSpec, CameraPath, Dropout, Preset, SynthConfig, Trajectory};

use crate::exec::Execution;
use crate::frame::{InstanceMask, PointmapFrame, INVALID_POINT};
use crate::geometry::{CameraPose, GimbalSample, Intrinsics, OrientedBox, Rotation, SemanticFaceMap, Vec3};
use crate::raycast::ray_obb_interval;
use crate::sceneio::{FrameData, SceneBundle, SceneMeta, TelemetryTrack, TrackRecord, TrackRecordFile, TrackStatus};

/// Ground hits farther than this from the world origin are left invalid (sky).
const GROUND_RADIUS: f64 = 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic scene config: {0}")]
    Config(String),
    #[error("camera is inside animal {animal} at frame {frame}")]
    CameraInsideAnimal { frame: usize, animal: usize },
    #[error("camera looks straight along the vertical at frame {0}")]
    DegenerateCamera(usize),
    #[error("no track {0} in the scene")]
    UnknownTrack(u32),
    #[error("frame range {from}..={to} outside scene of {frames} frames")]
    Range { from: usize, to: usize, frames: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GtAnimal {
    pub track_id: u32,
    pub class: String,
    pub faces: SemanticFaceMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthScene {
    pub animals: Vec<GtAnimal>,
    /// `boxes[frame][animal]`.
    pub boxes: Vec<Vec<OrientedBox>>,
    /// Whether the animal has mask pixels in that frame.
    pub detected: Vec<Vec<bool>>,
}

impl GroundTruthScene {
    pub fn box_of(&self, track_id: u32, frame: usize) -> Option<&OrientedBox> {
        let i = self.animals.iter().position(|a| a.track_id == track_id)?;
        self.boxes.get(frame)?.get(i)
    }

    /// One record per detected animal per frame, centred on the true box.
    pub fn records(&self) -> TrackRecordFile {
        let mut records = Vec::new();
        for (frame, boxes) in self.boxes.iter().enumerate() {
            for (i, b) in boxes.iter().enumerate() {
                if !self.detected[frame][i] {
                    continue;
                }
                let a = &self.animals[i];
                records.push(TrackRecord {
                    frame,
                    track_id: a.track_id,
                    class: a.class.clone(),
                    centroid: b.center,
                    instance_id: Some(a.track_id as u16),
                    status: TrackStatus::Active,
                    dims: Some(b.dims),
                    rotation: Some(b.rotation),
                });
            }
        }
        TrackRecordFile { records }
    }
}

fn heading(spec: &AnimalSpec, frame: usize, frames: usize) -> f64 {
    if let Some(y) = spec.yaw_deg {
        return y.to_radians();
    }
    // Direction of travel, searched forward then backward for a moving span.
    let step = |a: usize, b: usize| spec.path.position(b) - spec.path.position(a);
    let candidates = (frame..frames.saturating_sub(1)).map(|f| step(f, f + 1)).chain((1..=frame).rev().map(|f| step(f - 1, f)));
    for d in candidates {
        if d.x.hypot(d.y) > 1e-12 {
            return d.y.atan2(d.x);
        }
    }
    0.0
}

/// Ground-truth boxes for every frame, `[frame][animal]`.
pub fn animal_boxes(config: &SynthConfig) -> Vec<Vec<OrientedBox>> {
    (0..config.frame_count)
        .map(|f| {
            config
                .animals
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let c = a.path.position(f) + Vec3::new(0.0, 0.0, a.dims.z / 2.0);
                    OrientedBox {
                        center: c,
                        dims: a.dims,
                        rotation: Rotation::from_yaw(heading(a, f, config.frame_count)),
                        track_id: i as u32 + 1,
                        frame: f,
                    }
                })
                .collect()
        })
        .collect()
}

pub fn camera_poses(config: &SynthConfig) -> Result<Vec<CameraPose>, SynthError> {
    (0..config.frame_count)
        .map(|f| {
            let (eye, target) = config.camera.eye_and_target(f);
            CameraPose::look_at(eye, target, f).ok_or(SynthError::DegenerateCamera(f))
        })
        .collect()
}

pub fn intrinsics(config: &SynthConfig) -> Intrinsics {
    Intrinsics {
        fx: config.focal,
        fy: config.focal,
        cx: config.width as f64 / 2.0,
        cy: config.height as f64 / 2.0,
        width: config.width,
        height: config.height,
    }
}

/// Gimbal reading matching a pose built by [`CameraPose::look_at`]: pitch is
/// the elevation of the optical axis, roll is zero.
pub fn gimbal_for(pose: &CameraPose) -> GimbalSample {
    let forward = pose.rotation.axis(2);
    GimbalSample { frame: pose.frame, pitch_deg: forward.z.clamp(-1.0, 1.0).asin().to_degrees(), roll_deg: 0.0 }
}

fn row_rng(seed: u64, frame: usize, row: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((frame as u64) << 32) | row as u64);
    rng
}

/// Renders one frame: pointmap and mask ids.
pub fn render_frame(
    boxes: &[OrientedBox],
    pose: &CameraPose,
    k: &Intrinsics,
    sigma: f64,
    seed: u64,
    exec: Execution,
) -> (Vec<[f32; 3]>, Vec<u16>) {
    let eye = pose.centre();
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    let rows = exec.map_range(0..k.height as usize, |v| {
        let mut rng = row_rng(seed, pose.frame, v as u32);
        let mut pts = Vec::with_capacity(k.width as usize);
        let mut ids = Vec::with_capacity(k.width as usize);
        for u in 0..k.width as usize {
            let d = pose.rotation.rotate(&k.ray_direction(u as f64 + 0.5, v as f64 + 0.5));
            let mut best: Option<(f64, u16)> = None;
            for (i, b) in boxes.iter().enumerate() {
                if let Some((t0, t1)) = ray_obb_interval(&eye, &d, b) {
                    if t1 >= 0.0 && t0 > 0.0 && best.is_none_or(|(t, _)| t0 < t) {
                        best = Some((t0, i as u16 + 1));
                    }
                }
            }
            if d.z < 0.0 && eye.z > 0.0 {
                let t = -eye.z / d.z;
                let hit = eye + d * t;
                if hit.x.hypot(hit.y) <= GROUND_RADIUS && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, 0));
                }
            }
            match best {
                Some((t, id)) => {
                    let mut p = eye + d * t;
                    if id != 0 {
                        // Land exactly on the face that was entered.
                        let b = &boxes[id as usize - 1];
                        let mut local = b.to_local(&p);
                        let h = b.half_extents();
                        let axis = (0..3).max_by(|&a, &c| (local[a].abs() / h[a]).total_cmp(&(local[c].abs() / h[c]))).unwrap();
                        local[axis] = h[axis].copysign(local[axis]);
                        p = b.to_world(&local);
                    } else {
                        p.z = 0.0;
                    }
                    if let Some(n) = &noise {
                        p += Vec3::new(n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng));
                    }
                    pts.push([p.x as f32, p.y as f32, p.z as f32]);
                    ids.push(id);
                }
                None => {
                    pts.push(INVALID_POINT);
                    ids.push(0);
                }
            }
        }
        (pts, ids)
    });
    let mut points = Vec::with_capacity(k.pixel_count());
    let mut ids = Vec::with_capacity(k.pixel_count());
    for (p, i) in rows {
        points.extend(p);
        ids.extend(i);
    }
    (points, ids)
}

pub fn generate_scene(config: &SynthConfig, seed: u64, exec: Execution) -> Result<(SceneBundle, GroundTruthScene), SynthError> {
    config.validate()?;
    let k = intrinsics(config);
    let poses = camera_poses(config)?;
    let boxes = animal_boxes(config);
    for (f, frame_boxes) in boxes.iter().enumerate() {
        if let Some(i) = frame_boxes.iter().position(|b| b.contains(&poses[f].centre(), 0.0)) {
            return Err(SynthError::CameraInsideAnimal { frame: f, animal: i });
        }
    }
    let animals: Vec<GtAnimal> = config
        .animals
        .iter()
        .enumerate()
        .map(|(i, a)| GtAnimal { track_id: i as u32 + 1, class: a.class.clone(), faces: SemanticFaceMap::default() })
        .collect();

    let mut frames = Vec::with_capacity(config.frame_count);
    let mut samples = Vec::with_capacity(config.frame_count);
    for (f, pose) in poses.iter().enumerate() {
        let (points, ids) = render_frame(&boxes[f], pose, &k, config.noise_sigma, seed, exec);
        let mut classes = BTreeMap::new();
        for (i, a) in animals.iter().enumerate() {
            if ids.contains(&(i as u16 + 1)) {
                classes.insert(i as u16 + 1, a.class.clone());
            }
        }
        let gimbal = gimbal_for(pose);
        samples.push(gimbal);
        frames.push(FrameData {
            pointmap: PointmapFrame { frame: f, width: k.width, height: k.height, points, pose: *pose },
            mask: InstanceMask { frame: f, width: k.width, height: k.height, ids, classes },
            gimbal: Some(gimbal),
        });
    }
    let mut gt = GroundTruthScene { animals, detected: Vec::new(), boxes };
    gt.detected = frames.iter().map(|fd| (0..gt.animals.len()).map(|i| fd.mask.classes.contains_key(&(i as u16 + 1))).collect()).collect();
    let mut bundle = SceneBundle {
        meta: SceneMeta {
            scene_id: format!("{}-{seed}", config.name),
            intrinsics: k,
            fps: config.fps,
            frame_count: config.frame_count,
            scale_hint: 1.0,
        },
        frames,
        telemetry: Some(TelemetryTrack::new(samples).expect("frames increase")),
        ground_truth: Some(gt.records()),
    };
    for d in &config.dropouts {
        bundle = scripted_detection_dropout(&bundle, d.animal as u32 + 1, d.from..=d.to)?;
        for f in d.from..=d.to {
            gt.detected[f][d.animal] = false;
        }
    }
    Ok((bundle, gt))
}

/// Erases `track_id` from the masks in `range` and drops its ground-truth
/// records there. The identity itself is kept for the remaining frames.
pub fn scripted_detection_dropout(bundle: &SceneBundle, track_id: u32, range: RangeInclusive<usize>) -> Result<SceneBundle, SynthError> {
    let id = u16::try_from(track_id).map_err(|_| SynthError::UnknownTrack(track_id))?;
    let known = bundle.frames.iter().any(|f| f.mask.classes.contains_key(&id))
        || bundle.ground_truth.as_ref().is_some_and(|g| g.records.iter().any(|r| r.track_id == track_id));
    if !known || id == 0 {
        return Err(SynthError::UnknownTrack(track_id));
    }
    let mut out = bundle.clone();
    if range.is_empty() {
        return Ok(out);
    }
    let (from, to) = (*range.start(), *range.end());
    if to >= bundle.frames.len() {
        return Err(SynthError::Range { from, to, frames: bundle.frames.len() });
    }
    for f in range.clone() {
        out.frames[f].mask.erase(id);
    }
    if let Some(gt) = &mut out.ground_truth {
        gt.records.retain(|r| r.track_id != track_id || !range.contains(&r.frame));
    }
    Ok(out)
}

/// Grid samples over all six faces, edges and corners included, with at most
/// `1 / density` between neighbours along each face axis.
pub fn sample_box_surface(b: &OrientedBox, density: f64) -> Vec<Vec3> {
    let mut out = Vec::new();
    for face in crate::geometry::FaceId::ALL {
        let (u, v) = OrientedBox::face_frame(face);
        let nu = (b.dims[u] * density).ceil().max(1.0) as usize;
        let nv = (b.dims[v] * density).ceil().max(1.0) as usize;
        for i in 0..=nu {
            for j in 0..=nv {
                let s = -1.0 + 2.0 * i as f64 / nu as f64;
                let t = -1.0 + 2.0 * j as f64 / nv as f64;
                out.push(b.face_point(face, s, t));
            }
        }
    }
    out
}
