use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assign::{solve_canonical, CostMatrix};
use super::kalman::{KalmanNoise, KalmanState};
use crate::frame::{footprint_iou, PointCluster};
use crate::geometry::Vec3;
use crate::sceneio::{TrackRecord, TrackRecordFile, TrackStatus};

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("detection for frame {found} passed to step for frame {expected}")]
    FrameMismatch { expected: usize, found: usize },
    #[error("frame {frame} is not after previously processed frame {last}")]
    OutOfOrder { frame: usize, last: usize },
    #[error("invalid tracker parameters: {0}")]
    Params(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerParams {
    pub delta_max: f64,
    pub lambda_3d: f64,
    pub lambda_2d: f64,
    pub iou_threshold: f64,
    pub soft_gate_ratio: f64,
    pub k_miss: usize,
    pub k_dormant: usize,
    pub reid_factor: f64,
    pub sigma_q2: f64,
    pub sigma_v2: f64,
    pub sigma_m2: f64,
    pub dt: f64,
    pub ablation: bool,
    /// When false, tracks are removed instead of demoted after `k_miss` misses.
    pub enable_dormant: bool,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            delta_max: 8.0,
            lambda_3d: 0.7,
            lambda_2d: 0.3,
            iou_threshold: 0.15,
            soft_gate_ratio: 0.3,
            k_miss: 20,
            k_dormant: 100,
            reid_factor: 2.0,
            sigma_q2: 0.5,
            sigma_v2: 0.1,
            sigma_m2: 1.0,
            dt: 1.0,
            ablation: false,
            enable_dormant: true,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<(), TrackError> {
        let positive = [
            ("delta_max", self.delta_max),
            ("lambda_3d", self.lambda_3d),
            ("lambda_2d", self.lambda_2d),
            ("iou_threshold", self.iou_threshold),
            ("soft_gate_ratio", self.soft_gate_ratio),
            ("reid_factor", self.reid_factor),
            ("sigma_q2", self.sigma_q2),
            ("sigma_v2", self.sigma_v2),
            ("sigma_m2", self.sigma_m2),
            ("dt", self.dt),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(TrackError::Params(format!("{name} must be positive, got {v}")));
        }
        if self.k_miss == 0 || self.k_dormant == 0 {
            return Err(TrackError::Params("k_miss and k_dormant must be positive".into()));
        }
        if (self.lambda_3d + self.lambda_2d - 1.0).abs() > 1e-9 {
            return Err(TrackError::Params(format!("lambda_3d + lambda_2d = {}, expected 1", self.lambda_3d + self.lambda_2d)));
        }
        Ok(())
    }

    /// Copy with distance thresholds expressed in a scene's units.
    pub fn scaled(&self, scale: f64) -> Self {
        Self { delta_max: self.delta_max * scale, ..*self }
    }

    fn noise(&self) -> KalmanNoise {
        KalmanNoise { q_pos: self.sigma_q2, q_vel: self.sigma_v2, r: self.sigma_m2 }
    }
}

/// One lifted instance offered to the tracker.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub frame: usize,
    pub centroid: Vec3,
    /// Ascending pixel indices of the instance.
    pub footprint: Vec<u32>,
    pub class: String,
    pub instance_id: u16,
}

impl Detection {
    /// `None` for an empty cluster.
    pub fn from_cluster(c: &PointCluster) -> Option<Self> {
        Some(Self { frame: c.frame, centroid: c.centroid()?, footprint: c.pixels.clone(), class: c.class.clone(), instance_id: c.instance_id })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackEventKind {
    Created,
    Demoted,
    Reactivated,
    Removed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackEvent {
    pub frame: usize,
    pub track_id: u32,
    pub kind: TrackEventKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanTrack {
    pub id: u32,
    pub class: String,
    pub state: KalmanState,
    pub status: TrackStatus,
    pub frames_since_update: usize,
    /// Frames spent in the dormant pool.
    pub dormant_frames: usize,
    pub last_mask: Vec<u32>,
    pub last_centroid: Vec3,
    pub history: Vec<(usize, Vec3)>,
}

/// Blended 3D distance and 2D overlap cost between a detection and a track prediction, `None` when
/// the pair is inadmissible.
pub fn association_cost(det: &Detection, predicted: &Vec3, track_mask: &[u32], track_class: &str, params: &TrackerParams) -> Option<f64> {
    if det.class != track_class {
        return None;
    }
    let dist = (det.centroid - predicted).norm();
    if dist > params.reid_factor * params.delta_max {
        return None;
    }
    let iou = footprint_iou(&det.footprint, track_mask);
    let ratio = dist / params.delta_max;
    if iou < params.iou_threshold && ratio >= params.soft_gate_ratio {
        return None;
    }
    Some(params.lambda_3d * ratio + params.lambda_2d * (1.0 - iou))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrackingResult {
    pub records: TrackRecordFile,
    pub events: Vec<TrackEvent>,
    /// Number of distinct track ids ever created.
    pub track_count: usize,
}

#[derive(Clone, Debug)]
pub struct Tracker {
    params: TrackerParams,
    tracks: Vec<KalmanTrack>,
    next_id: u32,
    last_frame: Option<usize>,
    events: Vec<TrackEvent>,
    records: Vec<TrackRecord>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Result<Self, TrackError> {
        params.validate()?;
        Ok(Self { params, tracks: Vec::new(), next_id: 1, last_frame: None, events: Vec::new(), records: Vec::new() })
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    /// Live tracks (active and dormant) in ascending id order.
    pub fn tracks(&self) -> &[KalmanTrack] {
        &self.tracks
    }

    pub fn events(&self) -> &[TrackEvent] {
        &self.events
    }

    /// Processes the detections of `frame`. Returns `(detection index, track id)`
    /// for every detection, in detection order.
    pub fn step(&mut self, frame: usize, detections: &[Detection]) -> Result<Vec<(usize, u32)>, TrackError> {
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(TrackError::FrameMismatch { expected: frame, found: d.frame });
        }
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(TrackError::OutOfOrder { frame, last });
            }
        }
        let gap = self.last_frame.map_or(1, |l| frame - l);
        self.last_frame = Some(frame);
        let p = self.params;
        let noise = p.noise();

        let mut det_track: Vec<Option<usize>> = vec![None; detections.len()];
        let mut reactivated = vec![false; detections.len()];
        let active: Vec<usize> = (0..self.tracks.len()).filter(|&i| self.tracks[i].status == TrackStatus::Active).collect();

        if p.ablation {
            let mut cands = Vec::new();
            for (di, d) in detections.iter().enumerate() {
                for &ti in &active {
                    let t = &self.tracks[ti];
                    let dist = (d.centroid - t.last_centroid).norm();
                    if d.class == t.class && dist < p.delta_max {
                        cands.push((dist, di, ti));
                    }
                }
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut track_used = vec![false; self.tracks.len()];
            for (_, di, ti) in cands {
                if det_track[di].is_none() && !track_used[ti] {
                    det_track[di] = Some(ti);
                    track_used[ti] = true;
                }
            }
        } else {
            let dt = p.dt * gap as f64;
            for t in &mut self.tracks {
                t.state.predict(dt, &noise);
            }
            let mut m = CostMatrix::new(detections.len(), active.len());
            for (di, d) in detections.iter().enumerate() {
                for (ci, &ti) in active.iter().enumerate() {
                    let t = &self.tracks[ti];
                    m.set(di, ci, association_cost(d, &t.state.position(), &t.last_mask, &t.class, &p));
                }
            }
            for (di, ci) in solve_canonical(&m).pairs {
                det_track[di] = Some(active[ci]);
            }
            // Re-identification against the dormant pool, nearest first.
            let mut taken = vec![false; self.tracks.len()];
            for (di, d) in detections.iter().enumerate() {
                if det_track[di].is_some() {
                    continue;
                }
                let best = (0..self.tracks.len())
                    .filter(|&ti| !taken[ti] && self.tracks[ti].status == TrackStatus::Dormant && self.tracks[ti].class == d.class)
                    .map(|ti| ((d.centroid - self.tracks[ti].state.position()).norm(), ti))
                    .filter(|(dist, _)| *dist < p.reid_factor * p.delta_max)
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if let Some((_, ti)) = best {
                    taken[ti] = true;
                    det_track[di] = Some(ti);
                    reactivated[di] = true;
                }
            }
        }

        let mut updated = vec![false; self.tracks.len()];
        for (di, d) in detections.iter().enumerate() {
            let Some(ti) = det_track[di] else { continue };
            updated[ti] = true;
            let t = &mut self.tracks[ti];
            if !p.ablation {
                t.state.update(&d.centroid, &noise);
            }
            t.status = TrackStatus::Active;
            t.frames_since_update = 0;
            t.dormant_frames = 0;
            t.last_mask = d.footprint.clone();
            t.last_centroid = d.centroid;
            t.history.push((frame, d.centroid));
            if reactivated[di] {
                self.events.push(TrackEvent { frame, track_id: t.id, kind: TrackEventKind::Reactivated });
            }
        }

        let mut out = Vec::with_capacity(detections.len());
        for (di, d) in detections.iter().enumerate() {
            let id = match det_track[di] {
                Some(ti) => self.tracks[ti].id,
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    self.tracks.push(KalmanTrack {
                        id,
                        class: d.class.clone(),
                        state: KalmanState::new(d.centroid, &noise),
                        status: TrackStatus::Active,
                        frames_since_update: 0,
                        dormant_frames: 0,
                        last_mask: d.footprint.clone(),
                        last_centroid: d.centroid,
                        history: vec![(frame, d.centroid)],
                    });
                    updated.push(true);
                    self.events.push(TrackEvent { frame, track_id: id, kind: TrackEventKind::Created });
                    id
                }
            };
            self.records.push(TrackRecord {
                frame,
                track_id: id,
                class: d.class.clone(),
                centroid: d.centroid,
                instance_id: Some(d.instance_id),
                status: TrackStatus::Active,
                dims: None,
                rotation: None,
            });
            out.push((di, id));
        }

        let mut removed = Vec::new();
        for (ti, t) in self.tracks.iter_mut().enumerate() {
            if updated[ti] {
                continue;
            }
            t.frames_since_update += gap;
            match t.status {
                TrackStatus::Active if t.frames_since_update >= p.k_miss => {
                    if p.enable_dormant {
                        t.status = TrackStatus::Dormant;
                        self.events.push(TrackEvent { frame, track_id: t.id, kind: TrackEventKind::Demoted });
                    } else {
                        removed.push(ti);
                    }
                }
                TrackStatus::Dormant => {
                    t.dormant_frames += gap;
                    if t.dormant_frames > p.k_dormant {
                        removed.push(ti);
                    }
                }
                TrackStatus::Active => {}
            }
        }
        for &ti in removed.iter().rev() {
            let t = self.tracks.remove(ti);
            self.events.push(TrackEvent { frame, track_id: t.id, kind: TrackEventKind::Removed });
        }
        Ok(out)
    }

    pub fn finish(self) -> TrackingResult {
        TrackingResult { records: TrackRecordFile { records: self.records }, events: self.events, track_count: (self.next_id - 1) as usize }
    }
}

/// Runs the tracker over `frames`, where each entry is `(frame index, detections)`.
pub fn run(frames: &[(usize, Vec<Detection>)], params: &TrackerParams) -> Result<TrackingResult, TrackError> {
    let mut tracker = Tracker::new(*params)?;
    for (frame, dets) in frames {
        tracker.step(*frame, dets)?;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: usize, c: Vec3, footprint: Vec<u32>) -> Detection {
        Detection { frame, centroid: c, footprint, class: "zebra".into(), instance_id: 1 }
    }

    #[test]
    fn cost_examples() {
        let p = TrackerParams::default();
        // Footprints {0,1} and {0..3}: IoU 0.5.
        let d = det(0, Vec3::new(4.0, 0.0, 0.0), vec![0, 1]);
        let c = association_cost(&d, &Vec3::zeros(), &[0, 1, 2, 3], "zebra", &p).unwrap();
        assert!((c - 0.5).abs() < 1e-12);

        // IoU 0.1 with normalised distance 0.2: admitted by the soft gate.
        let mask: Vec<u32> = (0..10).collect();
        let d = det(0, Vec3::new(1.6, 0.0, 0.0), vec![0]);
        assert!(association_cost(&d, &Vec3::zeros(), &mask, "zebra", &p).is_some());
        let d = det(0, Vec3::new(4.0, 0.0, 0.0), vec![0]);
        assert!(association_cost(&d, &Vec3::zeros(), &mask, "zebra", &p).is_none());
        let d = det(0, Vec3::zeros(), mask.clone());
        assert!(association_cost(&d, &Vec3::zeros(), &mask, "rhino", &p).is_none());
        let d = det(0, Vec3::new(16.5, 0.0, 0.0), mask.clone());
        assert!(association_cost(&d, &Vec3::zeros(), &mask, "zebra", &p).is_none());
    }

    #[test]
    fn stationary_detection_one_track() {
        let frames: Vec<(usize, Vec<Detection>)> = (0..5).map(|f| (f, vec![det(f, Vec3::new(1.0, 2.0, 3.0), vec![5, 6, 7])])).collect();
        let r = run(&frames, &TrackerParams::default()).unwrap();
        assert_eq!(r.track_count, 1);
        assert_eq!(r.records.records.len(), 5);
        assert_eq!(r.events, vec![TrackEvent { frame: 0, track_id: 1, kind: TrackEventKind::Created }]);
    }

    #[test]
    fn dropout_restores_identity_via_dormant_pool() {
        let pos = |f: usize| Vec3::new(0.1 * f as f64, 0.0, 0.0);
        let frames: Vec<(usize, Vec<Detection>)> =
            (0..80).map(|f| (f, if (10..40).contains(&f) { vec![] } else { vec![det(f, pos(f), vec![1, 2, 3])] })).collect();
        let r = run(&frames, &TrackerParams::default()).unwrap();
        assert_eq!(r.track_count, 1);
        let kinds: Vec<TrackEventKind> = r.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![TrackEventKind::Created, TrackEventKind::Demoted, TrackEventKind::Reactivated]);
        assert_eq!(r.events[1].frame, 29);
        assert_eq!(r.events[2].frame, 40);

        let no_dormant = TrackerParams { enable_dormant: false, ..Default::default() };
        assert_eq!(run(&frames, &no_dormant).unwrap().track_count, 2);
        let ablation = TrackerParams { ablation: true, ..Default::default() };
        assert_eq!(run(&frames, &ablation).unwrap().track_count, 2);
    }

    #[test]
    fn dormant_tracks_expire() {
        let mut frames = vec![(0usize, vec![det(0, Vec3::zeros(), vec![1])])];
        frames.extend((1..200).map(|f| (f, vec![])));
        let r = run(&frames, &TrackerParams::default()).unwrap();
        let removed = r.events.iter().find(|e| e.kind == TrackEventKind::Removed).unwrap();
        assert_eq!(removed.frame, 20 + 101);
    }

    #[test]
    fn rejects_bad_input() {
        let mut t = Tracker::new(TrackerParams::default()).unwrap();
        assert!(matches!(t.step(3, &[det(2, Vec3::zeros(), vec![])]), Err(TrackError::FrameMismatch { .. })));
        t.step(3, &[]).unwrap();
        assert!(matches!(t.step(3, &[]), Err(TrackError::OutOfOrder { .. })));
        assert!(Tracker::new(TrackerParams { lambda_2d: 0.5, ..Default::default() }).is_err());
        assert!(run(&[], &TrackerParams::default()).unwrap().records.records.is_empty());
    }

    #[test]
    fn class_gate_never_links_classes() {
        let mut frames = Vec::new();
        for f in 0..10 {
            let class = if f < 5 { "zebra" } else { "rhino" };
            frames.push((f, vec![Detection { frame: f, centroid: Vec3::zeros(), footprint: vec![1, 2], class: class.into(), instance_id: 1 }]));
        }
        let r = run(&frames, &TrackerParams::default()).unwrap();
        for id in r.records.track_ids() {
            let classes: std::collections::BTreeSet<&str> =
                r.records.records.iter().filter(|x| x.track_id == id).map(|x| x.class.as_str()).collect();
            assert_eq!(classes.len(), 1);
        }
        assert_eq!(r.track_count, 2);
    }
}
