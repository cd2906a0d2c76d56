use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::coverage::{coverage_and_grade, Grade};
use super::exemplars::select_exemplars;
use super::occlusion::{effective_visibility, mask_overlap_2d, occlusion_fraction, rasterize_box_hull};
use super::quality::quality_score;
use super::visibility::face_visibility;
use super::{QualityWeights, ViewError};
use crate::exec::Execution;
use crate::frame::InstanceMask;
use crate::geometry::{CameraPose, FaceLabel, Intrinsics, OrientedBox};
use crate::sceneio::AnnotationStore;

/// One row of the per-frame matrices; columns follow [`FaceLabel::SCORED`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFrame {
    pub frame: usize,
    pub dot: [f64; 5],
    pub visible: [bool; 5],
    pub classified: [bool; 5],
    pub quality: [f64; 5],
    pub occlusion: [f64; 5],
    pub effective: [f64; 5],
    /// Face with the highest effective visibility, if any is visible.
    pub dominant: Option<FaceLabel>,
    /// Largest share of this animal's projected box footprint covered by the
    /// mask of a nearer animal, in percent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_overlap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExemplarPick {
    pub frame: usize,
    pub score: f64,
    pub below_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilmstripEntry {
    pub face: FaceLabel,
    pub picks: Vec<ExemplarPick>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub track_id: u32,
    pub class: String,
    pub faces: [FaceLabel; 5],
    pub frames: Vec<ReportFrame>,
    pub coverage: [f64; 5],
    pub diversity: f64,
    pub max_quality: [f64; 5],
    pub covered_viewpoints: usize,
    pub grade: Grade,
    pub never_seen: Vec<FaceLabel>,
    pub mean_effective_visibility: f64,
    pub hard_to_photograph: bool,
    pub filmstrip: Vec<FilmstripEntry>,
}

impl CoverageReport {
    pub fn exemplars(&self, face: FaceLabel) -> &[ExemplarPick] {
        self.filmstrip.iter().find(|e| e.face == face).map_or(&[], |e| &e.picks)
    }

    /// Quality heatmap: one row per frame, one column per scored face.
    pub fn heatmap_csv(&self) -> String {
        let mut s = String::from("frame");
        for f in &self.faces {
            s.push(',');
            s.push_str(f.as_str());
        }
        s.push('\n');
        for row in &self.frames {
            s.push_str(&row.frame.to_string());
            for q in &row.quality {
                let _ = write!(s, ",{q:.6}");
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "track {} ({}): grade {}, {}/5 viewpoints covered", self.track_id, self.class, self.grade, self.covered_viewpoints);
        let _ = writeln!(s, "frames: {}  diversity: {:.3}  mean effective visibility: {:.3}", self.frames.len(), self.diversity, self.mean_effective_visibility);
        for (i, f) in self.faces.iter().enumerate() {
            let _ = writeln!(s, "  {:<6} coverage {:.3}  best quality {:.3}", f.as_str(), self.coverage[i], self.max_quality[i]);
        }
        if !self.never_seen.is_empty() {
            let names: Vec<&str> = self.never_seen.iter().map(|f| f.as_str()).collect();
            let _ = writeln!(s, "never seen: {}", names.join(", "));
        }
        if self.hard_to_photograph {
            s.push_str("hard to photograph\n");
        }
        s
    }
}

/// Scene context for report assembly. `poses` and `masks` are indexed by frame.
#[derive(Clone, Copy)]
pub struct ReportScene<'a> {
    pub poses: &'a [CameraPose],
    pub intrinsics: &'a Intrinsics,
    pub masks: Option<&'a [InstanceMask]>,
}

fn frame_overlap(store: &AnnotationStore, track_id: u32, target: &OrientedBox, mask: Option<&InstanceMask>, scene: &ReportScene<'_>, pose: &CameraPose) -> Option<f64> {
    let mask = mask?;
    let cam = pose.centre();
    let own_dist = (target.center - cam).norm();
    let mut footprint: Option<Vec<u32>> = None;
    let mut best: Option<f64> = None;
    for (&other_id, t) in store.tracks() {
        if other_id == track_id {
            continue;
        }
        let Some(e) = t.frames.get(&target.frame) else { continue };
        let Some(other_inst) = e.instance_id else { continue };
        if (e.bbox.center - cam).norm() >= own_dist {
            continue;
        }
        let own = footprint.get_or_insert_with(|| rasterize_box_hull(target, pose, scene.intrinsics));
        if let Some(p) = mask_overlap_2d(own, &mask.pixels_of(other_inst)) {
            best = Some(best.map_or(p, |b| b.max(p)));
        }
    }
    best
}

pub fn build_report(
    store: &AnnotationStore,
    track_id: u32,
    scene: ReportScene<'_>,
    weights: &QualityWeights,
    exec: Execution,
) -> Result<CoverageReport, ViewError> {
    weights.validate()?;
    let track = store.track(track_id).ok_or(ViewError::UnknownTrack(track_id))?;
    if track.frames.is_empty() {
        return Err(ViewError::EmptyTrack);
    }
    let missing: Vec<usize> = track.frames.iter().filter(|(_, e)| e.faces.is_none()).map(|(f, _)| *f).collect();
    if !missing.is_empty() {
        return Err(ViewError::MissingFaces(missing));
    }
    let entries: Vec<_> = track.frames.iter().map(|(f, e)| (*f, e)).collect();
    let rows = exec.map(&entries, |(frame, e)| -> Result<ReportFrame, ViewError> {
        let pose = scene.poses.get(*frame).ok_or(ViewError::MissingPose(*frame))?;
        let faces = e.faces.expect("checked above");
        let cam = pose.centre();
        let vis = face_visibility(&e.bbox, &faces, &cam, weights.visibility_threshold)?;
        let others: Vec<OrientedBox> = store.boxes_in_frame(*frame).into_iter().filter(|b| b.track_id != track_id).collect();
        let mut row = ReportFrame {
            frame: *frame,
            dot: [0.0; 5],
            visible: [false; 5],
            classified: [false; 5],
            quality: [0.0; 5],
            occlusion: [0.0; 5],
            effective: [0.0; 5],
            dominant: None,
            mask_overlap: None,
        };
        for (i, v) in vis.iter().enumerate() {
            row.dot[i] = v.dot;
            row.visible[i] = v.visible;
            row.classified[i] = v.classified;
            if v.visible {
                let q = quality_score(&e.bbox, v.face, pose, scene.intrinsics, weights.area_gain);
                row.quality[i] = q.q;
                row.occlusion[i] = occlusion_fraction(&e.bbox, v.face, &others, &cam, weights.occlusion_grid);
                row.effective[i] = effective_visibility(q.v, row.occlusion[i]);
            }
        }
        let best = (0..5).max_by(|&a, &b| row.effective[a].total_cmp(&row.effective[b]).then(b.cmp(&a))).expect("five faces");
        row.dominant = (row.effective[best] > 0.0).then_some(FaceLabel::SCORED[best]);
        let mask = scene.masks.and_then(|m| m.get(*frame));
        row.mask_overlap = frame_overlap(store, track_id, &e.bbox, mask, &scene, pose);
        Ok(row)
    });
    let frames: Vec<ReportFrame> = rows.into_iter().collect::<Result<_, _>>()?;

    let visible: Vec<[bool; 5]> = frames.iter().map(|r| r.visible).collect();
    let quality: Vec<[f64; 5]> = frames.iter().map(|r| r.quality).collect();
    let effective: Vec<[f64; 5]> = frames.iter().map(|r| r.effective).collect();
    let summary = coverage_and_grade(&visible, &quality, &effective, weights);

    let filmstrip = FaceLabel::SCORED
        .iter()
        .enumerate()
        .map(|(i, &face)| {
            let scores: Vec<(usize, f64)> = frames.iter().map(|r| (r.frame, r.quality[i])).collect();
            let picks = select_exemplars(&scores, weights.exemplar_min_separation, weights.exemplars_per_face)
                .into_iter()
                .map(|frame| {
                    let score = scores.iter().find(|(f, _)| *f == frame).map_or(0.0, |s| s.1);
                    ExemplarPick { frame, score, below_threshold: score < weights.never_seen_threshold }
                })
                .collect();
            FilmstripEntry { face, picks }
        })
        .collect();

    Ok(CoverageReport {
        track_id,
        class: track.class.clone(),
        faces: FaceLabel::SCORED,
        frames,
        coverage: summary.coverage,
        diversity: summary.diversity,
        max_quality: summary.max_quality,
        covered_viewpoints: summary.covered_viewpoints,
        grade: summary.grade,
        never_seen: summary.never_seen.iter().map(|&i| FaceLabel::SCORED[i]).collect(),
        mean_effective_visibility: summary.mean_effective_visibility,
        hard_to_photograph: summary.hard_to_photograph,
        filmstrip,
    })
}
