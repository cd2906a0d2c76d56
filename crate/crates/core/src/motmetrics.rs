//! CLEAR-MOT and identity metrics on 3D centroid tracks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sceneio::{TrackRecord, TrackRecordFile};
use crate::tracking::{solve, CostMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum MotError {
    #[error("ground truth has no records")]
    EmptyGroundTruth,
    #[error("no match threshold given and ground truth carries no box dimensions")]
    NoThreshold,
    #[error("match threshold must be positive, got {0}")]
    BadThreshold(f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MotReport {
    pub mota: f64,
    pub idf1: f64,
    pub recall: f64,
    pub precision: f64,
    pub ids: usize,
    pub frag: usize,
    /// Distinct predicted identities.
    pub pred: usize,
    /// Distinct ground-truth identities.
    pub gt_ids: usize,
    pub gt: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub idtp: usize,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<String, MotReport>,
}

impl MotReport {
    /// One-line-per-row table with the columns MOTA IDF1 IDS Frag Rec Pred.
    pub fn table(&self) -> String {
        let mut s = format!("{:<12} {:>7} {:>7} {:>5} {:>5} {:>7} {:>5} {:>4}\n", "class", "MOTA", "IDF1", "IDS", "Frag", "Rec", "Pred", "GT");
        let row = |name: &str, r: &MotReport| {
            format!("{:<12} {:>7.3} {:>7.3} {:>5} {:>5} {:>7.3} {:>5} {:>4}\n", name, r.mota, r.idf1, r.ids, r.frag, r.recall, r.pred, r.gt_ids)
        };
        for (class, r) in &self.per_class {
            s.push_str(&row(class, r));
        }
        s.push_str(&row("all", self));
        s
    }
}

/// Half the smallest ground-truth body length (largest box dimension).
pub fn default_threshold(gt: &TrackRecordFile) -> Option<f64> {
    gt.records.iter().filter_map(|r| r.dims.map(|d| d.max())).min_by(f64::total_cmp).map(|l| l / 2.0)
}

fn by_frame(records: &[&TrackRecord]) -> BTreeMap<usize, Vec<usize>> {
    let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        m.entry(r.frame).or_default().push(i);
    }
    m
}

fn within(a: &TrackRecord, b: &TrackRecord, threshold: f64) -> Option<f64> {
    let d = (a.centroid - b.centroid).norm();
    (a.class == b.class && d < threshold).then_some(d)
}

fn evaluate_subset(gt: &[&TrackRecord], pred: &[&TrackRecord], threshold: f64) -> MotReport {
    let gt_frames = by_frame(gt);
    let pred_frames = by_frame(pred);
    let frames: BTreeSet<usize> = gt_frames.keys().chain(pred_frames.keys()).copied().collect();
    let gt_ids: Vec<u32> = gt.iter().map(|r| r.track_id).collect::<BTreeSet<_>>().into_iter().collect();
    let pred_ids: Vec<u32> = pred.iter().map(|r| r.track_id).collect::<BTreeSet<_>>().into_iter().collect();
    let gi = |id: u32| gt_ids.binary_search(&id).unwrap();
    let pi = |id: u32| pred_ids.binary_search(&id).unwrap();

    let (mut tp, mut fp, mut fn_, mut ids) = (0, 0, 0, 0);
    let mut last_match: BTreeMap<u32, u32> = BTreeMap::new();
    // Per GT id: tracked flag per frame where it is present.
    let mut coverage: BTreeMap<u32, Vec<bool>> = BTreeMap::new();
    let mut co = vec![vec![0usize; pred_ids.len()]; gt_ids.len()];
    let empty = Vec::new();
    for f in frames {
        let g = gt_frames.get(&f).unwrap_or(&empty);
        let p = pred_frames.get(&f).unwrap_or(&empty);
        let mut m = CostMatrix::new(g.len(), p.len());
        for (a, &gi_) in g.iter().enumerate() {
            for (b, &pi_) in p.iter().enumerate() {
                let d = within(gt[gi_], pred[pi_], threshold);
                m.set(a, b, d);
                if d.is_some() {
                    co[gi(gt[gi_].track_id)][pi(pred[pi_].track_id)] += 1;
                }
            }
        }
        let a = solve(&m);
        tp += a.pairs.len();
        fp += p.len() - a.pairs.len();
        fn_ += g.len() - a.pairs.len();
        for (a_idx, &gi_) in g.iter().enumerate() {
            let gid = gt[gi_].track_id;
            let matched = a.col_of(a_idx).map(|b| pred[p[b]].track_id);
            coverage.entry(gid).or_default().push(matched.is_some());
            if let Some(pid) = matched {
                if last_match.insert(gid, pid).is_some_and(|prev| prev != pid) {
                    ids += 1;
                }
            }
        }
    }

    let frag = coverage
        .values()
        .map(|flags| {
            let Some(last) = flags.iter().rposition(|&t| t) else { return 0 };
            flags[..last].windows(2).filter(|w| w[0] && !w[1]).count()
        })
        .sum();

    // Identity bijection maximising co-occurring matches.
    let mut idm = CostMatrix::new(gt_ids.len(), pred_ids.len());
    for (a, row) in co.iter().enumerate() {
        for (b, &n) in row.iter().enumerate() {
            if n > 0 {
                idm.set(a, b, Some(-(n as f64)));
            }
        }
    }
    let idtp: usize = solve(&idm).pairs.iter().map(|&(a, b)| co[a][b]).sum();

    let n_gt = gt.len();
    let n_pred = pred.len();
    MotReport {
        mota: 1.0 - (fn_ + fp + ids) as f64 / n_gt as f64,
        idf1: if n_gt + n_pred == 0 { 0.0 } else { 2.0 * idtp as f64 / (n_gt + n_pred) as f64 },
        recall: tp as f64 / n_gt as f64,
        precision: if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 },
        ids,
        frag,
        pred: pred_ids.len(),
        gt_ids: gt_ids.len(),
        gt: n_gt,
        tp,
        fp,
        fn_,
        idtp,
        threshold,
        per_class: BTreeMap::new(),
    }
}

/// Evaluates `pred` against `gt`. Without an explicit threshold, half the
/// smallest ground-truth body length is used.
pub fn evaluate(gt: &TrackRecordFile, pred: &TrackRecordFile, threshold: Option<f64>) -> Result<MotReport, MotError> {
    if gt.records.is_empty() {
        return Err(MotError::EmptyGroundTruth);
    }
    let threshold = match threshold {
        Some(t) => t,
        None => default_threshold(gt).ok_or(MotError::NoThreshold)?,
    };
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(MotError::BadThreshold(threshold));
    }
    let g: Vec<&TrackRecord> = gt.records.iter().collect();
    let p: Vec<&TrackRecord> = pred.records.iter().collect();
    let mut report = evaluate_subset(&g, &p, threshold);
    let classes: BTreeSet<&str> = gt.records.iter().map(|r| r.class.as_str()).collect();
    if classes.len() > 1 {
        for class in classes {
            let gc: Vec<&TrackRecord> = g.iter().copied().filter(|r| r.class == class).collect();
            let pc: Vec<&TrackRecord> = p.iter().copied().filter(|r| r.class == class).collect();
            report.per_class.insert(class.to_string(), evaluate_subset(&gc, &pc, threshold));
        }
    }
    Ok(report)
}
