//! Gimbal telemetry: subtitle-style (SRT) streams and a plain CSV form.

use serde::{Deserialize, Serialize};

use super::SceneIoError;
use crate::geometry::GimbalSample;

const PITCH_KEYS: [&str; 2] = ["gb_pitch", "gimbal_pitch"];
const ROLL_KEYS: [&str; 2] = ["gb_roll", "gimbal_roll"];
const CSV_HEADER: &str = "frame,pitch_deg,roll_deg";

/// Gimbal samples ordered by strictly increasing frame index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TelemetryTrack {
    samples: Vec<GimbalSample>,
}

impl TelemetryTrack {
    pub fn new(samples: Vec<GimbalSample>) -> Result<Self, SceneIoError> {
        if let Some(w) = samples.windows(2).find(|w| w[1].frame <= w[0].frame) {
            return Err(SceneIoError::Telemetry(format!("frame {} does not increase after {}", w[1].frame, w[0].frame)));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[GimbalSample] {
        &self.samples
    }

    pub fn at(&self, frame: usize) -> Option<GimbalSample> {
        self.samples.binary_search_by_key(&frame, |s| s.frame).ok().map(|i| self.samples[i])
    }

    /// Sample closest in frame index; the earlier one wins a tie.
    pub fn nearest(&self, frame: usize) -> Option<GimbalSample> {
        let i = self.samples.partition_point(|s| s.frame < frame);
        let after = self.samples.get(i);
        let before = i.checked_sub(1).and_then(|j| self.samples.get(j));
        match (before, after) {
            (Some(b), Some(a)) => Some(if frame - b.frame <= a.frame - frame { *b } else { *a }),
            (b, a) => b.or(a).copied(),
        }
    }
}

/// Parses an SRT telemetry stream. Returns the samples and the number of
/// blocks skipped for lacking a parsable pitch/roll.
///
/// The frame index of a block is its SRT sequence number minus one when the
/// block starts with one, otherwise its position in the stream.
pub fn parse_srt_telemetry(text: &str) -> Result<(TelemetryTrack, usize), SceneIoError> {
    let normalized = text.replace("\r\n", "\n");
    let blocks = normalized.split("\n\n").map(str::trim).filter(|b| !b.is_empty());
    let mut samples: Vec<GimbalSample> = Vec::new();
    let mut skipped = 0;
    for (ordinal, block) in blocks.enumerate() {
        let first = block.lines().next().unwrap_or("").trim();
        let frame = first.parse::<usize>().ok().and_then(|n| n.checked_sub(1)).unwrap_or(ordinal);
        let pitch = find_value(block, &PITCH_KEYS);
        let roll = find_value(block, &ROLL_KEYS);
        let sample = match (pitch, roll) {
            (Some(p), Some(r)) => GimbalSample::new(frame, p, r).ok(),
            _ => None,
        };
        match sample {
            Some(s) if samples.last().is_none_or(|l| l.frame < s.frame) => samples.push(s),
            _ => skipped += 1,
        }
    }
    if samples.is_empty() {
        return Err(SceneIoError::Telemetry("no block with parsable gimbal pitch and roll".into()));
    }
    Ok((TelemetryTrack { samples }, skipped))
}

/// Finds `key: <number>` for any of `keys` in free-form text.
fn find_value(text: &str, keys: &[&str]) -> Option<f64> {
    for key in keys {
        let mut rest = text;
        while let Some(pos) = rest.find(key) {
            let after = &rest[pos + key.len()..];
            let boundary_ok = rest[..pos].chars().next_back().is_none_or(|c| !c.is_alphanumeric() && c != '_');
            let trimmed = after.trim_start();
            if boundary_ok {
                if let Some(value) = trimmed.strip_prefix(':') {
                    let value = value.trim_start();
                    let end = value
                        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E')))
                        .unwrap_or(value.len());
                    if let Ok(v) = value[..end].parse::<f64>() {
                        if v.is_finite() {
                            return Some(v);
                        }
                    }
                }
            }
            rest = after;
        }
    }
    None
}

pub fn parse_telemetry_csv(text: &str) -> Result<TelemetryTrack, SceneIoError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(SceneIoError::Telemetry(format!("expected header `{CSV_HEADER}`, found {other:?}"))),
    }
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || SceneIoError::Telemetry(format!("line {}: `{line}`", n + 2));
        if fields.len() != 3 {
            return Err(bad());
        }
        let frame = fields[0].parse().map_err(|_| bad())?;
        let pitch = fields[1].parse().map_err(|_| bad())?;
        let roll = fields[2].parse().map_err(|_| bad())?;
        samples.push(GimbalSample::new(frame, pitch, roll).map_err(|e| SceneIoError::Telemetry(e.to_string()))?);
    }
    TelemetryTrack::new(samples)
}

pub fn write_telemetry_csv(t: &TelemetryTrack) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for g in &t.samples {
        s.push_str(&format!("{},{},{}\n", g.frame, g.pitch_deg, g.roll_deg));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOCK: &str = "1\n00:00:00,000 --> 00:00:00,033\n[iso: 100] [gb_yaw: 12.0 gb_pitch: -57.0 gb_roll: 0.0]\n";

    #[test]
    fn single_block() {
        let (t, skipped) = parse_srt_telemetry(BLOCK).unwrap();
        assert_eq!(skipped, 0);
        assert_eq!(t.samples(), &[GimbalSample { frame: 0, pitch_deg: -57.0, roll_deg: 0.0 }]);
    }

    #[test]
    fn empty_text_fails() {
        assert!(matches!(parse_srt_telemetry(""), Err(SceneIoError::Telemetry(_))));
    }

    #[test]
    fn malformed_middle_block_is_skipped() {
        let text = format!(
            "{BLOCK}\n2\n00:00:00,033 --> 00:00:00,066\n[gb_pitch: oops]\n\n3\n00:00:00,066 --> 00:00:00,100\ngb_pitch: -16.5 gb_roll: 1.25\n"
        );
        let (t, skipped) = parse_srt_telemetry(&text).unwrap();
        assert_eq!(skipped, 1);
        assert_eq!(t.samples().len(), 2);
        assert_eq!(t.samples()[1], GimbalSample { frame: 2, pitch_deg: -16.5, roll_deg: 1.25 });
    }

    #[test]
    fn csv_round_trip_and_nearest() {
        let t = TelemetryTrack::new(vec![
            GimbalSample::new(0, -45.0, 0.0).unwrap(),
            GimbalSample::new(4, -50.0, 0.5).unwrap(),
        ])
        .unwrap();
        let back = parse_telemetry_csv(&write_telemetry_csv(&t)).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.nearest(2).unwrap().frame, 0);
        assert_eq!(t.nearest(3).unwrap().frame, 4);
        assert_eq!(t.nearest(100).unwrap().frame, 4);
        assert!(t.at(2).is_none());
    }

    #[test]
    fn key_prefix_does_not_match_longer_names() {
        assert_eq!(find_value("xgb_pitch: 5 gb_pitch: -3", &["gb_pitch"]), Some(-3.0));
    }
}
