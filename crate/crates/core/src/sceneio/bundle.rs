use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::Path;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::records::TrackRecordFile;
use super::telemetry::{parse_srt_telemetry, parse_telemetry_csv, write_telemetry_csv, TelemetryTrack};
use super::{read_json, to_json_bytes, SceneIoError, GT_TRACKS_FILE};
use crate::frame::{InstanceMask, PointmapFrame};
use crate::geometry::{CameraPose, GimbalSample, Intrinsics};

const POINTMAP_MAGIC: &[u8; 4] = b"WLPM";
const POINTMAP_HEADER: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub scene_id: String,
    pub intrinsics: Intrinsics,
    pub fps: f64,
    pub frame_count: usize,
    /// Multiplier that maps the default distance thresholds onto this scene's units.
    pub scale_hint: f64,
}

#[derive(Clone, Debug)]
pub struct FrameData {
    pub pointmap: PointmapFrame,
    pub mask: InstanceMask,
    pub gimbal: Option<GimbalSample>,
}

impl FrameData {
    pub fn index(&self) -> usize {
        self.pointmap.frame
    }

    pub fn pose(&self) -> &CameraPose {
        &self.pointmap.pose
    }
}

#[derive(Clone, Debug)]
pub struct SceneBundle {
    pub meta: SceneMeta,
    pub frames: Vec<FrameData>,
    pub telemetry: Option<TelemetryTrack>,
    pub ground_truth: Option<TrackRecordFile>,
}

impl SceneBundle {
    pub fn validate(&self) -> Result<(), SceneIoError> {
        let k = &self.meta.intrinsics;
        k.validate().map_err(|e| SceneIoError::Validation(e.to_string()))?;
        if self.frames.len() != self.meta.frame_count {
            return Err(SceneIoError::Validation(format!(
                "meta declares {} frames, bundle holds {}",
                self.meta.frame_count,
                self.frames.len()
            )));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.pointmap.frame != i || f.mask.frame != i || f.pointmap.pose.frame != i {
                return Err(SceneIoError::Validation(format!("frame indices not contiguous at position {i}")));
            }
            if (f.pointmap.width, f.pointmap.height) != (k.width, k.height) || (f.mask.width, f.mask.height) != (k.width, k.height) {
                return Err(SceneIoError::Validation(format!("frame {i}: grid size does not match intrinsics {}x{}", k.width, k.height)));
            }
            f.mask.validate().map_err(|e| SceneIoError::Validation(e.to_string()))?;
        }
        Ok(())
    }

    pub fn poses(&self) -> Vec<CameraPose> {
        self.frames.iter().map(|f| f.pointmap.pose).collect()
    }

    /// Gimbal sample nearest in frame index to `frame` (earlier wins ties).
    pub fn nearest_gimbal(&self, frame: usize) -> Option<GimbalSample> {
        self.telemetry.as_ref()?.nearest(frame)
    }
}

#[derive(Serialize, Deserialize)]
struct InstancesFile {
    frames: BTreeMap<usize, BTreeMap<u16, String>>,
}

fn frame_path(dir: &Path, i: usize, suffix: &str) -> std::path::PathBuf {
    dir.join("frames").join(format!("{i:06}.{suffix}"))
}

pub fn load_scene(dir: &Path) -> Result<SceneBundle, SceneIoError> {
    let meta: SceneMeta = read_json(&dir.join("meta.json"))?;
    meta.intrinsics.validate().map_err(|e| SceneIoError::Validation(e.to_string()))?;
    let instances: InstancesFile = read_json(&dir.join("instances.json"))?;

    let telemetry = load_telemetry(dir)?;
    let mut frames = Vec::with_capacity(meta.frame_count);
    for i in 0..meta.frame_count {
        let pose = read_pose(&frame_path(dir, i, "pose.txt"), i)?;
        let pts_path = frame_path(dir, i, "pts");
        let (w, h, points) = read_pointmap(&pts_path)?;
        let pointmap = PointmapFrame::new(i, w, h, points, pose).map_err(|e| SceneIoError::Validation(e.to_string()))?;
        let mask_path = frame_path(dir, i, "mask.png");
        let (mw, mh, ids) = read_mask_png(&mask_path)?;
        let classes = instances.frames.get(&i).cloned().unwrap_or_default();
        let mask = InstanceMask { frame: i, width: mw, height: mh, ids, classes };
        let gimbal = telemetry.as_ref().and_then(|t| t.at(i));
        frames.push(FrameData { pointmap, mask, gimbal });
    }
    let gt_path = dir.join(GT_TRACKS_FILE);
    let ground_truth = if gt_path.exists() { Some(read_json(&gt_path)?) } else { None };
    let bundle = SceneBundle { meta, frames, telemetry, ground_truth };
    bundle.validate()?;
    Ok(bundle)
}

fn load_telemetry(dir: &Path) -> Result<Option<TelemetryTrack>, SceneIoError> {
    let csv = dir.join("telemetry.csv");
    if csv.exists() {
        let text = std::fs::read_to_string(&csv).map_err(|e| SceneIoError::io(&csv, e))?;
        return parse_telemetry_csv(&text).map(Some);
    }
    let srt = dir.join("telemetry.srt");
    if srt.exists() {
        let text = std::fs::read_to_string(&srt).map_err(|e| SceneIoError::io(&srt, e))?;
        let (track, skipped) = parse_srt_telemetry(&text)?;
        if skipped > 0 {
            log::warn!("{}: skipped {skipped} telemetry blocks without pitch/roll", srt.display());
        }
        return Ok(Some(track));
    }
    Ok(None)
}

pub fn save_scene(bundle: &SceneBundle, dir: &Path) -> Result<(), SceneIoError> {
    bundle.validate()?;
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| SceneIoError::io(&frames_dir, e))?;
    write(&dir.join("meta.json"), &to_json_bytes(&bundle.meta))?;
    let instances = InstancesFile {
        frames: bundle.frames.iter().map(|f| (f.index(), f.mask.classes.clone())).collect(),
    };
    write(&dir.join("instances.json"), &to_json_bytes(&instances))?;
    for f in &bundle.frames {
        let i = f.index();
        write(&frame_path(dir, i, "pts"), &encode_pointmap(&f.pointmap))?;
        write(&frame_path(dir, i, "mask.png"), &encode_mask_png(&f.mask))?;
        write(&frame_path(dir, i, "pose.txt"), encode_pose(&f.pointmap.pose).as_bytes())?;
    }
    if let Some(t) = &bundle.telemetry {
        write(&dir.join("telemetry.csv"), write_telemetry_csv(t).as_bytes())?;
    }
    if let Some(gt) = &bundle.ground_truth {
        write(&dir.join(GT_TRACKS_FILE), &to_json_bytes(gt))?;
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SceneIoError> {
    std::fs::write(path, bytes).map_err(|e| SceneIoError::io(path, e))
}

pub(crate) fn encode_pointmap(p: &PointmapFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(POINTMAP_HEADER + p.points.len() * 12);
    out.extend_from_slice(POINTMAP_MAGIC);
    out.extend_from_slice(&p.width.to_le_bytes());
    out.extend_from_slice(&p.height.to_le_bytes());
    for xyz in &p.points {
        for c in xyz {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

fn read_pointmap(path: &Path) -> Result<(u32, u32, Vec<[f32; 3]>), SceneIoError> {
    let bytes = std::fs::read(path).map_err(|e| SceneIoError::io(path, e))?;
    if bytes.len() < POINTMAP_HEADER {
        return Err(SceneIoError::format(path, bytes.len() as u64, "truncated header"));
    }
    if &bytes[..4] != POINTMAP_MAGIC {
        return Err(SceneIoError::format(path, 0, "bad magic, expected WLPM"));
    }
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let expected = POINTMAP_HEADER + w as usize * h as usize * 12;
    if bytes.len() != expected {
        return Err(SceneIoError::format(
            path,
            bytes.len().min(expected) as u64,
            format!("expected {expected} bytes for {w}x{h} grid, found {}", bytes.len()),
        ));
    }
    let points = bytes[POINTMAP_HEADER..]
        .chunks_exact(12)
        .map(|c| {
            let f = |o: usize| f32::from_le_bytes(c[o..o + 4].try_into().unwrap());
            [f(0), f(4), f(8)]
        })
        .collect();
    Ok((w, h, points))
}

pub(crate) fn encode_mask_png(m: &InstanceMask) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, m.width, m.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().expect("png header into memory");
        let data: Vec<u8> = m.ids.iter().flat_map(|v| v.to_be_bytes()).collect();
        writer.write_image_data(&data).expect("png data into memory");
    }
    out
}

fn read_mask_png(path: &Path) -> Result<(u32, u32, Vec<u16>), SceneIoError> {
    let bytes = std::fs::read(path).map_err(|e| SceneIoError::io(path, e))?;
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| SceneIoError::format(path, 0, e.to_string()))?;
    let info = reader.info();
    let (w, h) = (info.width, info.height);
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(SceneIoError::format(path, 0, "mask must be 16-bit grayscale"));
    }
    let size = reader.output_buffer_size().ok_or_else(|| SceneIoError::format(path, 0, "mask too large"))?;
    let mut buf = vec![0u8; size];
    reader.next_frame(&mut buf).map_err(|e| SceneIoError::format(path, 0, e.to_string()))?;
    let ids = buf.chunks_exact(2).take(w as usize * h as usize).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok((w, h, ids))
}

pub(crate) fn encode_pose(p: &CameraPose) -> String {
    let m = p.matrix4();
    let mut s = String::new();
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| format!("{}", m[(r, c)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn read_pose(path: &Path, frame: usize) -> Result<CameraPose, SceneIoError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneIoError::io(path, e))?;
    let values: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse::<f64>).collect();
    let values = values.map_err(|e| SceneIoError::format(path, 0, format!("pose value: {e}")))?;
    if values.len() != 16 {
        return Err(SceneIoError::format(path, 0, format!("expected 16 pose values, found {}", values.len())));
    }
    let m = Matrix4::from_row_slice(&values);
    Ok(CameraPose::from_matrix4(&m, frame))
}
