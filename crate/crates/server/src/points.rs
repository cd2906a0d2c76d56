use std::collections::BTreeMap;

use serde::Serialize;

use aerolift_core::{InstanceMask, PointmapFrame};

/// Point payload for one frame. Arrays are parallel: point `i` has
/// position `positions[3i..3i+3]`, source pixel `pixels[i]` and mask id `instances[i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointPayload {
    pub frame: usize,
    pub stride: usize,
    pub count: usize,
    pub positions: Vec<f32>,
    pub pixels: Vec<u32>,
    pub instances: Vec<u16>,
    /// Mask id to track id, for the instances annotated in this frame.
    pub tracks: BTreeMap<u16, u32>,
    /// Indices into the point arrays belonging to the selected track.
    pub highlight: Vec<u32>,
}

/// Keeps every `stride`-th valid pixel in raster order. Points whose mask id
/// equals `selected` are listed in `highlight`.
pub fn decimate_points(frame: &PointmapFrame, mask: &InstanceMask, stride: usize, selected: Option<u16>) -> PointPayload {
    let stride = stride.max(1);
    let mut out = PointPayload {
        frame: frame.frame,
        stride,
        count: 0,
        positions: Vec::new(),
        pixels: Vec::new(),
        instances: Vec::new(),
        tracks: BTreeMap::new(),
        highlight: Vec::new(),
    };
    let valid = (0..frame.points.len()).filter(|&i| frame.is_valid(i));
    for idx in valid.step_by(stride) {
        let id = mask.ids[idx];
        if selected.is_some_and(|s| s != 0 && s == id) {
            out.highlight.push(out.pixels.len() as u32);
        }
        out.positions.extend_from_slice(&frame.points[idx]);
        out.pixels.push(idx as u32);
        out.instances.push(id);
    }
    out.count = out.pixels.len();
    out
}
