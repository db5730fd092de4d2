//! Binary little-endian PLY export of scene point maps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointMap;

/// Bytes per vertex record: three float32 coordinates and three uchar colors.
pub const VERTEX_RECORD_BYTES: usize = 15;

pub fn ply_header(vertex_count: usize) -> String {
    format!(
        "ply\n\
         format binary_little_endian 1.0\n\
         element vertex {vertex_count}\n\
         property float x\n\
         property float y\n\
         property float z\n\
         property uchar red\n\
         property uchar green\n\
         property uchar blue\n\
         end_header\n"
    )
}

fn color_byte(c: f64) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Serializes the scene in row-major pixel order.
pub fn encode_scene_ply(scene: &PointMap) -> Result<Vec<u8>> {
    if scene.is_empty() {
        return Err(Error::validation("refusing to write an empty scene"));
    }
    let header = ply_header(scene.len());
    let mut out = Vec::with_capacity(header.len() + scene.len() * VERTEX_RECORD_BYTES);
    out.extend_from_slice(header.as_bytes());
    for p in scene.points() {
        for v in p.position.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.extend(p.color.map(color_byte));
    }
    Ok(out)
}

pub fn write_scene_ply(scene: &PointMap, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_scene_ply(scene)?;
    let path = path.as_ref();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
