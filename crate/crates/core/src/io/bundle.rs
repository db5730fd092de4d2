//! Input bundles: `manifest.json` plus raw tensor files.
//!
//! Layout written by [`write_bundle`]:
//!
//! | field                   | dtype   | shape       |
//! |-------------------------|---------|-------------|
//! | keyframe `depth`        | float32 | `[h, w]`    |
//! | keyframe `valid`        | uint8   | `[h, w]`    |
//! | keyframe `rgb`          | uint8   | `[h, w, 3]` |
//! | keyframe `intrinsics`   | float64 | `[3, 3]`    |
//! | `masks`                 | uint8   | `[T, h, w]` |
//! | `canonical_vertices`    | float32 | `[T, V, 3]` |
//! | `canonical_roots`       | float32 | `[T, 3]`    |
//! | `initial_translations`  | float32 | `[T, 3]`    |
//!
//! The loader also accepts float64 wherever float32 is written. Masks and
//! validity grids treat any nonzero byte as `true`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor::{encode_f32, encode_f64, require_finite, Dtype, TensorRef};
use crate::chamfer::PointSet;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthFrame, Grid, Vec3};
use crate::optimizer::{BodyFrame, MotionSequence};
use crate::scene::HumanMask;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeFiles {
    pub depth: TensorRef,
    pub valid: TensorRef,
    pub rgb: TensorRef,
    pub intrinsics: TensorRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTable {
    /// First and last keyframe, in that order.
    pub keyframes: [KeyframeFiles; 2],
    pub masks: TensorRef,
    pub canonical_vertices: TensorRef,
    pub canonical_roots: TensorRef,
    pub initial_translations: TensorRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    /// Number of frames `T`.
    pub frame_count: usize,
    /// Zero-based keyframe indices; always `[0, T - 1]`.
    pub keyframes: [usize; 2],
    pub height: usize,
    pub width: usize,
    pub vertex_count: usize,
    pub files: FileTable,
}

impl Manifest {
    /// Manifest with the canonical file names and dtypes used by [`write_bundle`].
    pub fn canonical(frame_count: usize, height: usize, width: usize, vertex_count: usize) -> Self {
        let (t, h, w, v) = (frame_count, height, width, vertex_count);
        let keyframe = |k: usize| KeyframeFiles {
            depth: TensorRef::new(format!("keyframe{k}_depth.f32"), Dtype::Float32, vec![h, w]),
            valid: TensorRef::new(format!("keyframe{k}_valid.u8"), Dtype::Uint8, vec![h, w]),
            rgb: TensorRef::new(format!("keyframe{k}_rgb.u8"), Dtype::Uint8, vec![h, w, 3]),
            intrinsics: TensorRef::new(
                format!("keyframe{k}_intrinsics.f64"),
                Dtype::Float64,
                vec![3, 3],
            ),
        };
        Manifest {
            version: MANIFEST_VERSION,
            frame_count: t,
            keyframes: [0, t.saturating_sub(1)],
            height: h,
            width: w,
            vertex_count: v,
            files: FileTable {
                keyframes: [keyframe(0), keyframe(1)],
                masks: TensorRef::new("masks.u8", Dtype::Uint8, vec![t, h, w]),
                canonical_vertices: TensorRef::new(
                    "canonical_vertices.f32",
                    Dtype::Float32,
                    vec![t, v, 3],
                ),
                canonical_roots: TensorRef::new("canonical_roots.f32", Dtype::Float32, vec![t, 3]),
                initial_translations: TensorRef::new(
                    "initial_translations.f32",
                    Dtype::Float32,
                    vec![t, 3],
                ),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::load(MANIFEST_FILE, field, reason));
        if self.version != MANIFEST_VERSION {
            return bad("version", format!("unsupported version {}", self.version));
        }
        if self.frame_count < 2 {
            return bad(
                "frame_count",
                format!("need at least 2 frames, got {}", self.frame_count),
            );
        }
        if self.keyframes != [0, self.frame_count - 1] {
            return bad(
                "keyframes",
                format!(
                    "keyframes must be the first and last frame [0, {}], got {:?}",
                    self.frame_count - 1,
                    self.keyframes
                ),
            );
        }
        if self.height == 0 || self.width == 0 {
            return bad(
                "height",
                format!("empty image {}x{}", self.height, self.width),
            );
        }
        if self.vertex_count == 0 {
            return bad("vertex_count", "bodies need at least one vertex".into());
        }
        Ok(())
    }
}

/// Everything the pipeline needs for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBundle {
    pub manifest: Manifest,
    /// Depth, validity, color and intrinsics of the first and last frame.
    pub keyframes: [DepthFrame; 2],
    /// One human mask per frame.
    pub masks: Vec<HumanMask>,
    pub sequence: MotionSequence,
}

impl InputBundle {
    /// Assembles a bundle and checks cross-field consistency.
    pub fn new(
        keyframes: [DepthFrame; 2],
        masks: Vec<HumanMask>,
        sequence: MotionSequence,
    ) -> Result<Self> {
        let (h, w) = keyframes[0].dims();
        if keyframes[1].dims() != (h, w) {
            return Err(Error::validation(format!(
                "keyframe images differ in size: {:?} vs {:?}",
                keyframes[0].dims(),
                keyframes[1].dims()
            )));
        }
        let t = sequence.len();
        if masks.len() != t {
            return Err(Error::validation(format!(
                "{} masks for {t} frames",
                masks.len()
            )));
        }
        if let Some(i) = masks.iter().position(|m| m.dims() != (h, w)) {
            return Err(Error::validation(format!(
                "mask {i} is {:?}, images are {h}x{w}",
                masks[i].dims()
            )));
        }
        let v = sequence.frames()[0].canonical_vertices.len();
        if let Some(i) = sequence
            .frames()
            .iter()
            .position(|f| f.canonical_vertices.len() != v)
        {
            return Err(Error::validation(format!(
                "frame {i} has {} canonical vertices, frame 0 has {v}",
                sequence.frames()[i].canonical_vertices.len()
            )));
        }
        Ok(InputBundle {
            manifest: Manifest::canonical(t, h, w, v),
            keyframes,
            masks,
            sequence,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.sequence.len()
    }

    pub fn keyframe_masks(&self) -> [&HumanMask; 2] {
        [&self.masks[0], &self.masks[self.masks.len() - 1]]
    }
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_slice(&text)
        .map_err(|e| Error::load(MANIFEST_FILE, "<root>", e.to_string()))?;
    manifest.validate()?;
    Ok(manifest)
}

fn load_keyframe(
    dir: &Path,
    files: &KeyframeFiles,
    slot: usize,
    h: usize,
    w: usize,
) -> Result<DepthFrame> {
    let field = |name: &str| format!("files.keyframes[{slot}].{name}");

    let k = files
        .intrinsics
        .read_f64(dir, &field("intrinsics"), &[3, 3])?;
    let k: [f64; 9] = k.try_into().expect("shape checked");
    let intrinsics = CameraIntrinsics::from_row_major(&k)
        .map_err(|e| Error::load(&files.intrinsics.file, field("intrinsics"), e.to_string()))?;

    let depth = files.depth.read_f64(dir, &field("depth"), &[h, w])?;
    let valid: Vec<bool> = files
        .valid
        .read_u8(dir, &field("valid"), &[h, w])?
        .into_iter()
        .map(|b| b != 0)
        .collect();
    if let Some(i) = (0..h * w).find(|&i| valid[i] && !(depth[i].is_finite() && depth[i] > 0.0)) {
        return Err(Error::load(
            &files.depth.file,
            field("depth"),
            format!(
                "valid pixel ({}, {}) has depth {} (must be finite and > 0)",
                i / w,
                i % w,
                depth[i]
            ),
        ));
    }
    let rgb: Vec<[f64; 3]> = files
        .rgb
        .read_u8(dir, &field("rgb"), &[h, w, 3])?
        .chunks_exact(3)
        .map(|c| {
            [
                c[0] as f64 / 255.0,
                c[1] as f64 / 255.0,
                c[2] as f64 / 255.0,
            ]
        })
        .collect();

    DepthFrame::new(
        Grid::from_vec(h, w, depth)?,
        Grid::from_vec(h, w, valid)?,
        Grid::from_vec(h, w, rgb)?,
        intrinsics,
    )
}

fn to_vec3s(values: &[f64]) -> Vec<Vec3> {
    values
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect()
}

/// Reads and fully validates a bundle directory.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<InputBundle> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let (t, h, w, v) = (
        manifest.frame_count,
        manifest.height,
        manifest.width,
        manifest.vertex_count,
    );
    let files = &manifest.files;

    let keyframes = [
        load_keyframe(dir, &files.keyframes[0], 0, h, w)?,
        load_keyframe(dir, &files.keyframes[1], 1, h, w)?,
    ];

    let mask_bytes = files.masks.read_u8(dir, "files.masks", &[t, h, w])?;
    let masks = mask_bytes
        .chunks_exact(h * w)
        .map(|frame| {
            Grid::from_vec(h, w, frame.iter().map(|&b| b != 0).collect()).map(HumanMask::new)
        })
        .collect::<Result<Vec<_>>>()?;

    let verts = files
        .canonical_vertices
        .read_f64(dir, "files.canonical_vertices", &[t, v, 3])?;
    require_finite(
        &verts,
        &files.canonical_vertices.file,
        "files.canonical_vertices",
    )?;
    let roots = files
        .canonical_roots
        .read_f64(dir, "files.canonical_roots", &[t, 3])?;
    require_finite(&roots, &files.canonical_roots.file, "files.canonical_roots")?;
    let trans = files
        .initial_translations
        .read_f64(dir, "files.initial_translations", &[t, 3])?;
    require_finite(
        &trans,
        &files.initial_translations.file,
        "files.initial_translations",
    )?;

    let roots = to_vec3s(&roots);
    let trans = to_vec3s(&trans);
    let frames = verts
        .chunks_exact(v * 3)
        .zip(roots.into_iter().zip(trans))
        .map(|(vs, (root, tr))| BodyFrame::new(PointSet::new(to_vec3s(vs))?, root, tr))
        .collect::<Result<Vec<_>>>()?;
    let sequence = MotionSequence::new(frames)?;

    let mut bundle = InputBundle::new(keyframes, masks, sequence)?;
    bundle.manifest = manifest;
    Ok(bundle)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

fn quantize_color(c: f64) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Writes `bundle` into `dir` (created if missing) with the canonical layout.
pub fn write_bundle(bundle: &InputBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (h, w) = bundle.keyframes[0].dims();
    let t = bundle.frame_count();
    let v = bundle.sequence.frames()[0].canonical_vertices.len();
    let manifest = Manifest::canonical(t, h, w, v);
    let files = &manifest.files;

    for (frame, kf) in bundle.keyframes.iter().zip(&files.keyframes) {
        write_file(
            dir,
            &kf.depth.file,
            &encode_f32(frame.depth().as_slice().iter().copied()),
        )?;
        let valid: Vec<u8> = frame.valid().as_slice().iter().map(|&b| b as u8).collect();
        write_file(dir, &kf.valid.file, &valid)?;
        let rgb: Vec<u8> = frame
            .rgb()
            .as_slice()
            .iter()
            .flat_map(|c| c.map(quantize_color))
            .collect();
        write_file(dir, &kf.rgb.file, &rgb)?;
        write_file(
            dir,
            &kf.intrinsics.file,
            &encode_f64(frame.intrinsics().to_row_major()),
        )?;
    }

    let masks: Vec<u8> = bundle
        .masks
        .iter()
        .flat_map(|m| m.grid().as_slice().iter().map(|&b| b as u8))
        .collect();
    write_file(dir, &files.masks.file, &masks)?;

    let frames = bundle.sequence.frames();
    let verts = frames.iter().flat_map(|f| {
        f.canonical_vertices
            .points()
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
    });
    write_file(dir, &files.canonical_vertices.file, &encode_f32(verts))?;
    let roots = frames
        .iter()
        .flat_map(|f| [f.canonical_root.x, f.canonical_root.y, f.canonical_root.z]);
    write_file(dir, &files.canonical_roots.file, &encode_f32(roots))?;
    let trans = bundle
        .sequence
        .initial_translations()
        .iter()
        .flat_map(|p| [p.x, p.y, p.z]);
    write_file(dir, &files.initial_translations.file, &encode_f32(trans))?;

    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    write_file(dir, MANIFEST_FILE, &json)
}
