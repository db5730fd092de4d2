//! Synthetic input bundles with known ground truth, and evaluation metrics.
//!
//! A stationary pinhole camera looks at a floor, a back wall and a few
//! boxes. An ellipsoid stands in for the body and walks along a parametric
//! path. Keyframe depth, color and masks are rendered by casting one ray per
//! pixel center.
//!
//! World coordinates have y up with the floor at `y = 0`; the camera sits
//! at `(0, camera.height, 0)` looking along +z, pitched down by
//! `camera.pitch_deg`. All bundle data is expressed in the camera frame
//! (x right, y down, z forward).
//!
//! The per-frame canonical body holds only the ellipsoid vertices facing the
//! camera at that frame, matching the part of the body a single depth map
//! can see.

pub mod metrics;
mod render;

use std::path::Path;

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use metrics::{evaluate, mrpe, root_errors, v2v, vertex_errors, EvalReport, MeanStd};
pub use render::{BoxSpec, Ellipsoid, Ray};

use crate::chamfer::PointSet;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthFrame, Grid, Vec3};
use crate::io::{write_bundle, write_json, InputBundle, TruthFile, TRUTH_FILE};
use crate::optimizer::{BodyFrame, MotionSequence};
use crate::scene::HumanMask;
use render::{fibonacci_sphere, Backdrop, Surface};

/// Sphere lattice size from which camera-facing body vertices are drawn.
const VISIBILITY_LATTICE: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraPose {
    /// Height of the camera center above the floor, meters.
    pub height: f64,
    /// Downward tilt of the optical axis, degrees.
    pub pitch_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    /// Back wall plane `z = wall_z` (world).
    pub wall_z: f64,
    pub floor_color: [u8; 3],
    pub wall_color: [u8; 3],
    pub boxes: Vec<BoxSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanSpec {
    /// Ellipsoid semi-axes along world x, y, z.
    pub semi_axes: [f64; 3],
    /// Height of the ellipsoid center above the floor.
    pub center_height: f64,
    /// Canonical vertices per frame.
    pub vertex_count: usize,
    /// Root joint of the translation-zero body, camera frame. The root sits at the ellipsoid center.
    pub canonical_root: [f64; 3],
    pub color: [u8; 3],
}

/// Floor-plane path of the body center: a cosine ease from `start` to `end`
/// with `dwell_frames` of standing still at each end, plus a forward bump of
/// `sway` meters peaking mid-clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSpec {
    /// World `[x, z]` at the first frame.
    pub start: [f64; 2],
    /// World `[x, z]` at the last frame.
    pub end: [f64; 2],
    pub dwell_frames: usize,
    pub sway: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of additive keyframe depth noise, meters.
    pub depth_sigma: f64,
    /// Multiplier applied to the last keyframe's depth.
    pub depth_drift: f64,
    /// Human masks are eroded by this many pixels (square structuring element).
    pub mask_erosion: usize,
    /// Constant camera-frame offset added to every initial translation.
    pub init_offset: [f64; 3],
    /// Standard deviation of per-frame, per-axis initial translation noise.
    pub init_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub intrinsics: CameraIntrinsics,
    pub camera: CameraPose,
    pub scene: SceneSpec,
    pub human: HumanSpec,
    pub path: PathSpec,
    pub noise: NoiseSpec,
    /// Moves the last keyframe next to the first so the two human masks overlap.
    pub force_overlap: bool,
}

impl Default for CameraPose {
    fn default() -> Self {
        CameraPose {
            height: 1.3,
            pitch_deg: 8.0,
        }
    }
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            wall_z: 7.0,
            floor_color: [150, 150, 150],
            wall_color: [200, 190, 170],
            boxes: vec![
                BoxSpec {
                    min: [-1.8, 0.0, 5.2],
                    max: [-1.0, 0.9, 6.0],
                    color: [90, 120, 200],
                },
                BoxSpec {
                    min: [0.5, 0.0, 2.6],
                    max: [0.9, 0.35, 3.0],
                    color: [100, 180, 90],
                },
            ],
        }
    }
}

impl Default for HumanSpec {
    fn default() -> Self {
        HumanSpec {
            semi_axes: [0.25, 0.85, 0.15],
            center_height: 0.9,
            vertex_count: 300,
            canonical_root: [0.0, 0.2, 0.0],
            color: [200, 60, 60],
        }
    }
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec {
            start: [-0.8, 4.0],
            end: [0.8, 4.0],
            dwell_frames: 8,
            sway: 0.1,
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            depth_sigma: 0.0,
            depth_drift: 1.0,
            mask_erosion: 0,
            init_offset: [0.3, 0.0, 0.4],
            init_jitter: 0.0,
        }
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 42,
            frame_count: 50,
            width: 160,
            height: 120,
            intrinsics: CameraIntrinsics {
                fx: 200.0,
                fy: 200.0,
                cx: 79.5,
                cy: 59.5,
            },
            camera: CameraPose::default(),
            scene: SceneSpec::default(),
            human: HumanSpec::default(),
            path: PathSpec::default(),
            noise: NoiseSpec::default(),
            force_overlap: false,
        }
    }
}

fn field_error(field: &str, reason: impl std::fmt::Display) -> Error {
    Error::validation(format!("synth spec field `{field}`: {reason}"))
}

fn finite(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(field_error(field, "must be finite"))
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frame_count < 2 {
            return Err(field_error("frame_count", "must be at least 2"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(field_error("width/height", "image must be nonempty"));
        }
        let k = &self.intrinsics;
        CameraIntrinsics::new(k.fx, k.fy, k.cx, k.cy).map_err(|e| field_error("intrinsics", e))?;
        finite("camera", &[self.camera.height, self.camera.pitch_deg])?;
        if self.camera.pitch_deg.abs() >= 89.0 {
            return Err(field_error("camera.pitch_deg", "must lie in (-89, 89)"));
        }
        finite("scene.wall_z", &[self.scene.wall_z])?;
        for (i, b) in self.scene.boxes.iter().enumerate() {
            finite(&format!("scene.boxes[{i}]"), &[b.min, b.max].concat())?;
            if (0..3).any(|a| b.min[a] >= b.max[a]) {
                return Err(field_error(
                    &format!("scene.boxes[{i}]"),
                    "min must be below max on every axis",
                ));
            }
        }
        let h = &self.human;
        finite(
            "human",
            &[
                h.semi_axes.as_slice(),
                &h.canonical_root,
                &[h.center_height],
            ]
            .concat(),
        )?;
        if h.semi_axes.iter().any(|&s| s <= 0.0) {
            return Err(field_error("human.semi_axes", "must be positive"));
        }
        if h.vertex_count == 0 || h.vertex_count > VISIBILITY_LATTICE / 4 {
            return Err(field_error(
                "human.vertex_count",
                format!("must lie in 1..={}", VISIBILITY_LATTICE / 4),
            ));
        }
        finite(
            "path",
            &[
                self.path.start.as_slice(),
                &self.path.end,
                &[self.path.sway],
            ]
            .concat(),
        )?;
        if 2 * self.path.dwell_frames >= self.frame_count - 1 {
            return Err(field_error(
                "path.dwell_frames",
                format!(
                    "two dwells of {} leave no frames to move in",
                    self.path.dwell_frames
                ),
            ));
        }
        let n = &self.noise;
        finite(
            "noise",
            &[
                n.init_offset.as_slice(),
                &[n.depth_sigma, n.depth_drift, n.init_jitter],
            ]
            .concat(),
        )?;
        if n.depth_sigma < 0.0 || n.init_jitter < 0.0 {
            return Err(field_error("noise", "standard deviations must be >= 0"));
        }
        if n.depth_drift <= 0.0 {
            return Err(field_error("noise.depth_drift", "must be > 0"));
        }
        Ok(())
    }

    /// World `[x, z]` of the body center at frame `t`.
    fn path_xz(&self, t: usize) -> [f64; 2] {
        let last = (self.frame_count - 1) as f64;
        let dwell = self.path.dwell_frames as f64;
        let span = last - 2.0 * dwell;
        let u = ((t as f64 - dwell) / span).clamp(0.0, 1.0);
        let s = (1.0 - (std::f64::consts::PI * u).cos()) / 2.0;
        let start = self.path.start;
        let end = if self.force_overlap {
            [start[0] + 0.2, start[1]]
        } else {
            self.path.end
        };
        let bump =
            self.path.sway * (1.0 - (2.0 * std::f64::consts::PI * t as f64 / last).cos()) / 2.0;
        [
            start[0] + s * (end[0] - start[0]),
            start[1] + s * (end[1] - start[1]) + bump,
        ]
    }
}

/// Generated bundle plus the true per-frame translations.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub bundle: InputBundle,
    pub truth: Vec<Vec3>,
}

impl SynthOutput {
    /// Writes the bundle and `truth.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_bundle(&self.bundle, dir)?;
        write_json(&TruthFile::new(&self.truth), dir.join(TRUTH_FILE))
    }
}

struct Camera {
    intrinsics: CameraIntrinsics,
    position: Vec3,
    /// Camera-to-world rotation (columns are camera axes in world coordinates).
    cam_to_world: Matrix3<f64>,
}

impl Camera {
    fn new(spec: &SynthSpec) -> Self {
        let (s, c) = spec.camera.pitch_deg.to_radians().sin_cos();
        // camera x -> world x, camera y (down) -> world -y tilted back,
        // camera z (forward) -> world +z tilted down.
        let cam_to_world = Matrix3::new(
            1.0, 0.0, 0.0, //
            0.0, -c, -s, //
            0.0, -s, c,
        );
        Camera {
            intrinsics: spec.intrinsics,
            position: Vec3::new(0.0, spec.camera.height, 0.0),
            cam_to_world,
        }
    }

    fn to_camera(&self, world: &Vec3) -> Vec3 {
        self.cam_to_world.transpose() * (world - self.position)
    }

    fn to_world_dir(&self, cam: &Vec3) -> Vec3 {
        self.cam_to_world * cam
    }

    /// World ray through a pixel center; the ray parameter equals camera depth.
    fn pixel_ray(&self, row: usize, col: usize) -> Ray {
        let k = &self.intrinsics;
        let d = Vec3::new((col as f64 - k.cx) / k.fx, (row as f64 - k.cy) / k.fy, 1.0);
        Ray {
            origin: self.position,
            dir: self.to_world_dir(&d),
        }
    }
}

struct Rendered {
    depth: Grid<f64>,
    rgb: Grid<[f64; 3]>,
    valid: Grid<bool>,
    human: Grid<bool>,
}

fn color(c: [u8; 3]) -> [f64; 3] {
    c.map(|v| v as f64 / 255.0)
}

fn render(spec: &SynthSpec, camera: &Camera, backdrop: &Backdrop, body: &Ellipsoid) -> Rendered {
    let (h, w) = (spec.height, spec.width);
    let mut depth = Grid::filled(h, w, 0.0);
    let mut rgb = Grid::filled(h, w, [0.0; 3]);
    let mut valid = Grid::filled(h, w, false);
    let mut human = Grid::filled(h, w, false);
    for r in 0..h {
        for c in 0..w {
            let ray = camera.pixel_ray(r, c);
            let scene_hit = backdrop.intersect(&ray);
            let hit = match (scene_hit, body.intersect(&ray)) {
                (Some((ts, s)), Some(th)) => Some(if th < ts {
                    (th, Surface::Human)
                } else {
                    (ts, s)
                }),
                (Some(hit), None) => Some(hit),
                (None, Some(th)) => Some((th, Surface::Human)),
                (None, None) => None,
            };
            if let Some((t, surface)) = hit {
                depth.set(r, c, t);
                valid.set(r, c, true);
                let col = match surface {
                    Surface::Floor => spec.scene.floor_color,
                    Surface::Wall => spec.scene.wall_color,
                    Surface::Box(i) => spec.scene.boxes[i].color,
                    Surface::Human => spec.human.color,
                };
                rgb.set(r, c, color(col));
                human.set(r, c, surface == Surface::Human);
            }
        }
    }
    Rendered {
        depth,
        rgb,
        valid,
        human,
    }
}

/// Keeps a pixel only if every pixel within Chebyshev distance `radius` is set.
pub fn erode(mask: &Grid<bool>, radius: usize) -> Grid<bool> {
    if radius == 0 {
        return mask.clone();
    }
    let (h, w) = mask.dims();
    let r = radius as isize;
    Grid::from_fn(h, w, |row, col| {
        (-r..=r).all(|dr| {
            (-r..=r).all(|dc| {
                let (y, x) = (row as isize + dr, col as isize + dc);
                y >= 0
                    && x >= 0
                    && (y as usize) < h
                    && (x as usize) < w
                    && *mask.get(y as usize, x as usize)
            })
        })
    })
}

fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

fn quantize_vec(v: Vec3) -> Vec3 {
    v.map(quantize)
}

/// Renders a bundle for `spec`. Identical specs give identical bundles.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let camera = Camera::new(spec);
    let backdrop = Backdrop {
        wall_z: spec.scene.wall_z,
        boxes: &spec.scene.boxes,
    };
    let t_count = spec.frame_count;
    let last = t_count - 1;
    let semi_axes = Vec3::from(spec.human.semi_axes);
    let canonical_root = Vec3::from(spec.human.canonical_root);
    let world_to_cam = camera.cam_to_world.transpose();
    let lattice = fibonacci_sphere(VISIBILITY_LATTICE);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let bodies: Vec<Ellipsoid> = (0..t_count)
        .map(|t| {
            let [x, z] = spec.path_xz(t);
            Ellipsoid {
                center: Vec3::new(x, spec.human.center_height, z),
                semi_axes,
            }
        })
        .collect();

    let mut masks = Vec::with_capacity(t_count);
    let mut keyframes = Vec::with_capacity(2);
    let mut frames = Vec::with_capacity(t_count);
    let mut truth = Vec::with_capacity(t_count);

    for (t, body) in bodies.iter().enumerate() {
        let center_cam = camera.to_camera(&body.center);
        truth.push(center_cam - canonical_root);

        let is_keyframe = t == 0 || t == last;
        let frame_render = render(spec, &camera, &backdrop, body);
        if is_keyframe {
            check_in_view(spec, &camera, body, &lattice, t)?;
            if !frame_render.human.as_slice().iter().any(|&m| m) {
                return Err(Error::validation(format!(
                    "human is hidden from the camera at keyframe {t}"
                )));
            }
        }

        let canonical = visible_vertices(spec, &camera, &backdrop, body, &lattice, t)?
            .into_iter()
            .map(|v| quantize_vec(canonical_root + world_to_cam * v))
            .collect();
        frames.push((canonical, t));

        masks.push(HumanMask::new(erode(
            &frame_render.human,
            spec.noise.mask_erosion,
        )));
        if is_keyframe {
            keyframes.push(frame_render);
        }
    }

    // Noise draws happen in a fixed order: keyframe depths, then translations.
    let depth_noise = Normal::new(0.0, spec.noise.depth_sigma).expect("sigma validated");
    let mut depth_frames = Vec::with_capacity(2);
    for (slot, kf) in keyframes.into_iter().enumerate() {
        let drift = if slot == 1 {
            spec.noise.depth_drift
        } else {
            1.0
        };
        let mut depth = kf.depth;
        for ((r, c), &ok) in kf.valid.indexed() {
            let mut d = *depth.get(r, c);
            if ok {
                if spec.noise.depth_sigma > 0.0 {
                    d = (d + depth_noise.sample(&mut rng)).max(1e-3);
                }
                d = quantize(d * drift);
            }
            depth.set(r, c, d);
        }
        depth_frames.push(DepthFrame::new(depth, kf.valid, kf.rgb, spec.intrinsics)?);
    }

    let jitter = Normal::new(0.0, spec.noise.init_jitter).expect("jitter validated");
    let offset = Vec3::from(spec.noise.init_offset);
    let body_frames = frames
        .into_iter()
        .map(|(canonical, t)| {
            let mut init = truth[t] + offset;
            if spec.noise.init_jitter > 0.0 {
                for a in 0..3 {
                    init[a] += jitter.sample(&mut rng);
                }
            }
            BodyFrame::new(
                PointSet::new(canonical)?,
                quantize_vec(canonical_root),
                quantize_vec(init),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let [first, last_frame]: [DepthFrame; 2] = depth_frames.try_into().expect("two keyframes");
    let bundle = InputBundle::new(
        [first, last_frame],
        masks,
        MotionSequence::new(body_frames)?,
    )?;
    Ok(SynthOutput { bundle, truth })
}

/// Every body lattice point must project inside the image in front of the camera.
fn check_in_view(
    spec: &SynthSpec,
    camera: &Camera,
    body: &Ellipsoid,
    lattice: &[Vec3],
    t: usize,
) -> Result<()> {
    let (w, h) = ((spec.width - 1) as f64, (spec.height - 1) as f64);
    for u in lattice {
        let p = camera.to_camera(&(body.center + u.component_mul(&body.semi_axes)));
        if p.z <= 0.0 {
            return Err(Error::validation(format!(
                "human is behind the camera at keyframe {t}"
            )));
        }
        let (px, py) = camera.intrinsics.project(&p);
        if !(0.0..=w).contains(&px) || !(0.0..=h).contains(&py) {
            return Err(Error::validation(format!(
                "human leaves the camera view at keyframe {t} (pixel {px:.1}, {py:.1})"
            )));
        }
    }
    Ok(())
}

/// Body-frame offsets (world axes) of `vertex_count` ellipsoid points that
/// face the camera and are not hidden by the backdrop.
fn visible_vertices(
    spec: &SynthSpec,
    camera: &Camera,
    backdrop: &Backdrop,
    body: &Ellipsoid,
    lattice: &[Vec3],
    t: usize,
) -> Result<Vec<Vec3>> {
    let visible: Vec<Vec3> = lattice
        .iter()
        .filter_map(|u| {
            let offset = u.component_mul(&body.semi_axes);
            let p = body.center + offset;
            let normal = u.component_div(&body.semi_axes);
            let to_camera = camera.position - p;
            if normal.dot(&to_camera) <= 0.0 {
                return None;
            }
            let ray = Ray {
                origin: camera.position,
                dir: -to_camera,
            };
            match backdrop.intersect(&ray) {
                Some((ts, _)) if ts < 1.0 => None,
                _ => Some(offset),
            }
        })
        .collect();
    let n = spec.human.vertex_count;
    if visible.len() < n {
        return Err(Error::validation(format!(
            "only {} visible body points at frame {t}, need {n}",
            visible.len()
        )));
    }
    Ok((0..n).map(|i| visible[i * visible.len() / n]).collect())
}
