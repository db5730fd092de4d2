//! Shared generators and straight-line reference implementations for the
//! integration tests.
#![allow(dead_code)]

pub mod ply_reader;
pub mod props;

use std::collections::BTreeMap;

use motionground::chamfer::PointSet;
use motionground::geometry::{CameraIntrinsics, DepthFrame, Grid, MapPoint, PointMap};
use motionground::optimizer::{BodyFrame, MotionSequence};
use motionground::scene::HumanMask;
use motionground::Vec3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut impl Rng, n: usize, half_extent: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-half_extent..half_extent),
                rng.random_range(-half_extent..half_extent),
                rng.random_range(-half_extent..half_extent),
            )
        })
        .collect()
}

pub fn random_set(rng: &mut impl Rng, n: usize, half_extent: f64) -> PointSet {
    PointSet::new(random_points(rng, n, half_extent)).unwrap()
}

/// Exhaustive nearest neighbour: lowest index among the minimal squared distances.
pub fn brute_nn(points: &[Vec3], q: &Vec3) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = (p - q).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// O(n·m) symmetric Chamfer: mean squared nearest distance in both directions.
pub fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let directed = |from: &[Vec3], to: &[Vec3]| {
        from.iter()
            .map(|x| {
                to.iter()
                    .map(|y| (x - y).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    directed(a, b) + directed(b, a)
}

/// Smallest gap between the nearest and second-nearest distance over all
/// queries of `from` against `to`.
pub fn assignment_margin(from: &[Vec3], to: &[Vec3]) -> f64 {
    from.iter()
        .map(|x| {
            let mut d: Vec<f64> = to.iter().map(|y| (x - y).norm()).collect();
            d.sort_by(f64::total_cmp);
            if d.len() < 2 {
                f64::INFINITY
            } else {
                d[1] - d[0]
            }
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn central_difference(f: impl Fn(f64) -> f64, eps: f64) -> f64 {
    (f(eps) - f(-eps)) / (2.0 * eps)
}

pub fn intrinsics(h: usize, w: usize) -> CameraIntrinsics {
    CameraIntrinsics::new(120.0, 110.0, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0).unwrap()
}

/// Random depth frame; each pixel is valid with probability `p_valid`.
pub fn random_frame(rng: &mut impl Rng, h: usize, w: usize, p_valid: f64) -> DepthFrame {
    let valid = Grid::from_fn(h, w, |_, _| rng.random_bool(p_valid));
    let depth = Grid::from_fn(h, w, |r, c| {
        if *valid.get(r, c) {
            rng.random_range(0.5..6.0)
        } else {
            0.0
        }
    });
    let rgb = Grid::from_fn(h, w, |_, _| [rng.random(), rng.random(), rng.random()]);
    DepthFrame::new(depth, valid, rgb, intrinsics(h, w)).unwrap()
}

pub fn random_mask(rng: &mut impl Rng, h: usize, w: usize, p: f64) -> HumanMask {
    HumanMask::new(Grid::from_fn(h, w, |_, _| rng.random_bool(p)))
}

/// Two masks that never share a pixel.
pub fn random_disjoint_masks(rng: &mut impl Rng, h: usize, w: usize) -> (HumanMask, HumanMask) {
    let labels = Grid::from_fn(h, w, |_, _| rng.random_range(0..4u8));
    (
        HumanMask::new(Grid::from_fn(h, w, |r, c| *labels.get(r, c) == 1)),
        HumanMask::new(Grid::from_fn(h, w, |r, c| *labels.get(r, c) == 2)),
    )
}

/// Random point map with positions unrelated to any camera, for merge tests.
pub fn random_point_map(rng: &mut impl Rng, h: usize, w: usize, p_present: f64) -> PointMap {
    let mut points = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if rng.random_bool(p_present) {
                points.push(MapPoint {
                    pixel: (r, c),
                    position: Vec3::new(
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(0.5..6.0),
                    ),
                    color: [rng.random(), rng.random(), rng.random()],
                });
            }
        }
    }
    PointMap::new(h, w, points).unwrap()
}

/// Mean depth ratio computed with plain loops over every pixel.
pub fn hand_scale_factor(
    first: &DepthFrame,
    last: &DepthFrame,
    first_mask: &HumanMask,
    last_mask: &HumanMask,
) -> Option<f64> {
    let (h, w) = first.dims();
    let mut d1 = Vec::new();
    let mut dt = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let background = !first_mask.contains(r, c) && !last_mask.contains(r, c);
            if background && *first.valid().get(r, c) && *last.valid().get(r, c) {
                d1.push(*first.depth().get(r, c));
                dt.push(*last.depth().get(r, c));
            }
        }
    }
    if d1.is_empty() {
        return None;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Some(mean(&d1) / mean(&dt))
}

/// Scene as a set union over pixels:
/// background seen in both maps (averaged) ∪ background seen in one map
/// ∪ first-map points under the last mask only ∪ last-map points under the
/// first mask only. Returned sorted by pixel.
pub fn merge_oracle(
    first: &PointMap,
    last: &PointMap,
    first_mask: &HumanMask,
    last_mask: &HumanMask,
) -> Vec<MapPoint> {
    let a: BTreeMap<(usize, usize), MapPoint> =
        first.points().iter().map(|p| (p.pixel, *p)).collect();
    let b: BTreeMap<(usize, usize), MapPoint> =
        last.points().iter().map(|p| (p.pixel, *p)).collect();
    let in_first = |px: &(usize, usize)| first_mask.contains(px.0, px.1);
    let in_last = |px: &(usize, usize)| last_mask.contains(px.0, px.1);

    let mut out: BTreeMap<(usize, usize), MapPoint> = BTreeMap::new();
    for (px, p) in &a {
        if !in_first(px) && !in_last(px) {
            let merged = match b.get(px) {
                Some(q) => MapPoint {
                    pixel: *px,
                    position: (p.position + q.position) / 2.0,
                    color: [
                        (p.color[0] + q.color[0]) / 2.0,
                        (p.color[1] + q.color[1]) / 2.0,
                        (p.color[2] + q.color[2]) / 2.0,
                    ],
                },
                None => *p,
            };
            out.insert(*px, merged);
        }
    }
    for (px, q) in &b {
        if !in_first(px) && !in_last(px) && !a.contains_key(px) {
            out.insert(*px, *q);
        }
    }
    for (px, p) in &a {
        if in_last(px) && !in_first(px) {
            out.insert(*px, *p);
        }
    }
    for (px, q) in &b {
        if in_first(px) && !in_last(px) {
            out.insert(*px, *q);
        }
    }
    out.into_values().collect()
}

/// Small sequence of random bodies with a shared canonical root offset.
pub fn random_sequence(rng: &mut impl Rng, frames: usize, vertices: usize) -> MotionSequence {
    let body_frames = (0..frames)
        .map(|_| {
            let root = Vec3::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
            );
            let translation = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(2.0..4.0),
            );
            BodyFrame::new(random_set(rng, vertices, 0.5), root, translation).unwrap()
        })
        .collect();
    MotionSequence::new(body_frames).unwrap()
}

/// Reduced-resolution synthetic scene with the same field of view as the default.
pub fn small_synth_spec() -> motionground::synth::SynthSpec {
    let mut spec = motionground::synth::SynthSpec {
        frame_count: 12,
        width: 64,
        height: 48,
        intrinsics: CameraIntrinsics::new(80.0, 80.0, 31.5, 23.5).unwrap(),
        ..Default::default()
    };
    spec.path.dwell_frames = 2;
    spec.human.vertex_count = 120;
    spec
}
