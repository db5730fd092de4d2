//! Property checks driven by an explicit proptest runner, so the same
//! properties back both the `properties` test target and the acceptance
//! summary.

use std::fmt::Debug;

use motionground::chamfer::{chamfer_symmetric, nn_query, NearestNeighborIndex, PointSet};
use motionground::geometry::{back_project, scale_point_map, DepthFrame, PointMap};
use motionground::optimizer::{optimize_with_targets, MotionSequence, OptimizeConfig};
use motionground::scene::{merge_scene, HumanMask};
use motionground::synth::evaluate;
use motionground::trajectory::{
    anchor_term, gaussian_smooth, relative_vectors, root_loss, RootTrajectory,
};
use motionground::Vec3;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use super::{random_frame, random_point_map, random_sequence, random_set, rng};

pub const CASES: u32 = 128;

/// A named property; returns a description of the first failure.
pub type Property = fn(u32) -> Result<(), String>;

pub fn run<S>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn point(extent: f64) -> impl Strategy<Value = Vec3> {
    (-extent..extent, -extent..extent, -extent..extent).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn points(extent: f64, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(point(extent), len)
}

/// Points on a coarse integer lattice so that equal distances are common.
fn lattice_points(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(
        (-3i32..=3, -3i32..=3, -3i32..=3)
            .prop_map(|(x, y, z)| Vec3::new(x as f64, y as f64, z as f64)),
        len,
    )
}

fn trajectory(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec3>> {
    points(5.0, len)
}

fn set(points: Vec<Vec3>) -> PointSet {
    PointSet::new(points).unwrap()
}

fn traj(points: Vec<Vec3>) -> RootTrajectory {
    RootTrajectory::new(points).unwrap()
}

pub fn chamfer_symmetry_and_nonnegativity(cases: u32) -> Result<(), String> {
    run(
        cases,
        (points(10.0, 1..60), points(10.0, 1..60)),
        |(a, b)| {
            let (sa, sb) = (set(a.clone()), set(b));
            let ab = chamfer_symmetric(&sa, &sb).unwrap();
            let ba = chamfer_symmetric(&sb, &sa).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!(ab >= 0.0);

            let mut reversed = a.clone();
            reversed.reverse();
            prop_assert_eq!(chamfer_symmetric(&sa, &set(reversed)).unwrap(), 0.0);

            let mut extended = a;
            extended.push(Vec3::repeat(11.0));
            prop_assert!(chamfer_symmetric(&sa, &set(extended)).unwrap() > 0.0);
            Ok(())
        },
    )
}

pub fn chamfer_translation_invariance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (points(5.0, 1..60), points(5.0, 1..60), point(5.0)),
        |(a, b, shift)| {
            let (sa, sb) = (set(a), set(b));
            let base = chamfer_symmetric(&sa, &sb).unwrap();
            let moved = chamfer_symmetric(&sa.translated(&shift), &sb.translated(&shift)).unwrap();
            prop_assert!(
                (moved - base).abs() <= 1e-12 * base,
                "base {base}, shifted {moved}"
            );
            Ok(())
        },
    )
}

pub fn nn_query_is_exhaustive(cases: u32) -> Result<(), String> {
    run(
        cases,
        (lattice_points(1..200), lattice_points(1..40)),
        |(stored, queries)| {
            let index = NearestNeighborIndex::build(&set(stored.clone())).unwrap();
            for q in &queries {
                prop_assert_eq!(nn_query(&index, q), super::brute_nn(&stored, q));
            }
            Ok(())
        },
    )
}

pub fn gaussian_preserves_constants(cases: u32) -> Result<(), String> {
    run(
        cases,
        (point(100.0), 2..40usize, 0.2..6.0f64),
        |(c, len, sigma)| {
            let smoothed = gaussian_smooth(&traj(vec![c; len]), sigma).unwrap();
            for r in smoothed.roots() {
                prop_assert!((r - c).amax() <= 1e-14 * c.amax().max(1.0), "{r} vs {c}");
            }
            Ok(())
        },
    )
}

pub fn gaussian_preserves_mean(cases: u32) -> Result<(), String> {
    run(
        cases,
        (trajectory(40..120), 0.5..4.0f64),
        |(roots, sigma)| {
            let mean = |r: &[Vec3]| r.iter().sum::<Vec3>() / r.len() as f64;
            let before = mean(&roots);
            let after = mean(gaussian_smooth(&traj(roots), sigma).unwrap().roots());
            prop_assert!((after - before).amax() <= 1e-9);
            Ok(())
        },
    )
}

pub fn relative_vectors_zero_at_anchor(cases: u32) -> Result<(), String> {
    run(cases, trajectory(2..30), |roots| {
        let t = traj(roots);
        let last = t.len() - 1;
        for (anchor, excluded) in [(0, last), (last, 0)] {
            let rel = relative_vectors(&t, anchor, excluded).unwrap();
            prop_assert_eq!(rel.vectors.len(), last);
            let at_anchor: Vec<_> = rel.vectors.iter().filter(|(f, _)| *f == anchor).collect();
            prop_assert_eq!(at_anchor.len(), 1);
            prop_assert_eq!(at_anchor[0].1, Vec3::zeros());
            prop_assert!(rel.vectors.iter().all(|(f, _)| *f != excluded));
        }
        Ok(())
    })
}

pub fn root_loss_rigid_shift(cases: u32) -> Result<(), String> {
    run(
        cases,
        (2..30usize).prop_flat_map(|n| (trajectory(n..n + 1), trajectory(n..n + 1), point(5.0))),
        |(current, reference, shift)| {
            let base = root_loss(&traj(current.clone()), &traj(reference.clone()))
                .unwrap()
                .loss;
            let shifted = |v: Vec<Vec3>| traj(v.into_iter().map(|p| p + shift).collect());
            let moved = root_loss(&shifted(current), &shifted(reference))
                .unwrap()
                .loss;
            prop_assert!(
                (moved - base).abs() <= 1e-12 * base.max(1.0),
                "base {base}, shifted {moved}"
            );
            Ok(())
        },
    )
}

pub fn root_loss_nonnegative_and_zero_on_match(cases: u32) -> Result<(), String> {
    run(
        cases,
        (2..30usize).prop_flat_map(|n| (trajectory(n..n + 1), trajectory(n..n + 1), point(5.0))),
        |(current, reference, offset)| {
            prop_assert!(
                root_loss(&traj(current), &traj(reference.clone()))
                    .unwrap()
                    .loss
                    >= 0.0
            );
            let matched = traj(reference.iter().map(|p| p + offset).collect());
            let rl = root_loss(&matched, &traj(reference)).unwrap();
            prop_assert!(rl.loss <= 1e-24, "loss {}", rl.loss);
            Ok(())
        },
    )
}

pub fn keyframes_not_tied(cases: u32) -> Result<(), String> {
    run(
        cases,
        (2..30usize).prop_flat_map(|n| (trajectory(n..n + 1), trajectory(n..n + 1))),
        |(current, reference)| {
            let (c, r) = (traj(current), traj(reference));
            let last = c.len() - 1;
            let first_term = anchor_term(&c, &r, 0, last).unwrap();
            let last_term = anchor_term(&c, &r, last, 0).unwrap();
            prop_assert_eq!(first_term.grads[last], Vec3::zeros());
            prop_assert_eq!(last_term.grads[0], Vec3::zeros());
            Ok(())
        },
    )
}

/// Random small optimization problem: sequence, targets and config.
fn small_problem() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 2..8usize, 3..15usize, 0..12usize)
}

fn build_problem(seed: u64, frames: usize, vertices: usize) -> (MotionSequence, [PointSet; 2]) {
    let mut r = rng(seed);
    let seq = random_sequence(&mut r, frames, vertices);
    let targets = [random_set(&mut r, 20, 2.0), random_set(&mut r, 20, 2.0)];
    (seq, targets)
}

pub fn optimize_freezes_canonical_bodies(cases: u32) -> Result<(), String> {
    run(
        cases,
        small_problem(),
        |(seed, frames, vertices, iterations)| {
            let (seq, targets) = build_problem(seed, frames, vertices);
            let before = seq.clone();
            let config = OptimizeConfig {
                iterations,
                ..OptimizeConfig::default()
            };
            let report = optimize_with_targets(&seq, targets, &config).unwrap();
            let after = seq.with_translations(&report.final_translations).unwrap();
            prop_assert_eq!(&seq, &before);
            for (a, b) in before.frames().iter().zip(after.frames()) {
                prop_assert_eq!(&a.canonical_vertices, &b.canonical_vertices);
                prop_assert_eq!(a.canonical_root, b.canonical_root);
            }
            prop_assert_eq!(after.initial_translations(), before.initial_translations());
            prop_assert_eq!(report.loss_history.len(), iterations);
            Ok(())
        },
    )
}

pub fn optimize_is_deterministic(cases: u32) -> Result<(), String> {
    run(
        cases,
        small_problem(),
        |(seed, frames, vertices, iterations)| {
            let (seq, targets) = build_problem(seed, frames, vertices);
            let config = OptimizeConfig {
                iterations,
                ..OptimizeConfig::default()
            };
            let first = optimize_with_targets(&seq, targets.clone(), &config).unwrap();
            let second = optimize_with_targets(&seq, targets, &config).unwrap();
            prop_assert_eq!(first, second);
            Ok(())
        },
    )
}

fn small_frame() -> impl Strategy<Value = DepthFrame> {
    (any::<u64>(), 1..9usize, 1..9usize)
        .prop_map(|(seed, h, w)| random_frame(&mut rng(seed), h, w, 0.7))
}

fn small_map() -> impl Strategy<Value = PointMap> {
    (any::<u64>(), 1..9usize, 1..9usize)
        .prop_map(|(seed, h, w)| random_point_map(&mut rng(seed), h, w, 0.7))
}

pub fn back_project_keeps_depth(cases: u32) -> Result<(), String> {
    run(cases, small_frame(), |frame| {
        let pm = back_project(&frame);
        let valid = frame.valid().as_slice().iter().filter(|&&v| v).count();
        prop_assert_eq!(pm.len(), valid);
        for p in pm.points() {
            prop_assert_eq!(p.position.z, *frame.depth().get(p.pixel.0, p.pixel.1));
        }
        Ok(())
    })
}

pub fn scale_round_trip(cases: u32) -> Result<(), String> {
    run(cases, (small_map(), 0.1..10.0f64), |(pm, alpha)| {
        let back = scale_point_map(&scale_point_map(&pm, alpha).unwrap(), 1.0 / alpha).unwrap();
        for (a, b) in pm.points().iter().zip(back.points()) {
            prop_assert_eq!(a.pixel, b.pixel);
            prop_assert!((a.position - b.position).amax() <= 1e-12 * a.position.amax().max(1e-300));
        }
        Ok(())
    })
}

fn full_maps_with_disjoint_masks(
) -> impl Strategy<Value = (PointMap, PointMap, HumanMask, HumanMask)> {
    (any::<u64>(), 1..9usize, 1..9usize).prop_map(|(seed, h, w)| {
        let mut r = rng(seed);
        let a = random_point_map(&mut r, h, w, 1.0);
        let b = random_point_map(&mut r, h, w, 1.0);
        let (m1, mt) = super::random_disjoint_masks(&mut r, h, w);
        (a, b, m1, mt)
    })
}

pub fn merge_covers_every_pixel_once(cases: u32) -> Result<(), String> {
    run(cases, full_maps_with_disjoint_masks(), |(a, b, m1, mt)| {
        let merged = merge_scene(&a, &b, &m1, &mt).unwrap();
        let (h, w) = a.dims();
        prop_assert_eq!(merged.overlap_pixels, 0);
        prop_assert_eq!(merged.scene.len(), h * w);
        Ok(())
    })
}

pub fn merge_is_swap_symmetric(cases: u32) -> Result<(), String> {
    run(cases, full_maps_with_disjoint_masks(), |(a, b, m1, mt)| {
        let forward = merge_scene(&a, &b, &m1, &mt).unwrap();
        let swapped = merge_scene(&b, &a, &mt, &m1).unwrap();
        prop_assert_eq!(&forward, &swapped);
        let (ga, gb) = (a.to_grid(), b.to_grid());
        for p in forward.scene.points() {
            let (r, c) = p.pixel;
            if !m1.contains(r, c) && !mt.contains(r, c) {
                let (pa, pb) = (ga.get(r, c).unwrap(), gb.get(r, c).unwrap());
                for k in 0..3 {
                    let (lo, hi) = (
                        pa.position[k].min(pb.position[k]),
                        pa.position[k].max(pb.position[k]),
                    );
                    prop_assert!(lo <= p.position[k] && p.position[k] <= hi);
                }
            }
        }
        Ok(())
    })
}

pub fn merge_is_idempotent(cases: u32) -> Result<(), String> {
    run(cases, small_map(), |pm| {
        let (h, w) = pm.dims();
        let empty = HumanMask::empty(h, w);
        let merged = merge_scene(&pm, &pm, &empty, &empty).unwrap();
        prop_assert_eq!(merged.scene, pm);
        Ok(())
    })
}

pub fn v2v_matches_root_error(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), 2..10usize, 1..20usize),
        |(seed, frames, vertices)| {
            let mut r = rng(seed);
            let seq = random_sequence(&mut r, frames, vertices);
            let truth = seq.translations();
            let predicted: Vec<Vec3> = super::random_points(&mut r, frames, 0.3)
                .iter()
                .zip(&truth)
                .map(|(d, t)| t + d)
                .collect();
            let report = evaluate(&predicted, &truth, &seq).unwrap();
            prop_assert!((report.v2v.mean - report.mrpe.mean).abs() <= 1e-12);
            prop_assert_eq!(evaluate(&truth, &truth, &seq).unwrap().mrpe.mean, 0.0);
            Ok(())
        },
    )
}

/// Properties named in the invariant acceptance criterion, in its order.
pub const INVARIANT_SUITE: &[(&str, Property)] = &[
    (
        "chamfer symmetry and nonnegativity",
        chamfer_symmetry_and_nonnegativity,
    ),
    (
        "chamfer translation invariance",
        chamfer_translation_invariance,
    ),
    (
        "gaussian constant preservation",
        gaussian_preserves_constants,
    ),
    (
        "relative root vectors zero at anchor",
        relative_vectors_zero_at_anchor,
    ),
    ("root loss rigid-shift pairing", root_loss_rigid_shift),
    ("frozen canonical bodies", optimize_freezes_canonical_bodies),
    ("run determinism", optimize_is_deterministic),
];
