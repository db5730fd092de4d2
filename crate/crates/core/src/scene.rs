//! Two-keyframe background scene reconstruction.
//!
//! The second keyframe's depth is rescaled so its mean background depth
//! matches the first, then both point maps are merged: shared background
//! pixels are averaged and each keyframe's human region is filled from the
//! other keyframe.

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{back_project, scale_point_map, DepthFrame, Grid, MapPoint, PointMap};

/// Per-pixel human segmentation, `true` on human pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanMask(Grid<bool>);

impl HumanMask {
    pub fn new(mask: Grid<bool>) -> Self {
        HumanMask(mask)
    }

    pub fn empty(height: usize, width: usize) -> Self {
        HumanMask(Grid::filled(height, width, false))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        *self.0.get(row, col)
    }

    pub fn count(&self) -> usize {
        self.0.as_slice().iter().filter(|&&m| m).count()
    }

    pub fn grid(&self) -> &Grid<bool> {
        &self.0
    }
}

/// Output of [`merge_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct MergedScene {
    pub scene: PointMap,
    /// Pixels inside both human masks; nothing can be recovered there.
    pub overlap_pixels: usize,
}

/// Complete two-keyframe scene reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneReconstruction {
    pub scene: PointMap,
    pub alpha: f64,
    pub overlap_pixels: usize,
    /// Keyframe point maps in the reference scale (the second one already multiplied by `alpha`).
    pub keyframe_maps: [PointMap; 2],
}

fn check_dims(what: &str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::validation(format!(
            "{what}: dimension mismatch {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

/// Ratio of mean background depth of `first` to that of `last`.
///
/// Eligible pixels are valid in both frames and outside both human masks.
pub fn compute_scale_factor(
    first: &DepthFrame,
    last: &DepthFrame,
    first_mask: &HumanMask,
    last_mask: &HumanMask,
) -> Result<f64> {
    let dims = first.dims();
    check_dims("scale factor depth frames", dims, last.dims())?;
    check_dims(
        "scale factor mask (first keyframe)",
        dims,
        first_mask.dims(),
    )?;
    check_dims("scale factor mask (last keyframe)", dims, last_mask.dims())?;

    let mut sum_first = 0.0;
    let mut sum_last = 0.0;
    let mut count = 0usize;
    for ((r, c), &valid_first) in first.valid().indexed() {
        if valid_first
            && *last.valid().get(r, c)
            && !first_mask.contains(r, c)
            && !last_mask.contains(r, c)
        {
            sum_first += *first.depth().get(r, c);
            sum_last += *last.depth().get(r, c);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoSharedBackground);
    }
    let n = count as f64;
    let (mean_first, mean_last) = (sum_first / n, sum_last / n);
    if mean_last == 0.0 {
        return Err(Error::DegenerateDepth { keyframe: 1 });
    }
    if mean_first == 0.0 {
        return Err(Error::DegenerateDepth { keyframe: 0 });
    }
    Ok(mean_first / mean_last)
}

fn midpoint(a: &MapPoint, b: &MapPoint) -> MapPoint {
    MapPoint {
        pixel: a.pixel,
        position: (a.position + b.position) / 2.0,
        color: [
            (a.color[0] + b.color[0]) / 2.0,
            (a.color[1] + b.color[1]) / 2.0,
            (a.color[2] + b.color[2]) / 2.0,
        ],
    }
}

/// Merges two reference-scale keyframe point maps into one background map.
///
/// Background pixels observed in both keyframes are averaged (position and
/// color); background pixels observed in only one keyframe keep that point.
/// Pixels under one keyframe's human mask are taken from the other keyframe.
/// Pixels under both masks are dropped and counted.
pub fn merge_scene(
    first: &PointMap,
    last: &PointMap,
    first_mask: &HumanMask,
    last_mask: &HumanMask,
) -> Result<MergedScene> {
    let dims = first.dims();
    check_dims("merge point maps", dims, last.dims())?;
    check_dims("merge mask (first keyframe)", dims, first_mask.dims())?;
    check_dims("merge mask (last keyframe)", dims, last_mask.dims())?;

    let first_grid = first.to_grid();
    let last_grid = last.to_grid();
    let mut points = Vec::with_capacity(first.len().max(last.len()));
    let mut overlap_pixels = 0;

    for ((r, c), a) in first_grid.indexed() {
        let b = last_grid.get(r, c);
        let merged = match (first_mask.contains(r, c), last_mask.contains(r, c)) {
            (true, true) => {
                overlap_pixels += 1;
                None
            }
            (false, false) => match (a, b) {
                (Some(a), Some(b)) => Some(midpoint(a, b)),
                (Some(p), None) | (None, Some(p)) => Some(*p),
                (None, None) => None,
            },
            (false, true) => *a,
            (true, false) => *b,
        };
        points.extend(merged);
    }

    if overlap_pixels > 0 {
        warn!("human masks overlap on {overlap_pixels} pixels; those pixels are left out of the scene");
    }
    Ok(MergedScene {
        scene: PointMap::new(dims.0, dims.1, points)?,
        overlap_pixels,
    })
}

/// Back-projects both keyframes, aligns the last keyframe's scale to the first and merges.
pub fn reconstruct_scene(
    first: &DepthFrame,
    last: &DepthFrame,
    first_mask: &HumanMask,
    last_mask: &HumanMask,
) -> Result<SceneReconstruction> {
    let alpha = compute_scale_factor(first, last, first_mask, last_mask)?;
    let first_map = back_project(first);
    let last_map = scale_point_map(&back_project(last), alpha)?;
    let merged = merge_scene(&first_map, &last_map, first_mask, last_mask)?;
    Ok(SceneReconstruction {
        scene: merged.scene,
        alpha,
        overlap_pixels: merged.overlap_pixels,
        keyframe_maps: [first_map, last_map],
    })
}
