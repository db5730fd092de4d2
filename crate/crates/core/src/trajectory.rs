//! Root-joint trajectory smoothing and the relative root loss.
//!
//! The relative root loss compares, for each of the two keyframes, the
//! displacement of every frame's root from the keyframe root against the
//! same displacements on the smoothed initial trajectory. Each keyframe's
//! term skips the other keyframe, so the two keyframes are only coupled
//! through the frames in between.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Root-joint position per frame, at least two frames.
#[derive(Debug, Clone, PartialEq)]
pub struct RootTrajectory(Vec<Vec3>);

impl RootTrajectory {
    pub fn new(roots: Vec<Vec3>) -> Result<Self> {
        if roots.len() < 2 {
            return Err(Error::validation(format!(
                "a root trajectory needs at least 2 frames, got {}",
                roots.len()
            )));
        }
        if let Some(t) = roots.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite {
                quantity: "root position",
                frame: t,
            });
        }
        Ok(RootTrajectory(roots))
    }

    pub fn roots(&self) -> &[Vec3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first_index(&self) -> usize {
        0
    }

    pub fn last_index(&self) -> usize {
        self.0.len() - 1
    }
}

/// Displacements `root[t] − root[anchor]` for every frame except `excluded`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeRootVectors {
    pub anchor: usize,
    pub excluded: usize,
    /// `(frame, displacement)` in increasing frame order.
    pub vectors: Vec<(usize, Vec3)>,
}

/// Maps an out-of-range index onto `0..len` by mirror reflection about the
/// sample edges (`… 1 0 | 0 1 … n−1 | n−1 n−2 …`).
pub fn reflect_index(i: isize, len: usize) -> usize {
    let n = len as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Normalized Gaussian weights for offsets `-radius..=radius`, radius = ceil(4σ).
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::validation(format!(
            "gaussian sigma must be finite and positive, got {sigma}"
        )));
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut weights: Vec<f64> = (-radius..=radius)
        .map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Convolves each coordinate channel with a truncated Gaussian, reflecting at the ends.
pub fn gaussian_smooth(traj: &RootTrajectory, sigma: f64) -> Result<RootTrajectory> {
    let kernel = gaussian_kernel(sigma)?;
    let radius = (kernel.len() / 2) as isize;
    let roots = traj.roots();
    let n = roots.len();
    let smoothed = (0..n as isize)
        .map(|t| {
            kernel
                .iter()
                .zip(-radius..=radius)
                .fold(Vec3::zeros(), |acc, (w, j)| {
                    acc + roots[reflect_index(t + j, n)] * *w
                })
        })
        .collect();
    Ok(RootTrajectory(smoothed))
}

fn check_keyframe_pair(len: usize, anchor: usize, excluded: usize) -> Result<()> {
    if anchor == excluded {
        return Err(Error::validation(format!(
            "anchor and excluded keyframe are both {anchor}"
        )));
    }
    let last = len - 1;
    for k in [anchor, excluded] {
        if k != 0 && k != last {
            return Err(Error::validation(format!(
                "keyframe {k} is neither the first (0) nor the last ({last}) frame"
            )));
        }
    }
    Ok(())
}

pub fn relative_vectors(
    traj: &RootTrajectory,
    anchor: usize,
    excluded: usize,
) -> Result<RelativeRootVectors> {
    check_keyframe_pair(traj.len(), anchor, excluded)?;
    let roots = traj.roots();
    let base = roots[anchor];
    let vectors = roots
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != excluded)
        .map(|(t, r)| (t, r - base))
        .collect();
    Ok(RelativeRootVectors {
        anchor,
        excluded,
        vectors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootLoss {
    pub loss: f64,
    /// Gradient with respect to each frame's root (equivalently, its translation).
    pub grads: Vec<Vec3>,
}

fn check_lengths(current: &RootTrajectory, reference: &RootTrajectory) -> Result<()> {
    if current.len() != reference.len() {
        return Err(Error::validation(format!(
            "trajectory length mismatch: current {} vs reference {}",
            current.len(),
            reference.len()
        )));
    }
    Ok(())
}

/// One keyframe's share of the relative root loss, already divided by `T − 1`.
pub fn anchor_term(
    current: &RootTrajectory,
    reference: &RootTrajectory,
    anchor: usize,
    excluded: usize,
) -> Result<RootLoss> {
    check_lengths(current, reference)?;
    let d_cur = relative_vectors(current, anchor, excluded)?;
    let d_ref = relative_vectors(reference, anchor, excluded)?;
    let scale = 1.0 / (current.len() - 1) as f64;

    let mut loss = 0.0;
    let mut grads = vec![Vec3::zeros(); current.len()];
    for (&(t, cur), &(_, reference)) in d_cur.vectors.iter().zip(&d_ref.vectors) {
        let diff = cur - reference;
        loss += diff.norm_squared();
        if t != anchor {
            let g = diff * (2.0 * scale);
            grads[t] += g;
            grads[anchor] -= g;
        }
    }
    Ok(RootLoss {
        loss: loss * scale,
        grads,
    })
}

/// Mean squared mismatch of relative root vectors for both keyframes.
pub fn root_loss(current: &RootTrajectory, smoothed_init: &RootTrajectory) -> Result<RootLoss> {
    check_lengths(current, smoothed_init)?;
    let (first, last) = (current.first_index(), current.last_index());
    let a = anchor_term(current, smoothed_init, first, last)?;
    let b = anchor_term(current, smoothed_init, last, first)?;
    Ok(RootLoss {
        loss: a.loss + b.loss,
        grads: a.grads.iter().zip(&b.grads).map(|(x, y)| x + y).collect(),
    })
}
