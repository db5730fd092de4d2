//! Symmetric squared Chamfer distance and its gradient with respect to a
//! rigid translation of one of the two sets.
//!
//! For sets `A` and `B`:
//!
//! ```text
//! CD(A, B) = 1/|A| Σ_{x∈A} min_{y∈B} |x − y|² + 1/|B| Σ_{y∈B} min_{x∈A} |x − y|²
//! ```
//!
//! Nearest-neighbour assignments are held fixed when differentiating. Both
//! direction sums are accumulated sequentially in stored order, so results
//! are reproducible bit for bit.

mod kdtree;

pub use kdtree::KdTree;

use crate::error::{Error, Result};
use crate::geometry::{PointMap, Vec3};
use crate::scene::HumanMask;

/// Finite 3D positions in meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet(Vec<Vec3>);

impl PointSet {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::validation(format!("point {i} is not finite")));
        }
        Ok(PointSet(points))
    }

    pub fn points(&self) -> &[Vec3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every `stride`-th point starting from the first.
    pub fn subsample(&self, stride: usize) -> PointSet {
        PointSet(self.0.iter().step_by(stride.max(1)).copied().collect())
    }

    pub fn translated(&self, offset: &Vec3) -> PointSet {
        PointSet(self.0.iter().map(|p| p + offset).collect())
    }

    pub fn into_vec(self) -> Vec<Vec3> {
        self.0
    }
}

/// Spatial index answering exact nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct NearestNeighborIndex(KdTree);

impl NearestNeighborIndex {
    pub fn build(set: &PointSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::validation("cannot index an empty point set"));
        }
        Ok(NearestNeighborIndex(KdTree::build(set.points())))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        self.0.points()
    }
}

/// Index of the closest stored point and its squared distance. Ties go to the lowest index.
pub fn nn_query(index: &NearestNeighborIndex, q: &Vec3) -> (usize, f64) {
    index
        .0
        .nearest(q)
        .expect("NearestNeighborIndex is never empty")
}

/// Positions of the map points lying inside the human mask.
pub fn extract_human_points(pm: &PointMap, mask: &HumanMask) -> Result<PointSet> {
    if pm.dims() != mask.dims() {
        return Err(Error::validation(format!(
            "point map {:?} and mask {:?} dimensions differ",
            pm.dims(),
            mask.dims()
        )));
    }
    let points: Vec<Vec3> = pm
        .points()
        .iter()
        .filter(|p| mask.contains(p.pixel.0, p.pixel.1))
        .map(|p| p.position)
        .collect();
    if points.is_empty() {
        return Err(Error::HumanNotVisible { keyframe: None });
    }
    Ok(PointSet(points))
}

fn nonempty(set: &PointSet, which: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::validation(format!(
            "chamfer distance needs a nonempty {which} set"
        )));
    }
    Ok(())
}

/// Mean over `from` of the squared distance to the nearest point of `to`,
/// plus the sum of `(x − NN(x))` used by the gradient.
fn directed(from: &[Vec3], to: &NearestNeighborIndex) -> (f64, Vec3) {
    let mut sum = 0.0;
    let mut disp = Vec3::zeros();
    for x in from {
        let (j, d2) = nn_query(to, x);
        sum += d2;
        disp += x - to.points()[j];
    }
    (sum / from.len() as f64, disp)
}

pub fn chamfer_symmetric(a: &PointSet, b: &PointSet) -> Result<f64> {
    nonempty(a, "first")?;
    nonempty(b, "second")?;
    let ia = NearestNeighborIndex::build(a)?;
    let ib = NearestNeighborIndex::build(b)?;
    let (ab, _) = directed(a.points(), &ib);
    let (ba, _) = directed(b.points(), &ia);
    Ok(ab + ba)
}

/// Loss and gradient with respect to the translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamferGrad {
    pub loss: f64,
    pub grad: Vec3,
}

/// Static side of a Chamfer comparison with its index built once.
#[derive(Debug, Clone)]
pub struct ChamferTarget {
    set: PointSet,
    index: NearestNeighborIndex,
}

impl ChamferTarget {
    pub fn new(set: PointSet) -> Result<Self> {
        nonempty(&set, "target")?;
        let index = NearestNeighborIndex::build(&set)?;
        Ok(ChamferTarget { set, index })
    }

    pub fn points(&self) -> &PointSet {
        &self.set
    }

    /// Chamfer loss between `canonical + translation` and this target, with
    /// the gradient of the loss with respect to `translation`.
    pub fn loss_and_grad(&self, canonical: &PointSet, translation: &Vec3) -> Result<ChamferGrad> {
        nonempty(canonical, "canonical")?;
        let moved = canonical.translated(translation);
        let moved_index = NearestNeighborIndex::build(&moved)?;

        let (ab, disp_ab) = directed(moved.points(), &self.index);
        let (ba, disp_ba) = directed(self.set.points(), &moved_index);
        let na = moved.len() as f64;
        let nb = self.set.len() as f64;
        // d/dt |x + t − y|² = 2 (x + t − y) for the moved side of each pair.
        let grad = disp_ab * (2.0 / na) - disp_ba * (2.0 / nb);
        Ok(ChamferGrad {
            loss: ab + ba,
            grad,
        })
    }
}

pub fn chamfer_grad_translation(
    canonical: &PointSet,
    translation: &Vec3,
    target: &PointSet,
) -> Result<ChamferGrad> {
    ChamferTarget::new(target.clone())?.loss_and_grad(canonical, translation)
}
