//! Exact nearest-neighbour search over a static set of 3D points.

use std::cmp::Ordering;

use crate::geometry::Vec3;

const LEAF_SIZE: usize = 8;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    // leaf: order[start..end]
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    axis: u8,
    split: f64,
}

/// Balanced kd-tree (median splits on the widest axis).
///
/// Queries are exact. Among points at equal squared distance the lowest
/// stored index wins.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

#[inline]
pub(crate) fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        if !points.is_empty() {
            tree.build_node(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn build_node(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            left: NONE,
            right: NONE,
            axis: 0,
            split: 0.0,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }

        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            let p = &self.points[i as usize];
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = hi - lo;
        let axis = extent.imax();

        let mid = (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize][axis]
                .partial_cmp(&points[b as usize][axis])
                .unwrap_or(Ordering::Equal)
        });
        let split = self.points[self.order[start + mid] as usize][axis];

        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        node.axis = axis as u8;
        node.split = split;
        id
    }

    /// Index and squared distance of the nearest stored point, or `None` if empty.
    pub fn nearest(&self, query: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (u32::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Some((best.0 as usize, best.1))
    }

    fn search(&self, id: u32, q: &Vec3, best: &mut (u32, f64)) {
        let node = &self.nodes[id as usize];
        if node.left == NONE {
            for &i in &self.order[node.start as usize..node.end as usize] {
                let d = dist2(q, &self.points[i as usize]);
                if d < best.1 || (d == best.1 && i < best.0) {
                    *best = (i, d);
                }
            }
            return;
        }
        let axis = node.axis as usize;
        let diff = q[axis] - node.split;
        // Left holds coordinates <= split, right holds coordinates >= split.
        let (near, far) = if diff <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, q, best);
        // Equal distance still has to be visited for the lowest-index tie-break.
        if diff * diff <= best.1 {
            self.search(far, q, best);
        }
    }
}
