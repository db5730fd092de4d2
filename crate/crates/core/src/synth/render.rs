//! Analytic ray casting against the synthetic scene primitives.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// Axis-aligned box in world coordinates (y up, floor at y = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub color: [u8; 3],
}

impl BoxSpec {
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for a in 0..3 {
            let (o, d) = (ray.origin[a], ray.dir[a]);
            if d == 0.0 {
                if o < self.min[a] || o > self.max[a] {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = ((self.min[a] - o) / d, (self.max[a] - o) / d);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
        }
        if t_near > t_far || t_far <= 0.0 {
            return None;
        }
        Some(if t_near > 0.0 { t_near } else { t_far })
    }
}

/// Ellipsoid with world-axis-aligned semi-axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub semi_axes: Vec3,
}

impl Ellipsoid {
    /// Nearest positive hit.
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        let o = (ray.origin - self.center).component_div(&self.semi_axes);
        let d = ray.dir.component_div(&self.semi_axes);
        let a = d.dot(&d);
        let b = 2.0 * o.dot(&d);
        let c = o.dot(&o) - 1.0;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let t0 = (-b - sq) / (2.0 * a);
        let t1 = (-b + sq) / (2.0 * a);
        [t0, t1].into_iter().find(|&t| t > 0.0)
    }
}

/// Surface a ray hit, used to pick the pixel color and mask label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Floor,
    Wall,
    Box(usize),
    Human,
}

/// Static background: floor plane `y = 0`, back wall `z = wall_z` and boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Backdrop<'a> {
    pub wall_z: f64,
    pub boxes: &'a [BoxSpec],
}

impl Backdrop<'_> {
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, Surface)> {
        let mut best: Option<(f64, Surface)> = None;
        let mut consider = |t: f64, s: Surface| {
            if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, s));
            }
        };
        if ray.dir.y < 0.0 {
            consider(-ray.origin.y / ray.dir.y, Surface::Floor);
        }
        if ray.dir.z > 0.0 {
            consider((self.wall_z - ray.origin.z) / ray.dir.z, Surface::Wall);
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if let Some(t) = b.intersect(ray) {
                consider(t, Surface::Box(i));
            }
        }
        best
    }
}

/// Evenly spread unit vectors (golden-angle spiral), ordered from +y to −y.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), y, r * phi.sin())
        })
        .collect()
}
