//! Pinhole back-projection of keyframe depth maps into colored point maps.
//!
//! Conventions: pixels are addressed `(row, col)`, zero-indexed, with the
//! pixel center at integer coordinates. `u = col`, `v = row`. Camera frame is
//! x right, y down, z forward; depth is the z coordinate in meters.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Largest off-diagonal magnitude tolerated when reading a 3x3 intrinsics matrix.
pub const INTRINSICS_SKEW_TOLERANCE: f64 = 1e-9;

/// Dense row-major `height x width` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::validation(format!(
                "grid {height}x{width} needs {} cells, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Row-major iterator of `((row, col), value)`.
    pub fn indexed(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let w = self.width.max(1);
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / w, i % w), v))
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }
}

/// Zero-skew pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx.is_finite() && fx > 0.0 && fy.is_finite() && fy > 0.0) {
            return Err(Error::validation(format!(
                "focal lengths must be finite and positive (fx={fx}, fy={fy})"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::validation(format!(
                "principal point must be finite (cx={cx}, cy={cy})"
            )));
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy })
    }

    /// Reads a row-major 3x3 `K`. Skew and every other off-pinhole entry must be zero.
    pub fn from_row_major(k: &[f64; 9]) -> Result<Self> {
        let m = Matrix3::from_row_slice(k);
        // Written so that NaN entries fail too.
        let near = |v: f64, target: f64| (v - target).abs() <= INTRINSICS_SKEW_TOLERANCE;
        let expect_zero = [(0, 1), (1, 0), (2, 0), (2, 1)];
        for (r, c) in expect_zero {
            if !near(m[(r, c)], 0.0) {
                return Err(Error::validation(format!(
                    "intrinsics entry ({r},{c}) = {} must be zero",
                    m[(r, c)]
                )));
            }
        }
        if !near(m[(2, 2)], 1.0) {
            return Err(Error::validation(format!(
                "intrinsics entry (2,2) = {} must be 1",
                m[(2, 2)]
            )));
        }
        Self::new(m[(0, 0)], m[(1, 1)], m[(0, 2)], m[(1, 2)])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        [
            self.fx, 0.0, self.cx, //
            0.0, self.fy, self.cy, //
            0.0, 0.0, 1.0,
        ]
    }

    /// Camera-frame point for pixel `(row, col)` at depth `depth`.
    pub fn unproject(&self, row: usize, col: usize, depth: f64) -> Vec3 {
        let u = col as f64;
        let v = row as f64;
        Vec3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }

    /// Continuous pixel coordinates `(u, v)` of a camera-frame point with `z > 0`.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// One keyframe's depth estimate together with its validity mask, color and camera.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    depth: Grid<f64>,
    valid: Grid<bool>,
    rgb: Grid<[f64; 3]>,
    intrinsics: CameraIntrinsics,
}

impl DepthFrame {
    pub fn new(
        depth: Grid<f64>,
        valid: Grid<bool>,
        rgb: Grid<[f64; 3]>,
        intrinsics: CameraIntrinsics,
    ) -> Result<Self> {
        if depth.dims() != valid.dims() || depth.dims() != rgb.dims() {
            return Err(Error::validation(format!(
                "depth {:?}, validity {:?} and rgb {:?} dimensions differ",
                depth.dims(),
                valid.dims(),
                rgb.dims()
            )));
        }
        for ((r, c), &ok) in valid.indexed() {
            let d = *depth.get(r, c);
            if ok && !(d.is_finite() && d > 0.0) {
                return Err(Error::validation(format!(
                    "valid pixel ({r},{c}) has depth {d}; expected finite and > 0"
                )));
            }
        }
        Ok(DepthFrame {
            depth,
            valid,
            rgb,
            intrinsics,
        })
    }

    pub fn depth(&self) -> &Grid<f64> {
        &self.depth
    }

    pub fn valid(&self) -> &Grid<bool> {
        &self.valid
    }

    pub fn rgb(&self) -> &Grid<[f64; 3]> {
        &self.rgb
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub pixel: (usize, usize),
    pub position: Vec3,
    pub color: [f64; 3],
}

/// XYZRGB points keyed by their source pixel, kept in row-major pixel order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMap {
    height: usize,
    width: usize,
    points: Vec<MapPoint>,
}

impl PointMap {
    /// Builds a map over an `height x width` image. Points are sorted into
    /// row-major order; duplicate or out-of-range pixels and non-finite
    /// positions are rejected.
    pub fn new(height: usize, width: usize, mut points: Vec<MapPoint>) -> Result<Self> {
        points.sort_by_key(|p| p.pixel);
        for (i, p) in points.iter().enumerate() {
            let (r, c) = p.pixel;
            if r >= height || c >= width {
                return Err(Error::validation(format!(
                    "pixel ({r},{c}) outside {height}x{width} image"
                )));
            }
            if i > 0 && points[i - 1].pixel == p.pixel {
                return Err(Error::validation(format!("duplicate pixel ({r},{c})")));
            }
            if !p.position.iter().all(|v| v.is_finite()) {
                return Err(Error::validation(format!(
                    "non-finite position at pixel ({r},{c})"
                )));
            }
        }
        Ok(PointMap {
            height,
            width,
            points,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn points(&self) -> &[MapPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dense per-pixel lookup table (`None` where the map has no point).
    pub fn to_grid(&self) -> Grid<Option<MapPoint>> {
        let mut grid = Grid::filled(self.height, self.width, None);
        for p in &self.points {
            grid.set(p.pixel.0, p.pixel.1, Some(*p));
        }
        grid
    }
}

/// Unprojects every valid pixel of `frame` into a colored camera-frame point.
pub fn back_project(frame: &DepthFrame) -> PointMap {
    let k = frame.intrinsics();
    let (h, w) = frame.dims();
    let points = frame
        .valid()
        .indexed()
        .filter(|(_, &ok)| ok)
        .map(|((r, c), _)| MapPoint {
            pixel: (r, c),
            position: k.unproject(r, c, *frame.depth().get(r, c)),
            color: *frame.rgb().get(r, c),
        })
        .collect();
    // Valid depths are finite and positive, so every position is finite and
    // the pixels come out unique and in row-major order.
    PointMap {
        height: h,
        width: w,
        points,
    }
}

/// Multiplies every position by `alpha`, leaving pixels and colors untouched.
pub fn scale_point_map(pm: &PointMap, alpha: f64) -> Result<PointMap> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::validation(format!(
            "scale factor must be finite and positive, got {alpha}"
        )));
    }
    let points = pm
        .points
        .iter()
        .map(|p| MapPoint {
            position: p.position * alpha,
            ..*p
        })
        .collect::<Vec<_>>();
    if let Some(p) = points
        .iter()
        .find(|p| !p.position.iter().all(|v| v.is_finite()))
    {
        return Err(Error::validation(format!(
            "scaling by {alpha} overflowed at pixel {:?}",
            p.pixel
        )));
    }
    Ok(PointMap {
        height: pm.height,
        width: pm.width,
        points,
    })
}
