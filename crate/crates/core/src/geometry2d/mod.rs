//! Planar perception and geometry.
//!
//! Pixel coordinates are cell centers with `x` = column and `y` = row. Metric
//! polygons keep the same axis directions, so a polygon is the image footprint
//! scaled to meters. Outer rings have positive shoelace area and holes negative.

mod contour;
mod obb;
mod simplify;
mod sweep;

pub use contour::{extract_contours, Contour};
pub use obb::{convex_hull, oriented_bounding_box, OrientedBox};
pub use simplify::{dominant_points, simplify_polygon, RDP_EPSILON_DEFAULT};
pub use sweep::{finger_contact, FingerContact};

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("mask has no object pixels")]
    EmptyMask,
    #[error("mask dimensions {width}x{height} do not match {len} values")]
    MaskSize { width: usize, height: usize, len: usize },
    #[error("contour degenerates to fewer than 3 vertices")]
    DegenerateContour,
    #[error("invalid depth statistics: {0}")]
    InvalidDepth(String),
    #[error("polygon has non-positive net area")]
    ZeroArea,
    #[error("finger circle overlaps the polygon at its start position")]
    InvalidStart,
}

/// Row-major boolean image, `true` marks object pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(GeometryError::MaskSize { width, height, len: values.len() });
        }
        Ok(Self { width, height, values })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }
}

/// Object footprint in meters: one outer ring and zero or more holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2D {
    pub outer: Vec<Point2<f64>>,
    pub holes: Vec<Vec<Point2<f64>>>,
    /// Pixels per meter used when converting from the image, 0 for synthetic input.
    pub scale_ppm: f64,
}

impl Polygon2D {
    /// Builds a polygon from rings in any orientation; rings are reoriented so the
    /// outer ring is counter-clockwise and holes clockwise.
    pub fn new(outer: Vec<Point2<f64>>, holes: Vec<Vec<Point2<f64>>>) -> Self {
        let mut poly = Self { outer, holes, scale_ppm: 0.0 };
        poly.normalize_orientation();
        poly
    }

    pub fn normalize_orientation(&mut self) {
        if signed_area(&self.outer) < 0.0 {
            self.outer.reverse();
        }
        for hole in &mut self.holes {
            if signed_area(hole) > 0.0 {
                hole.reverse();
            }
        }
    }

    /// All rings, outer first.
    pub fn rings(&self) -> impl Iterator<Item = &[Point2<f64>]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    /// Every boundary segment of every ring.
    pub fn edges(&self) -> impl Iterator<Item = (Point2<f64>, Point2<f64>)> + '_ {
        self.rings().flat_map(ring_edges)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Point2<f64>> {
        self.rings().flat_map(|r| r.iter())
    }

    pub fn area(&self) -> f64 {
        self.rings().map(signed_area).sum()
    }

    pub fn transformed(&self, f: impl Fn(Point2<f64>) -> Point2<f64>) -> Self {
        let mut out = Self {
            outer: self.outer.iter().map(|p| f(*p)).collect(),
            holes: self.holes.iter().map(|h| h.iter().map(|p| f(*p)).collect()).collect(),
            scale_ppm: self.scale_ppm,
        };
        out.normalize_orientation();
        out
    }

    /// Rigid rotation by `angle` about `pivot`.
    pub fn rotated(&self, angle: f64, pivot: Point2<f64>) -> Self {
        let rot = nalgebra::Rotation2::new(angle);
        self.transformed(|p| pivot + rot * (p - pivot))
    }

    /// Minimum distance from `p` to any boundary segment.
    pub fn boundary_distance(&self, p: Point2<f64>) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Maximum distance from `from` to any boundary vertex.
    pub fn max_vertex_distance(&self, from: Point2<f64>) -> f64 {
        self.vertices().map(|v| (v - from).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn ring_edges(ring: &[Point2<f64>]) -> impl Iterator<Item = (Point2<f64>, Point2<f64>)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

/// Shoelace area, positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2<f64>]) -> f64 {
    ring_edges(ring).map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() * 0.5
}

pub fn segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

pub fn closest_on_segment(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> Point2<f64> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Left-hand perpendicular.
pub fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Camera-to-table and camera-to-object depth summary of the masked pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    /// Camera to table distance (m).
    pub z_table: f64,
    /// 20th-percentile camera to object distance (m).
    pub z_obj: f64,
    /// 80th-percentile object height above the table (m).
    pub h80: f64,
}

impl DepthStats {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.z_obj > 0.0) {
            return Err(GeometryError::InvalidDepth(format!("z_obj = {} must be positive", self.z_obj)));
        }
        if !(self.z_obj <= self.z_table) {
            return Err(GeometryError::InvalidDepth(format!(
                "z_obj = {} exceeds z_table = {}",
                self.z_obj, self.z_table
            )));
        }
        if !(self.h80 >= 0.0 && self.h80 <= self.z_table) {
            return Err(GeometryError::InvalidDepth(format!("h80 = {} out of range", self.h80)));
        }
        Ok(())
    }
}

/// Pixels per meter at the object's depth under a pinhole model: apparent size
/// grows as the object gets closer than the table plane.
pub fn object_ppm(ppm_table: f64, depth: &DepthStats) -> f64 {
    ppm_table * depth.z_table / depth.z_obj
}

/// Converts pixel rings to a metric polygon at the object's depth.
pub fn to_metric_polygon(
    ring: &[Point2<f64>],
    holes: &[Vec<Point2<f64>>],
    depth: &DepthStats,
    ppm_table: f64,
) -> Result<Polygon2D, GeometryError> {
    if !(ppm_table > 0.0) {
        return Err(GeometryError::InvalidDepth(format!("ppm_table = {ppm_table} must be positive")));
    }
    depth.validate()?;
    let ppm = object_ppm(ppm_table, depth);
    let scale = |r: &[Point2<f64>]| r.iter().map(|p| Point2::new(p.x / ppm, p.y / ppm)).collect::<Vec<_>>();
    let mut poly = Polygon2D {
        outer: scale(ring),
        holes: holes.iter().map(|h| scale(h)).collect(),
        scale_ppm: ppm,
    };
    poly.normalize_orientation();
    Ok(poly)
}

/// Area centroid of the outer ring minus its holes (uniform density).
pub fn polygon_centroid(poly: &Polygon2D) -> Result<Point2<f64>, GeometryError> {
    let mut area = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for ring in poly.rings() {
        // Moments relative to the first outer vertex keep the sums well conditioned.
        let o = poly.outer[0];
        for (a, b) in ring_edges(ring) {
            let (ax, ay) = (a.x - o.x, a.y - o.y);
            let (bx, by) = (b.x - o.x, b.y - o.y);
            let cross = ax * by - bx * ay;
            area += cross;
            mx += (ax + bx) * cross;
            my += (ay + by) * cross;
        }
    }
    area *= 0.5;
    if !(area > 0.0) {
        return Err(GeometryError::ZeroArea);
    }
    let o = poly.outer[0];
    Ok(Point2::new(o.x + mx / (6.0 * area), o.y + my / (6.0 * area)))
}

/// Even-odd point location; points on any boundary count as inside.
pub fn point_in_polygon(poly: &Polygon2D, p: Point2<f64>) -> bool {
    let scale = poly.outer.iter().map(|v| v.coords.amax()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut inside = false;
    for (a, b) in poly.edges() {
        if segment_distance(p, a, b) <= tol {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}
