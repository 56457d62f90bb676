use super::{perp, Polygon2D};
use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Point2<f64>,
    /// Direction of the longer side, in `[0, pi)`.
    pub axis_angle: f64,
    pub width: f64,
    pub length: f64,
}

impl OrientedBox {
    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    pub fn long_axis(&self) -> Vector2<f64> {
        Vector2::new(self.axis_angle.cos(), self.axis_angle.sin())
    }
}

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Point2<f64>]) -> Vec<Point2<f64>> {
    let mut pts: Vec<Point2<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point2<f64>, a: Point2<f64>, b: Point2<f64>| (a - o).perp(&(b - o));
    let mut hull: Vec<Point2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2<f64>>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle by rotating calipers over the convex hull.
pub fn oriented_bounding_box(poly: &Polygon2D) -> OrientedBox {
    let hull = convex_hull(&poly.outer);
    let n = hull.len();
    if n < 3 {
        // Degenerate footprint; fall back to the segment through the points.
        let (a, b) = (hull[0], *hull.last().unwrap());
        let d = b - a;
        let angle = d.y.atan2(d.x).rem_euclid(PI);
        return OrientedBox { center: nalgebra::center(&a, &b), axis_angle: angle, width: 0.0, length: d.norm() };
    }

    let proj = |i: usize, v: Vector2<f64>| v.dot(&hull[i % n].coords);
    let mut right = 0;
    let mut top = 0;
    let mut left = 0;
    let mut best: Option<(f64, OrientedBox)> = None;
    for i in 0..n {
        let u = (hull[(i + 1) % n] - hull[i]).normalize();
        let v = perp(u);
        if i == 0 {
            right = (0..n).max_by(|&a, &b| proj(a, u).total_cmp(&proj(b, u))).unwrap();
            top = (0..n).max_by(|&a, &b| proj(a, v).total_cmp(&proj(b, v))).unwrap();
            left = (0..n).min_by(|&a, &b| proj(a, u).total_cmp(&proj(b, u))).unwrap();
        } else {
            while proj(right + 1, u) >= proj(right, u) && (right + 1) % n != i {
                right = (right + 1) % n;
            }
            while proj(top + 1, v) >= proj(top, v) && (top + 1) % n != i {
                top = (top + 1) % n;
            }
            // The minimum along the edge may be the edge's own start vertex.
            while left != i && proj(left + 1, u) <= proj(left, u) {
                left = (left + 1) % n;
            }
        }
        let (umin, umax) = (proj(left, u), proj(right, u));
        let (vmin, vmax) = (proj(i, v), proj(top, v));
        let area = (umax - umin) * (vmax - vmin);
        if best.map_or(true, |(a, _)| area < a - 1e-15 * a.abs().max(1e-30)) {
            let (cu, cv) = (0.5 * (umin + umax), 0.5 * (vmin + vmax));
            let center = Point2::from(u * cu + v * cv);
            let (du, dv) = (umax - umin, vmax - vmin);
            let (axis, width, length) = if du >= dv { (u, dv, du) } else { (v, du, dv) };
            let axis_angle = axis.y.atan2(axis.x).rem_euclid(PI);
            best = Some((area, OrientedBox { center, axis_angle, width, length }));
        }
    }
    best.unwrap().1
}
