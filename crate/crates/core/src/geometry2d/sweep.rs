use super::{perp, point_in_polygon, GeometryError, Polygon2D};
use nalgebra::{Point2, Vector2};

/// First touch of a swept circle with a polygon boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerContact {
    pub travel: f64,
    pub point: Point2<f64>,
    /// Unit vector from the circle center toward the contact, i.e. the
    /// direction the finger presses into the material.
    pub inward_normal: Vector2<f64>,
}

/// Sweeps a circle of `radius` from `start` along `dir` and returns the first
/// boundary contact within `max_travel`.
///
/// The start is invalid when the circle already touches the boundary or sits
/// inside the material.
pub fn finger_contact(
    poly: &Polygon2D,
    radius: f64,
    start: Point2<f64>,
    dir: Vector2<f64>,
    max_travel: f64,
) -> Result<Option<FingerContact>, GeometryError> {
    if poly.boundary_distance(start) <= radius || point_in_polygon(poly, start) {
        return Err(GeometryError::InvalidStart);
    }
    let dir = dir.normalize();
    let mut best: Option<(f64, Point2<f64>)> = None;
    let mut consider = |t: f64, p: Point2<f64>| {
        if t >= 0.0 && t <= max_travel && best.map_or(true, |(bt, _)| t < bt) {
            best = Some((t, p));
        }
    };

    for (a, b) in poly.edges() {
        let ab = b - a;
        let len = ab.norm();
        if len == 0.0 {
            continue;
        }
        let u = ab / len;
        let n = perp(u);
        // Flat part of the edge: the center reaches distance `radius` from the line.
        let s0 = n.dot(&(start - a));
        let rate = n.dot(&dir);
        if rate != 0.0 {
            let target = radius * s0.signum();
            let t = (target - s0) / rate;
            let center = start + dir * t;
            let along = u.dot(&(center - a));
            if (0.0..=len).contains(&along) {
                consider(t, a + u * along);
            }
        }
        // Endpoint: |start + t dir - a| = radius, smaller root.
        for v in [a, b] {
            let w = v - start;
            let proj = dir.dot(&w);
            let disc = proj * proj - (w.norm_squared() - radius * radius);
            if disc >= 0.0 {
                consider(proj - disc.sqrt(), v);
            }
        }
    }

    Ok(best.map(|(travel, point)| {
        let center = start + dir * travel;
        let d = point - center;
        let inward_normal = if d.norm() > 0.0 { d.normalize() } else { dir };
        FingerContact { travel, point, inward_normal }
    }))
}
