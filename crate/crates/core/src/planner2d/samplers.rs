use super::{GraspSource, Planner2DConfig, Seed2D};
use crate::geometry2d::{perp, point_in_polygon, ring_edges, Polygon2D};
use nalgebra::{Point2, Rotation2, Vector2};

/// Extent `(lo, hi)` along `axis` of the boundary inside the band of half
/// width `half_width` around the line through `origin`, measured from `origin`.
pub fn corridor_extent(poly: &Polygon2D, origin: Point2<f64>, axis: Vector2<f64>, half_width: f64) -> Option<(f64, f64)> {
    let l = perp(axis);
    let mut range: Option<(f64, f64)> = None;
    for (a, b) in poly.edges() {
        let (sa, sb) = (l.dot(&(a - origin)), l.dot(&(b - origin)));
        // Clip the segment parameter to |s| <= half_width.
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let ds = sb - sa;
        if ds.abs() < 1e-300 {
            if sa.abs() > half_width {
                continue;
            }
        } else {
            let (ta, tb) = ((-half_width - sa) / ds, (half_width - sa) / ds);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
            if t0 > t1 {
                continue;
            }
        }
        for t in [t0, t1] {
            let x = axis.dot(&(a + (b - a) * t - origin));
            range = Some(range.map_or((x, x), |(lo, hi)| (lo.min(x), hi.max(x))));
        }
    }
    range
}

/// Offsets along an edge of length `len`: the midpoint and multiples of
/// `step` either side, strictly inside the edge.
fn edge_offsets(len: f64, step: f64) -> impl Iterator<Item = f64> {
    let k = (0.5 * len / step).floor() as i64;
    (-k..=k).map(move |i| i as f64 * step).filter(move |s| s.abs() < 0.5 * len)
}

/// Fully open seed whose jaws are centered on the material crossed by the corridor.
fn centered_seed(poly: &Polygon2D, cfg: &Planner2DConfig, source: GraspSource, q: Point2<f64>, axis: Vector2<f64>) -> Seed2D {
    let hw = 0.5 * cfg.gripper.wide_spacing + cfg.gripper.finger_radius;
    let (lo, hi) = corridor_extent(poly, q, axis, hw).unwrap_or((0.0, 0.0));
    Seed2D::new(source, q + axis * (0.5 * (lo + hi)), axis)
}

/// Seeds closing along the inward normal of every outer edge.
pub fn sample_edge_grasps(poly: &Polygon2D, cfg: &Planner2DConfig) -> Vec<Seed2D> {
    let mut seeds = Vec::new();
    for (a, b) in ring_edges(&poly.outer) {
        let len = (b - a).norm();
        if len == 0.0 {
            continue;
        }
        let u = (b - a) / len;
        let inward = perp(u);
        let mid = nalgebra::center(&a, &b);
        for s in edge_offsets(len, cfg.edge_step) {
            seeds.push(centered_seed(poly, cfg, GraspSource::Edge, mid + u * s, inward));
        }
    }
    seeds
}

/// Seeds closing along the inward bisector of every convex outer vertex,
/// rotated by each configured angle offset.
pub fn sample_vertex_grasps(poly: &Polygon2D, cfg: &Planner2DConfig) -> Vec<Seed2D> {
    let ring = &poly.outer;
    let n = ring.len();
    let mut seeds = Vec::new();
    for i in 0..n {
        let (prev, v, next) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
        let (e1, e2) = (v - prev, next - v);
        if e1.norm() == 0.0 || e2.norm() == 0.0 || e1.perp(&e2) <= 0.0 {
            continue;
        }
        let bisector = perp(e1.normalize()) + perp(e2.normalize());
        if bisector.norm() < 1e-12 {
            continue;
        }
        let inward = bisector.normalize();
        for &offset in &cfg.vertex_angle_offsets {
            seeds.push(centered_seed(poly, cfg, GraspSource::Vertex, v, Rotation2::new(offset) * inward));
        }
    }
    seeds
}

/// Distance along a ray from `origin` to the nearest crossing of `ring`.
fn ray_to_ring(ring: &[Point2<f64>], origin: Point2<f64>, dir: Vector2<f64>, skip: usize) -> Option<f64> {
    ring_edges(ring)
        .enumerate()
        .filter(|(k, _)| *k != skip)
        .filter_map(|(_, (a, b))| {
            let e = b - a;
            let denom = dir.perp(&e);
            if denom.abs() < 1e-300 {
                return None;
            }
            let w = a - origin;
            let t = w.perp(&e) / denom;
            let s = w.perp(&dir) / denom;
            (t > 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
        })
        .min_by(f64::total_cmp)
}

/// Seeds with the narrow circle inside a hole, closing onto the wall between
/// the hole and the outer boundary.
pub fn sample_hole_grasps(poly: &Polygon2D, cfg: &Planner2DConfig) -> Vec<Seed2D> {
    let r = cfg.gripper.finger_radius;
    let clearance = r + cfg.hole_clearance;
    let half = 0.5 * cfg.gripper.full_separation();
    let mut seeds = Vec::new();
    for hole in &poly.holes {
        for (k, (a, b)) in ring_edges(hole).enumerate() {
            let len = (b - a).norm();
            if len == 0.0 {
                continue;
            }
            let u = (b - a) / len;
            // Holes run clockwise, so the material lies to the left.
            let into_material = perp(u);
            let mid = nalgebra::center(&a, &b);
            for s in edge_offsets(len, cfg.edge_step) {
                let q = mid + u * s;
                let Some(chord) = ray_to_ring(hole, q, -into_material, k) else { continue };
                let narrow = q - into_material * (0.5 * chord);
                if point_in_polygon(poly, narrow) || poly.boundary_distance(narrow) < clearance {
                    continue;
                }
                seeds.push(Seed2D::new(GraspSource::Hole, narrow + into_material * half, -into_material));
            }
        }
    }
    seeds
}
