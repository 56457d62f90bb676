//! Binned-SAH bounding volume hierarchy with watertight ray-triangle tests.

use super::{RayHit, TriMesh};
use nalgebra::{Point3, Vector3};

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub const EMPTY: Self = Self {
        min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn grow(self, p: &Point3<f64>) -> Self {
        Self { min: self.min.inf(p), max: self.max.sup(p) }
    }

    pub fn union(self, o: &Aabb) -> Self {
        Self { min: self.min.inf(&o.min), max: self.max.sup(&o.max) }
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn surface_area(&self) -> f64 {
        let d = self.max - self.min;
        if d.iter().any(|x| *x < 0.0) {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    /// Entry distance of the ray into the box, if it enters before `t_max`.
    fn hit(&self, o: &Point3<f64>, inv: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - o[k]) * inv[k];
            let b = (self.max[k] - o[k]) * inv[k];
            // NaN from 0 * inf (origin on a slab plane) leaves the interval unchanged.
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        // Slack covers rounding in the slab distances.
        (t0 <= t1 * (1.0 + 4.0 * f64::EPSILON)).then_some(t0)
    }
}

/// Watertight ray-triangle intersection; returns the ray parameter of the hit.
pub fn ray_triangle(o: &Point3<f64>, d: &Vector3<f64>, tri: &[Point3<f64>; 3]) -> Option<f64> {
    let kz = d.iamax();
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if d[kz] < 0.0 {
        std::mem::swap(&mut kx, &mut ky);
    }
    let (sx, sy, sz) = (d[kx] / d[kz], d[ky] / d[kz], 1.0 / d[kz]);
    let rel = tri.map(|p| p - o);
    let shear = |v: &Vector3<f64>| (v[kx] - sx * v[kz], v[ky] - sy * v[kz]);
    let (ax, ay) = shear(&rel[0]);
    let (bx, by) = shear(&rel[1]);
    let (cx, cy) = shear(&rel[2]);
    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }
    let det = u + v + w;
    if det == 0.0 {
        return None;
    }
    let t = (u * sz * rel[0][kz] + v * sz * rel[1][kz] + w * sz * rel[2][kz]) / det;
    (t >= 0.0).then_some(t)
}

fn make_hit(o: &Point3<f64>, d: &Vector3<f64>, t: f64, face: usize) -> RayHit {
    RayHit { ray_origin: *o, distance: t, point: o + d * t, face_index: face }
}

/// Nearest hit by testing every triangle.
pub fn ray_cast_brute_force(m: &TriMesh, o: &Point3<f64>, d: &Vector3<f64>, max_dist: f64) -> Option<RayHit> {
    let mut best: Option<(f64, usize)> = None;
    for f in 0..m.faces.len() {
        if let Some(t) = ray_triangle(o, d, &m.triangle(f)) {
            if t <= max_dist && best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, f));
            }
        }
    }
    best.map(|(t, f)| make_hit(o, d, t, f))
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Immutable BVH over a mesh's faces.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    triangles: Vec<[Point3<f64>; 3]>,
}

impl Bvh {
    pub fn build(m: &TriMesh) -> Self {
        let triangles: Vec<[Point3<f64>; 3]> = (0..m.faces.len()).map(|f| m.triangle(f)).collect();
        // Boxes are padded slightly so slab rounding never culls a triangle the exact test would hit.
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|t| {
                let b = t.iter().fold(Aabb::EMPTY, |b, p| b.grow(p));
                let pad = Vector3::repeat(1e-12 * (1.0 + b.min.coords.abs().max().max(b.max.coords.abs().max())));
                Aabb { min: b.min - pad, max: b.max + pad }
            })
            .collect();
        let centroids: Vec<Point3<f64>> = triangles.iter().map(|t| Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0)).collect();
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, &boxes, &centroids);
        Self { nodes, order, triangles }
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        *self.nodes[0].bounds()
    }

    /// Nearest hit within `max_dist`. Ties in distance go to the lowest face index.
    pub fn ray_cast(&self, o: &Point3<f64>, d: &Vector3<f64>, max_dist: f64) -> Option<RayHit> {
        let inv = d.map(|x| 1.0 / x);
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let limit = best.map_or(max_dist, |b| b.0);
            match &self.nodes[n] {
                Node::Leaf { bounds, start, count } => {
                    if bounds.hit(o, &inv, limit).is_none() {
                        continue;
                    }
                    for &f in &self.order[*start..start + count] {
                        if let Some(t) = ray_triangle(o, d, &self.triangles[f]) {
                            let better = match best {
                                None => t <= max_dist,
                                Some((bt, bf)) => t < bt || (t == bt && f < bf),
                            };
                            if better {
                                best = Some((t, f));
                            }
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.hit(o, &inv, limit).is_none() {
                        continue;
                    }
                    let tl = self.nodes[*left].bounds().hit(o, &inv, limit);
                    let tr = self.nodes[*right].bounds().hit(o, &inv, limit);
                    // Push the farther child first so the nearer one is visited first.
                    match (tl, tr) {
                        (Some(a), Some(b)) if a <= b => stack.extend([*right, *left]),
                        (Some(_), Some(_)) => stack.extend([*left, *right]),
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, f)| make_hit(o, d, t, f))
    }

    /// Faces whose bounding boxes overlap `query`.
    pub fn faces_overlapping(&self, query: &Aabb, out: &mut Vec<usize>) {
        let overlaps = |b: &Aabb| (0..3).all(|k| b.min[k] <= query.max[k] && b.max[k] >= query.min[k]);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match &self.nodes[n] {
                Node::Leaf { bounds, start, count } => {
                    if overlaps(bounds) {
                        out.extend(&self.order[*start..start + count]);
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if overlaps(bounds) {
                        stack.extend([*left, *right]);
                    }
                }
            }
        }
    }

    pub fn triangle(&self, face: usize) -> &[Point3<f64>; 3] {
        &self.triangles[face]
    }
}

fn build_node(nodes: &mut Vec<Node>, order: &mut [usize], start: usize, boxes: &[Aabb], centroids: &[Point3<f64>]) -> usize {
    let bounds = order.iter().fold(Aabb::EMPTY, |b, &f| b.union(&boxes[f]));
    let id = nodes.len();
    nodes.push(Node::Leaf { bounds, start, count: order.len() });
    if order.len() <= LEAF_SIZE {
        return id;
    }
    let cb = order.iter().fold(Aabb::EMPTY, |b, &f| b.grow(&centroids[f]));

    // Best split over all axes and bin boundaries by surface-area cost.
    let mut best: Option<(f64, usize, usize)> = None;
    for axis in 0..3 {
        let (lo, hi) = (cb.min[axis], cb.max[axis]);
        if hi <= lo {
            continue;
        }
        let bin_of = |f: usize| (((centroids[f][axis] - lo) / (hi - lo) * BINS as f64) as usize).min(BINS - 1);
        let mut bin_box = [Aabb::EMPTY; BINS];
        let mut bin_count = [0usize; BINS];
        for &f in order.iter() {
            let b = bin_of(f);
            bin_box[b] = bin_box[b].union(&boxes[f]);
            bin_count[b] += 1;
        }
        let mut right_area = [0.0; BINS];
        let mut acc = Aabb::EMPTY;
        let mut right_count = [0usize; BINS];
        let mut n = 0;
        for b in (1..BINS).rev() {
            acc = acc.union(&bin_box[b]);
            n += bin_count[b];
            right_area[b] = acc.surface_area();
            right_count[b] = n;
        }
        let mut left = Aabb::EMPTY;
        let mut nl = 0;
        for split in 1..BINS {
            left = left.union(&bin_box[split - 1]);
            nl += bin_count[split - 1];
            if nl == 0 || right_count[split] == 0 {
                continue;
            }
            let cost = left.surface_area() * nl as f64 + right_area[split] * right_count[split] as f64;
            if best.map_or(true, |(c, _, _)| cost < c) {
                best = Some((cost, axis, split));
            }
        }
    }

    let mid = match best {
        Some((_, axis, split)) => {
            let (lo, hi) = (cb.min[axis], cb.max[axis]);
            let bin_of = |f: usize| (((centroids[f][axis] - lo) / (hi - lo) * BINS as f64) as usize).min(BINS - 1);
            let mut i = 0;
            for j in 0..order.len() {
                if bin_of(order[j]) < split {
                    order.swap(i, j);
                    i += 1;
                }
            }
            i
        }
        // All centroids coincide: split by count.
        _ => order.len() / 2,
    };
    let (l, r) = order.split_at_mut(mid);
    let left = build_node(nodes, l, start, boxes, centroids);
    let right = build_node(nodes, r, start + mid, boxes, centroids);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}
