//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use getgrasp::geometry2d::Polygon2D;
use getgrasp::wrench::{ContactPoint, ContactSet, Jaw, PlanarContacts, SpatialContacts, WrenchSet};
use nalgebra::{DMatrix, Point2, Point3, Rotation2, Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Smallest signed offset over all supporting hyperplanes of the point set,
/// found by trying every affinely independent `dim`-subset.
///
/// Positive exactly when the origin is strictly inside the hull, in which case
/// it is the inscribed-ball radius about the origin.
pub fn brute_force_min_offset(points: &[f64], dim: usize) -> f64 {
    let n = points.len() / dim;
    let p = |i: usize| &points[i * dim..(i + 1) * dim];
    let scale = points.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut best = f64::INFINITY;
    let mut found = false;
    combinations(n, dim, |sub| {
        let a = DMatrix::from_fn(dim, dim, |r, c| if r + 1 < dim { p(sub[r + 1])[c] - p(sub[0])[c] } else { 0.0 });
        let svd = a.svd(false, true);
        let v_t = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        if svd.singular_values[order[1]] < 1e-9 * scale {
            return;
        }
        let normal: Vec<f64> = v_t.row(order[0]).iter().copied().collect();
        let dot = |q: &[f64]| q.iter().zip(&normal).map(|(x, y)| x * y).sum::<f64>();
        let off = dot(p(sub[0]));
        let tol = 1e-10 * scale;
        let side: Vec<f64> = (0..n).map(|i| dot(p(i)) - off).collect();
        if side.iter().all(|s| *s <= tol) {
            best = best.min(off);
            found = true;
        }
        if side.iter().all(|s| *s >= -tol) {
            best = best.min(-off);
            found = true;
        }
    });
    if found {
        best
    } else {
        0.0
    }
}

pub fn random_unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / len).collect()
        })
        .collect()
}

/// Minimum support value `h(d) = max_w <w, d>` over the given directions,
/// an upper bound on the signed distance from the origin to the hull boundary.
pub fn sampled_min_support(ws: &WrenchSet, dirs: &[Vec<f64>]) -> f64 {
    dirs.iter()
        .map(|d| ws.wrenches().map(|w| w.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Support-sampling oracle with a fixed direction budget: a fifth of the
/// directions are uniform, the rest refine the four best of those by
/// adaptive random local search. Thin hulls leave only a narrow cap of
/// separating directions, which uniform sampling alone misses.
pub fn refined_min_support(ws: &WrenchSet, budget: usize, seed: u64) -> f64 {
    let h = |d: &[f64]| ws.wrenches().map(|w| w.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
    let uniform = random_unit_directions(ws.dim, budget / 5, seed);
    let mut scored: Vec<(f64, Vec<f64>)> = uniform.into_iter().map(|d| (h(&d), d)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].0;
    let chains = 4.min(scored.len());
    let steps = (budget - budget / 5) / chains;
    let mut r = rng(seed ^ 0x5eed);
    for (start_h, start) in scored.into_iter().take(chains) {
        let (mut cur_h, mut cur, mut sigma) = (start_h, start, 0.2);
        for _ in 0..steps {
            let cand: Vec<f64> = cur.iter().map(|x| x + sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)).collect();
            let len = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cand: Vec<f64> = cand.into_iter().map(|x| x / len).collect();
            let ch = h(&cand);
            if ch < cur_h {
                (cur_h, cur) = (ch, cand);
                sigma *= 1.5;
            } else {
                sigma = (sigma * 0.9).max(1e-9);
            }
        }
        best = best.min(cur_h);
    }
    best
}

const JAWS: [Jaw; 3] = [Jaw::WideA, Jaw::WideB, Jaw::Narrow];

/// Contacts on a circle about the origin with normals turned up to 60 degrees away from the center.
pub fn random_planar_contacts<R: Rng>(r: &mut R, count: usize) -> PlanarContacts {
    let contacts = (0..count)
        .map(|k| {
            let a: f64 = r.random_range(0.0..std::f64::consts::TAU);
            let radius: f64 = r.random_range(0.02..0.05);
            let pos = Vector2::new(a.cos(), a.sin()) * radius;
            let turn: f64 = r.random_range(-60f64.to_radians()..60f64.to_radians());
            let n = Rotation2::new(turn) * (-pos.normalize());
            ContactPoint { position: pos, inward_normal: n, jaw: JAWS[k % 3] }
        })
        .collect();
    ContactSet { contacts, mu: r.random_range(0.2..1.0), com: Vector2::zeros(), rho: 0.05 }
}

pub fn random_unit3<R: Rng>(r: &mut R) -> Vector3<f64> {
    Vector3::from_fn(|_, _| StandardNormal.sample(r)).normalize()
}

/// Contacts on a sphere about the origin with normals tilted up to 60 degrees away from the center.
pub fn random_spatial_contacts<R: Rng>(r: &mut R, count: usize) -> SpatialContacts {
    let contacts = (0..count)
        .map(|k| {
            let dir = random_unit3(r);
            let pos = dir * r.random_range(0.02..0.05);
            let axis = random_unit3(r).cross(&dir).normalize();
            let turn: f64 = r.random_range(0.0..60f64.to_radians());
            let n = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), turn) * -dir;
            ContactPoint { position: pos, inward_normal: n, jaw: JAWS[k % 3] }
        })
        .collect();
    ContactSet { contacts, mu: r.random_range(0.2..1.0), com: Vector3::zeros(), rho: 0.05 }
}

/// Even-odd crossing-number point location over every ring.
pub fn crossing_number_inside(poly: &Polygon2D, p: Point2<f64>) -> bool {
    let mut inside = false;
    for ring in std::iter::once(&poly.outer).chain(&poly.holes) {
        let n = ring.len();
        for i in 0..n {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

/// Smallest enclosing-rectangle area over every direction through two of the points.
///
/// A minimal rectangle has a side on a hull edge, and every hull edge joins two input points.
pub fn exhaustive_min_rectangle_area(points: &[Point2<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d = b - a;
            if d.norm() == 0.0 {
                continue;
            }
            let u = d.normalize();
            let v = Vector2::new(-u.y, u.x);
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in points {
                let q = [p.coords.dot(&u), p.coords.dot(&v)];
                for k in 0..2 {
                    lo[k] = lo[k].min(q[k]);
                    hi[k] = hi[k].max(q[k]);
                }
            }
            best = best.min((hi[0] - lo[0]) * (hi[1] - lo[1]));
        }
    }
    best
}

/// Moller-Trumbore ray-triangle distance.
pub fn moller_trumbore(o: &Point3<f64>, d: &Vector3<f64>, t: &[Point3<f64>; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let s = o - t[0];
    let u = s.dot(&p) / det;
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    let dist = e2.dot(&q) / det;
    (dist >= 0.0).then_some(dist)
}

pub fn point_segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let t = if ab.norm_squared() == 0.0 { 0.0 } else { ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0) };
    (p - (a + ab * t)).norm()
}

/// Regular `n`-gon, optionally with every other vertex pulled in to make a star.
pub fn star_polygon(n: usize, r_out: f64, r_in: f64, center: Point2<f64>) -> Vec<Point2<f64>> {
    (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            let r = if k % 2 == 0 { r_out } else { r_in };
            center + Vector2::new(a.cos(), a.sin()) * r
        })
        .collect()
}
