//! Dominant-point detection (Teh-Chin) followed by closed-ring Ramer-Douglas-Peucker.

use super::{segment_distance, Contour, GeometryError};
use nalgebra::Point2;

pub const RDP_EPSILON_DEFAULT: f64 = 2.0;

/// Below this many dominant points the detection stage is bypassed.
const MIN_DOMINANT: usize = 6;

/// Teh-Chin dominant points of a closed pixel chain, as sorted indices.
///
/// The region of support of each point grows while the chord keeps
/// lengthening and the relative deviation keeps shrinking; significance is the
/// k-cosine at that support, then non-maxima are suppressed within half the
/// support. Points lying exactly on their chord are never dominant.
pub fn dominant_points(points: &[Point2<f64>]) -> Vec<usize> {
    let n = points.len();
    if n < 7 {
        return (0..n).collect();
    }
    let at = |i: isize| points[i.rem_euclid(n as isize) as usize];
    let max_k = (n / 2 - 1).max(1);
    let chord = |i: usize, k: usize| {
        let (a, b, p) = (at(i as isize - k as isize), at((i + k) as isize), points[i]);
        let ab = b - a;
        let l = ab.norm();
        let d = if l > 0.0 { (ab.x * (p.y - a.y) - ab.y * (p.x - a.x)) / l } else { (p - a).norm() };
        (l, d)
    };

    let mut support = vec![1usize; n];
    let mut significance = vec![-1.0f64; n];
    let mut deviation = vec![0.0f64; n];
    for i in 0..n {
        let mut k = 1;
        while k < max_k {
            let (l0, d0) = chord(i, k);
            let (l1, d1) = chord(i, k + 1);
            if l0 >= l1 || l0 == 0.0 {
                break;
            }
            let (r0, r1) = (d0 / l0, d1 / l1);
            if (d0 > 0.0 && r0 >= r1) || (d0 < 0.0 && r0 <= r1) {
                break;
            }
            k += 1;
        }
        support[i] = k;
        let (a, b, p) = (at(i as isize - k as isize), at((i + k) as isize), points[i]);
        let (u, v) = (a - p, b - p);
        let denom = u.norm() * v.norm();
        significance[i] = if denom > 0.0 { u.dot(&v) / denom } else { 1.0 };
        deviation[i] = chord(i, k).1;
    }

    (0..n)
        .filter(|&i| {
            if deviation[i].abs() < 1e-12 {
                return false;
            }
            let half = (support[i] / 2).max(1) as isize;
            (-half..=half).filter(|&o| o != 0).all(|o| {
                let j = (i as isize + o).rem_euclid(n as isize) as usize;
                significance[i] > significance[j] || (significance[i] == significance[j] && i < j)
            })
        })
        .collect()
}

/// Simplifies a closed contour to a pixel-space ring.
///
/// The ring is a subsequence of the contour. Dominant points are the preferred
/// split locations; every dropped contour point lies within `rdp_epsilon` of
/// the returned ring.
pub fn simplify_polygon(
    contour: &Contour,
    rdp_epsilon: f64,
    teh_chin_enabled: bool,
) -> Result<Vec<Point2<f64>>, GeometryError> {
    let raw = contour.to_points();
    let idx = simplify_indices(&raw, rdp_epsilon, teh_chin_enabled)?;
    Ok(idx.into_iter().map(|i| raw[i]).collect())
}

pub(crate) fn simplify_indices(raw: &[Point2<f64>], eps: f64, teh_chin: bool) -> Result<Vec<usize>, GeometryError> {
    let n = raw.len();
    if n < 3 {
        return Err(GeometryError::DegenerateContour);
    }
    let mut anchors = if teh_chin { dominant_points(raw) } else { Vec::new() };
    if anchors.len() < MIN_DOMINANT {
        anchors = (0..n).collect();
    }

    let centroid = raw.iter().fold(Point2::origin(), |acc, p| acc + p.coords / n as f64);
    let far = |from: Point2<f64>| {
        anchors
            .iter()
            .copied()
            .fold((anchors[0], -1.0), |(bi, bd), i| {
                let d = (raw[i] - from).norm();
                if d > bd { (i, d) } else { (bi, bd) }
            })
            .0
    };
    let a0 = far(centroid);
    let a1 = far(raw[a0]);
    if a0 == a1 {
        return Err(GeometryError::DegenerateContour);
    }

    let mut keep = vec![false; n];
    keep[a0] = true;
    keep[a1] = true;
    let mut is_anchor = vec![false; n];
    for &i in &anchors {
        is_anchor[i] = true;
    }
    split(raw, &is_anchor, a0, a1, eps, &mut keep);
    split(raw, &is_anchor, a1, a0, eps, &mut keep);

    // The two seed vertices are kept unconditionally by the recursion; drop them
    // again when their neighbors already cover them.
    for seed in [a0, a1] {
        let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        if kept.len() <= 3 {
            break;
        }
        let pos = kept.iter().position(|&i| i == seed).unwrap();
        let prev = kept[(pos + kept.len() - 1) % kept.len()];
        let next = kept[(pos + 1) % kept.len()];
        if max_deviation(raw, prev, next).map_or(true, |(_, d)| d <= eps) {
            keep[seed] = false;
        }
    }

    let out: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    if out.len() < 3 {
        return Err(GeometryError::DegenerateContour);
    }
    Ok(out)
}

/// Cyclic indices strictly between `from` and `to`.
fn between(n: usize, from: usize, to: usize) -> impl Iterator<Item = usize> {
    let len = (to + n - from) % n;
    (1..len).map(move |k| (from + k) % n)
}

fn max_deviation(raw: &[Point2<f64>], from: usize, to: usize) -> Option<(usize, f64)> {
    between(raw.len(), from, to)
        .map(|i| (i, segment_distance(raw[i], raw[from], raw[to])))
        .fold(None, |best, (i, d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((i, d)),
        })
}

fn split(raw: &[Point2<f64>], is_anchor: &[bool], from: usize, to: usize, eps: f64, keep: &mut [bool]) {
    let Some((far_raw, dev)) = max_deviation(raw, from, to) else {
        return;
    };
    if dev <= eps {
        return;
    }
    let at = between(raw.len(), from, to)
        .filter(|&i| is_anchor[i])
        .map(|i| (i, segment_distance(raw[i], raw[from], raw[to])))
        .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
            Some((_, bd)) if bd >= d => best,
            _ => Some((i, d)),
        })
        .map_or(far_raw, |(i, _)| i);
    keep[at] = true;
    split(raw, is_anchor, from, at, eps, keep);
    split(raw, is_anchor, at, to, eps, keep);
}
