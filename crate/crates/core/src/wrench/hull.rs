//! Incremental (beneath-beyond) convex hull in arbitrary dimension.
//!
//! Facets are kept simplicial: every facet holds exactly `dim` vertex indices.
//! Points within the visibility tolerance of a facet plane count as beneath it,
//! so coplanar input produces a triangulated but geometrically exact boundary.

use nalgebra::DMatrix;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("need at least dim + 1 = {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points span only a {rank}-dimensional affine subspace of {dim}")]
    Degenerate { rank: usize, dim: usize },
    #[error("hull construction lost precision: {0}")]
    Numerical(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    /// Plane offset: `normal . x = offset` on the facet, `<=` inside.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub dim: usize,
    pub facets: Vec<Facet>,
}

impl ConvexHull {
    /// Signed distance of the origin inside every facet (minimum facet offset).
    pub fn min_offset(&self) -> f64 {
        self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank of the affine span and a maximal affinely independent subset, chosen
/// greedily by distance to the current span.
fn initial_simplex(pts: &[&[f64]], dim: usize, tol: f64) -> Result<Vec<usize>, HullError> {
    let n = pts.len();
    let centroid: Vec<f64> = (0..dim).map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let first = (0..n).max_by(|&a, &b| dist2(pts[a], &centroid).total_cmp(&dist2(pts[b], &centroid))).unwrap();
    let mut chosen = vec![first];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while chosen.len() <= dim {
        let residual = |p: &[f64]| {
            let mut r: Vec<f64> = p.iter().zip(pts[first]).map(|(x, y)| x - y).collect();
            for b in &basis {
                let c = dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            r
        };
        let (best, norm) = (0..n)
            .map(|i| (i, dot(&residual(pts[i]), &residual(pts[i])).sqrt()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= tol {
            return Err(HullError::Degenerate { rank: basis.len(), dim });
        }
        let r = residual(pts[best]);
        basis.push(r.iter().map(|x| x / norm).collect());
        chosen.push(best);
    }
    Ok(chosen)
}

/// Hyperplane through `dim` points, oriented away from `interior`.
fn facet_plane(pts: &[&[f64]], verts: &[usize], interior: &[f64], dim: usize) -> Option<(Vec<f64>, f64)> {
    let base = pts[verts[0]];
    let m = DMatrix::from_fn(dim - 1, dim, |r, c| pts[verts[r + 1]][c] - base[c]);
    // Generalized cross product via cofactors.
    let mut normal = vec![0.0; dim];
    for (k, nk) in normal.iter_mut().enumerate() {
        let minor = m.clone().remove_column(k);
        let det = if dim == 1 { 1.0 } else { minor.determinant() };
        *nk = if k % 2 == 0 { det } else { -det };
    }
    let len = dot(&normal, &normal).sqrt();
    let scale = (0..dim - 1).map(|r| m.row(r).norm()).product::<f64>();
    if !(len > 1e-12 * scale) || !len.is_finite() {
        return None;
    }
    normal.iter_mut().for_each(|x| *x /= len);
    let mut offset = dot(&normal, base);
    if dot(&normal, interior) > offset {
        normal.iter_mut().for_each(|x| *x = -*x);
        offset = -offset;
    }
    Some((normal, offset))
}

/// Convex hull of `points`, stored row-major with `dim` coordinates per point.
pub fn convex_hull(points: &[f64], dim: usize) -> Result<ConvexHull, HullError> {
    assert!(dim >= 2 && points.len() % dim == 0);
    let pts: Vec<&[f64]> = points.chunks(dim).collect();
    if pts.len() < dim + 1 {
        return Err(HullError::TooFewPoints { needed: dim + 1, got: pts.len() });
    }
    let scale = points.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale;

    let simplex = initial_simplex(&pts, dim, tol)?;
    let interior: Vec<f64> = (0..dim).map(|k| simplex.iter().map(|&i| pts[i][k]).sum::<f64>() / (dim + 1) as f64).collect();

    let mut facets: Vec<Facet> = Vec::new();
    for skip in 0..=dim {
        let verts: Vec<usize> = simplex.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
        let (normal, offset) = facet_plane(&pts, &verts, &interior, dim).ok_or(HullError::Numerical("initial simplex"))?;
        facets.push(Facet { vertices: verts, normal, offset });
    }

    // Farthest-first insertion keeps early facets large and well conditioned.
    let mut order: Vec<usize> = (0..pts.len()).filter(|i| !simplex.contains(i)).collect();
    let d2 = |i: usize| pts[i].iter().zip(&interior).map(|(x, c)| (x - c) * (x - c)).sum::<f64>();
    order.sort_by(|&a, &b| d2(b).total_cmp(&d2(a)).then(a.cmp(&b)));

    for p in order {
        let visible: Vec<usize> = (0..facets.len())
            .filter(|&f| dot(&facets[f].normal, pts[p]) - facets[f].offset > tol)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for &f in &visible {
            let vs = &facets[f].vertices;
            for skip in 0..dim {
                let mut ridge: Vec<usize> = vs.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
                ridge.sort_unstable();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
        horizon.sort();
        if horizon.is_empty() {
            return Err(HullError::Numerical("no horizon"));
        }
        let mut is_visible = vec![false; facets.len()];
        visible.iter().for_each(|&f| is_visible[f] = true);
        let mut next: Vec<Facet> = facets
            .into_iter()
            .zip(is_visible)
            .filter(|(_, v)| !v)
            .map(|(f, _)| f)
            .collect();
        for ridge in horizon {
            let mut verts = ridge;
            verts.push(p);
            let (normal, offset) = facet_plane(&pts, &verts, &interior, dim).ok_or(HullError::Numerical("degenerate cone facet"))?;
            next.push(Facet { vertices: verts, normal, offset });
        }
        facets = next;
    }

    let loose = 1e-7 * scale;
    for f in &facets {
        if pts.iter().any(|p| dot(&f.normal, p) - f.offset > loose) {
            return Err(HullError::Numerical("point outside final hull"));
        }
    }
    Ok(ConvexHull { dim, facets })
}
