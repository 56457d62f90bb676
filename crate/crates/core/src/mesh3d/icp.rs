//! Point-to-point ICP with nearest-neighbor correspondences.

use super::{MeshError, PointCloud, RigidTransform};
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use std::num::NonZero;

/// Nearest-neighbor index over a fixed point set.
pub struct KdTree3 {
    tree: ImmutableKdTree<f64, 3>,
}

impl KdTree3 {
    pub fn new(points: &[Point3<f64>]) -> Self {
        let raw: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        Self { tree: ImmutableKdTree::new_from_slice(&raw).expect("point count fits in u32") }
    }

    /// Index of and squared distance to the nearest point.
    pub fn nearest(&self, p: &Point3<f64>) -> (usize, f64) {
        let nn = self.tree.query(&[p.x, p.y, p.z]).nearest_one::<SquaredEuclidean<f64>>().execute();
        (nn.item as usize, nn.distance)
    }

    /// Indices of the `k` nearest points, closest first.
    pub fn nearest_k(&self, p: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        let Some(k) = NonZero::new(k) else { return vec![] };
        self.tree
            .query(&[p.x, p.y, p.z])
            .nearest_n::<SquaredEuclidean<f64>>(k)
            .execute()
            .into_iter()
            .map(|nn| (nn.item as usize, nn.distance))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcpMode {
    /// Translation in the table plane and yaw about the vertical axis.
    Planar,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpConfig {
    pub max_iters: usize,
    /// Stop once an iteration improves RMS by less than this.
    pub tol: f64,
    /// Correspondences farther than this are ignored.
    pub reject_distance: f64,
    pub mode: IcpMode,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self { max_iters: 50, tol: 1e-10, reject_distance: 0.05, mode: IcpMode::Planar }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    pub transform: RigidTransform,
    /// Root mean of squared correspondence distances, each capped at the rejection distance.
    pub rms: f64,
    /// RMS before the first update and after each iteration.
    pub rms_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Pairs {
    src: Vec<Point3<f64>>,
    dst: Vec<Point3<f64>>,
    rms: f64,
}

fn correspond(source: &[Point3<f64>], tree: &KdTree3, target: &[Point3<f64>], t: &RigidTransform, reject2: f64) -> Pairs {
    let mut pairs = Pairs { src: vec![], dst: vec![], rms: 0.0 };
    let mut sum = 0.0;
    for p in source {
        let q = t.apply(p);
        let (j, d2) = tree.nearest(&q);
        if d2 <= reject2 {
            pairs.src.push(q);
            pairs.dst.push(target[j]);
        }
        sum += d2.min(reject2);
    }
    pairs.rms = (sum / source.len() as f64).sqrt();
    pairs
}

fn centroid(pts: &[Point3<f64>]) -> Vector3<f64> {
    pts.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / pts.len() as f64
}

/// Rank of the centered point set.
fn spread_rank(pts: &[Point3<f64>], c: &Vector3<f64>) -> usize {
    let cov = pts.iter().fold(Matrix3::zeros(), |m, p| {
        let d = p.coords - c;
        m + d * d.transpose()
    });
    let sv = cov.symmetric_eigenvalues();
    let top = sv.max();
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-12 * top).count()
}

/// Least-squares rigid update taking `src` onto `dst`.
fn best_fit(src: &[Point3<f64>], dst: &[Point3<f64>], mode: IcpMode) -> RigidTransform {
    let (cs, cd) = (centroid(src), centroid(dst));
    match mode {
        IcpMode::Full => {
            let h = src.iter().zip(dst).fold(Matrix3::zeros(), |m, (p, q)| m + (p.coords - cs) * (q.coords - cd).transpose());
            let svd = h.svd(true, true);
            let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
            let v = vt.transpose();
            let d = (v * u.transpose()).determinant().signum();
            let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
            RigidTransform::new(r, cd - r * cs)
        }
        IcpMode::Planar => {
            let (mut sc, mut ss) = (0.0, 0.0);
            for (p, q) in src.iter().zip(dst) {
                let (a, b) = (p.coords - cs, q.coords - cd);
                sc += a.x * b.x + a.y * b.y;
                ss += a.x * b.y - a.y * b.x;
            }
            let r = *Rotation3::from_axis_angle(&Vector3::z_axis(), ss.atan2(sc)).matrix();
            let mut t = cd - r * cs;
            t.z = 0.0;
            RigidTransform::new(r, t)
        }
    }
}

/// Aligns `source` to `target` starting from `init`.
///
/// The capped-distance RMS never increases between iterations: refreshing the
/// correspondences and the least-squares update each lower the capped sum.
pub fn icp_align(source: &PointCloud, target: &PointCloud, init: &RigidTransform, cfg: &IcpConfig) -> Result<IcpResult, MeshError> {
    if source.len() < 3 || target.len() < 3 {
        return Err(MeshError::DegenerateCorrespondence { rank: source.len().min(target.len()).saturating_sub(1) });
    }
    let tree = KdTree3::new(&target.points);
    let reject2 = cfg.reject_distance * cfg.reject_distance;
    let mut t = *init;
    let mut pairs = correspond(&source.points, &tree, &target.points, &t, reject2);
    let mut history = vec![pairs.rms];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let rank = if pairs.src.len() < 3 { pairs.src.len().saturating_sub(1) } else { spread_rank(&pairs.src, &centroid(&pairs.src)) };
        if rank < 2 {
            return Err(MeshError::DegenerateCorrespondence { rank });
        }
        let step = best_fit(&pairs.src, &pairs.dst, cfg.mode);
        let next_t = step.compose(&t);
        let next = correspond(&source.points, &tree, &target.points, &next_t, reject2);
        iterations += 1;
        if next.rms > pairs.rms {
            // Rounding can only lift RMS by a few ulps; keep the better pose.
            history.push(pairs.rms);
            converged = true;
            break;
        }
        let gain = pairs.rms - next.rms;
        t = next_t;
        pairs = next;
        history.push(pairs.rms);
        if gain < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(IcpResult { transform: t, rms: pairs.rms, rms_history: history, iterations, converged })
}
