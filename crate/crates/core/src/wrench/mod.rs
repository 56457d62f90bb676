//! Contact wrenches, force closure and the Ferrari-Canny metric.
//!
//! The grasp wrench space is the convex hull of the union of every contact's
//! friction-cone edge wrenches, each edge scaled to unit normal force. Torques
//! are divided by `rho` so forces and torques share one unit.

mod hull;

pub use hull::{convex_hull, ConvexHull, Facet, HullError};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interiority margin on facet offsets.
pub const FORCE_CLOSURE_MARGIN: f64 = 1e-9;
pub const SPATIAL_CONE_EDGES: usize = 8;
/// Direction count for the sampled support bound used when facet enumeration fails.
pub const FALLBACK_DIRECTIONS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrenchError {
    #[error("contact set is empty")]
    NoContacts,
    #[error("friction coefficient {0} must be non-negative")]
    NegativeFriction(f64),
    #[error("torque normalization length {0} must be positive")]
    InvalidRho(f64),
    #[error("contact normal has length {0}, expected 1")]
    NonUnitNormal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Jaw {
    WideA,
    WideB,
    Narrow,
}

/// Vector type of a contact model: 2D for planar grasps, 3D for spatial ones.
pub trait ContactVector: Copy + std::fmt::Debug {
    const WRENCH_DIM: usize;
    fn dot(&self, other: &Self) -> f64;
    fn norm(&self) -> f64;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    /// Friction cone edge directions (unit vectors).
    fn cone_edges(normal: Self, mu: f64, num_edges: usize) -> Vec<Self>;
    /// Appends `(force, lever x force / rho)`.
    fn push_wrench(lever: Self, force: Self, rho: f64, out: &mut Vec<f64>);
}

impl ContactVector for Vector2<f64> {
    const WRENCH_DIM: usize = 3;
    fn dot(&self, other: &Self) -> f64 {
        nalgebra::Matrix::dot(self, other)
    }
    fn norm(&self) -> f64 {
        nalgebra::Matrix::norm(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn cone_edges(normal: Self, mu: f64, _num_edges: usize) -> Vec<Self> {
        if mu == 0.0 {
            return vec![normal];
        }
        let half = mu.atan();
        [half, -half].iter().map(|a| nalgebra::Rotation2::new(*a) * normal).collect()
    }
    fn push_wrench(lever: Self, force: Self, rho: f64, out: &mut Vec<f64>) {
        out.extend([force.x, force.y, (lever.x * force.y - lever.y * force.x) / rho]);
    }
}

impl ContactVector for Vector3<f64> {
    const WRENCH_DIM: usize = 6;
    fn dot(&self, other: &Self) -> f64 {
        nalgebra::Matrix::dot(self, other)
    }
    fn norm(&self) -> f64 {
        nalgebra::Matrix::norm(self)
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn cone_edges(normal: Self, mu: f64, num_edges: usize) -> Vec<Self> {
        if mu == 0.0 || num_edges == 0 {
            return vec![normal];
        }
        let (t1, t2) = tangent_basis(&normal);
        let half = mu.atan();
        (0..num_edges)
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / num_edges as f64;
                normal * half.cos() + (t1 * phi.cos() + t2 * phi.sin()) * half.sin()
            })
            .collect()
    }
    fn push_wrench(lever: Self, force: Self, rho: f64, out: &mut Vec<f64>) {
        let torque = lever.cross(&force) / rho;
        out.extend([force.x, force.y, force.z, torque.x, torque.y, torque.z]);
    }
}

/// Tangent frame built from the world vertical so that it turns with the
/// normal under rotations about z.
pub fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let t1 = Vector3::z().cross(n);
    let t1 = if t1.norm() > 1e-9 { t1.normalize() } else { n.cross(&Vector3::x()).normalize() };
    (t1, n.cross(&t1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint<V> {
    pub position: V,
    pub inward_normal: V,
    pub jaw: Jaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSet<V> {
    pub contacts: Vec<ContactPoint<V>>,
    pub mu: f64,
    pub com: V,
    pub rho: f64,
}

pub type PlanarContacts = ContactSet<Vector2<f64>>;
pub type SpatialContacts = ContactSet<Vector3<f64>>;

impl<V: ContactVector> ContactSet<V> {
    pub fn validate(&self) -> Result<(), WrenchError> {
        if self.contacts.is_empty() {
            return Err(WrenchError::NoContacts);
        }
        if !(self.mu >= 0.0) {
            return Err(WrenchError::NegativeFriction(self.mu));
        }
        if !(self.rho > 0.0) {
            return Err(WrenchError::InvalidRho(self.rho));
        }
        for c in &self.contacts {
            let len = c.inward_normal.norm();
            if (len - 1.0).abs() > 1e-9 {
                return Err(WrenchError::NonUnitNormal(len));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }
}

/// Discretized contact wrenches stored row-major, `dim` values per wrench.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchSet {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl WrenchSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0);
        Self { dim, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn wrenches(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * c).collect() }
    }

    /// Support function `max_w <w, d>`.
    pub fn support(&self, d: &[f64]) -> f64 {
        self.wrenches().map(|w| w.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Cone edge directions for a unit `normal`: the normal itself when `mu` is
/// zero, the two rotations by `+-atan(mu)` in the plane, or `num_edges`
/// evenly spaced generators of the spatial cone.
pub fn friction_cone_edges<V: ContactVector>(normal: V, mu: f64, num_edges: usize) -> Vec<V> {
    V::cone_edges(normal, mu, num_edges)
}

pub fn build_wrench_set<V: ContactVector>(cs: &ContactSet<V>, num_cone_edges: usize) -> WrenchSet {
    let mut data = Vec::with_capacity(cs.contacts.len() * num_cone_edges.max(2) * V::WRENCH_DIM);
    for c in &cs.contacts {
        let lever = c.position.sub(&cs.com);
        for edge in V::cone_edges(c.inward_normal, cs.mu, num_cone_edges) {
            // Unit normal force: f = n + tangential part.
            let force = edge.scale(1.0 / edge.dot(&c.inward_normal));
            V::push_wrench(lever, force, cs.rho, &mut data);
        }
    }
    WrenchSet::new(V::WRENCH_DIM, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityMethod {
    Hull,
    /// Facet enumeration failed; epsilon is the minimum of sampled support values.
    SampledSupport,
    /// Wrenches span a lower-dimensional subspace.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspQuality {
    pub force_closure: bool,
    pub epsilon: f64,
    pub method: QualityMethod,
}

/// Deterministic quasi-random unit directions (Halton sequence through Box-Muller).
pub fn low_discrepancy_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let halton = |mut i: u64, base: u64| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    (1..=count as u64)
        .map(|i| {
            let mut d = Vec::with_capacity(dim);
            let mut k = 0;
            while d.len() < dim {
                let u1 = halton(i, PRIMES[k]).max(1e-12);
                let u2 = halton(i, PRIMES[k + 1]);
                let r = (-2.0 * u1.ln()).sqrt();
                let a = 2.0 * std::f64::consts::PI * u2;
                d.push(r * a.cos());
                if d.len() < dim {
                    d.push(r * a.sin());
                }
                k += 2;
            }
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            d.iter().map(|x| x / len).collect()
        })
        .collect()
}

fn sampled_quality(ws: &WrenchSet) -> GraspQuality {
    let min_support = low_discrepancy_directions(ws.dim, FALLBACK_DIRECTIONS)
        .iter()
        .map(|d| ws.support(d))
        .fold(f64::INFINITY, f64::min);
    let force_closure = min_support > FORCE_CLOSURE_MARGIN;
    GraspQuality {
        force_closure,
        epsilon: if force_closure { min_support } else { 0.0 },
        method: QualityMethod::SampledSupport,
    }
}

/// Force closure and epsilon from one hull construction.
pub fn wrench_quality(ws: &WrenchSet) -> GraspQuality {
    match convex_hull(&ws.data, ws.dim) {
        Ok(hull) => {
            let m = hull.min_offset();
            let force_closure = m > FORCE_CLOSURE_MARGIN;
            GraspQuality { force_closure, epsilon: if force_closure { m } else { 0.0 }, method: QualityMethod::Hull }
        }
        Err(HullError::Degenerate { .. }) | Err(HullError::TooFewPoints { .. }) => {
            GraspQuality { force_closure: false, epsilon: 0.0, method: QualityMethod::Degenerate }
        }
        Err(HullError::Numerical(why)) => {
            log::debug!("hull failed ({why}), using sampled support bound");
            sampled_quality(ws)
        }
    }
}

/// True iff the origin is strictly inside the grasp wrench space.
pub fn force_closure(ws: &WrenchSet) -> bool {
    wrench_quality(ws).force_closure
}

/// Radius of the largest origin-centered ball inside the grasp wrench space,
/// zero without force closure.
pub fn ferrari_canny(ws: &WrenchSet) -> f64 {
    wrench_quality(ws).epsilon
}

pub fn grasp_quality<V: ContactVector>(cs: &ContactSet<V>, num_cone_edges: usize) -> Result<GraspQuality, WrenchError> {
    cs.validate()?;
    Ok(wrench_quality(&build_wrench_set(cs, num_cone_edges)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn planar(pos: (f64, f64), n: (f64, f64), jaw: Jaw) -> ContactPoint<Vector2<f64>> {
        ContactPoint { position: Vector2::new(pos.0, pos.1), inward_normal: Vector2::new(n.0, n.1).normalize(), jaw }
    }

    #[test]
    fn planar_cone_edges() {
        let n = Vector2::new(0.0, 1.0);
        assert_eq!(friction_cone_edges(n, 0.0, 2), vec![n]);
        let e = friction_cone_edges(n, 1.0, 2);
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(e[0].x, -h, epsilon = 1e-12);
        assert_abs_diff_eq!(e[0].y, h, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].x, h, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].y, h, epsilon = 1e-12);
    }

    #[test]
    fn spatial_cone_edges() {
        let e = friction_cone_edges(Vector3::z(), 0.75, 8);
        assert_eq!(e.len(), 8);
        for (k, v) in e.iter().enumerate() {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v.z, 0.8, epsilon = 1e-12);
            let next = e[(k + 1) % 8];
            let (a, b) = (Vector2::new(v.x, v.y), Vector2::new(next.x, next.y));
            assert_abs_diff_eq!(a.angle(&b), std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        }
    }

    #[test]
    fn wrench_of_single_contacts() {
        let cs = ContactSet { contacts: vec![planar((0.0, 0.0), (0.0, 1.0), Jaw::Narrow)], mu: 0.0, com: Vector2::zeros(), rho: 0.1 };
        assert_eq!(build_wrench_set(&cs, 2).data, vec![0.0, 1.0, 0.0]);
        let cs = ContactSet { contacts: vec![planar((0.1, 0.0), (0.0, 1.0), Jaw::Narrow)], mu: 0.0, com: Vector2::zeros(), rho: 0.1 };
        let w = build_wrench_set(&cs, 2).data;
        assert_abs_diff_eq!(w[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn antipodal_wrenches_by_hand() {
        let cs = ContactSet {
            contacts: vec![planar((-0.05, 0.0), (1.0, 0.0), Jaw::WideA), planar((0.05, 0.0), (-1.0, 0.0), Jaw::Narrow)],
            mu: 0.75,
            com: Vector2::zeros(),
            rho: 0.05,
        };
        let ws = build_wrench_set(&cs, 2);
        // f = n +- 0.75 t; torque = (r x f) / rho with r = (-+0.05, 0).
        let expected = [
            [1.0, 0.75, -0.75],
            [1.0, -0.75, 0.75],
            [-1.0, -0.75, -0.75],
            [-1.0, 0.75, 0.75],
        ];
        assert_eq!(ws.len(), 4);
        for (w, e) in ws.wrenches().zip(expected) {
            for k in 0..3 {
                assert_abs_diff_eq!(w[k], e[k], epsilon = 1e-12);
            }
        }
        assert!(force_closure(&ws));
    }

    #[test]
    fn closure_needs_enough_contacts() {
        let one = ContactSet { contacts: vec![planar((0.0, -0.05), (0.0, 1.0), Jaw::Narrow)], mu: 0.75, com: Vector2::zeros(), rho: 0.05 };
        assert!(!force_closure(&build_wrench_set(&one, 2)));
        let frictionless = ContactSet {
            contacts: vec![planar((-0.05, 0.0), (1.0, 0.0), Jaw::WideA), planar((0.05, 0.0), (-1.0, 0.0), Jaw::Narrow)],
            mu: 0.0,
            com: Vector2::zeros(),
            rho: 0.05,
        };
        let q = grasp_quality(&frictionless, 2).unwrap();
        assert!(!q.force_closure);
        assert_eq!(q.epsilon, 0.0);
        assert_eq!(q.method, QualityMethod::Degenerate);
    }

    #[test]
    fn octahedron_epsilon_and_homogeneity() {
        let mut data = vec![];
        for k in 0..3 {
            for s in [1.0, -1.0] {
                let mut p = [0.0; 3];
                p[k] = s;
                data.extend(p);
            }
        }
        let ws = WrenchSet::new(3, data);
        assert_abs_diff_eq!(ferrari_canny(&ws), 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(ferrari_canny(&ws.scaled(2.5)), 2.5 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn invalid_contact_sets() {
        let mut cs = ContactSet { contacts: vec![planar((0.0, 0.0), (0.0, 1.0), Jaw::Narrow)], mu: 0.5, com: Vector2::zeros(), rho: 0.1 };
        cs.rho = 0.0;
        assert_eq!(grasp_quality(&cs, 2), Err(WrenchError::InvalidRho(0.0)));
        cs.rho = 0.1;
        cs.mu = -0.1;
        assert_eq!(grasp_quality(&cs, 2), Err(WrenchError::NegativeFriction(-0.1)));
        cs.contacts.clear();
        cs.mu = 0.5;
        assert_eq!(grasp_quality(&cs, 2), Err(WrenchError::NoContacts));
    }

    #[test]
    fn sampled_support_brackets_hull_epsilon() {
        let mut data = vec![];
        for k in 0..6 {
            for s in [1.0, -1.0] {
                let mut p = [0.0; 6];
                p[k] = s;
                data.extend(p);
            }
        }
        let ws = WrenchSet::new(6, data);
        let exact = ferrari_canny(&ws);
        let sampled = sampled_quality(&ws);
        assert!(sampled.force_closure);
        assert!(sampled.epsilon >= exact - 1e-12);
        assert!(sampled.epsilon < 1.5 * exact);
    }
}
