//! Triangle meshes and point clouds: loading, mass properties, area-weighted
//! surface sampling, BVH ray casting and ICP registration.

mod bvh;
mod icp;
mod io;

pub use bvh::{ray_cast_brute_force, ray_triangle, Aabb, Bvh};
pub use icp::{icp_align, IcpConfig, IcpMode, IcpResult, KdTree3};
pub use io::{
    load_mesh, load_point_cloud, parse_obj, parse_ply, parse_stl, write_obj, write_ply, MeshFormat,
};

use nalgebra::{Matrix3, Point3, Rotation3, Unit, Vector3};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("parse error at byte {offset}: {message}")]
    ParseBinary { offset: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("face {face} references vertex {index} of {count}")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("mesh has no faces")]
    Empty,
    #[error("no face satisfies the sampling predicate")]
    NoEligibleFace,
    #[error("correspondences span fewer than the required dimensions (rank {rank})")]
    DegenerateCorrespondence { rank: usize },
    #[error("mesh encloses no volume")]
    ZeroVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub face_normals: Vec<Vector3<f64>>,
    pub face_areas: Vec<f64>,
}

impl TriMesh {
    /// Builds a mesh and its per-face normals and areas. Zero-area faces are dropped.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let count = vertices.len();
        let mut kept = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for (face, f) in faces.into_iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&i| i >= count) {
                return Err(MeshError::IndexOutOfRange { face, index, count });
            }
            let [a, b, c] = f.map(|i| vertices[i]);
            let cross = (b - a).cross(&(c - a));
            let len = cross.norm();
            if len > 0.0 && len.is_finite() {
                kept.push(f);
                normals.push(cross / len);
                areas.push(0.5 * len);
            }
        }
        if kept.is_empty() {
            return Err(MeshError::Empty);
        }
        Ok(Self { vertices, faces: kept, face_normals: normals, face_areas: areas })
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| t.apply(p)).collect(),
            faces: self.faces.clone(),
            face_normals: self.face_normals.iter().map(|n| t.rotation * n).collect(),
            face_areas: self.face_areas.clone(),
        }
    }

    /// Appends the faces of `other`, offsetting its vertex indices.
    pub fn merged(&self, other: &TriMesh) -> Self {
        let offset = self.vertices.len();
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.faces.extend(other.faces.iter().map(|f| f.map(|i| i + offset)));
        out.face_normals.extend_from_slice(&other.face_normals);
        out.face_areas.extend_from_slice(&other.face_areas);
        out
    }

    pub fn bounds(&self) -> Aabb {
        self.vertices.iter().fold(Aabb::EMPTY, |b, p| b.grow(p))
    }

    /// Number of undirected edges not shared by exactly two faces.
    pub fn boundary_edge_count(&self) -> usize {
        let mut uses: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses.values().filter(|&&c| c != 2).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self { points: self.points.iter().map(|p| t.apply(p)).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: Self = Self {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        translation: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let r = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Self { rotation: *r.matrix(), translation }
    }

    /// Rotation by `yaw` about the vertical axis through `pivot`.
    pub fn yaw_about(yaw: f64, pivot: &Point3<f64>) -> Self {
        let r = *Rotation3::from_axis_angle(&Vector3::z_axis(), yaw).matrix();
        Self { rotation: r, translation: pivot.coords - r * pivot.coords }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self { rotation: self.rotation * other.rotation, translation: self.rotation * other.translation + self.translation }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Rotation angle of `R`, in `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        (r.transpose() * r - Matrix3::identity()).abs().max() <= tol && (r.determinant() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub ray_origin: Point3<f64>,
    pub distance: f64,
    pub point: Point3<f64>,
    pub face_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassProperties {
    pub volume: f64,
    pub com: Point3<f64>,
    /// Set when the mesh has boundary edges.
    pub open: bool,
}

/// Volume and centroid of a closed, outward-wound mesh from signed tetrahedra.
pub fn mesh_mass_properties(m: &TriMesh) -> Result<MassProperties, MeshError> {
    // Tetrahedra are taken against a vertex of the mesh to limit cancellation.
    let origin = m.vertices[m.faces[0][0]].coords;
    let mut volume = 0.0;
    let mut moment = Vector3::zeros();
    for f in &m.faces {
        let [a, b, c] = f.map(|i| m.vertices[i].coords - origin);
        let v = a.dot(&b.cross(&c)) / 6.0;
        volume += v;
        moment += (a + b + c) * (v / 4.0);
    }
    let open = m.boundary_edge_count() > 0;
    if open || volume <= 0.0 {
        log::warn!("mesh is open or inverted (volume {volume:e}, open {open})");
    }
    if volume.abs() <= f64::EPSILON * m.bounds().diagonal().powi(3) {
        return Err(MeshError::ZeroVolume);
    }
    Ok(MassProperties { volume, com: Point3::from(moment / volume + origin), open })
}

/// Area-weighted face sampler restricted to faces passing a predicate.
#[derive(Debug, Clone)]
pub struct FaceSampler {
    faces: Vec<usize>,
    weights: WeightedIndex<f64>,
}

impl FaceSampler {
    pub fn new(m: &TriMesh, predicate: impl Fn(usize) -> bool) -> Result<Self, MeshError> {
        let faces: Vec<usize> = (0..m.faces.len()).filter(|&f| predicate(f) && m.face_areas[f] > 0.0).collect();
        if faces.is_empty() {
            return Err(MeshError::NoEligibleFace);
        }
        let weights = WeightedIndex::new(faces.iter().map(|&f| m.face_areas[f])).map_err(|_| MeshError::NoEligibleFace)?;
        Ok(Self { faces, weights })
    }

    pub fn eligible(&self) -> &[usize] {
        &self.faces
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: &TriMesh, rng: &mut R) -> (usize, Point3<f64>) {
        let face = self.faces[self.weights.sample(rng)];
        (face, sample_triangle(&m.triangle(face), rng))
    }
}

/// Uniform point on a triangle by square-root barycentric sampling.
pub fn sample_triangle<R: Rng + ?Sized>(t: &[Point3<f64>; 3], rng: &mut R) -> Point3<f64> {
    let s = rng.random::<f64>().sqrt();
    let r2: f64 = rng.random();
    Point3::from(t[0].coords * (1.0 - s) + t[1].coords * (s * (1.0 - r2)) + t[2].coords * (s * r2))
}

pub fn sample_face_weighted<R: Rng + ?Sized>(
    m: &TriMesh,
    predicate: impl Fn(usize) -> bool,
    rng: &mut R,
) -> Result<(usize, Point3<f64>), MeshError> {
    Ok(FaceSampler::new(m, predicate)?.sample(m, rng))
}

/// Axis-aligned box mesh centered at `center`.
pub fn box_mesh(size: Vector3<f64>, center: Point3<f64>) -> TriMesh {
    let h = size * 0.5;
    let vertices: Vec<Point3<f64>> = (0..8)
        .map(|i| {
            let s = |bit: usize| if i >> bit & 1 == 1 { 1.0 } else { -1.0 };
            center + Vector3::new(s(0) * h.x, s(1) * h.y, s(2) * h.z)
        })
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    TriMesh::new(vertices, faces).expect("box faces are valid")
}

/// Ring of `segments` sides between radii `r_in` and `r_out`, standing on `base` with the given height.
pub fn annulus_mesh(r_in: f64, r_out: f64, height: f64, segments: usize, base: Point3<f64>) -> TriMesh {
    let n = segments.max(3);
    let mut vertices = Vec::with_capacity(4 * n);
    for z in [0.0, height] {
        for r in [r_out, r_in] {
            for k in 0..n {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                vertices.push(base + Vector3::new(r * a.cos(), r * a.sin(), z));
            }
        }
    }
    // Vertex index by layer (0 bottom, 1 top), ring (0 outer, 1 inner) and angle.
    let v = |layer: usize, ring: usize, k: usize| (2 * layer + ring) * n + k % n;
    let mut faces = Vec::with_capacity(8 * n);
    let mut quad = |a, b, c, d| faces.extend([[a, b, c], [a, c, d]]);
    for k in 0..n {
        quad(v(0, 0, k), v(0, 0, k + 1), v(1, 0, k + 1), v(1, 0, k));
        quad(v(0, 1, k), v(1, 1, k), v(1, 1, k + 1), v(0, 1, k + 1));
        quad(v(1, 0, k), v(1, 0, k + 1), v(1, 1, k + 1), v(1, 1, k));
        quad(v(0, 0, k), v(0, 1, k), v(0, 1, k + 1), v(0, 0, k + 1));
    }
    TriMesh::new(vertices, faces).expect("annulus faces are valid")
}

#[cfg(test)]
mod tests;
