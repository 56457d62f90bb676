use super::collision::{to_frame, triangle_box_overlap, LocalBox};
use super::{Candidate3D, Grasp3D, GripperModel3D, Planner3DConfig, Rejection, Scene};
use crate::mesh3d::{Aabb, FaceSampler, RigidTransform};
use crate::wrench::{grasp_quality, ContactPoint, ContactSet, Jaw, SPATIAL_CONE_EDGES};
use nalgebra::{Matrix3, Point3, Rotation3, Unit, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Free space kept between each swept pad volume and its contact surface.
const SWEEP_GAP: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pad {
    WideA,
    WideB,
    Narrow,
}

impl Pad {
    pub const ALL: [Pad; 3] = [Pad::WideA, Pad::WideB, Pad::Narrow];

    fn jaw(self) -> Jaw {
        match self {
            Pad::WideA => Jaw::WideA,
            Pad::WideB => Jaw::WideB,
            Pad::Narrow => Jaw::Narrow,
        }
    }

    /// Lateral center and pad-plane offset along the closing axis, gripper frame.
    fn placement(self, g: &GripperModel3D) -> (f64, f64) {
        match self {
            Pad::WideA => (0.5 * g.wide_spacing, 0.0),
            Pad::WideB => (-0.5 * g.wide_spacing, 0.0),
            Pad::Narrow => (0.0, g.max_opening),
        }
    }

    /// Ray direction along the closing axis, gripper frame.
    fn direction(self) -> f64 {
        if self == Pad::Narrow { -1.0 } else { 1.0 }
    }
}

fn axes(pose: &RigidTransform) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let r = &pose.rotation;
    (r.column(0).into(), r.column(1).into(), r.column(2).into())
}

fn origin(pose: &RigidTransform) -> Point3<f64> {
    Point3::from(pose.translation)
}

/// Midpoint between the jaws at half finger length; the yaw pivot.
pub fn gripper_center(pose: &RigidTransform, g: &GripperModel3D) -> Point3<f64> {
    let (x, _, z) = axes(pose);
    origin(pose) + x * (0.5 * g.max_opening) + z * (0.5 * g.usable_length)
}

/// Ray origins (cell centers of the trapezoid grid) and the common direction for one pad.
pub fn pad_rays(pose: &RigidTransform, pad: Pad, cfg: &Planner3DConfig) -> (Vec<Point3<f64>>, Vector3<f64>) {
    let g = &cfg.gripper;
    let (x, y, z) = axes(pose);
    let (yc, xp) = pad.placement(g);
    let base = origin(pose) + x * xp;
    let mut origins = Vec::with_capacity(cfg.ray_rows * cfg.ray_cols);
    for i in 0..cfg.ray_rows {
        let h = g.usable_length * (i as f64 + 0.5) / cfg.ray_rows as f64;
        let w = g.pad_width(h);
        for j in 0..cfg.ray_cols {
            let s = yc + w * ((j as f64 + 0.5) / cfg.ray_cols as f64 - 0.5);
            origins.push(base + y * s + z * h);
        }
    }
    (origins, x * pad.direction())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadHit {
    pub ray: usize,
    pub distance: f64,
    pub point: Point3<f64>,
    pub face: usize,
    /// The ray met the inside of a face first, so the pad starts inside material.
    pub from_inside: bool,
}

/// Nearest mesh hit of every pad ray within the full opening.
pub fn cast_contact_rays(scene: &Scene, pose: &RigidTransform, cfg: &Planner3DConfig) -> [Vec<PadHit>; 3] {
    Pad::ALL.map(|pad| {
        let (origins, dir) = pad_rays(pose, pad, cfg);
        origins
            .iter()
            .enumerate()
            .filter_map(|(ray, o)| {
                scene.bvh.ray_cast(o, &dir, cfg.gripper.max_opening).map(|h| PadHit {
                    ray,
                    distance: h.distance,
                    point: h.point,
                    face: h.face_index,
                    from_inside: scene.mesh.face_normals[h.face_index].dot(&dir) > 0.0,
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadContact {
    pub distance: f64,
    pub point: Point3<f64>,
    /// Surface normal pointing into the material, away from the pad.
    pub inward_normal: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvedContacts {
    pub pads: [PadContact; 3],
    /// `d_wide_a - d_wide_b`.
    pub signed_imbalance: f64,
}

impl SolvedContacts {
    pub fn imbalance(&self) -> f64 {
        self.signed_imbalance.abs()
    }

    pub fn wide_travel(&self) -> f64 {
        self.pads[0].distance.min(self.pads[1].distance)
    }

    pub fn narrow_travel(&self) -> f64 {
        self.pads[2].distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactFailure {
    /// A pad has no hit.
    Insufficient,
    /// A pad's nearest hit is the inside of a face.
    Inside,
}

impl From<ContactFailure> for Rejection {
    fn from(f: ContactFailure) -> Self {
        match f {
            ContactFailure::Insufficient => Rejection::NoContact,
            ContactFailure::Inside => Rejection::Collision,
        }
    }
}

/// Per pad, the minimum-distance hit becomes the contact.
pub fn contacts_from_hits(scene: &Scene, hits: &[Vec<PadHit>; 3]) -> Result<SolvedContacts, ContactFailure> {
    let mut pads = [PadContact { distance: 0.0, point: Point3::origin(), inward_normal: Vector3::zeros() }; 3];
    for (k, list) in hits.iter().enumerate() {
        let best = list
            .iter()
            .min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.ray.cmp(&b.ray)))
            .ok_or(ContactFailure::Insufficient)?;
        if best.from_inside {
            return Err(ContactFailure::Inside);
        }
        pads[k] = PadContact { distance: best.distance, point: best.point, inward_normal: -scene.mesh.face_normals[best.face] };
    }
    Ok(SolvedContacts { signed_imbalance: pads[0].distance - pads[1].distance, pads })
}

fn solve(scene: &Scene, pose: &RigidTransform, cfg: &Planner3DConfig) -> Result<SolvedContacts, ContactFailure> {
    contacts_from_hits(scene, &cast_contact_rays(scene, pose, cfg))
}

/// Samples a fully open gripper pose facing a random eligible face.
///
/// The wide jaw is centered laterally on the sampled point with its tip at
/// the point's height, then lowered by a uniform fraction of the height above
/// the table. Its standoff from the face centers the material crossed by the
/// closing axis inside the open jaws.
pub fn sample_gripper_pose<R: Rng>(
    scene: &Scene,
    sampler: &FaceSampler,
    cfg: &Planner3DConfig,
    rng: &mut R,
) -> Result<RigidTransform, Rejection> {
    let g = &cfg.gripper;
    let (face, q) = sampler.sample(&scene.mesh, rng);
    let x = -scene.mesh.face_normals[face];
    let up = Vector3::z() - x * x.z;
    let z0 = if up.norm() > 1e-9 { up.normalize() } else { x.cross(&Vector3::x()).normalize() };
    let roll = rng.random_range(-cfg.max_roll..=cfg.max_roll);
    let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(x), roll);
    let z = rot * z0;
    let y = z.cross(&x);
    let drop = rng.random_range(0.0..=(q.z - scene.table_z).max(0.0));

    let span = scene
        .bvh
        .ray_cast(&(q + x * 1e-9), &x, 2.0 * g.max_opening)
        .map_or(g.max_opening, |h| h.distance);
    if span >= g.max_opening {
        return Err(Rejection::Opening);
    }
    let standoff = 0.5 * (g.max_opening - span);
    let origin = q - x * standoff - Vector3::z() * drop;
    Ok(RigidTransform::new(Matrix3::from_columns(&[x, y, z]), origin.coords))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimized {
    pub pose: RigidTransform,
    pub contacts: SolvedContacts,
    pub yaw: f64,
    pub iterations: usize,
    /// Imbalance after each accepted or rejected step, starting from the initial pose.
    pub history: Vec<f64>,
}

/// Rotates the gripper about the vertical axis through its center until both
/// wide pads are within `imbalance_tol` of touching.
///
/// Each step is `-lambda * g / g'` on the signed imbalance `g`, with `g'` from
/// central differences. A step that raises the imbalance is reverted and halves
/// `lambda`; an improving step grows it by 1.2 up to 1.
pub fn optimize_imbalance(scene: &Scene, pose: &RigidTransform, cfg: &Planner3DConfig) -> Result<Optimized, Rejection> {
    let pivot = gripper_center(pose, &cfg.gripper);
    let at = |yaw: f64| RigidTransform::yaw_about(yaw, &pivot).compose(pose);
    let eval = |yaw: f64| solve(scene, &at(yaw), cfg).map_err(Rejection::from);

    let mut yaw = 0.0;
    let mut current = eval(yaw)?;
    let mut history = vec![current.imbalance()];
    let mut lambda: f64 = 1.0;
    let mut iterations = 0;
    while current.imbalance() >= cfg.imbalance_tol {
        if iterations == cfg.max_opt_iters {
            return Err(Rejection::NotConverged);
        }
        iterations += 1;
        let h = cfg.fd_step;
        let slope = (eval(yaw + h)?.signed_imbalance - eval(yaw - h)?.signed_imbalance) / (2.0 * h);
        if !(slope.abs() > 1e-12) {
            return Err(Rejection::NotConverged);
        }
        let step = (-lambda * current.signed_imbalance / slope).clamp(-cfg.max_yaw_step, cfg.max_yaw_step);
        let next = eval(yaw + step)?;
        if next.imbalance() < current.imbalance() {
            yaw += step;
            current = next;
            lambda = (lambda * 1.2).min(1.0);
        } else {
            lambda *= 0.5;
        }
        history.push(current.imbalance());
    }
    Ok(Optimized { pose: at(yaw), contacts: current, yaw, iterations, history })
}

/// Swept pad volumes in the gripper frame, from the jaw backing to just short of contact.
fn pad_volumes(g: &GripperModel3D, c: &SolvedContacts) -> [LocalBox; 3] {
    let (wide, narrow) = (c.wide_travel(), c.narrow_travel());
    let half = 0.5 * g.w_bottom.max(g.w_top);
    Pad::ALL.map(|pad| {
        let (yc, _) = pad.placement(g);
        let (x0, x1) = match pad {
            Pad::Narrow => (g.max_opening - narrow + SWEEP_GAP, g.max_opening + g.backing),
            _ => (-g.backing, wide - SWEEP_GAP),
        };
        LocalBox { min: Vector3::new(x0, yc - half, 0.0), max: Vector3::new(x1, yc + half, g.usable_length) }
    })
}

/// Table, opening and sweep-collision checks shared by acceptance and perturbation.
fn feasible(scene: &Scene, pose: &RigidTransform, c: &SolvedContacts, cfg: &Planner3DConfig) -> Result<f64, Rejection> {
    let g = &cfg.gripper;
    let opening = g.max_opening - c.wide_travel() - c.narrow_travel();
    if !(opening > 0.0) {
        return Err(Rejection::Opening);
    }
    let o = origin(pose);
    let volumes = pad_volumes(g, c);
    let lowest = volumes
        .iter()
        .flat_map(|b| b.corners())
        .map(|p| (o + pose.rotation * p).z)
        .fold(f64::INFINITY, f64::min);
    if lowest < scene.table_z + cfg.table_clearance {
        return Err(Rejection::Table);
    }
    let mut faces = Vec::new();
    for b in volumes.iter().filter(|b| !b.is_empty()) {
        let world = b.corners().iter().fold(Aabb::EMPTY, |acc, p| acc.grow(&(o + pose.rotation * p)));
        faces.clear();
        scene.bvh.faces_overlapping(&world, &mut faces);
        if faces.iter().any(|&f| triangle_box_overlap(&to_frame(scene.bvh.triangle(f), &o, &pose.rotation), b)) {
            return Err(Rejection::Collision);
        }
    }
    Ok(opening)
}

fn contact_set(scene: &Scene, c: &SolvedContacts, pads: &[Pad], mu: f64) -> crate::wrench::SpatialContacts {
    ContactSet {
        contacts: pads
            .iter()
            .map(|&p| {
                let k = p as usize;
                ContactPoint { position: c.pads[k].point.coords, inward_normal: c.pads[k].inward_normal, jaw: p.jaw() }
            })
            .collect(),
        mu,
        com: scene.com.coords,
        rho: scene.rho,
    }
}

/// Final feasibility checks on an optimized pose; builds the three-contact candidate.
pub fn accept_candidate(
    scene: &Scene,
    pose: &RigidTransform,
    contacts: &SolvedContacts,
    cfg: &Planner3DConfig,
) -> Result<Candidate3D, Rejection> {
    if contacts.imbalance() >= cfg.imbalance_tol {
        return Err(Rejection::NotConverged);
    }
    let opening = feasible(scene, pose, contacts, cfg)?;
    Ok(Candidate3D {
        index: 0,
        attempt: 0,
        grasp: Grasp3D { pose: *pose, opening },
        contacts: contact_set(scene, contacts, &Pad::ALL, cfg.mu),
        imbalance: contacts.imbalance(),
        opt_iterations: 0,
        fc_rate: None,
        pruned: false,
        eps: None,
    })
}

/// Re-solves contacts at a translated pose without re-optimizing yaw; the
/// trailing wide pad counts only within `wide_contact_tol`.
pub(super) fn perturbed_force_closure(scene: &Scene, pose: &RigidTransform, cfg: &Planner3DConfig) -> bool {
    let Ok(c) = solve(scene, pose, cfg) else { return false };
    if feasible(scene, pose, &c, cfg).is_err() {
        return false;
    }
    let pads: Vec<Pad> = if c.imbalance() <= cfg.gripper.wide_contact_tol {
        Pad::ALL.to_vec()
    } else if c.signed_imbalance < 0.0 {
        vec![Pad::WideA, Pad::Narrow]
    } else {
        vec![Pad::WideB, Pad::Narrow]
    };
    grasp_quality(&contact_set(scene, &c, &pads, cfg.mu), SPATIAL_CONE_EDGES).is_ok_and(|q| q.force_closure)
}
