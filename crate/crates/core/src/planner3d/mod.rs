//! Mesh grasp planner for the GET gripper.
//!
//! Poses are sampled against near-vertical mesh faces; contacts come from a
//! grid of rays cast from each trapezoidal pad along the closing axis. The yaw
//! about the vertical axis is adjusted until both wide pads touch, infeasible
//! poses are filtered, and the survivors are rated by force-closure rate under
//! random translations. Ferrari-Canny epsilon breaks ties among the best.

mod collision;
mod contacts;

pub use collision::{triangle_box_overlap, LocalBox};
pub use contacts::{
    accept_candidate, cast_contact_rays, contacts_from_hits, optimize_imbalance, pad_rays, sample_gripper_pose,
    ContactFailure, Optimized, Pad, PadContact, PadHit, SolvedContacts,
};

use crate::mesh3d::{mesh_mass_properties, Bvh, FaceSampler, MeshError, RigidTransform, TriMesh};
use crate::rng;
use crate::wrench::{grasp_quality, SpatialContacts, SPATIAL_CONE_EDGES};
use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Plan3DError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("no candidate accepted after {0} attempts")]
    NoFeasibleGrasp(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperModel3D {
    /// Lateral distance between the wide-pad centerlines.
    pub wide_spacing: f64,
    pub max_opening: f64,
    /// Pad length along the finger, measured up from the tip.
    pub usable_length: f64,
    /// Pad width at the top of the usable length.
    pub w_top: f64,
    /// Pad width at the finger tip.
    pub w_bottom: f64,
    /// Jaw thickness behind each pad, included in collision and table checks.
    pub backing: f64,
    /// Largest residual gap at which the trailing wide pad still counts as touching.
    pub wide_contact_tol: f64,
}

impl Default for GripperModel3D {
    fn default() -> Self {
        Self {
            wide_spacing: 0.03,
            max_opening: 0.095,
            usable_length: 0.065,
            w_top: 0.008,
            w_bottom: 0.015,
            backing: 0.01,
            wide_contact_tol: 0.004,
        }
    }
}

impl GripperModel3D {
    /// Pad width at height `z` above the tip.
    pub fn pad_width(&self, z: f64) -> f64 {
        self.w_bottom + (self.w_top - self.w_bottom) * (z / self.usable_length)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Planner3DConfig {
    pub gripper: GripperModel3D,
    pub n_candidates: usize,
    /// Largest angle between a sampled face normal and the table plane.
    pub max_tilt: f64,
    pub max_roll: f64,
    pub imbalance_tol: f64,
    pub max_opt_iters: usize,
    /// Yaw step for the central-difference derivative.
    pub fd_step: f64,
    /// Largest yaw change per optimizer iteration.
    pub max_yaw_step: f64,
    pub sigma_perturb: f64,
    pub n_perturb: usize,
    pub mu: f64,
    pub ray_rows: usize,
    pub ray_cols: usize,
    pub table_clearance: f64,
    /// Attempts allowed per requested candidate before giving up.
    pub attempt_factor: usize,
    /// Stop rating a candidate once it cannot reach the incumbent rate.
    pub prune: bool,
    /// Compute epsilon only for candidates tied at the best rate.
    pub lazy_eps: bool,
    pub seed: u64,
}

impl Default for Planner3DConfig {
    fn default() -> Self {
        Self {
            gripper: GripperModel3D::default(),
            n_candidates: 500,
            max_tilt: 20f64.to_radians(),
            max_roll: 30f64.to_radians(),
            imbalance_tol: 0.001,
            max_opt_iters: 30,
            fd_step: 0.5f64.to_radians(),
            max_yaw_step: 10f64.to_radians(),
            sigma_perturb: 0.007,
            n_perturb: 10,
            mu: 0.75,
            ray_rows: 12,
            ray_cols: 4,
            table_clearance: 0.005,
            attempt_factor: 20,
            prune: true,
            lazy_eps: true,
            seed: 0,
        }
    }
}

impl Planner3DConfig {
    pub fn validate(&self) -> Result<(), Plan3DError> {
        let g = &self.gripper;
        let positive = [g.wide_spacing, g.max_opening, g.usable_length, g.w_top, g.w_bottom, self.imbalance_tol, self.fd_step]
            .iter()
            .all(|v| *v > 0.0);
        let ok = positive
            && g.backing >= 0.0
            && self.n_candidates > 0
            && self.n_perturb > 0
            && self.ray_rows > 0
            && self.ray_cols > 0
            && self.attempt_factor > 0
            && self.sigma_perturb >= 0.0
            && self.mu >= 0.0
            && (0.0..=std::f64::consts::FRAC_PI_2).contains(&self.max_tilt)
            && (0.0..=std::f64::consts::PI).contains(&self.max_roll);
        if ok {
            Ok(())
        } else {
            Err(Plan3DError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Mesh with its acceleration structure and mass properties.
pub struct Scene {
    pub mesh: TriMesh,
    pub bvh: Bvh,
    pub com: Point3<f64>,
    pub rho: f64,
    pub table_z: f64,
}

impl Scene {
    pub fn new(mesh: TriMesh, table_z: f64) -> Result<Self, MeshError> {
        let com = mesh_mass_properties(&mesh)?.com;
        let rho = mesh.vertices.iter().map(|v| (v - com).norm()).fold(0.0, f64::max);
        let bvh = Bvh::build(&mesh);
        Ok(Self { mesh, bvh, com, rho, table_z })
    }

    /// Faces whose normal is within `max_tilt` of the table plane.
    pub fn eligible_face(&self, face: usize, max_tilt: f64) -> bool {
        self.mesh.face_normals[face].z.abs() <= max_tilt.sin() + 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp3D {
    /// Fully open gripper frame: x is the closing axis, z points up the fingers,
    /// and the origin is the tip center of the wide-jaw pad plane.
    pub pose: RigidTransform,
    /// Jaw gap at contact.
    pub opening: f64,
}

impl Grasp3D {
    pub fn closing_axis(&self) -> Vector3<f64> {
        self.pose.rotation.column(0).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// Some pad has no ray hit.
    NoContact,
    /// The yaw optimizer did not reach the imbalance tolerance.
    NotConverged,
    /// The gripper starts inside or sweeps through the mesh before contact.
    Collision,
    /// Some gripper geometry is too close to or below the table.
    Table,
    /// The object is too wide for the gripper along the closing axis.
    Opening,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate3D {
    pub index: usize,
    /// Attempt that produced this candidate.
    pub attempt: usize,
    pub grasp: Grasp3D,
    pub contacts: SpatialContacts,
    pub imbalance: f64,
    pub opt_iterations: usize,
    pub fc_rate: Option<f64>,
    pub pruned: bool,
    pub eps: Option<f64>,
}

/// Outcome of rating one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcRating {
    pub successes: usize,
    pub evaluated: usize,
    pub pruned: bool,
    /// Exact rate, or the pessimistic `successes / n_perturb` when pruned.
    pub fc_rate: f64,
}

/// Candidates rated together against one incumbent; the incumbent only moves
/// between waves so pruning does not depend on scheduling.
pub const RATING_WAVE: usize = 32;

/// Rates force closure over translated copies of the candidate pose.
///
/// `incumbent` is the best success count among earlier candidates; rating
/// stops once this candidate can no longer reach it.
pub fn evaluate_candidate_3d<R: Rng>(
    scene: &Scene,
    cand: &Candidate3D,
    cfg: &Planner3DConfig,
    rng: &mut R,
    incumbent: Option<usize>,
) -> FcRating {
    let n = cfg.n_perturb;
    let nominal = grasp_quality(&cand.contacts, SPATIAL_CONE_EDGES).expect("accepted contacts are valid");
    if !nominal.force_closure {
        return FcRating { successes: 0, evaluated: 0, pruned: false, fc_rate: 0.0 };
    }
    let normal = Normal::new(0.0, cfg.sigma_perturb).expect("sigma is finite and non-negative");
    let offsets: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::from_fn(|_, _| normal.sample(rng))).collect();
    let mut successes = 0;
    for (k, d) in offsets.iter().enumerate() {
        if let Some(best) = incumbent {
            if successes + (n - k) < best {
                return FcRating { successes, evaluated: k, pruned: true, fc_rate: successes as f64 / n as f64 };
            }
        }
        let pose = RigidTransform { translation: cand.grasp.pose.translation + d, ..cand.grasp.pose };
        successes += contacts::perturbed_force_closure(scene, &pose, cfg) as usize;
    }
    FcRating { successes, evaluated: n, pruned: false, fc_rate: successes as f64 / n as f64 }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings3D {
    pub sampling_ms: f64,
    pub rating_ms: f64,
    pub selection_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan3DReport {
    pub attempts: usize,
    pub accepted: usize,
    pub rejections: BTreeMap<Rejection, usize>,
    pub pruned_candidates: usize,
    pub perturbations_evaluated: usize,
    pub eps_computed: usize,
    pub best_fc_rate: f64,
    pub timings: Timings3D,
    pub candidates: Vec<Candidate3D>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan3D {
    pub grasp: Grasp3D,
    pub selected: usize,
    pub fc_rate: f64,
    pub eps: f64,
    pub report: Plan3DReport,
}

/// One sampling attempt: pose, contacts, yaw optimization and acceptance.
pub fn run_attempt(scene: &Scene, sampler: &FaceSampler, cfg: &Planner3DConfig, attempt: usize) -> Result<Candidate3D, Rejection> {
    let mut rng = rng::substream(cfg.seed, 0, attempt as u64);
    let pose = sample_gripper_pose(scene, sampler, cfg, &mut rng)?;
    let opt = optimize_imbalance(scene, &pose, cfg)?;
    let mut cand = accept_candidate(scene, &opt.pose, &opt.contacts, cfg)?;
    cand.attempt = attempt;
    cand.opt_iterations = opt.iterations;
    Ok(cand)
}

pub fn plan_3d(mesh: &TriMesh, table_z: f64, cfg: &Planner3DConfig) -> Result<Plan3D, Plan3DError> {
    cfg.validate()?;
    let start = Instant::now();
    let scene = Scene::new(mesh.clone(), table_z)?;
    let sampler = FaceSampler::new(&scene.mesh, |f| scene.eligible_face(f, cfg.max_tilt))?;

    let cap = cfg.attempt_factor * cfg.n_candidates;
    let batch = cfg.n_candidates.max(64);
    let mut candidates: Vec<Candidate3D> = Vec::with_capacity(cfg.n_candidates);
    let mut rejections: BTreeMap<Rejection, usize> = BTreeMap::new();
    let mut attempts = 0;
    while candidates.len() < cfg.n_candidates && attempts < cap {
        let end = (attempts + batch).min(cap);
        let outcomes: Vec<Result<Candidate3D, Rejection>> =
            (attempts..end).into_par_iter().map(|a| run_attempt(&scene, &sampler, cfg, a)).collect();
        for outcome in outcomes {
            attempts += 1;
            match outcome {
                Ok(mut c) => {
                    c.index = candidates.len();
                    candidates.push(c);
                    if candidates.len() == cfg.n_candidates {
                        break;
                    }
                }
                Err(why) => *rejections.entry(why).or_insert(0) += 1,
            }
        }
    }
    if candidates.is_empty() {
        return Err(Plan3DError::NoFeasibleGrasp(attempts));
    }
    let sampled = Instant::now();

    let mut ratings: Vec<FcRating> = Vec::with_capacity(candidates.len());
    let mut incumbent = 0;
    for wave in candidates.chunks(RATING_WAVE) {
        let rated: Vec<FcRating> = wave
            .par_iter()
            .map(|c| {
                let mut rng = rng::substream(cfg.seed, 1, c.index as u64);
                evaluate_candidate_3d(&scene, c, cfg, &mut rng, cfg.prune.then_some(incumbent))
            })
            .collect();
        incumbent = rated.iter().filter(|r| !r.pruned).map(|r| r.successes).fold(incumbent, usize::max);
        ratings.extend(rated);
    }
    let rated = Instant::now();

    let best = ratings.iter().filter(|r| !r.pruned).map(|r| r.successes).max().unwrap_or(0);
    let mut eps_computed = 0;
    for (c, r) in candidates.iter_mut().zip(&ratings) {
        c.fc_rate = Some(r.fc_rate);
        c.pruned = r.pruned;
        if !cfg.lazy_eps || (!r.pruned && r.successes == best) {
            c.eps = Some(grasp_quality(&c.contacts, SPATIAL_CONE_EDGES).expect("accepted contacts are valid").epsilon);
            eps_computed += 1;
        }
    }
    let selected = select_3d(&candidates, &ratings).expect("at least one candidate");
    let chosen = &candidates[selected];
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    let report = Plan3DReport {
        attempts,
        accepted: candidates.len(),
        rejections,
        pruned_candidates: ratings.iter().filter(|r| r.pruned).count(),
        perturbations_evaluated: ratings.iter().map(|r| r.evaluated).sum(),
        eps_computed,
        best_fc_rate: best as f64 / cfg.n_perturb as f64,
        timings: Timings3D {
            sampling_ms: ms(start, sampled),
            rating_ms: ms(sampled, rated),
            selection_ms: ms(rated, Instant::now()),
            total_ms: ms(start, Instant::now()),
        },
        candidates: Vec::new(),
    };
    let mut plan = Plan3D { grasp: chosen.grasp, selected, fc_rate: ratings[selected].fc_rate, eps: chosen.eps.unwrap(), report };
    plan.report.candidates = candidates;
    Ok(plan)
}

/// Highest success count, then highest epsilon, then lowest index.
fn select_3d(candidates: &[Candidate3D], ratings: &[FcRating]) -> Option<usize> {
    let best = ratings.iter().filter(|r| !r.pruned).map(|r| r.successes).max()?;
    candidates
        .iter()
        .zip(ratings)
        .filter(|(_, r)| !r.pruned && r.successes == best)
        .map(|(c, _)| (c.index, c.eps.expect("epsilon computed for the top class")))
        .fold(None, |acc: Option<(usize, f64)>, (i, e)| match acc {
            Some((_, be)) if e.total_cmp(&be) != std::cmp::Ordering::Greater => acc,
            _ => Some((i, e)),
        })
        .map(|(i, _)| i)
}
