//! Polygon grasp planner for the GET gripper.
//!
//! The gripper is three equal circles: two on the wide jaw, one on the narrow
//! jaw, facing each other across the closing axis. A seed fixes the fully
//! open gripper in the plane; closing sweeps each jaw toward the other until it
//! touches the polygon. Candidates come from three samplers (edges, convex
//! vertices, holes), are scored by averaging grasp metrics over translated
//! copies of the seed, and the lexicographic best is selected.

mod samplers;

pub use samplers::{corridor_extent, sample_edge_grasps, sample_hole_grasps, sample_vertex_grasps};

use crate::geometry2d::{
    finger_contact, oriented_bounding_box, perp, polygon_centroid, DepthStats, GeometryError, OrientedBox, Polygon2D,
};
use crate::rng;
use crate::wrench::{grasp_quality, ContactPoint, ContactSet, Jaw, PlanarContacts};
use nalgebra::{Point2, Vector2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::time::Instant;
use thiserror::Error;

/// Planar friction cones always have two edges.
const PLANAR_CONE_EDGES: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Plan2DError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("every grasp candidate was rejected ({0} seeds)")]
    NoFeasibleGrasp(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperModel2D {
    pub finger_radius: f64,
    /// Center-to-center distance of the two wide-jaw circles.
    pub wide_spacing: f64,
    /// Largest free gap between the jaws.
    pub max_opening: f64,
    /// Largest residual gap at which the trailing wide circle still counts as touching.
    pub wide_contact_tol: f64,
}

impl Default for GripperModel2D {
    fn default() -> Self {
        Self { finger_radius: 0.005, wide_spacing: 0.03, max_opening: 0.095, wide_contact_tol: 0.004 }
    }
}

impl GripperModel2D {
    /// Circle center separation along the closing axis at full opening.
    pub fn full_separation(&self) -> f64 {
        self.max_opening + 2.0 * self.finger_radius
    }

    pub fn validate(&self) -> Result<(), Plan2DError> {
        let all_positive = [self.finger_radius, self.wide_spacing, self.max_opening, self.wide_contact_tol]
            .iter()
            .all(|v| *v > 0.0);
        if !all_positive || self.wide_spacing <= 2.0 * self.finger_radius {
            return Err(Plan2DError::InvalidConfig(format!("gripper model {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Planner2DConfig {
    pub gripper: GripperModel2D,
    pub mu: f64,
    pub n_perturb: usize,
    pub sigma_perturb: f64,
    pub edge_step: f64,
    pub vertex_angle_offsets: Vec<f64>,
    pub z_offset: f64,
    /// Free space kept around the narrow circle when it is placed in a hole.
    pub hole_clearance: f64,
    pub seed: u64,
}

impl Default for Planner2DConfig {
    fn default() -> Self {
        Self {
            gripper: GripperModel2D::default(),
            mu: 0.75,
            n_perturb: 10,
            sigma_perturb: 0.002,
            edge_step: 0.01,
            vertex_angle_offsets: vec![-10f64.to_radians(), 0.0, 10f64.to_radians()],
            z_offset: 0.05,
            hole_clearance: 0.001,
            seed: 0,
        }
    }
}

impl Planner2DConfig {
    pub fn validate(&self) -> Result<(), Plan2DError> {
        self.gripper.validate()?;
        if self.n_perturb == 0 || !(self.sigma_perturb >= 0.0) || !(self.mu >= 0.0) || !(self.edge_step > 0.0) {
            return Err(Plan2DError::InvalidConfig(format!(
                "n_perturb = {}, sigma = {}, mu = {}, edge_step = {}",
                self.n_perturb, self.sigma_perturb, self.mu, self.edge_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp2D {
    /// Gripper center between the jaws at contact.
    pub p: Point2<f64>,
    /// Direction of the closing axis (wide jaw toward narrow jaw), in `[0, 2pi)`.
    pub phi: f64,
    /// Height above the table.
    pub z: f64,
    /// Free gap between the jaws at contact.
    pub opening: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspSource {
    Edge,
    Vertex,
    Hole,
    Baseline,
}

/// Fully open gripper pose before closing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed2D {
    pub source: GraspSource,
    /// Midpoint between the jaw circle centers at full opening.
    pub center: Point2<f64>,
    pub phi: f64,
}

impl Seed2D {
    pub fn new(source: GraspSource, center: Point2<f64>, axis: Vector2<f64>) -> Self {
        Self { source, center, phi: axis.y.atan2(axis.x).rem_euclid(TAU) }
    }

    pub fn axis(&self) -> Vector2<f64> {
        Vector2::new(self.phi.cos(), self.phi.sin())
    }

    pub fn translated(&self, by: Vector2<f64>) -> Self {
        Self { center: self.center + by, ..*self }
    }

    /// Circle centers at full opening: wide A, wide B, narrow.
    pub fn circles(&self, g: &GripperModel2D) -> [Point2<f64>; 3] {
        let a = self.axis();
        let l = perp(a);
        let half = 0.5 * g.full_separation();
        let wide = self.center - a * half;
        let w = 0.5 * g.wide_spacing;
        [wide + l * w, wide - l * w, self.center + a * half]
    }
}

/// Polygon with its mass properties, reused across every closing simulation.
#[derive(Debug, Clone)]
pub struct PreparedPolygon {
    pub poly: Polygon2D,
    pub com: Point2<f64>,
    pub rho: f64,
}

impl PreparedPolygon {
    pub fn new(poly: Polygon2D) -> Result<Self, GeometryError> {
        let com = polygon_centroid(&poly)?;
        let rho = poly.max_vertex_distance(com);
        Ok(Self { poly, com, rho })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// A jaw circle overlaps the polygon at full opening.
    InitialOverlap,
    /// The material in the jaw corridor is wider than the maximum opening.
    ExceedsOpening,
    /// A jaw closes without touching the polygon.
    MissingContact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub grasp: Grasp2D,
    pub contacts: PlanarContacts,
    pub wide_travel: f64,
    pub narrow_travel: f64,
}

/// Closes the gripper from `seed` and collects the contacts.
///
/// The wide jaw stops at the first touch of either circle; the trailing circle
/// adds a second contact if its remaining gap is within `wide_contact_tol`.
/// The returned grasp has `z = 0`; callers set the height.
pub fn close_gripper(seed: &Seed2D, obj: &PreparedPolygon, g: &GripperModel2D, mu: f64) -> Result<Closure, Rejection> {
    let a = seed.axis();
    let r = g.finger_radius;
    let [wa, wb, nc] = seed.circles(g);
    let span = g.full_separation() - 2.0 * r;
    let overlap = |_| {
        let extent = corridor_extent(&obj.poly, seed.center, a, 0.5 * g.wide_spacing + r);
        if extent.map_or(false, |(lo, hi)| hi - lo > g.max_opening) {
            Rejection::ExceedsOpening
        } else {
            Rejection::InitialOverlap
        }
    };
    let hit_a = finger_contact(&obj.poly, r, wa, a, span).map_err(overlap)?;
    let hit_b = finger_contact(&obj.poly, r, wb, a, span).map_err(overlap)?;
    let hit_n = finger_contact(&obj.poly, r, nc, -a, span).map_err(overlap)?;

    let narrow = hit_n.ok_or(Rejection::MissingContact)?;
    let wide_travel = match (hit_a, hit_b) {
        (Some(x), Some(y)) => x.travel.min(y.travel),
        (Some(x), None) | (None, Some(x)) => x.travel,
        (None, None) => return Err(Rejection::MissingContact),
    };
    if wide_travel + narrow.travel > span {
        return Err(Rejection::MissingContact);
    }

    let mut contacts = Vec::with_capacity(3);
    for (hit, jaw) in [(hit_a, Jaw::WideA), (hit_b, Jaw::WideB)] {
        if let Some(h) = hit {
            if h.travel - wide_travel <= g.wide_contact_tol {
                contacts.push(ContactPoint { position: h.point.coords, inward_normal: h.inward_normal, jaw });
            }
        }
    }
    contacts.push(ContactPoint { position: narrow.point.coords, inward_normal: narrow.inward_normal, jaw: Jaw::Narrow });

    let half = 0.5 * g.full_separation();
    let wide_line = seed.center - a * (half - wide_travel);
    let narrow_line = seed.center + a * (half - narrow.travel);
    let grasp = Grasp2D {
        p: nalgebra::center(&wide_line, &narrow_line),
        phi: seed.phi,
        z: 0.0,
        opening: span - wide_travel - narrow.travel,
    };
    Ok(Closure {
        grasp,
        contacts: ContactSet { contacts, mu, com: obj.com.coords, rho: obj.rho },
        wide_travel,
        narrow_travel: narrow.travel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspMetrics {
    pub fc_rate: f64,
    pub avg_contacts: f64,
    pub avg_eps: f64,
    pub n_samples: usize,
}

impl GraspMetrics {
    pub const ZERO: Self = Self { fc_rate: 0.0, avg_contacts: 0.0, avg_eps: 0.0, n_samples: 0 };

    /// Lexicographic order on (force-closure rate, contacts, epsilon).
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.fc_rate
            .total_cmp(&other.fc_rate)
            .then(self.avg_contacts.total_cmp(&other.avg_contacts))
            .then(self.avg_eps.total_cmp(&other.avg_eps))
    }
}

/// Nominal quality of one closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub force_closure: bool,
    pub contacts: usize,
    pub epsilon: f64,
}

pub fn score_closure(c: &Closure) -> SampleScore {
    let q = grasp_quality(&c.contacts, PLANAR_CONE_EDGES).expect("closure contact sets are valid");
    SampleScore { force_closure: q.force_closure, contacts: c.contacts.len(), epsilon: q.epsilon }
}

/// Averages metrics over `n_perturb` Gaussian translations of the seed in its
/// own frame. Poses that fail to close score as total failures.
pub fn evaluate_candidate<R: Rng>(seed: &Seed2D, obj: &PreparedPolygon, cfg: &Planner2DConfig, rng: &mut R) -> GraspMetrics {
    let normal = Normal::new(0.0, cfg.sigma_perturb).expect("sigma is finite and non-negative");
    let a = seed.axis();
    let l = perp(a);
    let mut fc = 0usize;
    let mut contacts = 0usize;
    let mut eps = 0.0;
    for _ in 0..cfg.n_perturb {
        let (da, dl) = (normal.sample(rng), normal.sample(rng));
        if let Ok(c) = close_gripper(&seed.translated(a * da + l * dl), obj, &cfg.gripper, cfg.mu) {
            let s = score_closure(&c);
            fc += s.force_closure as usize;
            contacts += s.contacts;
            eps += s.epsilon;
        }
    }
    let n = cfg.n_perturb as f64;
    GraspMetrics { fc_rate: fc as f64 / n, avg_contacts: contacts as f64 / n, avg_eps: eps / n, n_samples: cfg.n_perturb }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate2D {
    pub grasp: Grasp2D,
    pub source: GraspSource,
    pub nominal_contacts: PlanarContacts,
    pub nominal: SampleScore,
    pub metrics: GraspMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOutcome {
    Rejected(Rejection),
    Evaluated(Box<Candidate2D>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub seed: Seed2D,
    pub outcome: CandidateOutcome,
}

impl CandidateRecord {
    pub fn evaluated(&self) -> Option<&Candidate2D> {
        match &self.outcome {
            CandidateOutcome::Evaluated(e) => Some(e),
            CandidateOutcome::Rejected(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings2D {
    pub sampling_ms: f64,
    pub evaluation_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan2D {
    pub grasp: Grasp2D,
    pub metrics: GraspMetrics,
    pub source: GraspSource,
    pub selected: usize,
    pub candidates: Vec<CandidateRecord>,
    pub timings: Timings2D,
}

impl Plan2D {
    pub fn selected_candidate(&self) -> &Candidate2D {
        self.candidates[self.selected].evaluated().expect("selected candidate was evaluated")
    }
}

pub fn grasp_height(depth: &DepthStats, z_offset: f64) -> f64 {
    (depth.h80 - z_offset).max(0.0)
}

/// All seeds in sampler order: edges, vertices, holes.
pub fn generate_seeds(poly: &Polygon2D, cfg: &Planner2DConfig) -> Vec<Seed2D> {
    let mut seeds = sample_edge_grasps(poly, cfg);
    seeds.extend(sample_vertex_grasps(poly, cfg));
    seeds.extend(sample_hole_grasps(poly, cfg));
    seeds
}

/// Index of the lexicographic maximum, lowest index among exact ties.
pub fn select_best<'a>(metrics: impl Iterator<Item = (usize, &'a GraspMetrics)>) -> Option<usize> {
    metrics
        .fold(None, |best: Option<(usize, &GraspMetrics)>, (i, m)| match best {
            Some((_, bm)) if m.rank_cmp(bm) != Ordering::Greater => best,
            _ => Some((i, m)),
        })
        .map(|(i, _)| i)
}

pub fn plan_2d(poly: &Polygon2D, depth: &DepthStats, cfg: &Planner2DConfig) -> Result<Plan2D, Plan2DError> {
    cfg.validate()?;
    let start = Instant::now();
    let obj = PreparedPolygon::new(poly.clone())?;
    let seeds = generate_seeds(poly, cfg);
    let z = grasp_height(depth, cfg.z_offset);
    let sampled = Instant::now();

    let candidates: Vec<CandidateRecord> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, seed)| {
            let outcome = match close_gripper(seed, &obj, &cfg.gripper, cfg.mu) {
                Err(why) => CandidateOutcome::Rejected(why),
                Ok(closure) => {
                    let mut rng = rng::stream(cfg.seed, index as u64);
                    let metrics = evaluate_candidate(seed, &obj, cfg, &mut rng);
                    let nominal = score_closure(&closure);
                    CandidateOutcome::Evaluated(Box::new(Candidate2D {
                        grasp: Grasp2D { z, ..closure.grasp },
                        source: seed.source,
                        nominal_contacts: closure.contacts,
                        nominal,
                        metrics,
                    }))
                }
            };
            CandidateRecord { index, seed: *seed, outcome }
        })
        .collect();
    let evaluated = Instant::now();

    let selected = select_best(candidates.iter().filter_map(|c| c.evaluated().map(|e| (c.index, &e.metrics))))
        .ok_or(Plan2DError::NoFeasibleGrasp(seeds.len()))?;
    let best = candidates[selected].evaluated().unwrap();
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    Ok(Plan2D {
        grasp: best.grasp,
        metrics: best.metrics,
        source: seeds[selected].source,
        selected,
        timings: Timings2D {
            sampling_ms: ms(start, sampled),
            evaluation_ms: ms(sampled, evaluated),
            total_ms: ms(start, Instant::now()),
        },
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineGrasp {
    pub grasp: Grasp2D,
    pub obb: OrientedBox,
    /// Object width along the closing axis.
    pub required_opening: f64,
    pub opening_feasible: bool,
}

impl BaselineGrasp {
    /// Fully open gripper centered on the box.
    pub fn seed(&self) -> Seed2D {
        Seed2D { source: GraspSource::Baseline, center: self.grasp.p, phi: self.grasp.phi }
    }
}

/// Closes across the oriented bounding box center, perpendicular to its longer side.
pub fn plan_bbox_baseline(poly: &Polygon2D, depth: &DepthStats, cfg: &Planner2DConfig) -> BaselineGrasp {
    let obb = oriented_bounding_box(poly);
    let phi = (obb.axis_angle + std::f64::consts::FRAC_PI_2).rem_euclid(TAU);
    let required_opening = obb.width;
    let max = cfg.gripper.max_opening;
    BaselineGrasp {
        grasp: Grasp2D { p: obb.center, phi, z: grasp_height(depth, cfg.z_offset), opening: required_opening.min(max) },
        obb,
        required_opening,
        opening_feasible: required_opening <= max,
    }
}

/// Scores an arbitrary fully open pose with the planner's perturbation metrics.
pub fn score_seed(poly: &Polygon2D, seed: &Seed2D, cfg: &Planner2DConfig, stream: u64) -> Result<GraspMetrics, Plan2DError> {
    let obj = PreparedPolygon::new(poly.clone())?;
    if close_gripper(seed, &obj, &cfg.gripper, cfg.mu).is_err() {
        return Ok(GraspMetrics { n_samples: cfg.n_perturb, ..GraspMetrics::ZERO });
    }
    let mut rng = rng::stream(cfg.seed, stream);
    Ok(evaluate_candidate(seed, &obj, cfg, &mut rng))
}

#[cfg(test)]
mod tests;
