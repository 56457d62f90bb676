//! Bounding-box baselines with three finger layouts.
//!
//! `Get` closes the GET gripper across the box and scores it with the planner's
//! own perturbation metrics. `Narrow` and `Wide` model a conventional parallel
//! gripper with one or two circles on each jaw.

use crate::render::gripper_circles;
use getgrasp::geometry2d::{finger_contact, perp, DepthStats, Polygon2D};
use getgrasp::planner2d::{
    plan_bbox_baseline, score_seed, BaselineGrasp, GraspMetrics, Plan2DError, Planner2DConfig, PreparedPolygon, Seed2D,
};
use getgrasp::rng;
use getgrasp::wrench::{grasp_quality, ContactPoint, ContactSet, Jaw, PlanarContacts};
use nalgebra::{Point2, Vector2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVariant {
    Narrow,
    Wide,
    Get,
}

/// Stream index for baseline perturbations, outside the range used by planner candidates.
pub const BASELINE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub variant: BaselineVariant,
    pub baseline: BaselineGrasp,
    /// Contacts of the nominal closure, absent when the closure fails.
    pub contacts: Option<PlanarContacts>,
    /// Finger circle centers after the nominal closure.
    pub fingers: Vec<Point2<f64>>,
    pub metrics: GraspMetrics,
}

/// Lateral circle offsets of each jaw for the parallel layouts.
fn layout(variant: BaselineVariant, spacing: f64) -> (Vec<f64>, Vec<f64>) {
    match variant {
        BaselineVariant::Narrow => (vec![0.0], vec![0.0]),
        BaselineVariant::Wide | BaselineVariant::Get => {
            let w = 0.5 * spacing;
            (vec![w, -w], vec![w, -w])
        }
    }
}

/// Contacts and final circle centers of a parallel closure.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelClosure {
    pub contacts: PlanarContacts,
    pub fingers: Vec<Point2<f64>>,
}

/// Closes a parallel gripper from `seed`. Each jaw stops at its first touch and
/// keeps every circle within `wide_contact_tol` of touching.
pub fn close_parallel(seed: &Seed2D, obj: &PreparedPolygon, cfg: &Planner2DConfig, variant: BaselineVariant) -> Option<ParallelClosure> {
    let g = &cfg.gripper;
    let (a_offsets, b_offsets) = layout(variant, g.wide_spacing);
    let a = seed.axis();
    let l = perp(a);
    let half = 0.5 * g.full_separation();
    let span = g.full_separation() - 2.0 * g.finger_radius;
    let jaw = |offsets: &[f64], side: f64| -> Option<Vec<(f64, getgrasp::geometry2d::FingerContact)>> {
        let base = seed.center + a * (side * half);
        let mut hits = Vec::new();
        for &o in offsets {
            if let Some(h) = finger_contact(&obj.poly, g.finger_radius, base + l * o, -a * side, span).ok()? {
                hits.push((h.travel, h));
            }
        }
        Some(hits)
    };
    let hits_a = jaw(&a_offsets, -1.0)?;
    let hits_b = jaw(&b_offsets, 1.0)?;
    let first = |h: &[(f64, _)]| h.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let (ta, tb) = (first(&hits_a), first(&hits_b));
    if !ta.is_finite() || !tb.is_finite() || ta + tb > span {
        return None;
    }
    let mut fingers: Vec<Point2<f64>> = a_offsets.iter().map(|&o| seed.center - a * (half - ta) + l * o).collect();
    fingers.extend(b_offsets.iter().map(|&o| seed.center + a * (half - tb) + l * o));
    let mut contacts = Vec::new();
    for (hits, t, labels) in [(&hits_a, ta, [Jaw::WideA, Jaw::WideB]), (&hits_b, tb, [Jaw::Narrow, Jaw::Narrow])] {
        for (k, (travel, h)) in hits.iter().enumerate() {
            if travel - t <= g.wide_contact_tol {
                contacts.push(ContactPoint { position: h.point.coords, inward_normal: h.inward_normal, jaw: labels[k.min(1)] });
            }
        }
    }
    Some(ParallelClosure { contacts: ContactSet { contacts, mu: cfg.mu, com: obj.com.coords, rho: obj.rho }, fingers })
}

/// Perturbation metrics of a parallel layout, using the same noise model as the planner.
pub fn score_parallel(seed: &Seed2D, obj: &PreparedPolygon, cfg: &Planner2DConfig, variant: BaselineVariant, stream: u64) -> GraspMetrics {
    let n = cfg.n_perturb;
    if close_parallel(seed, obj, cfg, variant).is_none() {
        return GraspMetrics { n_samples: n, ..GraspMetrics::ZERO };
    }
    let normal = Normal::new(0.0, cfg.sigma_perturb).expect("sigma is finite and non-negative");
    let mut rng = rng::stream(cfg.seed, stream);
    let a = seed.axis();
    let l = perp(a);
    let (mut fc, mut contacts, mut eps) = (0usize, 0usize, 0.0);
    for _ in 0..n {
        let d: Vector2<f64> = a * normal.sample(&mut rng) + l * normal.sample(&mut rng);
        if let Some(ParallelClosure { contacts: cs, .. }) = close_parallel(&seed.translated(d), obj, cfg, variant) {
            let q = grasp_quality(&cs, 2).expect("closure contact sets are valid");
            fc += q.force_closure as usize;
            contacts += cs.len();
            eps += q.epsilon;
        }
    }
    let k = n as f64;
    GraspMetrics { fc_rate: fc as f64 / k, avg_contacts: contacts as f64 / k, avg_eps: eps / k, n_samples: n }
}

/// Plans the bounding-box grasp and scores it for the chosen finger layout.
pub fn run_baseline(poly: &Polygon2D, depth: &DepthStats, cfg: &Planner2DConfig, variant: BaselineVariant) -> Result<BaselineOutcome, Plan2DError> {
    score_baseline(poly, plan_bbox_baseline(poly, depth, cfg), cfg, variant)
}

/// Closes and scores an already planned bounding-box grasp.
pub fn score_baseline(poly: &Polygon2D, baseline: BaselineGrasp, cfg: &Planner2DConfig, variant: BaselineVariant) -> Result<BaselineOutcome, Plan2DError> {
    cfg.validate()?;
    let seed = baseline.seed();
    let obj = PreparedPolygon::new(poly.clone())?;
    let (closure, metrics) = match variant {
        BaselineVariant::Get => {
            let closure = getgrasp::planner2d::close_gripper(&seed, &obj, &cfg.gripper, cfg.mu)
                .ok()
                .map(|c| (c.contacts, gripper_circles(&c.grasp, &cfg.gripper).to_vec()));
            (closure, score_seed(poly, &seed, cfg, BASELINE_STREAM)?)
        }
        _ => (
            close_parallel(&seed, &obj, cfg, variant).map(|c| (c.contacts, c.fingers)),
            score_parallel(&seed, &obj, cfg, variant, BASELINE_STREAM),
        ),
    };
    let (contacts, fingers) = match closure {
        Some((c, f)) => (Some(c), f),
        None => (None, Vec::new()),
    };
    Ok(BaselineOutcome { variant, baseline, contacts, fingers, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point2;

    fn rect(w: f64, h: f64) -> Polygon2D {
        Polygon2D::new(vec![Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, h), Point2::new(0.0, h)], vec![])
    }

    fn depth() -> DepthStats {
        DepthStats { z_table: 0.6, z_obj: 0.55, h80: 0.05 }
    }

    #[test]
    fn parallel_layouts_count_contacts() {
        let cfg = Planner2DConfig::default();
        let poly = rect(0.04, 0.1);
        let narrow = run_baseline(&poly, &depth(), &cfg, BaselineVariant::Narrow).unwrap();
        assert_eq!(narrow.contacts.as_ref().unwrap().len(), 2);
        let wide = run_baseline(&poly, &depth(), &cfg, BaselineVariant::Wide).unwrap();
        assert_eq!(wide.contacts.as_ref().unwrap().len(), 4);
        let get = run_baseline(&poly, &depth(), &cfg, BaselineVariant::Get).unwrap();
        assert_eq!(get.contacts.as_ref().unwrap().len(), 3);
        for o in [&wide, &get] {
            assert_eq!(o.metrics.fc_rate, 1.0);
        }
        assert_eq!(wide.metrics.avg_contacts, 4.0);
    }

    #[test]
    fn over_opening_box_fails_every_layout() {
        let cfg = Planner2DConfig::default();
        let poly = rect(0.12, 0.13);
        for v in [BaselineVariant::Narrow, BaselineVariant::Wide, BaselineVariant::Get] {
            let o = run_baseline(&poly, &depth(), &cfg, v).unwrap();
            assert!(!o.baseline.opening_feasible);
            assert!(o.contacts.is_none());
            assert_eq!(o.metrics.fc_rate, 0.0);
        }
    }

    #[test]
    fn baseline_scores_are_deterministic() {
        let cfg = Planner2DConfig { seed: 9, ..Default::default() };
        let poly = Polygon2D::new(vec![Point2::new(0.0, 0.0), Point2::new(0.05, 0.01), Point2::new(0.045, 0.06), Point2::new(-0.01, 0.04)], vec![]);
        for v in [BaselineVariant::Narrow, BaselineVariant::Wide, BaselineVariant::Get] {
            assert_eq!(run_baseline(&poly, &depth(), &cfg, v).unwrap(), run_baseline(&poly, &depth(), &cfg, v).unwrap());
        }
    }
}
