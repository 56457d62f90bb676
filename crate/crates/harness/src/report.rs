use crate::baseline::BaselineOutcome;
use crate::config::{PlannerId, RunConfig};
use crate::error::{HarnessError, Result};
use getgrasp::geometry2d::{DepthStats, Polygon2D};
use getgrasp::mesh3d::RigidTransform;
use getgrasp::planner2d::{CandidateOutcome, Grasp2D, GraspSource, Plan2D};
use getgrasp::planner3d::{Grasp3D, Plan3D, Rejection};
use getgrasp::wrench::{PlanarContacts, SpatialContacts};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    pub fc_rate: f64,
    pub avg_contacts: f64,
    /// Perturbation-averaged epsilon in 2D, nominal epsilon in 3D.
    pub avg_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub index: usize,
    pub source: String,
    pub fc_rate: Option<f64>,
    pub avg_contacts: Option<f64>,
    pub avg_eps: Option<f64>,
    pub rejection: Option<String>,
    #[serde(default)]
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcpSummary {
    pub transform: RigidTransform,
    pub rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectedGrasp {
    Planar {
        grasp: Grasp2D,
        source: GraspSource,
        index: usize,
        contacts: PlanarContacts,
        polygon: Polygon2D,
        depth: DepthStats,
    },
    Baseline {
        outcome: BaselineOutcome,
        polygon: Polygon2D,
        depth: DepthStats,
    },
    Spatial {
        grasp: Grasp3D,
        index: usize,
        contacts: SpatialContacts,
        imbalance: f64,
        attempts: usize,
        rejections: BTreeMap<Rejection, usize>,
        pruned_candidates: usize,
        eps_computed: usize,
        icp: Option<IcpSummary>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    /// Planner call only.
    pub planning: f64,
    /// Planning plus input loading and preprocessing.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspReport {
    pub planner: PlannerId,
    pub seed: u64,
    pub grasp: SelectedGrasp,
    pub metrics: ReportMetrics,
    pub candidates_evaluated: usize,
    pub candidates: Vec<CandidateRow>,
    pub timing_ms: Timing,
    pub config: RunConfig,
}

impl GraspReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::InvalidInput(format!("{}: {e}", path.display())))
    }

    /// The report with timing cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { timing_ms: Timing::default(), ..self.clone() }
    }
}

pub fn source_name(s: GraspSource) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn rejection_name<T: Serialize>(r: &T) -> String {
    serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn planar_rows(plan: &Plan2D) -> Vec<CandidateRow> {
    plan.candidates
        .iter()
        .map(|c| {
            let base = CandidateRow {
                index: c.index,
                source: source_name(c.seed.source),
                fc_rate: None,
                avg_contacts: None,
                avg_eps: None,
                rejection: None,
                pruned: false,
            };
            match &c.outcome {
                CandidateOutcome::Evaluated(e) => CandidateRow {
                    fc_rate: Some(e.metrics.fc_rate),
                    avg_contacts: Some(e.metrics.avg_contacts),
                    avg_eps: Some(e.metrics.avg_eps),
                    ..base
                },
                CandidateOutcome::Rejected(r) => CandidateRow { rejection: Some(rejection_name(r)), ..base },
            }
        })
        .collect()
}

pub fn spatial_rows(plan: &Plan3D) -> Vec<CandidateRow> {
    plan.report
        .candidates
        .iter()
        .map(|c| CandidateRow {
            index: c.index,
            source: format!("attempt {}", c.attempt),
            fc_rate: c.fc_rate,
            avg_contacts: Some(c.contacts.len() as f64),
            avg_eps: c.eps,
            rejection: None,
            pruned: c.pruned,
        })
        .collect()
}
