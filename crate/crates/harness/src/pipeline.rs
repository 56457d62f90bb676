//! Runs one planner from files to a report.

use crate::baseline::{score_baseline, BaselineVariant};
use crate::config::{ImagingConfig, PlannerId, RunConfig};
use crate::error::{HarnessError, Result};
use crate::imaging::{depth_stats, load_depth, load_gray, threshold_mask};
use crate::render::{gripper_circles, planar_figure, render_svg, spatial_figure, Figure};
use crate::report::{planar_rows, spatial_rows, GraspReport, IcpSummary, ReportMetrics, SelectedGrasp};
use crate::synth::write_file;
use getgrasp::geometry2d::{extract_contours, simplify_polygon, to_metric_polygon, BinaryMask, DepthStats, GeometryError, Polygon2D};
use getgrasp::mesh3d::{icp_align, load_mesh, load_point_cloud, FaceSampler, MeshFormat, PointCloud, RigidTransform, TriMesh};
use getgrasp::planner2d::{plan_2d, plan_bbox_baseline};
use getgrasp::planner3d::plan_3d;
use getgrasp::rng;
use std::path::Path;
use std::time::Instant;

/// Surface samples drawn from the mesh for alignment to an observed cloud.
pub const ICP_SAMPLES: usize = 2000;

/// Stream index of the ICP surface sampling, separate from planner streams.
const ICP_STREAM: u64 = u64::MAX - 1;

/// Object footprint from a mask: the largest outer contour and its direct holes.
pub fn mask_polygon(mask: &BinaryMask, depth: &DepthStats, img: &ImagingConfig) -> Result<Polygon2D> {
    let contours = extract_contours(mask)?;
    let (object, outer) = contours.iter().enumerate().find(|(_, c)| c.is_object).ok_or(GeometryError::EmptyMask)?;
    let ring = simplify_polygon(outer, img.rdp_epsilon, img.teh_chin)?;
    let holes: Vec<_> = contours
        .iter()
        .filter(|c| c.is_hole && c.parent == Some(object))
        .filter_map(|c| simplify_polygon(c, img.rdp_epsilon, img.teh_chin).ok())
        .collect();
    Ok(to_metric_polygon(&ring, &holes, depth, img.ppm_table)?)
}

/// Depth summary for a flat object of the default height, used without a depth image.
pub fn assumed_depth(img: &ImagingConfig) -> DepthStats {
    DepthStats { z_table: img.z_table, z_obj: img.z_table, h80: img.default_height }
}

pub struct PlanarInput {
    pub polygon: Polygon2D,
    pub depth: DepthStats,
}

pub fn load_planar(run: &RunConfig) -> Result<PlanarInput> {
    let img = &run.settings.imaging;
    let mask_path = run.inputs.mask.as_deref().ok_or_else(|| HarnessError::InvalidInput("no mask".into()))?;
    let mask = threshold_mask(&load_gray(mask_path)?, img.threshold);
    let depth = match (&run.inputs.depth, run.inputs.z_table) {
        (Some(path), Some(z_table)) => depth_stats(&load_depth(path)?, &mask, z_table)?,
        (Some(_), None) => return Err(HarnessError::InvalidInput("a depth image needs --z-table".into())),
        (None, _) => assumed_depth(img),
    };
    Ok(PlanarInput { polygon: mask_polygon(&mask, &depth, img)?, depth })
}

pub fn load_mesh_file(path: &Path) -> Result<TriMesh> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| HarnessError::InvalidInput(format!("{}: unsupported mesh format", path.display())))?;
    if !path.exists() {
        return Err(HarnessError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    Ok(load_mesh(path, format)?)
}

/// Moves the mesh onto the observed cloud with ICP from surface samples.
pub fn align_mesh(mesh: &TriMesh, cloud: &PointCloud, run: &RunConfig) -> Result<(TriMesh, IcpSummary)> {
    let sampler = FaceSampler::new(mesh, |_| true)?;
    let mut r = rng::stream(run.seed, ICP_STREAM);
    let samples = PointCloud::new((0..ICP_SAMPLES).map(|_| sampler.sample(mesh, &mut r).1).collect());
    let res = icp_align(&samples, cloud, &RigidTransform::IDENTITY, &run.settings.icp)?;
    let summary = IcpSummary { transform: res.transform, rms: res.rms, iterations: res.iterations, converged: res.converged };
    Ok((mesh.transformed(&res.transform), summary))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Plans with the configured planner and builds the report.
pub fn execute(run: &RunConfig) -> Result<GraspReport> {
    run.validate()?;
    let start = Instant::now();
    let mut report = match run.planner {
        PlannerId::Get3d => execute_spatial(run)?,
        _ => {
            let input = load_planar(run)?;
            execute_planar(run, &input)?
        }
    };
    report.timing_ms.total = ms_since(start);
    Ok(report)
}

/// Plans on an already extracted footprint.
pub fn execute_planar(run: &RunConfig, input: &PlanarInput) -> Result<GraspReport> {
    let cfg = &run.settings.planner2d;
    let variant = match run.planner {
        PlannerId::Get2d => None,
        PlannerId::BboxNarrow => Some(BaselineVariant::Narrow),
        PlannerId::BboxWide => Some(BaselineVariant::Wide),
        PlannerId::BboxGet => Some(BaselineVariant::Get),
        PlannerId::Get3d => return Err(HarnessError::InvalidInput("get3d needs a mesh".into())),
    };
    let t = Instant::now();
    let mut planning = None;
    let (grasp, metrics, candidates_evaluated, candidates) = match variant {
        None => {
            let plan = plan_2d(&input.polygon, &input.depth, cfg)?;
            let best = plan.selected_candidate();
            let grasp = SelectedGrasp::Planar {
                grasp: plan.grasp,
                source: plan.source,
                index: plan.selected,
                contacts: best.nominal_contacts.clone(),
                polygon: input.polygon.clone(),
                depth: input.depth,
            };
            let evaluated = plan.candidates.iter().filter(|c| c.evaluated().is_some()).count();
            (grasp, plan.metrics, evaluated, planar_rows(&plan))
        }
        Some(v) => {
            cfg.validate()?;
            let bbox = plan_bbox_baseline(&input.polygon, &input.depth, cfg);
            // The baseline's planning time excludes scoring it with the perturbation metrics.
            planning = Some(ms_since(t));
            let outcome = score_baseline(&input.polygon, bbox, cfg, v)?;
            let m = outcome.metrics;
            (SelectedGrasp::Baseline { outcome, polygon: input.polygon.clone(), depth: input.depth }, m, 1, Vec::new())
        }
    };
    let planning = planning.unwrap_or_else(|| ms_since(t));
    Ok(GraspReport {
        planner: run.planner,
        seed: run.seed,
        grasp,
        metrics: ReportMetrics { fc_rate: metrics.fc_rate, avg_contacts: metrics.avg_contacts, avg_eps: metrics.avg_eps },
        candidates_evaluated,
        candidates,
        timing_ms: crate::report::Timing { planning, total: planning },
        config: run.clone(),
    })
}

fn execute_spatial(run: &RunConfig) -> Result<GraspReport> {
    let mesh_path = run.inputs.mesh.as_deref().ok_or_else(|| HarnessError::InvalidInput("no mesh".into()))?;
    let table_z = run.inputs.table_z.ok_or_else(|| HarnessError::InvalidInput("no table height".into()))?;
    let mut mesh = load_mesh_file(mesh_path)?;
    let mut icp = None;
    if let Some(cloud_path) = &run.inputs.cloud {
        if !cloud_path.exists() {
            return Err(HarnessError::io(cloud_path, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        let cloud = load_point_cloud(cloud_path)?;
        let (aligned, summary) = align_mesh(&mesh, &cloud, run)?;
        mesh = aligned;
        icp = Some(summary);
    }
    let t = Instant::now();
    let plan = plan_3d(&mesh, table_z, &run.settings.planner3d)?;
    let planning = ms_since(t);
    let best = &plan.report.candidates[plan.selected];
    let rows = spatial_rows(&plan);
    Ok(GraspReport {
        planner: run.planner,
        seed: run.seed,
        metrics: ReportMetrics { fc_rate: plan.fc_rate, avg_contacts: best.contacts.len() as f64, avg_eps: plan.eps },
        grasp: SelectedGrasp::Spatial {
            grasp: plan.grasp,
            index: plan.selected,
            contacts: best.contacts.clone(),
            imbalance: best.imbalance,
            attempts: plan.report.attempts,
            rejections: plan.report.rejections.clone(),
            pruned_candidates: plan.report.pruned_candidates,
            eps_computed: plan.report.eps_computed,
            icp,
        },
        candidates_evaluated: plan.report.accepted,
        candidates: rows,
        timing_ms: crate::report::Timing { planning, total: planning },
        config: run.clone(),
    })
}

fn metric_text(report: &GraspReport) -> Vec<String> {
    let m = &report.metrics;
    vec![
        format!("{} seed {}", report.planner.as_str(), report.seed),
        format!("fc_rate {:.3}  contacts {:.2}  eps {:.5}", m.fc_rate, m.avg_contacts, m.avg_eps),
        format!("candidates evaluated {}", report.candidates_evaluated),
    ]
}

/// Figure of the selected grasp. 3D reports need the (aligned) mesh.
pub fn report_figure(report: &GraspReport, mesh: Option<&TriMesh>) -> Result<Figure> {
    let text = metric_text(report);
    let cfg = &report.config.settings;
    match &report.grasp {
        SelectedGrasp::Planar { grasp, contacts, polygon, .. } => {
            let g = &cfg.planner2d.gripper;
            Ok(planar_figure(polygon, &gripper_circles(grasp, g), g.finger_radius, Some(contacts), text))
        }
        SelectedGrasp::Baseline { outcome, polygon, .. } => {
            let mut text = text;
            if !outcome.baseline.opening_feasible {
                text.push(format!("opening infeasible: needs {:.1} mm", outcome.baseline.required_opening * 1000.0));
            }
            Ok(planar_figure(polygon, &outcome.fingers, cfg.planner2d.gripper.finger_radius, outcome.contacts.as_ref(), text))
        }
        SelectedGrasp::Spatial { grasp, contacts, .. } => {
            let mesh = mesh.ok_or_else(|| HarnessError::InvalidInput("rendering a 3D grasp needs the mesh".into()))?;
            Ok(spatial_figure(mesh, grasp, &cfg.planner3d.gripper, contacts, text))
        }
    }
}

/// Writes the report JSON and the SVG figure named in the run outputs.
pub fn write_outputs(report: &GraspReport) -> Result<()> {
    let out = &report.config.outputs;
    if let Some(path) = &out.report {
        write_file(path, report.to_json())?;
    }
    if let Some(path) = &out.svg {
        let mesh = match &report.grasp {
            SelectedGrasp::Spatial { icp, .. } => {
                let path = report.config.inputs.mesh.as_deref().ok_or_else(|| HarnessError::InvalidInput("no mesh".into()))?;
                let m = load_mesh_file(path)?;
                Some(match icp {
                    Some(s) => m.transformed(&s.transform),
                    None => m,
                })
            }
            _ => None,
        };
        write_file(path, render_svg(&report_figure(report, mesh.as_ref())?))?;
    }
    Ok(())
}
