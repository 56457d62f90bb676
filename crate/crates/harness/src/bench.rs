//! Benchmark runs over a corpus of synthetic objects.

use crate::config::{Inputs, Outputs, PlannerId, RunConfig, Settings};
use crate::error::{HarnessError, Result};
use crate::imaging::depth_stats;
use crate::pipeline::{execute, mask_polygon, write_outputs, PlanarInput};
use crate::synth::{gen_object, write_file, Shape, SyntheticCamera, SyntheticObject};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteObject {
    pub name: String,
    pub object: SyntheticObject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Suite {
    pub objects: Vec<SuiteObject>,
    pub planners: Vec<PlannerId>,
    pub seed: u64,
    pub camera: SyntheticCamera,
    pub settings: Settings,
    /// Also write an SVG per run.
    pub svg: bool,
}

impl Default for Suite {
    fn default() -> Self {
        let mut settings = Settings::default();
        settings.planner3d.n_candidates = 100;
        Self {
            objects: corpus(),
            planners: PlannerId::ALL.to_vec(),
            seed: 0,
            camera: SyntheticCamera::default(),
            settings,
            svg: true,
        }
    }
}

impl Suite {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::BTreeSet::new();
        for o in &self.objects {
            let ok = !o.name.is_empty() && o.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok || !names.insert(o.name.as_str()) {
                return Err(HarnessError::InvalidInput(format!("object name {:?} is empty, repeated or not file-safe", o.name)));
            }
            o.object.validate()?;
        }
        Ok(())
    }
}

/// One object from each family, chosen to exercise holes, over-opening
/// footprints, sharp points and long bars.
pub fn corpus() -> Vec<SuiteObject> {
    let obj = |name: &str, shape: Shape| SuiteObject { name: name.into(), object: SyntheticObject { shape, height: 0.05 } };
    vec![
        obj("rectangle", Shape::Rectangle { width: 0.04, length: 0.1 }),
        obj("disk", Shape::Disk { radius: 0.03 }),
        obj("annulus", Shape::Annulus { r_out: 0.06, r_in: 0.035 }),
        obj("l_shape", Shape::LShape { width: 0.08, length: 0.06, thickness: 0.02 }),
        obj("bar", Shape::Bar { length: 0.2, width: 0.025 }),
        obj("star", Shape::Star { points: 5, r_out: 0.05, r_in: 0.02 }),
    ]
}

/// Footprint and depth summary of a synthetic object seen through the image pipeline.
pub fn corpus_input(object: &SyntheticObject, cam: &SyntheticCamera, settings: &Settings) -> Result<PlanarInput> {
    let r = object.render(cam)?;
    let depth = depth_stats(&r.depth, &r.mask, cam.z_table)?;
    let img = crate::config::ImagingConfig { ppm_table: cam.ppm_table, z_table: cam.z_table, ..settings.imaging };
    Ok(PlanarInput { polygon: mask_polygon(&r.mask, &depth, &img)?, depth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub object: String,
    pub planner: PlannerId,
    pub fc_rate: Option<f64>,
    pub avg_contacts: Option<f64>,
    pub avg_eps: Option<f64>,
    pub candidates_evaluated: Option<usize>,
    pub planning_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerStats {
    pub runs: usize,
    pub failures: usize,
    pub mean_fc_rate: f64,
    pub mean_eps: f64,
    pub median_ms: f64,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub rows: Vec<SummaryRow>,
    pub planners: BTreeMap<PlannerId, PlannerStats>,
}

impl Summary {
    /// The summary without timing columns, for comparing repeated runs.
    pub fn without_timing(&self) -> Self {
        let mut s = self.clone();
        for r in &mut s.rows {
            r.planning_ms = None;
        }
        for p in s.planners.values_mut() {
            p.median_ms = 0.0;
            p.mean_ms = 0.0;
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:<12} {:>8} {:>9} {:>10} {:>11}", "object", "planner", "fc_rate", "contacts", "eps", "planning_ms");
        let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        for r in &self.rows {
            let _ = write!(
                s,
                "{:<12} {:<12} {:>8} {:>9} {:>10} {:>11}",
                r.object,
                r.planner.as_str(),
                opt(r.fc_rate, 3),
                opt(r.avg_contacts, 2),
                opt(r.avg_eps, 5),
                opt(r.planning_ms, 2)
            );
            if let Some(e) = &r.error {
                let _ = write!(s, "  error: {e}");
            }
            s.push('\n');
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<12} {:>5} {:>8} {:>13} {:>10} {:>10} {:>10}", "planner", "runs", "failed", "mean fc_rate", "mean eps", "median_ms", "mean_ms");
        for (p, st) in &self.planners {
            let _ = writeln!(
                s,
                "{:<12} {:>5} {:>8} {:>13.3} {:>10.5} {:>10.2} {:>10.2}",
                p.as_str(),
                st.runs,
                st.failures,
                st.mean_fc_rate,
                st.mean_eps,
                st.median_ms,
                st.mean_ms
            );
        }
        s
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn summarize(seed: u64, rows: Vec<SummaryRow>) -> Summary {
    let mut planners = BTreeMap::new();
    for p in rows.iter().map(|r| r.planner).collect::<std::collections::BTreeSet<_>>() {
        let mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.planner == p).collect();
        let ok: Vec<&&SummaryRow> = mine.iter().filter(|r| r.error.is_none()).collect();
        let mean = |f: &dyn Fn(&SummaryRow) -> f64| if ok.is_empty() { 0.0 } else { ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64 };
        let mut times: Vec<f64> = mine.iter().filter_map(|r| r.planning_ms).collect();
        let mean_ms = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
        planners.insert(
            p,
            PlannerStats {
                runs: mine.len(),
                failures: mine.len() - ok.len(),
                mean_fc_rate: mean(&|r| r.fc_rate.unwrap_or(0.0)),
                mean_eps: mean(&|r| r.avg_eps.unwrap_or(0.0)),
                median_ms: median(&mut times),
                mean_ms,
            },
        );
    }
    Summary { seed, rows, planners }
}

fn run_one(suite: &Suite, o: &SuiteObject, planner: PlannerId, dir: &Path, gen: &crate::synth::GeneratedObject) -> SummaryRow {
    let inputs = if planner.is_planar() {
        Inputs { mask: Some(gen.mask.clone()), depth: Some(gen.depth.clone()), z_table: Some(suite.camera.z_table), ..Default::default() }
    } else {
        Inputs { mesh: Some(gen.mesh.clone()), table_z: Some(0.0), ..Default::default() }
    };
    let mut settings = suite.settings.clone();
    settings.imaging.ppm_table = suite.camera.ppm_table;
    settings.imaging.z_table = suite.camera.z_table;
    let mut run = RunConfig::new(planner, inputs, settings, suite.seed);
    let stem = format!("{}.{}", o.name, planner.as_str());
    run.outputs = Outputs {
        report: Some(dir.join("reports").join(format!("{stem}.json"))),
        svg: suite.svg.then(|| dir.join("figures").join(format!("{stem}.svg"))),
    };
    let row = SummaryRow {
        object: o.name.clone(),
        planner,
        fc_rate: None,
        avg_contacts: None,
        avg_eps: None,
        candidates_evaluated: None,
        planning_ms: None,
        error: None,
    };
    match execute(&run).and_then(|r| write_outputs(&r).map(|_| r)) {
        Ok(r) => SummaryRow {
            fc_rate: Some(r.metrics.fc_rate),
            avg_contacts: Some(r.metrics.avg_contacts),
            avg_eps: Some(r.metrics.avg_eps),
            candidates_evaluated: Some(r.candidates_evaluated),
            planning_ms: Some(r.timing_ms.planning),
            ..row
        },
        Err(e) => SummaryRow { error: Some(e.to_string()), ..row },
    }
}

/// Generates every object, runs every planner on it and writes
/// `summary.json` plus per-run reports under `out`.
pub fn run_benchmark(suite: &Suite, out: &Path) -> Result<Summary> {
    suite.validate()?;
    for sub in ["objects", "reports", "figures"] {
        let d = out.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| HarnessError::io(&d, e))?;
    }
    let rows: Vec<Vec<SummaryRow>> = suite
        .objects
        .par_iter()
        .map(|o| match gen_object(&o.object, &suite.camera, &out.join("objects").join(&o.name)) {
            Ok(gen) => suite.planners.iter().map(|&p| run_one(suite, o, p, out, &gen)).collect(),
            Err(e) => suite
                .planners
                .iter()
                .map(|&planner| SummaryRow {
                    object: o.name.clone(),
                    planner,
                    fc_rate: None,
                    avg_contacts: None,
                    avg_eps: None,
                    candidates_evaluated: None,
                    planning_ms: None,
                    error: Some(e.to_string()),
                })
                .collect(),
        })
        .collect();
    let summary = summarize(suite.seed, rows.into_iter().flatten().collect());
    write_file(&out.join("summary.json"), serde_json::to_string_pretty(&summary).expect("summaries serialize"))?;
    write_file(&out.join("summary.txt"), summary.table())?;
    Ok(summary)
}
