use clap::{Args, Parser, Subcommand, ValueEnum};
use getgrasp_harness::bench::{run_benchmark, Suite};
use getgrasp_harness::config::{Inputs, Outputs, PlannerId, RunConfig, Settings};
use getgrasp_harness::pipeline::{execute, write_outputs};
use getgrasp_harness::synth::{gen_object, Shape, SyntheticCamera, SyntheticObject};
use getgrasp_harness::{GraspReport, HarnessError, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "getgrasp", version, about = "Grasp planning for the GET gripper")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON settings file (imaging, planner2d, planner3d, icp sections).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path.
    #[arg(long)]
    out: PathBuf,
    /// Optional SVG figure of the selected grasp.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct MaskInput {
    #[arg(long)]
    mask: PathBuf,
    /// 16-bit depth image in millimeters (0 = invalid).
    #[arg(long, requires = "z_table")]
    depth: Option<PathBuf>,
    /// Camera to table distance in meters.
    #[arg(long)]
    z_table: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Narrow,
    Wide,
    Get,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a GET grasp from a top-down segmentation mask.
    Plan2d {
        #[command(flatten)]
        input: MaskInput,
        #[command(flatten)]
        common: Common,
    },
    /// Plan a GET grasp on a triangle mesh.
    Plan3d {
        #[arg(long)]
        mesh: PathBuf,
        /// Table height in the mesh frame.
        #[arg(long)]
        table_z: f64,
        /// PLY point cloud to align the mesh to before planning.
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Bounding-box baseline grasp, scored with the planner metrics.
    Baseline {
        #[command(flatten)]
        input: MaskInput,
        #[arg(long, value_enum, default_value = "get")]
        variant: Variant,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the configuration echoed in a report.
    Rerun {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Generate a synthetic object: mask, depth image, mesh and metadata.
    Gen {
        #[arg(long)]
        kind: String,
        /// Comma-separated key=value shape parameters in meters, e.g. r_out=0.06,r_in=0.02.
        #[arg(long, default_value = "")]
        params: String,
        /// Extrusion height in meters.
        #[arg(long, default_value_t = 0.05)]
        height: f64,
        /// Pixels per meter at the table plane.
        #[arg(long, default_value_t = 1000.0)]
        resolution: f64,
        #[arg(long, default_value_t = 0.6)]
        z_table: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every planner over a corpus of synthetic objects.
    Bench {
        /// Suite JSON; the built-in corpus is used when omitted.
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| HarnessError::InvalidInput(format!("parameter {p:?} is not key=value")))?;
            let v: f64 = v.trim().parse().map_err(|_| HarnessError::InvalidInput(format!("parameter {p:?} has no numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn settings(path: &Option<PathBuf>) -> Result<Settings> {
    path.as_deref().map_or(Ok(Settings::default()), Settings::load)
}

fn mask_inputs(input: MaskInput) -> Inputs {
    Inputs { mask: Some(input.mask), depth: input.depth, z_table: input.z_table, ..Default::default() }
}

fn plan(planner: PlannerId, inputs: Inputs, common: Common) -> Result<()> {
    let mut run = RunConfig::new(planner, inputs, settings(&common.config)?, common.seed);
    run.outputs = Outputs { report: Some(common.out), svg: common.svg };
    finish(execute(&run)?)
}

fn finish(report: GraspReport) -> Result<()> {
    write_outputs(&report)?;
    let m = &report.metrics;
    println!(
        "{}: fc_rate {:.3}, contacts {:.2}, eps {:.5}, {} candidates evaluated, {:.1} ms",
        report.planner.as_str(),
        m.fc_rate,
        m.avg_contacts,
        m.avg_eps,
        report.candidates_evaluated,
        report.timing_ms.total
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan2d { input, common } => plan(PlannerId::Get2d, mask_inputs(input), common),
        Command::Baseline { input, variant, common } => {
            let id = match variant {
                Variant::Narrow => PlannerId::BboxNarrow,
                Variant::Wide => PlannerId::BboxWide,
                Variant::Get => PlannerId::BboxGet,
            };
            plan(id, mask_inputs(input), common)
        }
        Command::Plan3d { mesh, table_z, cloud, common } => {
            let inputs = Inputs { mesh: Some(mesh), table_z: Some(table_z), cloud, ..Default::default() };
            plan(PlannerId::Get3d, inputs, common)
        }
        Command::Rerun { report, out, svg } => {
            let mut run = GraspReport::load(&report)?.config;
            run.outputs = Outputs { report: Some(out), svg };
            finish(execute(&run)?)
        }
        Command::Gen { kind, params, height, resolution, z_table, out } => {
            let object = SyntheticObject { shape: Shape::from_params(&kind, &parse_params(&params)?)?, height };
            let g = gen_object(&object, &SyntheticCamera { ppm_table: resolution, z_table }, &out)?;
            println!("wrote {}, {} and {}", g.mask.display(), g.depth.display(), g.mesh.display());
            Ok(())
        }
        Command::Bench { suite, out } => {
            let suite = suite.as_deref().map_or(Ok(Suite::default()), Suite::load)?;
            let summary = run_benchmark(&suite, &out)?;
            print!("{}", summary.table());
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("GETGRASP_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| HarnessError::InvalidInput(format!("GETGRASP_THREADS = {value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HarnessError::InvalidInput(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
