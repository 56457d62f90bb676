use crate::error::{HarnessError, Result};
use getgrasp::geometry2d::RDP_EPSILON_DEFAULT;
use getgrasp::mesh3d::IcpConfig;
use getgrasp::planner2d::Planner2DConfig;
use getgrasp::planner3d::Planner3DConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerId {
    Get2d,
    Get3d,
    BboxNarrow,
    BboxWide,
    BboxGet,
}

impl PlannerId {
    pub const ALL: [PlannerId; 5] = [Self::Get2d, Self::Get3d, Self::BboxNarrow, Self::BboxWide, Self::BboxGet];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Get2d => "get2d",
            Self::Get3d => "get3d",
            Self::BboxNarrow => "bbox-narrow",
            Self::BboxWide => "bbox-wide",
            Self::BboxGet => "bbox-get",
        }
    }

    pub fn is_planar(&self) -> bool {
        !matches!(self, Self::Get3d)
    }
}

impl std::str::FromStr for PlannerId {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| HarnessError::InvalidInput(format!("unknown planner {s:?}")))
    }
}

/// Mask-to-polygon settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImagingConfig {
    /// Luminance threshold; brighter pixels are object.
    pub threshold: u8,
    /// Pixels per meter at the table plane.
    pub ppm_table: f64,
    pub rdp_epsilon: f64,
    pub teh_chin: bool,
    /// Camera to table distance used when no depth image is given.
    pub z_table: f64,
    /// Object height assumed when no depth image is given.
    pub default_height: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self { threshold: 128, ppm_table: 1000.0, rdp_epsilon: RDP_EPSILON_DEFAULT, teh_chin: true, z_table: 0.6, default_height: 0.05 }
    }
}

/// Contents of a `--config` file; every section is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub imaging: ImagingConfig,
    pub planner2d: Planner2DConfig,
    pub planner3d: Planner3DConfig,
    pub icp: IcpConfig,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::InvalidInput(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Inputs {
    pub mask: Option<PathBuf>,
    /// 16-bit depth image in millimeters.
    pub depth: Option<PathBuf>,
    /// Camera to table distance for the depth image (m).
    pub z_table: Option<f64>,
    pub mesh: Option<PathBuf>,
    /// Observed point cloud the mesh is aligned to before planning.
    pub cloud: Option<PathBuf>,
    /// Table height in the mesh frame (m).
    pub table_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub planner: PlannerId,
    pub inputs: Inputs,
    pub settings: Settings,
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn new(planner: PlannerId, inputs: Inputs, settings: Settings, seed: u64) -> Self {
        Self { planner, inputs, settings, seed, outputs: Outputs::default() }.with_seed(seed)
    }

    /// Propagates the run seed into both planner configurations.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.settings.planner2d.seed = seed;
        self.settings.planner3d.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let missing = |what: &str| Err(HarnessError::InvalidInput(format!("{} needs {what}", self.planner.as_str())));
        if self.planner.is_planar() {
            if self.inputs.mask.is_none() {
                return missing("a mask");
            }
            if self.inputs.depth.is_some() && self.inputs.z_table.is_none() {
                return missing("--z-table with a depth image");
            }
            self.settings.planner2d.validate()?;
        } else {
            if self.inputs.mesh.is_none() {
                return missing("a mesh");
            }
            if self.inputs.table_z.is_none() {
                return missing("a table height");
            }
            self.settings.planner3d.validate()?;
        }
        if self.settings.planner2d.seed != self.seed || self.settings.planner3d.seed != self.seed {
            return Err(HarnessError::InvalidInput("planner seeds differ from the run seed".into()));
        }
        let img = &self.settings.imaging;
        if !(img.ppm_table > 0.0 && img.rdp_epsilon >= 0.0 && img.z_table > 0.0 && img.default_height >= 0.0) {
            return Err(HarnessError::InvalidInput(format!("imaging settings {img:?}")));
        }
        Ok(())
    }
}
