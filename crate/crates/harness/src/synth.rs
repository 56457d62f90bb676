//! Parametric synthetic objects: footprint polygons, raster masks, depth maps
//! and extruded meshes.

use crate::error::{HarnessError, Result};
use crate::imaging::{mask_to_image, save_image, DepthImage};
use getgrasp::geometry2d::{point_in_polygon, signed_area, BinaryMask, Polygon2D};
use getgrasp::mesh3d::{annulus_mesh, write_obj, TriMesh};
use image::Luma;
use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

/// Sides used for round outlines.
pub const ROUND_SEGMENTS: usize = 96;

/// Background pixels kept around the footprint in generated masks.
const MASK_MARGIN: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Rectangle { width: f64, length: f64 },
    Disk { radius: f64 },
    Annulus { r_out: f64, r_in: f64 },
    /// Two `thickness`-wide legs of lengths `width` (along x) and `length` (along y).
    LShape { width: f64, length: f64, thickness: f64 },
    Bar { length: f64, width: f64 },
    Star { points: usize, r_out: f64, r_in: f64 },
}

impl Shape {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Rectangle { .. } => "rectangle",
            Self::Disk { .. } => "disk",
            Self::Annulus { .. } => "annulus",
            Self::LShape { .. } => "l_shape",
            Self::Bar { .. } => "bar",
            Self::Star { .. } => "star",
        }
    }

    /// Builds a shape from `kind` and `key=value` parameters.
    pub fn from_params(kind: &str, params: &[(String, f64)]) -> Result<Self> {
        let mut map = serde_json::Map::new();
        map.insert("kind".into(), kind.into());
        for (k, v) in params {
            let value = if k == "points" { serde_json::Value::from(*v as u64) } else { serde_json::Value::from(*v) };
            map.insert(k.clone(), value);
        }
        let shape: Self = serde_json::from_value(map.into()).map_err(|e| HarnessError::InvalidInput(format!("{kind}: {e}")))?;
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        let (values, ok): (Vec<f64>, bool) = match *self {
            Self::Rectangle { width, length } => (vec![width, length], true),
            Self::Disk { radius } => (vec![radius], true),
            Self::Annulus { r_out, r_in } => (vec![r_out, r_in], r_in < r_out),
            Self::LShape { width, length, thickness } => (vec![width, length, thickness], thickness < width.min(length)),
            Self::Bar { length, width } => (vec![length, width], true),
            Self::Star { points, r_out, r_in } => (vec![r_out, r_in], points >= 3 && r_in < r_out),
        };
        if values.iter().all(|v| v.is_finite() && *v > 0.0) && ok {
            Ok(())
        } else {
            Err(HarnessError::InvalidInput(format!("invalid parameters {self:?}")))
        }
    }

    /// Footprint centered on the origin.
    pub fn polygon(&self) -> Polygon2D {
        let rect = |w: f64, l: f64| vec![p(-w / 2.0, -l / 2.0), p(w / 2.0, -l / 2.0), p(w / 2.0, l / 2.0), p(-w / 2.0, l / 2.0)];
        match *self {
            Self::Rectangle { width, length } => Polygon2D::new(rect(width, length), vec![]),
            Self::Bar { length, width } => Polygon2D::new(rect(length, width), vec![]),
            Self::Disk { radius } => Polygon2D::new(circle(radius), vec![]),
            Self::Annulus { r_out, r_in } => Polygon2D::new(circle(r_out), vec![circle(r_in)]),
            Self::LShape { width, length, thickness: t } => {
                let (x0, y0) = (-width / 2.0, -length / 2.0);
                let ring = vec![
                    p(x0, y0),
                    p(x0 + width, y0),
                    p(x0 + width, y0 + t),
                    p(x0 + t, y0 + t),
                    p(x0 + t, y0 + length),
                    p(x0, y0 + length),
                ];
                Polygon2D::new(ring, vec![])
            }
            Self::Star { points, r_out, r_in } => {
                let ring = (0..2 * points)
                    .map(|k| {
                        let r = if k % 2 == 0 { r_out } else { r_in };
                        let a = TAU * k as f64 / (2 * points) as f64;
                        p(r * a.cos(), r * a.sin())
                    })
                    .collect();
                Polygon2D::new(ring, vec![])
            }
        }
    }

    /// Footprint extruded from the table plane `z = 0` to `height`.
    pub fn mesh(&self, height: f64) -> TriMesh {
        match *self {
            Self::Annulus { r_out, r_in } => annulus_mesh(r_in, r_out, height, ROUND_SEGMENTS, Point3::origin()),
            _ => extrude(&self.polygon().outer, height),
        }
    }
}

fn p(x: f64, y: f64) -> Point2<f64> {
    Point2::new(x, y)
}

fn circle(r: f64) -> Vec<Point2<f64>> {
    (0..ROUND_SEGMENTS)
        .map(|k| {
            let a = TAU * k as f64 / ROUND_SEGMENTS as f64;
            p(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn cross(o: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    (a - o).perp(&(b - o))
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
pub fn triangulate(ring: &[Point2<f64>]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut tris = Vec::with_capacity(ring.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            if cross(ring[a], ring[b], ring[c]) <= 0.0 {
                return false;
            }
            idx.iter().filter(|&&j| j != a && j != b && j != c).all(|&j| {
                let q = ring[j];
                !(cross(ring[a], ring[b], q) >= 0.0 && cross(ring[b], ring[c], q) >= 0.0 && cross(ring[c], ring[a], q) >= 0.0)
            })
        });
        // A simple ring always has an ear; only rounding in near-degenerate input can end here.
        let Some(i) = ear else { break };
        tris.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    if idx.len() == 3 {
        tris.push([idx[0], idx[1], idx[2]]);
    }
    tris
}

/// Closed prism over a simple ring, with outward-facing triangles.
pub fn extrude(ring: &[Point2<f64>], height: f64) -> TriMesh {
    let mut ring = ring.to_vec();
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    let n = ring.len();
    let vertices: Vec<Point3<f64>> =
        [0.0, height].iter().flat_map(|&z| ring.iter().map(move |q| Point3::new(q.x, q.y, z))).collect();
    let mut faces = Vec::with_capacity(4 * n);
    for t in triangulate(&ring) {
        faces.push([t[0], t[2], t[1]]);
        faces.push([n + t[0], n + t[1], n + t[2]]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([i, j, n + j]);
        faces.push([i, n + j, n + i]);
    }
    TriMesh::new(vertices, faces).expect("prism faces are valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticObject {
    pub shape: Shape,
    /// Extrusion height above the table (m).
    #[serde(default = "default_height")]
    pub height: f64,
}

fn default_height() -> f64 {
    0.05
}

/// Camera geometry used to render synthetic masks and depth maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCamera {
    /// Pixels per meter at the table plane.
    pub ppm_table: f64,
    pub z_table: f64,
}

impl Default for SyntheticCamera {
    fn default() -> Self {
        Self { ppm_table: 1000.0, z_table: 0.6 }
    }
}

/// Rendered views of a synthetic object.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub mask: BinaryMask,
    pub depth: DepthImage,
    /// Depth recorded on the object's top face (mm).
    pub top_depth_mm: u16,
    /// Pixels per meter of the footprint in the image.
    pub object_ppm: f64,
}

impl SyntheticObject {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(HarnessError::InvalidInput(format!("height {} must be positive", self.height)));
        }
        Ok(())
    }

    /// Top-down view from a camera above the table.
    ///
    /// The footprint is scaled by the pinhole magnification of its top face
    /// and sampled at pixel centers.
    pub fn render(&self, cam: &SyntheticCamera) -> Result<Rendered> {
        self.validate()?;
        let top_depth_mm = ((cam.z_table - self.height) * 1000.0).round();
        if !(top_depth_mm >= 1.0 && top_depth_mm <= u16::MAX as f64) || cam.z_table * 1000.0 > u16::MAX as f64 {
            return Err(HarnessError::InvalidInput(format!(
                "object height {} does not fit below the camera at {}",
                self.height, cam.z_table
            )));
        }
        let object_ppm = cam.ppm_table * cam.z_table / (top_depth_mm / 1000.0);
        let poly = self.shape.polygon();
        let (mut lo, mut hi) = (p(f64::INFINITY, f64::INFINITY), p(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for v in poly.vertices() {
            lo = p(lo.x.min(v.x), lo.y.min(v.y));
            hi = p(hi.x.max(v.x), hi.y.max(v.y));
        }
        let m = MASK_MARGIN as f64;
        let width = ((hi.x - lo.x) * object_ppm).ceil() as usize + 2 * MASK_MARGIN;
        let height = ((hi.y - lo.y) * object_ppm).ceil() as usize + 2 * MASK_MARGIN;
        let mask = BinaryMask::from_fn(width, height, |x, y| {
            let q = p(lo.x + (x as f64 - m) / object_ppm, lo.y + (y as f64 - m) / object_ppm);
            point_in_polygon(&poly, q)
        });
        let table_mm = (cam.z_table * 1000.0).round() as u16;
        let depth = DepthImage::from_fn(width as u32, height as u32, |x, y| {
            Luma([if mask.get(x as usize, y as usize) { top_depth_mm as u16 } else { table_mm }])
        });
        Ok(Rendered { mask, depth, top_depth_mm: top_depth_mm as u16, object_ppm })
    }
}

/// Files written by [`gen_object`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedObject {
    pub object: SyntheticObject,
    pub camera: SyntheticCamera,
    pub mask: PathBuf,
    pub depth: PathBuf,
    pub mesh: PathBuf,
}

/// Writes `mask.png`, `depth.png`, `mesh.obj` and `object.json` into `dir`.
pub fn gen_object(object: &SyntheticObject, cam: &SyntheticCamera, dir: &Path) -> Result<GeneratedObject> {
    let r = object.render(cam)?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let out = GeneratedObject {
        object: object.clone(),
        camera: *cam,
        mask: dir.join("mask.png"),
        depth: dir.join("depth.png"),
        mesh: dir.join("mesh.obj"),
    };
    save_image(&mask_to_image(&r.mask), &out.mask)?;
    save_image(&r.depth, &out.depth)?;
    write_file(&out.mesh, write_obj(&object.shape.mesh(object.height)))?;
    let json = serde_json::to_string_pretty(&out).expect("object records serialize");
    write_file(&dir.join("object.json"), json)?;
    Ok(out)
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}
