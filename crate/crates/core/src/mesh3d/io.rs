use super::{MeshError, PointCloud, TriMesh};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(Self::Obj),
            "stl" => Some(Self::Stl),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let bytes = std::fs::read(path)?;
    match format {
        MeshFormat::Obj => parse_obj(&String::from_utf8_lossy(&bytes)),
        MeshFormat::Stl => parse_stl(&bytes),
    }
}

pub fn load_point_cloud(path: &Path) -> Result<PointCloud, MeshError> {
    parse_ply(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_coords<'a>(line: usize, mut it: impl Iterator<Item = &'a str>) -> Result<Point3<f64>, MeshError> {
    let mut c = [0.0f64; 3];
    for v in c.iter_mut() {
        let tok = it.next().ok_or_else(|| parse_err(line, "expected three coordinates"))?;
        *v = tok.parse().map_err(|_| parse_err(line, format!("bad number {tok:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(line, "non-finite coordinate"));
        }
    }
    Ok(Point3::new(c[0], c[1], c[2]))
}

/// Wavefront OBJ with `v` and `f` records; polygons are fan-triangulated.
pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => vertices.push(parse_coords(line, it)?),
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| parse_err(line, format!("bad face index {tok:?}")))?;
                    let resolved = if i > 0 { i - 1 } else { vertices.len() as i64 + i };
                    if i == 0 || resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(line, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(parse_err(line, "face needs at least three vertices"));
                }
                faces.extend((1..idx.len() - 1).map(|j| [idx[0], idx[j], idx[j + 1]]));
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Binary or ASCII STL; vertices are merged by exact coordinate match.
pub fn parse_stl(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    let binary_len = bytes.get(80..84).map(|b| 84 + 50 * u32::from_le_bytes(b.try_into().unwrap()) as usize);
    let triangles = if binary_len == Some(bytes.len()) || !bytes.trim_ascii_start().starts_with(b"solid") {
        parse_stl_binary(bytes)?
    } else {
        parse_stl_ascii(&String::from_utf8_lossy(bytes))?
    };
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let faces = triangles
        .iter()
        .map(|t| {
            t.map(|p| {
                let key = [p.x, p.y, p.z].map(|c| (c + 0.0).to_bits());
                *index.entry(key).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                })
            })
        })
        .collect();
    TriMesh::new(vertices, faces)
}

fn parse_stl_binary(bytes: &[u8]) -> Result<Vec<[Point3<f64>; 3]>, MeshError> {
    let truncated = |offset| MeshError::ParseBinary { offset, message: "truncated binary STL".into() };
    let count = u32::from_le_bytes(bytes.get(80..84).ok_or(truncated(bytes.len()))?.try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let base = 84 + 50 * i;
        let rec = bytes.get(base..base + 50).ok_or(truncated(base))?;
        let f = |k: usize| f32::from_le_bytes(rec[12 + 4 * k..16 + 4 * k].try_into().unwrap()) as f64;
        out.push([0, 1, 2].map(|v| Point3::new(f(3 * v), f(3 * v + 1), f(3 * v + 2))));
    }
    Ok(out)
}

fn parse_stl_ascii(text: &str) -> Result<Vec<[Point3<f64>; 3]>, MeshError> {
    let mut out = Vec::new();
    let mut current: Vec<Point3<f64>> = Vec::new();
    let mut last = 0;
    let mut closed = false;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last = line;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("vertex") => current.push(parse_coords(line, it)?),
            Some("endloop") => {
                if current.len() != 3 {
                    return Err(parse_err(line, format!("facet has {} vertices", current.len())));
                }
                out.push([current[0], current[1], current[2]]);
                current.clear();
            }
            Some("endsolid") => closed = true,
            _ => {}
        }
    }
    if !closed || !current.is_empty() {
        return Err(parse_err(last, "unterminated solid"));
    }
    Ok(out)
}

/// ASCII PLY vertex element with `x y z` properties.
pub fn parse_ply(text: &str) -> Result<PointCloud, MeshError> {
    let mut lines = text.lines().enumerate();
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(1, "missing ply magic")),
    }
    let mut header_end = None;
    for (k, raw) in lines.by_ref() {
        let tok: Vec<&str> = raw.split_whitespace().collect();
        match tok.as_slice() {
            ["format", f, ..] if *f != "ascii" => return Err(parse_err(k + 1, format!("unsupported format {f}"))),
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| parse_err(k + 1, "bad vertex count"))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", .., name] if in_vertex => props.push(name.to_string()),
            ["end_header"] => {
                header_end = Some(k + 1);
                break;
            }
            _ => {}
        }
    }
    let header_end = header_end.ok_or_else(|| parse_err(text.lines().count(), "missing end_header"))?;
    let count = count.ok_or_else(|| parse_err(header_end, "no vertex element"))?;
    let pos = |name: &str| props.iter().position(|p| p == name).ok_or_else(|| parse_err(header_end, format!("missing property {name}")));
    let (ix, iy, iz) = (pos("x")?, pos("y")?, pos("z")?);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let (k, raw) = lines.next().ok_or_else(|| parse_err(header_end + points.len() + 1, "truncated vertex list"))?;
        let vals: Vec<&str> = raw.split_whitespace().collect();
        if vals.len() < props.len() {
            return Err(parse_err(k + 1, "too few vertex properties"));
        }
        points.push(parse_coords(k + 1, [vals[ix], vals[iy], vals[iz]].into_iter())?);
    }
    Ok(PointCloud::new(points))
}

pub fn write_obj(m: &TriMesh) -> String {
    let mut s = String::new();
    for v in &m.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &m.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_ply(cloud: &PointCloud) -> String {
    let mut s = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.len()
    );
    for p in &cloud.points {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}
