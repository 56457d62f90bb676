//! Static SVG figures of planned grasps.
//!
//! Coordinates are written in millimeters with fixed precision, so a given
//! input always produces the same bytes.

use getgrasp::geometry2d::{perp, Polygon2D};
use getgrasp::mesh3d::TriMesh;
use getgrasp::planner2d::{Grasp2D, GripperModel2D};
use getgrasp::planner3d::{Grasp3D, GripperModel3D};
use getgrasp::wrench::{PlanarContacts, SpatialContacts};
use nalgebra::{Point2, Vector2};
use std::fmt::Write as _;

/// Length of drawn contact normals (m).
const NORMAL_LENGTH: f64 = 0.01;
const MARGIN_MM: f64 = 12.0;
const TEXT_LINE_MM: f64 = 5.0;

/// Everything drawn in one figure, in meters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Figure {
    /// Object outline rings.
    pub rings: Vec<Vec<Point2<f64>>>,
    /// Filled triangles for mesh top views.
    pub triangles: Vec<[Point2<f64>; 3]>,
    /// Finger circles (center, radius).
    pub fingers: Vec<(Point2<f64>, f64)>,
    /// Contact points with their inward normals.
    pub contacts: Vec<(Point2<f64>, Vector2<f64>)>,
    pub text: Vec<String>,
}

/// Circle centers of the closed GET gripper: wide A, wide B, narrow.
pub fn gripper_circles(grasp: &Grasp2D, g: &GripperModel2D) -> [Point2<f64>; 3] {
    let a = Vector2::new(grasp.phi.cos(), grasp.phi.sin());
    let l = perp(a);
    let reach = 0.5 * grasp.opening + g.finger_radius;
    let wide = grasp.p - a * reach;
    let w = 0.5 * g.wide_spacing;
    [wide + l * w, wide - l * w, grasp.p + a * reach]
}

pub fn planar_figure(poly: &Polygon2D, fingers: &[Point2<f64>], radius: f64, contacts: Option<&PlanarContacts>, text: Vec<String>) -> Figure {
    Figure {
        rings: poly.rings().map(|r| r.to_vec()).collect(),
        triangles: Vec::new(),
        fingers: fingers.iter().map(|c| (*c, radius)).collect(),
        contacts: contacts
            .map(|cs| cs.contacts.iter().map(|c| (Point2::from(c.position), c.inward_normal)).collect())
            .unwrap_or_default(),
        text,
    }
}

/// Top view of the mesh with the pad centers of the closed gripper.
pub fn spatial_figure(mesh: &TriMesh, grasp: &Grasp3D, g: &GripperModel3D, contacts: &SpatialContacts, text: Vec<String>) -> Figure {
    let flat = |p: &nalgebra::Point3<f64>| Point2::new(p.x, p.y);
    let triangles = (0..mesh.faces.len())
        .filter(|&f| mesh.face_normals[f].z > 1e-9)
        .map(|f| mesh.triangle(f).map(|p| flat(&p)))
        .collect();
    let x: nalgebra::Vector3<f64> = grasp.pose.rotation.column(0).into();
    let y: nalgebra::Vector3<f64> = grasp.pose.rotation.column(1).into();
    let o = grasp.pose.translation;
    let wide_travel = 0.5 * (g.max_opening - grasp.opening);
    let wide = o + x * wide_travel;
    let pads = [wide + y * (0.5 * g.wide_spacing), wide - y * (0.5 * g.wide_spacing), o + x * (g.max_opening - wide_travel)];
    Figure {
        rings: Vec::new(),
        triangles,
        fingers: pads.iter().map(|p| (Point2::new(p.x, p.y), 0.5 * g.w_bottom)).collect(),
        contacts: contacts
            .contacts
            .iter()
            .map(|c| {
                let n = Vector2::new(c.inward_normal.x, c.inward_normal.y);
                (Point2::new(c.position.x, c.position.y), if n.norm() > 1e-12 { n.normalize() } else { n })
            })
            .collect(),
        text,
    }
}

fn mm(v: f64) -> String {
    let s = format!("{:.3}", v * 1000.0);
    if s == "-0.000" { "0.000".to_string() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(fig: &Figure) -> String {
    let mut pts: Vec<Point2<f64>> = fig.rings.iter().flatten().copied().collect();
    pts.extend(fig.triangles.iter().flatten());
    for (c, r) in &fig.fingers {
        pts.push(c + Vector2::new(*r, *r));
        pts.push(c - Vector2::new(*r, *r));
    }
    for (p, n) in &fig.contacts {
        pts.push(*p);
        pts.push(p + n * NORMAL_LENGTH);
    }
    let (lo, hi) = pts.iter().fold(
        (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Point2::new(lo.x.min(p.x), lo.y.min(p.y)), Point2::new(hi.x.max(p.x), hi.y.max(p.y))),
    );
    let (lo, hi) = if pts.is_empty() { (Point2::origin(), Point2::origin()) } else { (lo, hi) };
    let m = MARGIN_MM / 1000.0;
    let text_h = TEXT_LINE_MM * fig.text.len() as f64 / 1000.0;
    let (x0, y0) = (lo.x - m, lo.y - m - text_h);
    let (w, h) = (hi.x - lo.x + 2.0 * m, hi.y - lo.y + 2.0 * m + text_h);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}mm" height="{}mm">"#,
        mm(x0),
        mm(y0),
        mm(w),
        mm(h),
        mm(w),
        mm(h)
    );
    s.push_str("<style>.object{fill:#d9d9d9;stroke:#333;stroke-width:0.3;fill-rule:evenodd}.face{fill:#d9d9d9;stroke:#bbb;stroke-width:0.05}.finger{fill:none;stroke:#1f5fd6;stroke-width:0.4}.contact{fill:#d62728}.normal{stroke:#d62728;stroke-width:0.3}text{font-family:monospace;font-size:3.5px}</style>\n");
    for t in &fig.triangles {
        let _ = writeln!(s, r#"<polygon class="face" points="{}"/>"#, t.iter().map(|p| format!("{},{}", mm(p.x), mm(p.y))).collect::<Vec<_>>().join(" "));
    }
    if !fig.rings.is_empty() {
        let mut d = String::new();
        for ring in &fig.rings {
            for (k, p) in ring.iter().enumerate() {
                let _ = write!(d, "{}{},{} ", if k == 0 { "M" } else { "L" }, mm(p.x), mm(p.y));
            }
            d.push_str("Z ");
        }
        let _ = writeln!(s, r#"<path class="object" d="{}"/>"#, d.trim_end());
    }
    for (c, r) in &fig.fingers {
        let _ = writeln!(s, r#"<circle class="finger" cx="{}" cy="{}" r="{}"/>"#, mm(c.x), mm(c.y), mm(*r));
    }
    for (p, n) in &fig.contacts {
        let tip = p + n * NORMAL_LENGTH;
        let _ = writeln!(s, r#"<line class="normal" x1="{}" y1="{}" x2="{}" y2="{}"/>"#, mm(p.x), mm(p.y), mm(tip.x), mm(tip.y));
        let _ = writeln!(s, r#"<circle class="contact" cx="{}" cy="{}" r="0.800"/>"#, mm(p.x), mm(p.y));
    }
    for (k, line) in fig.text.iter().enumerate() {
        let y = y0 + m * 0.5 + TEXT_LINE_MM * (k as f64 + 1.0) / 1000.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, mm(x0 + m * 0.5), mm(y), escape(line));
    }
    s.push_str("</svg>\n");
    s
}
