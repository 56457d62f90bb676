use super::*;
use crate::rng;
use approx::assert_abs_diff_eq;

const CUBE_OBJ: &str = "\
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v -0.5 0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v -0.5 0.5 0.5
v 0.5 0.5 0.5
f 1 3 4
f 1 4 2
f 5 6 8
f 5 8 7
f 1 2 6
f 1 6 5
f 3 7 8
f 3 8 4
f 1 5 7
f 1 7 3
f 2 4 8
f 2 8 6
";

fn unit_cube() -> TriMesh {
    box_mesh(Vector3::repeat(1.0), Point3::origin())
}

#[test]
fn obj_cube_loads() {
    let m = parse_obj(CUBE_OBJ).unwrap();
    assert_eq!(m.vertices.len(), 8);
    assert_eq!(m.faces.len(), 12);
    assert_abs_diff_eq!(m.total_area(), 6.0, epsilon = 1e-12);
    for n in &m.face_normals {
        assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-12);
    }
    assert_eq!(m.boundary_edge_count(), 0);
}

#[test]
fn obj_quads_are_fanned() {
    let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n").unwrap();
    assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    let neg = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nf -3 -2 -1\n").unwrap();
    assert_eq!(neg.faces, vec![[0, 1, 2]]);
}

#[test]
fn obj_errors_carry_line_numbers() {
    let truncated = &CUBE_OBJ[..CUBE_OBJ.find("v 0.5 0.5 0.5").unwrap() + 9];
    match parse_obj(truncated) {
        Err(MeshError::Parse { line, .. }) => assert_eq!(line, 8),
        other => panic!("expected parse error, got {other:?}"),
    }
    match parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n") {
        Err(MeshError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
}

fn stl_binary(m: &TriMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend((m.faces.len() as u32).to_le_bytes());
    for f in 0..m.faces.len() {
        let n = m.face_normals[f];
        for c in n.iter().chain(m.triangle(f).iter().flat_map(|p| p.coords.iter())) {
            out.extend((*c as f32).to_le_bytes());
        }
        out.extend([0u8; 2]);
    }
    out
}

fn stl_ascii(m: &TriMesh) -> String {
    let mut s = String::from("solid cube\n");
    for f in 0..m.faces.len() {
        let n = m.face_normals[f];
        s += &format!("facet normal {} {} {}\nouter loop\n", n.x, n.y, n.z);
        for p in m.triangle(f) {
            s += &format!("vertex {} {} {}\n", p.x, p.y, p.z);
        }
        s += "endloop\nendfacet\n";
    }
    s + "endsolid cube\n"
}

#[test]
fn stl_is_deduplicated() {
    let cube = unit_cube();
    for bytes in [stl_binary(&cube), stl_ascii(&cube).into_bytes()] {
        let m = parse_stl(&bytes).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.faces.len(), 12);
        assert_eq!(m.boundary_edge_count(), 0);
    }
    let bin = stl_binary(&cube);
    assert!(matches!(parse_stl(&bin[..bin.len() - 10]), Err(MeshError::ParseBinary { .. })));
    let ascii = stl_ascii(&cube);
    assert!(matches!(parse_stl(ascii[..ascii.len() / 2].as_bytes()), Err(MeshError::Parse { .. })));
}

#[test]
fn ply_round_trip() {
    let cloud = PointCloud::new(vec![Point3::new(0.1, 0.2, 0.3), Point3::new(-1.0, 2.5, 1e-3)]);
    assert_eq!(parse_ply(&write_ply(&cloud)).unwrap(), cloud);
    let extra = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float z\nproperty float x\nproperty float y\nproperty uchar red\nend_header\n3 1 2 255\n";
    assert_eq!(parse_ply(extra).unwrap().points, vec![Point3::new(1.0, 2.0, 3.0)]);
    assert!(matches!(parse_ply("ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n"), Err(MeshError::Parse { .. })));
}

#[test]
fn obj_round_trip() {
    let cube = unit_cube();
    assert_eq!(parse_obj(&write_obj(&cube)).unwrap(), cube);
}

#[test]
fn cube_mass_properties() {
    let mp = mesh_mass_properties(&unit_cube()).unwrap();
    assert_abs_diff_eq!(mp.volume, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(mp.com.coords.norm(), 0.0, epsilon = 1e-12);
    assert!(!mp.open);
    let moved = box_mesh(Vector3::repeat(1.0), Point3::new(1.0, 2.0, 3.0));
    let mp = mesh_mass_properties(&moved).unwrap();
    assert_abs_diff_eq!(mp.com.x, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(mp.com.y, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(mp.com.z, 3.0, epsilon = 1e-12);
}

#[test]
fn cavity_subtracts_volume() {
    let outer = box_mesh(Vector3::new(2.0, 2.0, 2.0), Point3::origin());
    let mut inner = box_mesh(Vector3::new(0.5, 1.0, 0.4), Point3::new(0.3, 0.0, 0.1));
    inner.faces.iter_mut().for_each(|f| f.swap(1, 2));
    inner.face_normals.iter_mut().for_each(|n| *n = -*n);
    let mp = mesh_mass_properties(&outer.merged(&inner)).unwrap();
    assert_abs_diff_eq!(mp.volume, 8.0 - 0.2, epsilon = 1e-12);
    // Moment of the solid minus the cavity's.
    assert_abs_diff_eq!(mp.com.x, -0.2 * 0.3 / 7.8, epsilon = 1e-12);
    assert_abs_diff_eq!(mp.com.z, -0.2 * 0.1 / 7.8, epsilon = 1e-12);
}

#[test]
fn face_sampling_follows_area() {
    let m = TriMesh::new(
        vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 2.0, 0.0), Point3::new(0.0, 0.0, 1.0), Point3::new(3.0, 0.0, 1.0), Point3::new(0.0, 2.0, 1.0)],
        vec![[0, 1, 2], [3, 4, 5]],
    )
    .unwrap();
    let sampler = FaceSampler::new(&m, |_| true).unwrap();
    let mut rng = rng::stream(5, 0);
    let n = 10_000;
    let second = (0..n).filter(|_| sampler.sample(&m, &mut rng).0 == 1).count();
    assert!((second as f64 / n as f64 - 0.75).abs() < 0.02);
    assert!(matches!(sample_face_weighted(&m, |_| false, &mut rng), Err(MeshError::NoEligibleFace)));
}

#[test]
fn triangle_samples_average_to_centroid() {
    let t = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.2, 0.9, 0.3)];
    let mut rng = rng::stream(6, 0);
    let n = 10_000;
    let mean = (0..n).fold(Vector3::zeros(), |a, _| a + sample_triangle(&t, &mut rng).coords) / n as f64;
    let centroid = (t[0].coords + t[1].coords + t[2].coords) / 3.0;
    assert!((mean - centroid).norm() < 0.02);
}

#[test]
fn ray_cast_cube() {
    let cube = unit_cube();
    let bvh = Bvh::build(&cube);
    let hit = bvh.ray_cast(&Point3::new(0.0, 0.0, 2.0), &-Vector3::z(), 10.0).unwrap();
    assert_abs_diff_eq!(hit.distance, 1.5, epsilon = 1e-12);
    assert_abs_diff_eq!((hit.point - Point3::new(0.0, 0.0, 0.5)).norm(), 0.0, epsilon = 1e-12);
    assert!(cube.face_normals[hit.face_index].z > 0.99);
    assert!(bvh.ray_cast(&Point3::new(0.0, 1.0, 2.0), &-Vector3::x(), 10.0).is_none());
    assert!(bvh.ray_cast(&Point3::new(0.0, 0.0, 2.0), &-Vector3::z(), 1.0).is_none());
}

#[test]
fn bvh_matches_brute_force_on_sphere() {
    let mut vertices = vec![];
    let (stacks, slices) = (9, 16);
    for i in 0..=stacks {
        for j in 0..slices {
            let (th, ph) = (std::f64::consts::PI * i as f64 / stacks as f64, std::f64::consts::TAU * j as f64 / slices as f64);
            vertices.push(Point3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
        }
    }
    let mut faces = vec![];
    for i in 0..stacks {
        for j in 0..slices {
            let (a, b) = (i * slices + j, i * slices + (j + 1) % slices);
            let (c, d) = (a + slices, b + slices);
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    let m = TriMesh::new(vertices, faces).unwrap();
    let bvh = Bvh::build(&m);
    let mut rng = rng::stream(7, 0);
    use rand::Rng;
    for _ in 0..2000 {
        let o = Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let d = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize();
        let (a, b) = (bvh.ray_cast(&o, &d, 5.0), ray_cast_brute_force(&m, &o, &d, 5.0));
        assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            assert!((a.distance - b.distance).abs() <= 1e-9);
        }
    }
}

#[test]
fn icp_fixed_point_and_degenerate_input() {
    let mut rng = rng::stream(8, 0);
    let cube = box_mesh(Vector3::new(0.1, 0.06, 0.04), Point3::origin());
    let sampler = FaceSampler::new(&cube, |_| true).unwrap();
    let cloud = PointCloud::new((0..300).map(|_| sampler.sample(&cube, &mut rng).1).collect());
    let r = icp_align(&cloud, &cloud, &RigidTransform::IDENTITY, &IcpConfig::default()).unwrap();
    assert!(r.rms < 1e-12);
    assert!(r.transform.rotation_angle() < 1e-9 && r.transform.translation.norm() < 1e-12);

    let two = PointCloud::new(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)]);
    assert!(matches!(icp_align(&two, &two, &RigidTransform::IDENTITY, &IcpConfig::default()), Err(MeshError::DegenerateCorrespondence { .. })));
    let line = PointCloud::new((0..10).map(|i| Point3::new(i as f64 * 0.01, 0.0, 0.0)).collect());
    assert!(matches!(icp_align(&line, &line, &RigidTransform::IDENTITY, &IcpConfig::default()), Err(MeshError::DegenerateCorrespondence { rank: 1 })));
}

#[test]
fn planar_icp_recovers_yaw() {
    let mut rng = rng::stream(9, 0);
    let body = box_mesh(Vector3::new(0.12, 0.05, 0.03), Point3::new(0.0, 0.0, 0.015));
    let sampler = FaceSampler::new(&body, |f| body.face_normals[f].z > 0.5).unwrap();
    let source = PointCloud::new((0..500).map(|_| sampler.sample(&body, &mut rng).1).collect());
    let truth = RigidTransform::yaw_about(0.08, &Point3::new(0.01, 0.0, 0.0));
    let target = source.transformed(&truth);
    let cfg = IcpConfig { tol: 0.0, max_iters: 100, ..Default::default() };
    let r = icp_align(&source, &target, &RigidTransform::IDENTITY, &cfg).unwrap();
    let err = r.transform.inverse().compose(&truth);
    assert!(err.rotation_angle() < 1e-6, "angle {}", err.rotation_angle());
    assert!(r.rms_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn rigid_transform_algebra() {
    let t = RigidTransform::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.7, Vector3::new(0.1, -0.2, 0.3));
    assert!(t.is_valid(1e-12));
    let id = t.compose(&t.inverse());
    assert!(id.rotation_angle() < 1e-12 && id.translation.norm() < 1e-12);
    assert_abs_diff_eq!(t.rotation_angle(), 0.7, epsilon = 1e-12);
    let p = Point3::new(0.3, 0.4, 0.5);
    let y = RigidTransform::yaw_about(0.3, &p);
    assert_abs_diff_eq!((y.apply(&p) - p).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn out_of_range_faces_are_rejected() {
    assert!(matches!(TriMesh::new(vec![Point3::origin()], vec![[0, 1, 2]]), Err(MeshError::IndexOutOfRange { .. })));
}

#[test]
fn annulus_mesh_is_closed_and_outward() {
    let n = 48;
    let m = annulus_mesh(0.03, 0.04, 0.05, n, Point3::new(0.1, 0.0, 0.0));
    assert_eq!(m.faces.len(), 8 * n);
    assert_eq!(m.boundary_edge_count(), 0);
    let mp = mesh_mass_properties(&m).unwrap();
    let polygon_area = |r: f64| 0.5 * n as f64 * r * r * (std::f64::consts::TAU / n as f64).sin();
    assert!((mp.volume - 0.05 * (polygon_area(0.04) - polygon_area(0.03))).abs() < 1e-12);
    assert!((mp.com - Point3::new(0.1, 0.0, 0.025)).norm() < 1e-12);
}
