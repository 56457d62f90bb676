use super::*;
use approx::assert_abs_diff_eq;
use std::f64::consts::PI;

fn rect(w: f64, h: f64) -> Polygon2D {
    let (x, y) = (w / 2.0, h / 2.0);
    Polygon2D::new(vec![Point2::new(-x, -y), Point2::new(x, -y), Point2::new(x, y), Point2::new(-x, y)], vec![])
}

fn ngon(n: usize, r: f64, phase: f64) -> Vec<Point2<f64>> {
    (0..n)
        .map(|k| {
            let t = phase + TAU * k as f64 / n as f64;
            Point2::new(r * t.cos(), r * t.sin())
        })
        .collect()
}

fn annulus() -> Polygon2D {
    let mut hole = ngon(64, 0.02, 0.0);
    hole.reverse();
    Polygon2D::new(ngon(64, 0.06, 0.0), vec![hole])
}

fn depth() -> DepthStats {
    DepthStats { z_table: 0.8, z_obj: 0.75, h80: 0.06 }
}

#[test]
fn edge_seed_counts_follow_spacing() {
    let cfg = Planner2DConfig { edge_step: 0.02, ..Default::default() };
    let seeds = sample_edge_grasps(&rect(0.06, 0.06), &cfg);
    assert_eq!(seeds.len(), 12);
    let short = Planner2DConfig { edge_step: 0.1, ..Default::default() };
    assert_eq!(sample_edge_grasps(&rect(0.06, 0.06), &short).len(), 4);
}

#[test]
fn edge_seed_axis_is_inward_normal() {
    let poly = rect(0.04, 0.1);
    let seeds = sample_edge_grasps(&poly, &Planner2DConfig::default());
    // 3 seeds per short edge, 9 per long edge, in ring order.
    let normals = [PI / 2.0, PI, 3.0 * PI / 2.0, 0.0];
    let counts = [3, 9, 3, 9];
    assert_eq!(seeds.len(), counts.iter().sum::<usize>());
    let mut k = 0;
    for (phi, n) in normals.iter().zip(counts) {
        for s in &seeds[k..k + n] {
            assert_abs_diff_eq!(s.phi, *phi, epsilon = 1e-12);
            // Centered on the material crossed by the corridor.
            assert_abs_diff_eq!(s.axis().dot(&s.center.coords), 0.0, epsilon = 1e-12);
        }
        k += n;
    }
}

#[test]
fn vertex_seeds_skip_reflex_corners() {
    let cfg = Planner2DConfig::default();
    assert_eq!(sample_vertex_grasps(&rect(0.06, 0.06), &cfg).len(), 12);
    let l = Polygon2D::new(
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.06, 0.0),
            Point2::new(0.06, 0.02),
            Point2::new(0.02, 0.02),
            Point2::new(0.02, 0.06),
            Point2::new(0.0, 0.06),
        ],
        vec![],
    );
    assert_eq!(sample_vertex_grasps(&l, &cfg).len(), 5 * 3);
}

#[test]
fn right_angle_vertex_closes_along_diagonal() {
    let cfg = Planner2DConfig { vertex_angle_offsets: vec![0.0], ..Default::default() };
    let seeds = sample_vertex_grasps(&rect(0.06, 0.06), &cfg);
    // First vertex is (-0.03, -0.03); its inward bisector points to (1, 1).
    assert_abs_diff_eq!(seeds[0].phi, PI / 4.0, epsilon = 1e-12);
}

#[test]
fn hole_seeds_place_narrow_inside_hole() {
    let poly = annulus();
    let cfg = Planner2DConfig::default();
    let seeds = sample_hole_grasps(&poly, &cfg);
    assert!(!seeds.is_empty());
    for s in &seeds {
        let narrow = s.circles(&cfg.gripper)[2];
        assert!(narrow.coords.norm() < 0.02 - cfg.gripper.finger_radius);
    }
    assert!(sample_hole_grasps(&rect(0.04, 0.1), &cfg).is_empty());

    let mut tiny = ngon(16, 0.005, 0.0);
    tiny.reverse();
    let small_hole = Polygon2D::new(ngon(64, 0.06, 0.0), vec![tiny]);
    assert!(sample_hole_grasps(&small_hole, &cfg).is_empty());
}

#[test]
fn closing_across_rectangle_width() {
    let poly = rect(0.04, 0.1);
    let obj = PreparedPolygon::new(poly).unwrap();
    let g = GripperModel2D::default();
    let seed = Seed2D::new(GraspSource::Edge, Point2::new(0.003, 0.01), Vector2::x());
    let c = close_gripper(&seed, &obj, &g, 0.75).unwrap();
    assert_eq!(c.contacts.len(), 3);
    assert_abs_diff_eq!(c.grasp.opening, 0.04, epsilon = 1e-12);
    assert_abs_diff_eq!(c.grasp.p.x, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(c.grasp.p.y, 0.01, epsilon = 1e-12);
    let jaws: Vec<Jaw> = c.contacts.contacts.iter().map(|k| k.jaw).collect();
    assert_eq!(jaws, vec![Jaw::WideA, Jaw::WideB, Jaw::Narrow]);
    assert!(grasp_quality(&c.contacts, 2).unwrap().force_closure);
}

fn slanted(gap: f64) -> Polygon2D {
    // Left edge slanted so the two wide circles (at y = +-0.015) meet it `gap` apart along x.
    let dx = gap / 0.03 * 0.1;
    Polygon2D::new(
        vec![Point2::new(-0.02 + dx / 2.0, -0.05), Point2::new(0.02, -0.05), Point2::new(0.02, 0.05), Point2::new(-0.02 - dx / 2.0, 0.05)],
        vec![],
    )
}

#[test]
fn trailing_wide_circle_counts_within_tolerance() {
    let g = GripperModel2D::default();
    let seed = Seed2D::new(GraspSource::Edge, Point2::origin(), Vector2::x());
    for (gap, expected) in [(0.005, 2), (0.003, 3)] {
        let obj = PreparedPolygon::new(slanted(gap)).unwrap();
        let c = close_gripper(&seed, &obj, &g, 0.75).unwrap();
        assert_eq!(c.contacts.len(), expected, "gap {gap}");
    }
}

#[test]
fn closing_rejections() {
    let g = GripperModel2D::default();
    let wide = PreparedPolygon::new(rect(0.12, 0.05)).unwrap();
    let seed = Seed2D::new(GraspSource::Edge, Point2::origin(), Vector2::x());
    assert_eq!(close_gripper(&seed, &wide, &g, 0.75), Err(Rejection::ExceedsOpening));

    let small = PreparedPolygon::new(rect(0.04, 0.04)).unwrap();
    let off = Seed2D::new(GraspSource::Edge, Point2::new(0.0, 0.2), Vector2::x());
    assert_eq!(close_gripper(&off, &small, &g, 0.75), Err(Rejection::MissingContact));

    let inside = Seed2D::new(GraspSource::Edge, Point2::new(0.04, 0.0), Vector2::x());
    assert_eq!(close_gripper(&inside, &small, &g, 0.75), Err(Rejection::InitialOverlap));
}

#[test]
fn zero_sigma_reproduces_nominal() {
    let poly = rect(0.04, 0.1);
    let obj = PreparedPolygon::new(poly).unwrap();
    let cfg = Planner2DConfig { sigma_perturb: 0.0, ..Default::default() };
    let seed = Seed2D::new(GraspSource::Edge, Point2::new(0.0, 0.02), Vector2::x());
    let nominal = score_closure(&close_gripper(&seed, &obj, &cfg.gripper, cfg.mu).unwrap());
    let m = evaluate_candidate(&seed, &obj, &cfg, &mut rng::stream(1, 0));
    assert_eq!(m.fc_rate, nominal.force_closure as u8 as f64);
    assert_abs_diff_eq!(m.avg_eps, nominal.epsilon, epsilon = 1e-15);
    assert_eq!(m.avg_contacts, 3.0);
}

#[test]
fn centered_rectangle_grasp_is_robust() {
    let poly = rect(0.04, 0.1);
    let obj = PreparedPolygon::new(poly).unwrap();
    let cfg = Planner2DConfig::default();
    let seed = Seed2D::new(GraspSource::Edge, Point2::origin(), Vector2::x());
    let m = evaluate_candidate(&seed, &obj, &cfg, &mut rng::stream(3, 0));
    assert_eq!(m.fc_rate, 1.0);
    assert_eq!(m.avg_contacts, 3.0);
}

#[test]
fn rectangle_plan_closes_across_short_side() {
    let plan = plan_2d(&rect(0.04, 0.1), &depth(), &Planner2DConfig::default()).unwrap();
    let a = Vector2::new(plan.grasp.phi.cos(), plan.grasp.phi.sin());
    assert!(a.x.abs() > 5f64.to_radians().cos(), "phi = {}", plan.grasp.phi);
    assert_abs_diff_eq!(plan.grasp.z, 0.01, epsilon = 1e-12);
    assert!(plan.grasp.opening > 0.0 && plan.grasp.opening <= 0.095);
    let again = plan_2d(&rect(0.04, 0.1), &depth(), &Planner2DConfig::default()).unwrap();
    assert_eq!(plan.grasp, again.grasp);
    assert_eq!(plan.metrics, again.metrics);
}

#[test]
fn annulus_plan_uses_hole_grasp() {
    let poly = annulus();
    let cfg = Planner2DConfig::default();
    let plan = plan_2d(&poly, &depth(), &cfg).unwrap();
    assert_eq!(plan.source, GraspSource::Hole);
    assert_eq!(plan.metrics.fc_rate, 1.0);
    assert_eq!(plan.metrics.avg_contacts, 3.0);
    let baseline = plan_bbox_baseline(&poly, &depth(), &cfg);
    assert!(!baseline.opening_feasible);
}

#[test]
fn emitted_candidates_satisfy_closing_invariants() {
    let cfg = Planner2DConfig::default();
    for poly in [rect(0.04, 0.1), annulus(), slanted(0.01)] {
        let plan = plan_2d(&poly, &depth(), &cfg).unwrap();
        for c in plan.candidates.iter().filter_map(CandidateRecord::evaluated) {
            assert!(c.grasp.opening > 0.0 && c.grasp.opening <= cfg.gripper.max_opening + 1e-12);
            let jaws: Vec<Jaw> = c.nominal_contacts.contacts.iter().map(|k| k.jaw).collect();
            assert!(jaws.contains(&Jaw::Narrow) && jaws.iter().any(|j| *j != Jaw::Narrow));
            assert!((2..=3).contains(&jaws.len()));
            assert_eq!((c.metrics.fc_rate * cfg.n_perturb as f64).fract(), 0.0);
            assert!((0.0..TAU).contains(&c.grasp.phi));
        }
    }
}

#[test]
fn no_feasible_grasp_is_an_error() {
    let huge = rect(0.5, 0.5);
    assert!(matches!(plan_2d(&huge, &depth(), &Planner2DConfig::default()), Err(Plan2DError::NoFeasibleGrasp(_))));
}

#[test]
fn baseline_is_perpendicular_to_long_side() {
    let cfg = Planner2DConfig::default();
    let b = plan_bbox_baseline(&rect(0.04, 0.1), &depth(), &cfg);
    assert!(b.opening_feasible);
    assert_abs_diff_eq!(b.grasp.phi.cos().abs(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b.required_opening, 0.04, epsilon = 1e-12);
    let rotated = plan_bbox_baseline(&rect(0.04, 0.1).rotated(0.3, Point2::origin()), &depth(), &cfg);
    assert_abs_diff_eq!((rotated.grasp.phi - b.grasp.phi).rem_euclid(PI), 0.3, epsilon = 1e-9);
    let low = DepthStats { h80: 0.03, ..depth() };
    assert_eq!(plan_bbox_baseline(&rect(0.04, 0.1), &low, &cfg).grasp.z, 0.0);
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = Planner2DConfig { n_perturb: 0, ..Default::default() };
    assert!(matches!(plan_2d(&rect(0.04, 0.1), &depth(), &cfg), Err(Plan2DError::InvalidConfig(_))));
    let g = GripperModel2D { wide_spacing: 0.008, ..Default::default() };
    assert!(g.validate().is_err());
}
