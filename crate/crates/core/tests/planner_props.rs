mod common;

use getgrasp::geometry2d::{DepthStats, Polygon2D};
use getgrasp::mesh3d::{annulus_mesh, box_mesh};
use getgrasp::planner2d::*;
use getgrasp::planner3d::{plan_3d, Planner3DConfig};
use nalgebra::{Point2, Point3, Rotation2, Vector3};
use proptest::prelude::*;

fn depth() -> DepthStats {
    DepthStats { z_table: 0.6, z_obj: 0.55, h80: 0.06 }
}

/// Irregular hexagon without symmetries, so epsilon ties are unlikely.
fn irregular() -> Polygon2D {
    let pts = [(0.0, 0.0), (0.055, -0.004), (0.07, 0.02), (0.05, 0.045), (0.012, 0.05), (-0.01, 0.022)];
    Polygon2D::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(), vec![])
}

fn annulus(r_out: f64, r_in: f64, n: usize) -> Polygon2D {
    let ring = |r: f64| (0..n).map(|k| {
        let a = std::f64::consts::TAU * k as f64 / n as f64;
        Point2::new(r * a.cos(), r * a.sin())
    }).collect::<Vec<_>>();
    Polygon2D::new(ring(r_out), vec![ring(r_in)])
}

fn rescoring_confirms_selection(poly: &Polygon2D, cfg: &Planner2DConfig) {
    let plan = plan_2d(poly, &depth(), cfg).unwrap();
    let best = plan.metrics;
    for rec in &plan.candidates {
        let m = score_seed(poly, &rec.seed, cfg, rec.index as u64).unwrap();
        match rec.evaluated() {
            Some(c) => {
                assert_eq!(m, c.metrics, "candidate {}", rec.index);
                assert!(m.rank_cmp(&best).is_le(), "candidate {} beats the selection", rec.index);
                if m.rank_cmp(&best).is_eq() {
                    assert!(rec.index >= plan.selected);
                }
                let k = m.fc_rate * cfg.n_perturb as f64;
                assert!((k - k.round()).abs() < 1e-12);
            }
            None => assert_eq!(m.fc_rate, 0.0),
        }
    }
}

#[test]
fn selection_is_lexicographic_argmax() {
    let cfg = Planner2DConfig::default();
    rescoring_confirms_selection(&irregular(), &cfg);
    rescoring_confirms_selection(&annulus(0.06, 0.035, 48), &cfg);
    rescoring_confirms_selection(&Polygon2D::new(vec![Point2::new(0.0, 0.0), Point2::new(0.12, 0.0), Point2::new(0.12, 0.02), Point2::new(0.0, 0.02)], vec![]), &cfg);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn selection_rotates_with_the_polygon(angle in -3.1f64..3.1) {
        let cfg = Planner2DConfig::default();
        let poly = irregular();
        let pivot = Point2::new(0.03, 0.02);
        let base = plan_2d(&poly, &depth(), &cfg).unwrap();
        let turned = plan_2d(&poly.rotated(angle, pivot), &depth(), &cfg).unwrap();
        prop_assert_eq!(base.selected, turned.selected);
        let expected = Rotation2::new(angle) * (base.grasp.p - pivot) + pivot.coords;
        prop_assert!((turned.grasp.p.coords - expected).norm() < 1e-6);
        let dphi = (turned.grasp.phi - base.grasp.phi - angle).rem_euclid(std::f64::consts::TAU);
        prop_assert!(dphi.min(std::f64::consts::TAU - dphi) < 1e-6);
        prop_assert!((turned.metrics.fc_rate - base.metrics.fc_rate).abs() < 1e-12);
        prop_assert!((turned.metrics.avg_eps - base.metrics.avg_eps).abs() < 1e-6);
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn plans_do_not_depend_on_thread_count() {
    let cfg = Planner2DConfig { seed: 17, ..Default::default() };
    let poly = annulus(0.06, 0.035, 40);
    let strip = |p: Plan2D| (p.grasp, p.metrics, p.selected, p.candidates);
    let one = in_pool(1, || strip(plan_2d(&poly, &depth(), &cfg).unwrap()));
    let many = in_pool(4, || strip(plan_2d(&poly, &depth(), &cfg).unwrap()));
    assert_eq!(one, many);

    let cfg = Planner3DConfig { n_candidates: 30, seed: 3, ..Default::default() };
    for mesh in [box_mesh(Vector3::new(0.04, 0.06, 0.08), Point3::new(0.0, 0.0, 0.04)), annulus_mesh(0.03, 0.04, 0.05, 32, Point3::origin())] {
        let one = in_pool(1, || plan_3d(&mesh, 0.0, &cfg).unwrap());
        let many = in_pool(4, || plan_3d(&mesh, 0.0, &cfg).unwrap());
        assert_eq!(one.selected, many.selected);
        assert_eq!(one.grasp, many.grasp);
        assert_eq!(one.report.candidates, many.report.candidates);
        assert_eq!(one.report.rejections, many.report.rejections);
    }
}
