use isogauge::geomcore::{lift_vector, project_to_r3, NullLine};
use isogauge::grid::{FdOrder, Field, Grid};
use isogauge::isothermic::{
    affine_fit_residual, bianchi_quad, build_eta, christoffel_dual, cube, darboux, make_example, t_transform,
    unit_normals, CurvatureLinePatch, Example,
};
use nalgebra::{Complex, Vector3, Vector5};
use proptest::prelude::*;

type C = Complex<f64>;

fn unit_square(h: f64) -> Grid {
    Grid::square(0.0, 1.0, h).unwrap()
}

fn to_r3(v: &Vector5<f64>) -> Vector3<f64> {
    project_to_r3(&NullLine::with_tolerance(*v, 1e-8).unwrap()).finite().unwrap()
}

/// Cross-ratio of four concircular points of R³ computed in the plane of
/// their circle with the classical complex formula.
fn planar_cross_ratio(x: Vector3<f64>, y: Vector3<f64>, z: Vector3<f64>, w: Vector3<f64>) -> C {
    let e1 = (y - x).normalize();
    let e2 = {
        let d = z - x;
        (d - e1 * d.dot(&e1)).normalize()
    };
    let c = |p: Vector3<f64>| C::new((p - x).dot(&e1), (p - x).dot(&e2));
    let (x, y, z, w) = (c(x), c(y), c(z), c(w));
    (w - y) * (z - x) / ((w - x) * (z - y))
}

fn max_dev(a: &Field<Vector3<f64>>, b: &Field<Vector3<f64>>) -> f64 {
    a.values().iter().zip(b.values()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

fn seeds() -> [Vector5<f64>; 3] {
    [
        lift_vector(&Vector3::new(0.3, -0.8, 0.4)),
        lift_vector(&Vector3::new(-0.5, 0.2, 1.1)),
        lift_vector(&Vector3::new(2.0, 0.7, -0.3)),
    ]
}

#[test]
fn catenoid_in_conformal_coordinates_passes_its_invariants() {
    let p = make_example(&Example::Catenoid { neck: 1.0 }, unit_square(1.0 / 32.0)).unwrap();
    assert!(p.check(FdOrder::Sixth).max() <= 1e-8);
}

#[test]
fn retraction_form_is_closed_to_second_order() {
    let values: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| {
            let p = make_example(&Example::Catenoid { neck: 1.0 }, unit_square(h)).unwrap();
            build_eta(&p).unwrap().closedness().value
        })
        .collect();
    assert!(values[1] <= 1e-3, "{values:?}");
    assert!((3.4..=4.6).contains(&(values[0] / values[1])), "{values:?}");
}

#[test]
fn non_isothermic_graph_has_a_non_closed_form() {
    let g = unit_square(1.0 / 32.0);
    let graph = Field::from_fn(g, |_, _, x, y| Vector3::new(x, y, x * x + 2.0 * y * y * y));
    let p = CurvatureLinePatch::from_points(graph, FdOrder::Sixth).unwrap();
    assert!(build_eta(&p).unwrap().closedness().value >= 1e-3);
}

#[test]
fn darboux_transform_of_a_cylinder_is_isothermic() {
    let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 64.0)).unwrap();
    let eta = build_eta(&p).unwrap();
    let d = darboux(&p, &eta, 1.0, &seeds()[0]).unwrap();
    let hat = d.patch(FdOrder::Sixth).unwrap();
    let inv = hat.check(FdOrder::Sixth);
    assert!(inv.max() <= 1e-3, "{inv:?}");
    assert!(build_eta(&hat).unwrap().closedness().value <= 1e-3);
}

#[test]
fn bianchi_quadrilateral_cross_ratio_matches_planar_oracle() {
    let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 16.0)).unwrap();
    let eta = build_eta(&p).unwrap();
    let [ya, yb, _] = seeds();
    let q = bianchi_quad(&p, &eta, 1.0, 2.0, &ya, &yb).unwrap();
    assert!(q.report.candidates <= 1e-8);
    for (k, (i, j)) in p.grid().vertices().enumerate() {
        let cr = planar_cross_ratio(
            to_r3(q.fb.lines.at(i, j)),
            to_r3(q.fa.lines.at(i, j)),
            *p.points().at(i, j),
            to_r3(&q.fab.values()[k]),
        );
        assert!(cr.im.abs() < 1e-6 && (cr.re - 0.5).abs() < 1e-6, "{cr} at ({i}, {j})");
    }
}

#[test]
fn cube_cross_ratio_matches_planar_oracle() {
    let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 16.0)).unwrap();
    let eta = build_eta(&p).unwrap();
    let [ya, yb, yc] = seeds();
    let c = cube(&p, &eta, 1.0, 2.0, 3.0, &ya, &yb, &yc).unwrap();
    assert!(c.report.closure <= 1e-8 && c.report.permutations <= 1e-8);
    for k in 0..c.f.len() {
        let cr = planar_cross_ratio(to_r3(&c.fb[k]), to_r3(&c.fa[k]), to_r3(&c.fc[k]), to_r3(&c.fabc[k]));
        assert!(cr.im.abs() < 1e-6 && (cr.re - 0.25).abs() < 1e-6, "{cr} at {k}");
    }
}

#[test]
fn christoffel_dual_of_a_cylinder_is_a_parallel_surface() {
    let cyl = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 32.0)).unwrap();
    let (dual, rep) = christoffel_dual(&cyl, 1e-3).unwrap();
    assert!(rep.max_determinant < 0.0);
    let parallel = cyl.points().map(|q| q - Vector3::new(q.x, q.y, 0.0) * 2.0);
    assert!(affine_fit_residual(dual.points(), &parallel).1 <= 1e-3);
    let (twice, _) = christoffel_dual(&dual, 1e-3).unwrap();
    assert!(max_dev(twice.points(), cyl.points()) <= 1e-6);
}

#[test]
fn t_transform_keeps_the_form_closed() {
    let cyl = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 64.0)).unwrap();
    let eta = build_eta(&cyl).unwrap();
    let ts = t_transform(&cyl, &eta, 1.0).unwrap();
    assert!(ts.eta.closedness().value <= 1e-3);
    let zero = t_transform(&cyl, &eta, 0.0).unwrap();
    let dev = max_dev(zero.patch.points(), cyl.points());
    assert!(dev <= 1e-10, "{dev}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn revolution_examples_are_isothermic(radius in 0.5..3.0f64, which in 0usize..3) {
        let kind = match which {
            0 => Example::Cylinder { radius },
            1 => Example::Catenoid { neck: radius },
            _ => Example::Sphere { radius },
        };
        let p = make_example(&kind, unit_square(1.0 / 32.0)).unwrap();
        prop_assert!(p.check(FdOrder::Sixth).max() <= 1e-3);
        prop_assert!(build_eta(&p).unwrap().closedness().value <= 1e-2);
    }

    #[test]
    fn christoffel_dual_of_a_catenoid_is_its_gauss_map(neck in 0.5..2.0f64) {
        let cat = make_example(&Example::Catenoid { neck }, unit_square(1.0 / 32.0)).unwrap();
        let (dual, rep) = christoffel_dual(&cat, 1e-3).unwrap();
        prop_assert!(rep.parallel_planes <= 1e-3);
        let (_, fit) = affine_fit_residual(dual.points(), &unit_normals(&cat, FdOrder::Sixth));
        prop_assert!(fit <= 1e-3, "{}", fit);
        let (twice, _) = christoffel_dual(&dual, 1e-3).unwrap();
        prop_assert!(max_dev(twice.points(), cat.points()) <= 1e-6);
    }
}
