use isogauge::discretei::{
    connection, cylinder_lattice, darboux, flatness, is_isothermic, planar_grid, projective_spread, t_transform_discrete,
    trivialize, Dir, EdgeWeights, QuadMap, T_SAMPLES,
};
use isogauge::geomcore::{lift_vector, project_to_r3, NullLine};
use isogauge::grid::Grid;
use isogauge::isothermic::{bianchi_quad, build_eta, make_example, Example};
use nalgebra::{Complex, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

type C = Complex<f64>;

fn complex_cross_ratio(x: C, y: C, z: C, w: C) -> C {
    (w - y) * (z - x) / ((w - x) * (z - y))
}

fn planar_points(f: &QuadMap) -> Vec<C> {
    f.points().into_iter().map(|p| p.map(|p| C::new(p.x, p.y)).unwrap()).collect()
}

/// Inversion in the sphere of radius `r` about `c`, computed in R³.
fn invert(p: Vector3<f64>, c: Vector3<f64>, r: f64) -> Vector3<f64> {
    let d = p - c;
    c + d * (r * r / d.norm_squared())
}

#[test]
fn face_of_a_smooth_bianchi_quadrilateral_is_isothermic() {
    let p = make_example(&Example::Cylinder { radius: 1.0 }, Grid::square(0.0, 1.0, 1.0 / 8.0).unwrap()).unwrap();
    let eta = build_eta(&p).unwrap();
    let ya = lift_vector(&Vector3::new(0.3, -0.8, 0.4));
    let yb = lift_vector(&Vector3::new(-0.5, 0.2, 1.1));
    let q = bianchi_quad(&p, &eta, 1.0, 2.0, &ya, &yb).unwrap();
    let (i, j) = (3, 5);
    let k = p.grid().index(i, j);
    let lines = vec![p.lift(i, j), *q.fa.lines.at(i, j), *q.fb.lines.at(i, j), q.fab.values()[k]];
    let face = QuadMap::new([2, 2], lines).unwrap();
    let good = EdgeWeights::new(vec![1.0], vec![2.0]).unwrap();
    assert!(is_isothermic(&face, &good, 1e-9).unwrap().pass());
    let bad = EdgeWeights::new(vec![2.0], vec![1.0]).unwrap();
    assert!(!is_isothermic(&face, &bad, 1e-9).unwrap().pass());
}

#[test]
fn rectangle_face_cross_ratio_matches_complex_oracle() {
    let (p, q) = (0.05, 0.04);
    let (f, a) = planar_grid([2, 2], p, q).unwrap();
    let z = planar_points(&f);
    // i, j, l, k in row-major order.
    let oracle = complex_cross_ratio(z[2], z[1], z[0], z[3]);
    assert!(oracle.im.abs() < 1e-14);
    let expected = a.along_x[0] / a.along_y[0];
    assert!((oracle.re - expected).abs() < 1e-12 * expected.abs());
    let report = is_isothermic(&f, &a, 1e-9).unwrap();
    assert!(report.pass());
    let wrong = EdgeWeights::constant([2, 2], 1.0 / (p * p), 1.0 / (q * q)).unwrap();
    assert!(!is_isothermic(&f, &wrong, 1e-9).unwrap().pass());
}

#[test]
fn cylinder_lattice_is_isothermic_and_flat() {
    let (f, a) = cylinder_lattice([12, 8], 0.3, 0.2).unwrap();
    assert!(is_isothermic(&f, &a, 1e-9).unwrap().pass());
    for t in T_SAMPLES {
        assert!(flatness(&connection(&f, &a, t).unwrap()).defect <= 1e-9);
    }
}

#[test]
fn lifted_vertex_breaks_flatness_at_some_sample() {
    let (f, a) = planar_grid([8, 8], 0.3, 0.25).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let mut lines = f.lines().to_vec();
    let k = f.index(rng.gen_range(1..7), rng.gen_range(1..7));
    let mut p = project_to_r3(&NullLine::with_tolerance(lines[k], 1e-10).unwrap()).finite().unwrap();
    p.z += 1e-2;
    lines[k] = lift_vector(&p);
    let bent = QuadMap::new(f.dims(), lines).unwrap();
    assert!(!is_isothermic(&bent, &a, 1e-9).unwrap().pass());
    let worst = T_SAMPLES
        .iter()
        .map(|&t| flatness(&connection(&bent, &a, t).unwrap()).defect)
        .fold(0.0, f64::max);
    assert!(worst >= 1e-5, "{worst}");
}

#[test]
fn planar_darboux_transform_matches_complex_oracle() {
    let (f, a) = planar_grid([6, 6], 0.2, 0.2).unwrap();
    let a_hat = 10.0;
    let d = darboux(&f, &a, a_hat, &lift_vector(&Vector3::new(-0.6, -0.55, 0.0))).unwrap();
    let hat: Vec<Vector3<f64>> = d.map.points().into_iter().map(|p| p.unwrap()).collect();
    assert!(hat.iter().all(|p| p.z.abs() < 1e-9), "a planar seed stays in the plane");
    let zf = planar_points(&f);
    let zh: Vec<C> = hat.iter().map(|p| C::new(p.x, p.y)).collect();
    for k in 0..6 {
        for m in 0..5 {
            let (i, j) = (f.index(m, k), f.index(m + 1, k));
            let cr = complex_cross_ratio(zh[i], zf[j], zf[i], zh[j]);
            let expected = a.along_x[m] / a_hat;
            assert!((cr.re - expected).abs() <= 1e-9 * expected.abs() && cr.im.abs() <= 1e-9 * expected.abs());
        }
    }
    assert!(is_isothermic(&d.map, &a, 1e-9).unwrap().pass());
}

#[test]
fn t_transforms_compose_additively() {
    let (f, a) = planar_grid([10, 10], 0.1, 0.08).unwrap();
    let fs = t_transform_discrete(&f, &a, 0.37).unwrap();
    assert!(is_isothermic(&fs.map, &fs.weights, 1e-8).unwrap().pass());
    let composed = t_transform_discrete(&fs.map, &fs.weights, 0.5).unwrap();
    let direct = t_transform_discrete(&f, &a, 0.87).unwrap();
    assert!(projective_spread(&composed.map, &direct.map) <= 1e-8);
}

/// Edge maps grow like `1/|1 - t/a|` near a pole `t = a`, and round-off
/// with them.
fn avoids_poles(t: f64, a: &EdgeWeights) -> bool {
    a.along_x.iter().chain(&a.along_y).all(|w| (t - w).abs() > 0.2 * w.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isothermic_nets_give_flat_connections(
        nx in 2usize..8, ny in 2usize..8, p in 0.05..0.5f64, q in 0.05..0.5f64, t in -30.0..30.0f64,
    ) {
        let (f, a) = planar_grid([nx, ny], p, q).unwrap();
        prop_assume!(avoids_poles(t, &a));
        let c = connection(&f, &a, t).unwrap();
        // A face holonomy is a product of four edge maps.
        let edge = (0..ny)
            .flat_map(|k| (0..nx - 1).map(move |m| (m, k, Dir::X)))
            .chain((0..nx).flat_map(|m| (0..ny - 1).map(move |k| (m, k, Dir::Y))))
            .map(|(m, k, d)| c.forward(m, k, d).norm())
            .fold(1.0, f64::max);
        let bound = (16.0 * f64::EPSILON * edge.powi(4)).max(1e-9);
        let defect = flatness(&c).defect;
        prop_assert!(defect <= bound, "{} with edge norm {}", defect, edge);
        let gauge = trivialize(&c, bound).unwrap();
        // Rebuilding an edge map multiplies two gauges accumulated over up to
        // nx + ny steps, so its round-off scales with their squared norm.
        let growth = gauge.gauges.iter().map(|t| t.norm_squared()).fold(1.0, f64::max);
        let round_off = (nx + ny) as f64 * 16.0 * f64::EPSILON * growth;
        prop_assert!(gauge.reconstruction <= round_off.max(1e-9), "{} with growth {}", gauge.reconstruction, growth);
    }

    #[test]
    fn sphere_inversion_preserves_discrete_isothermicity(
        cx in -1.0..1.0f64, cy in -1.0..1.0f64, cz in 0.3..1.5f64, r in 0.5..2.0f64,
        p in 0.1..0.3f64, q in 0.1..0.3f64,
    ) {
        let n = [6, 5];
        let (f, a) = planar_grid(n, p, q).unwrap();
        let centre = Vector3::new(cx, cy, cz);
        let pts: Vec<Vector3<f64>> = f.points().into_iter().map(|v| invert(v.unwrap(), centre, r)).collect();
        let inverted = QuadMap::from_points(n, |m, k| pts[m + n[0] * k]).unwrap();
        let report = is_isothermic(&inverted, &a, 1e-8).unwrap();
        prop_assert!(report.pass(), "worst {}", report.worst_cross_ratio);
    }
}
