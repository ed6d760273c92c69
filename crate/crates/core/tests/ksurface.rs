use isogauge::grid::{FdOrder, Field, Grid};
use isogauge::ksurface::{
    check_tchebyshev, fundamental_forms, integrate_frame, lelieuvre_residual, one_soliton, pseudosphere_init,
    pseudosphere_patch, soliton_field, solve_sine_gordon_from, sphere_patch, DegeneracyPolicy, FrameOptions,
};
use proptest::prelude::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn soliton_error(h: f64) -> f64 {
    let g = Grid::square(-2.0, 2.0, h).unwrap();
    let w = solve_sine_gordon_from(g, 1.0, |x, y| one_soliton(x, y, 1.0)).unwrap();
    max_abs_diff(w.values(), soliton_field(g, 1.0).values())
}

#[test]
fn one_soliton_satisfies_sine_gordon_by_differences() {
    // Centred mixed difference of the closed form against sin ω.
    let h = 1e-3;
    for &(x, y) in &[(0.0, 0.0), (0.7, -0.2), (-1.3, 0.4)] {
        let w = |a: f64, b: f64| one_soliton(a, b, 1.0);
        let mixed = (w(x + h, y + h) - w(x + h, y - h) - w(x - h, y + h) + w(x - h, y - h)) / (4.0 * h * h);
        assert!((mixed - w(x, y).sin()).abs() < 1e-5);
    }
}

#[test]
fn sine_gordon_solver_is_second_order() {
    let (coarse, fine) = (soliton_error(1.0 / 16.0), soliton_error(1.0 / 32.0));
    assert!(fine <= 5e-3, "error {fine}");
    let ratio = coarse / fine;
    assert!((3.4..=4.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn integrated_frame_reproduces_the_closed_form_pseudosphere() {
    let mut errors = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let g = Grid::square(-1.0, 1.0, h).unwrap();
        let opts = FrameOptions {
            init: pseudosphere_init(g, 1.0),
            ..Default::default()
        };
        let s = integrate_frame(&soliton_field(g, 1.0), 1.0, &opts).unwrap();
        let (f, n) = pseudosphere_patch(g, 1.0);
        let ef = s.f.values().iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let en = s.normal.values().iter().zip(n.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        errors.push(ef.max(en));
    }
    assert!(errors[1] < 1e-3, "{errors:?}");
    assert!(errors[0] / errors[1] > 3.0, "{errors:?}");
}

#[test]
fn pseudosphere_passes_every_k_surface_check() {
    let g = Grid::square(-2.0, 2.0, 1.0 / 32.0).unwrap();
    let opts = FrameOptions {
        init: pseudosphere_init(g, 1.0),
        ..Default::default()
    };
    let s = integrate_frame(&soliton_field(g, 1.0), 1.0, &opts).unwrap();
    let ff = fundamental_forms(&s.f, FdOrder::Sixth);
    assert!(ff.gauss_deviation(-1.0) <= 1e-3);
    assert!(ff.cayley_hamilton_residual() <= 1e-6);
    assert!(check_tchebyshev(&s.f, 1e-4, FdOrder::Sixth).pass);
    assert!(lelieuvre_residual(&s.f, &s.normal, 1.0, FdOrder::Sixth).unwrap().max() <= 1e-2);
    assert!(s.gauss_map_residual() <= 1e-8);
}

#[test]
fn flipped_lelieuvre_sign_breaks_the_surface() {
    let g = Grid::square(-2.0, 2.0, 1.0 / 32.0).unwrap();
    let mut opts = FrameOptions {
        init: pseudosphere_init(g, 1.0),
        ..Default::default()
    };
    opts.signs.eta = -opts.signs.eta;
    let s = integrate_frame(&soliton_field(g, 1.0), 1.0, &opts).unwrap();
    let ff = fundamental_forms(&s.f, FdOrder::Sixth);
    let lel = lelieuvre_residual(&s.f, &s.normal, 1.0, FdOrder::Sixth).unwrap().max();
    assert!(ff.gauss_deviation(-1.0) > 1e-3 || lel > 1e-2);
}

#[test]
fn degenerate_angle_is_an_error_or_a_mask() {
    let g = Grid::square(-0.5, 0.5, 0.25).unwrap();
    let flat = Field::from_fn(g, |_, _, _, _| 0.0);
    let strict = FrameOptions {
        policy: DegeneracyPolicy::Error,
        ..Default::default()
    };
    assert!(integrate_frame(&flat, 1.0, &strict).is_err());
    let s = integrate_frame(&flat, 1.0, &FrameOptions::default()).unwrap();
    assert!(s.degenerate.iter().all(|&d| d));
}

#[test]
fn round_sphere_fails_the_k_surface_checks() {
    let g = Grid::rectangle((0.0, 1.0), (0.6, 1.6), 1.0 / 32.0).unwrap();
    let (f, n) = sphere_patch(g, 1.0);
    assert!(fundamental_forms(&f, FdOrder::Sixth).gauss_deviation(-1.0) > 1e-3);
    assert!(!check_tchebyshev(&f, 1e-4, FdOrder::Sixth).pass);
    assert!(lelieuvre_residual(&f, &n, 1.0, FdOrder::Sixth).unwrap().max() > 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sphere_curvatures_match_the_radius(r in 0.3..5.0f64) {
        let g = Grid::rectangle((0.5, 1.5), (0.0, 1.0), 1.0 / 32.0).unwrap();
        let (f, _) = sphere_patch(g, r);
        let ff = fundamental_forms(&f, FdOrder::Sixth);
        prop_assert!(ff.estimated() > 0);
        prop_assert!(ff.gauss_deviation(1.0 / (r * r)) * r * r < 1e-6);
        for h in ff.mean.iter().flatten() {
            prop_assert!((h.abs() - 1.0 / r).abs() * r < 1e-6);
        }
        prop_assert!(ff.cayley_hamilton_residual() < 1e-6);
    }

    #[test]
    fn soliton_surfaces_have_curvature_minus_one_over_rho_squared(rho in 0.7..1.5f64) {
        let g = Grid::square(-1.0, 1.0, 1.0 / 32.0).unwrap();
        let opts = FrameOptions {
            init: pseudosphere_init(g, rho),
            ..Default::default()
        };
        let s = integrate_frame(&soliton_field(g, rho), rho, &opts).unwrap();
        let ff = fundamental_forms(&s.f, FdOrder::Sixth);
        prop_assert!(ff.gauss_deviation_regular(-1.0 / (rho * rho), 0.2) * rho * rho < 1e-2);
        prop_assert!(check_tchebyshev(&s.f, 1e-3, FdOrder::Sixth).pass);
        prop_assert!(lelieuvre_residual(&s.f, &s.normal, rho, FdOrder::Sixth).unwrap().max() < 1e-2);
    }
}
