//! The invariant suite behind `verify-all`, grouped by acceptance criterion.

use std::time::Instant;

use isogauge::discretei::{
    self, connection, flatness, is_isothermic, planar_grid, projective_spread, t_transform_discrete, triple_system,
    QuadMap, T_SAMPLES,
};
use isogauge::geomcore::lift_vector;
use isogauge::grid::{partial, Axis, FdOrder, Field, Grid, VecField};
use isogauge::isothermic::{
    self, affine_fit_residual, build_eta, christoffel_dual, cube, make_example, t_transform, unit_normals,
    CurvatureLinePatch, Example,
};
use isogauge::ksurface::{
    check_tchebyshev, fundamental_forms, integrate_frame, lelieuvre_residual, one_soliton, pseudosphere_init,
    pseudosphere_patch, soliton_field, solve_sine_gordon_from, sphere_patch, FrameOptions,
};
use isogauge::loopgauge::{
    backlund, bianchi_quad, holonomy_residual, pole_growth, split_connection, spectral_deform, sym, LoopConnection,
    SymOptions, C64,
};
use nalgebra::Vector3;
use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::error::CliResult;
use crate::report::{RefinementTable, Report};
use crate::tolerances::Tolerances;

pub const KSURFACE: &str = "ksurface";
pub const LOOPGAUGE: &str = "loopgauge";
pub const ISOTHERMIC: &str = "isothermic";
pub const DISCRETEI: &str = "discretei";
pub const CLI_IO: &str = "cli_io";

/// Criteria evaluated directly; criterion 10 is the aggregate run.
pub const CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Faults injected to check that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Reconstructs K-surfaces with the wrong sign in `f_η = -ρ N × N_η`.
    LelieuvreSignFlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub tolerances: Tolerances,
    /// Seeds the random spectral parameters of the holonomy check.
    pub seed: u64,
    pub mutation: Option<Mutation>,
    /// Record runtimes and check them against the budgets.
    pub timing: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            seed: 0,
            mutation: None,
            timing: true,
        }
    }
}

/// Module owning each criterion.
pub fn criterion_module(k: u8) -> &'static str {
    match k {
        1 | 2 => KSURFACE,
        3..=6 => LOOPGAUGE,
        7 | 8 => ISOTHERMIC,
        9 => DISCRETEI,
        _ => CLI_IO,
    }
}

/// Runtime budget of a criterion, where one is set.
fn budget(k: u8, t: &Tolerances) -> Option<f64> {
    match k {
        1 => Some(t.budget_sine_gordon_s),
        2 => Some(t.budget_ksurface_s),
        3 => Some(t.budget_loop_s),
        9 => Some(t.budget_discrete_s),
        _ => None,
    }
}

/// Runs one criterion. Construction errors become a failing entry.
pub fn run_criterion(k: u8, opts: &SuiteOptions) -> Report {
    let mut r = Report::new(serde_json::json!({ "criterion": k }));
    let start = Instant::now();
    let outcome = match k {
        1 => sine_gordon(&mut r, opts),
        2 => k_surface(&mut r, opts),
        3 => loop_flatness(&mut r, opts),
        4 => sym_and_lie(&mut r, opts),
        5 => backlund_constants(&mut r, opts),
        6 => bianchi_permutability(&mut r, opts),
        7 => smooth_isothermic(&mut r, opts),
        8 => isothermic_quad_and_cube(&mut r, opts),
        9 => discrete_suite(&mut r, opts),
        _ => Ok(()),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let module = criterion_module(k);
    if let Err(e) = outcome {
        r.notes.push(format!("criterion {k}: {e}"));
        r.at_most(module, format!("c{k}.completed"), f64::NAN, 0.0);
    }
    if opts.timing {
        r.time(&format!("criterion_{k}"), elapsed);
        if let Some(limit) = budget(k, &opts.tolerances) {
            r.at_most(module, format!("c{k}.runtime_s"), elapsed, limit);
        }
    }
    for e in &mut r.entries {
        e.criterion = Some(k);
    }
    r
}

/// Runs the listed criteria in order and aggregates them; with timing on,
/// adds the total runtime as criterion 10.
pub fn verify(criteria: &[u8], opts: &SuiteOptions) -> Report {
    let mut scenario = serde_json::json!({
        "suite": "verify-all",
        "criteria": criteria,
        "seed": opts.seed,
    });
    if let Some(m) = opts.mutation {
        scenario["mutation"] = format!("{m:?}").into();
    }
    let mut report = Report::new(scenario);
    let start = Instant::now();
    for &k in criteria {
        report.absorb(run_criterion(k, opts));
    }
    if opts.timing && !criteria.is_empty() {
        let total = start.elapsed().as_secs_f64();
        report.time("total", total);
        report.at_most(CLI_IO, "c10.runtime_s", total, opts.tolerances.budget_total_s).criterion = Some(10);
    }
    report.recompute();
    report
}

pub fn verify_all(opts: &SuiteOptions) -> Report {
    verify(&CRITERIA, opts)
}

fn max_deviation(a: &VecField, b: &VecField) -> f64 {
    a.values().iter().zip(b.values()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Ratio entry, or a floor entry when both residuals are round-off.
fn refinement(r: &mut Report, module: &str, name: &str, coarse: f64, fine: f64, t: &Tolerances) {
    if coarse < t.refinement_floor && fine < t.refinement_floor {
        r.at_most(module, format!("{name}.at_floor"), coarse.max(fine), t.refinement_floor);
    } else {
        r.within(module, format!("{name}.ratio"), coarse / fine, t.refinement_ratio);
    }
}

fn sine_gordon(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let mut errors = Vec::new();
    let steps = [1.0 / 16.0, 1.0 / 32.0];
    for h in steps {
        let g = Grid::square(-2.0, 2.0, h)?;
        let w = solve_sine_gordon_from(g, 1.0, |x, y| one_soliton(x, y, 1.0))?;
        let exact = soliton_field(g, 1.0);
        let err = w.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        errors.push(err);
    }
    r.at_most(KSURFACE, "sine_gordon.error.h32", errors[1], t.sine_gordon_error);
    r.within(KSURFACE, "sine_gordon.ratio", errors[0] / errors[1], t.refinement_ratio);
    r.tables.push(RefinementTable::new("sine_gordon.error", steps.to_vec(), errors));
    Ok(())
}

fn k_surface(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let g = Grid::square(-2.0, 2.0, 1.0 / 32.0)?;
    let mut frame = FrameOptions {
        init: pseudosphere_init(g, 1.0),
        ..Default::default()
    };
    if opts.mutation == Some(Mutation::LelieuvreSignFlip) {
        frame.signs.eta = -frame.signs.eta;
    }
    let s = integrate_frame(&soliton_field(g, 1.0), 1.0, &frame)?;
    let ff = fundamental_forms(&s.f, FdOrder::Sixth);
    r.at_most(KSURFACE, "pseudosphere.gauss_curvature", ff.gauss_deviation(-1.0), t.gauss_curvature);
    r.at_most(KSURFACE, "pseudosphere.cayley_hamilton", ff.cayley_hamilton_residual(), t.cayley_hamilton);
    let tc = check_tchebyshev(&s.f, t.tchebyshev, FdOrder::Sixth);
    r.at_most(KSURFACE, "pseudosphere.tchebyshev", tc.deviation, t.tchebyshev);
    let lel = lelieuvre_residual(&s.f, &s.normal, 1.0, FdOrder::Sixth)?;
    r.at_most(KSURFACE, "pseudosphere.lelieuvre", lel.max(), t.lelieuvre);
    r.at_most(KSURFACE, "pseudosphere.gauss_map", s.gauss_map_residual(), t.gauss_map);

    // A round sphere is not a K-surface: each of the three checks must fail.
    let gs = Grid::rectangle((0.0, 1.0), (0.6, 1.6), 1.0 / 32.0)?;
    let (sf, sn) = sphere_patch(gs, 1.0);
    let sff = fundamental_forms(&sf, FdOrder::Sixth);
    r.at_least(KSURFACE, "sphere_control.gauss_curvature", sff.gauss_deviation(-1.0), t.gauss_curvature);
    let stc = check_tchebyshev(&sf, t.tchebyshev, FdOrder::Sixth);
    r.at_least(KSURFACE, "sphere_control.tchebyshev", stc.deviation, t.tchebyshev);
    let slel = lelieuvre_residual(&sf, &sn, 1.0, FdOrder::Sixth)?;
    r.at_least(KSURFACE, "sphere_control.lelieuvre", slel.max(), t.lelieuvre);
    Ok(())
}

fn pseudosphere_family(g: Grid) -> CliResult<(LoopConnection, VecField)> {
    let (f, n) = pseudosphere_patch(g, 1.0);
    Ok((split_connection(&n)?.with_position(f.clone())?, f))
}

/// Backlund parameter whose poles `±ia` are sampled closely.
const POLE_PARAMETER: f64 = 1.5;

/// The fixed spectral parameters plus four draws with `|λ| ∈ [1/2, 2]`.
pub fn lambda_set(seed: u64) -> Vec<(String, C64)> {
    let ia = C64::new(0.0, POLE_PARAMETER);
    let mut out: Vec<(String, C64)> = vec![
        ("1".into(), C64::new(1.0, 0.0)),
        ("-1".into(), C64::new(-1.0, 0.0)),
        ("2".into(), C64::new(2.0, 0.0)),
        ("-2".into(), C64::new(-2.0, 0.0)),
        ("0.5".into(), C64::new(0.5, 0.0)),
        ("i".into(), C64::new(0.0, 1.0)),
        ("2+i".into(), C64::new(2.0, 1.0)),
        ("ia(1+1e-3)".into(), ia * 1.001),
        ("ia(1-1e-3)".into(), ia * 0.999),
    ];
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..4 {
        let modulus = (rng.gen_range(-1.0..1.0) * std::f64::consts::LN_2).exp();
        let arg = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = C64::from_polar(modulus, arg);
        out.push((format!("{:.4}{:+.4}i", z.re, z.im), z));
    }
    out
}

/// Unit normals of the sphere chart `θ = 1.2 + 0.3x`, `φ = 0.5y`: not
/// harmonic in the sense required of a K-surface Gauss map.
fn sphere_chart_normals(g: Grid) -> VecField {
    Field::from_fn(g, |_, _, x, y| {
        let (th, ph) = (1.2 + 0.3 * x, 0.5 * y);
        Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
    })
}

fn loop_flatness(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let steps = [1.0 / 16.0, 1.0 / 32.0];
    let lambdas = lambda_set(opts.seed);
    let mut defects = vec![Vec::new(); lambdas.len()];
    let mut dressed = Vec::new();
    let mut control = Vec::new();
    for h in steps {
        let g = Grid::square(-2.0, 2.0, h)?;
        let (fam, _) = pseudosphere_family(g)?;
        for (k, (_, lambda)) in lambdas.iter().enumerate() {
            defects[k].push(holonomy_residual(&fam, *lambda)?.defect);
        }
        let bt = backlund(&fam, POLE_PARAMETER, &pseudosphere_init(g, 1.0).tangent)?;
        dressed.push(holonomy_residual(&bt.family, C64::new(0.0, POLE_PARAMETER * 1.001))?.defect);
        let chart = split_connection(&sphere_chart_normals(g))?;
        control.push(holonomy_residual(&chart, C64::new(2.0, 0.0))?.defect);
    }
    for ((label, _), d) in lambdas.iter().zip(&defects) {
        r.at_most(LOOPGAUGE, format!("holonomy[{label}].h32"), d[1], t.holonomy);
        refinement(r, LOOPGAUGE, &format!("holonomy[{label}]"), d[0], d[1], t);
        r.tables.push(RefinementTable::new(format!("holonomy[{label}]"), steps.to_vec(), d.clone()));
    }
    refinement(r, LOOPGAUGE, "dressed_holonomy[ia(1+1e-3)]", dressed[0], dressed[1], t);
    r.tables.push(RefinementTable::new("dressed_holonomy[ia(1+1e-3)]", steps.to_vec(), dressed));
    r.at_least(LOOPGAUGE, "holonomy_control.h32", control[1], t.holonomy_control);
    r.at_least(LOOPGAUGE, "holonomy_control.growth", control[1] / control[0], 1.0);
    r.tables.push(RefinementTable::new("holonomy_control", steps.to_vec(), control));
    Ok(())
}

fn sym_and_lie(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let g = Grid::square(-2.0, 2.0, 1.0 / 32.0)?;
    let (fam, f) = pseudosphere_family(g)?;
    let s = sym(&fam, 1.0, &SymOptions::default())?;
    let base = *f.at(0, 0);
    let shifted = f.map(|p| p - base);
    r.at_most(LOOPGAUGE, "sym.mu1", max_deviation(&s, &shifted), t.sym);

    let mu: f64 = 2.0;
    let g = Grid::square(-2.0, 2.0, 1.0 / 64.0)?;
    let (fam, _) = pseudosphere_family(g)?;
    let (_, fm) = spectral_deform(&fam, mu, &SymOptions::default())?;
    let omega = soliton_field(g, 1.0);
    let (mut de, mut df, mut dg): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, j) in g.vertices() {
        if let (Some(fx), Some(fy)) = (
            partial(&fm, i, j, Axis::X, FdOrder::Sixth),
            partial(&fm, i, j, Axis::Y, FdOrder::Sixth),
        ) {
            de = de.max((fx.norm_squared() - mu * mu).abs());
            df = df.max((fx.dot(&fy) - omega.at(i, j).cos()).abs());
            dg = dg.max((fy.norm_squared() - 1.0 / (mu * mu)).abs());
        }
    }
    r.at_most(LOOPGAUGE, "lie[mu=2].E", de, t.lie_metric);
    r.at_most(LOOPGAUGE, "lie[mu=2].F", df, t.lie_metric);
    r.at_most(LOOPGAUGE, "lie[mu=2].G", dg, t.lie_metric);
    let k = fundamental_forms(&fm, FdOrder::Sixth).gauss_deviation_regular(-1.0, t.regular_sin);
    r.at_most(LOOPGAUGE, "lie[mu=2].gauss_curvature", k, t.gauss_curvature);
    Ok(())
}

fn backlund_constants(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let g = Grid::square(-2.0, 2.0, 1.0 / 32.0)?;
    let (fam, f) = pseudosphere_family(g)?;
    let t0 = pseudosphere_init(g, 1.0).tangent;
    for a in [0.5, 1.5] {
        let bt = backlund(&fam, a, &t0)?;
        let distance = 2.0 / (a + 1.0 / a);
        let angle = (1.0 / a - a) / (1.0 / a + a);
        let (mut dd, mut da): (f64, f64) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, j) in g.vertices() {
            let d = (bt.position.at(i, j) - f.at(i, j)).norm();
            let c = bt.normal.at(i, j).dot(&fam_normal(&fam, i, j));
            dd = dd.max((d - distance).abs());
            da = da.max((c - angle).abs());
            lo = lo.min(d);
            hi = hi.max(d);
        }
        r.at_most(LOOPGAUGE, format!("backlund[a={a}].distance"), dd, t.backlund_constant);
        r.at_most(LOOPGAUGE, format!("backlund[a={a}].distance_spread"), hi - lo, t.backlund_constant);
        r.at_most(LOOPGAUGE, format!("backlund[a={a}].normal_angle"), da, t.backlund_constant);
        let k = fundamental_forms(&bt.position, FdOrder::Sixth).gauss_deviation_regular(-1.0, t.regular_sin);
        r.at_most(LOOPGAUGE, format!("backlund[a={a}].gauss_curvature"), k, t.backlund_curvature);
    }
    Ok(())
}

fn fam_normal(fam: &LoopConnection, i: usize, j: usize) -> Vector3<f64> {
    use isogauge::loopgauge::LoopFamily;
    fam.normal(i, j)
}

fn bianchi_permutability(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let h = 1.0 / 16.0;
    let g = Grid::new(64, 64, h, h)?.with_origin(-2.0, -2.0);
    let (fam, _) = pseudosphere_family(g)?;
    let init = pseudosphere_init(g, 1.0);
    let ta = init.tangent;
    let tb = ta * 0.7_f64.cos() + init.normal.cross(&ta) * 0.7_f64.sin();
    let quad = bianchi_quad(&fam, 1.5, 0.8, &ta, &tb)?;
    for (lambda, defect) in &quad.report.closure {
        r.at_most(LOOPGAUGE, format!("bianchi.closure[{lambda}]"), *defect, t.bianchi_closure);
    }
    r.at_most(LOOPGAUGE, "bianchi.permutability", quad.report.permutability, t.permutability);
    r.at_most(LOOPGAUGE, "bianchi.twisting", quad.report.twisting, t.twisting);
    let (worst, at_one) = pole_growth(&quad, 32, 32, 1e-2, 64);
    r.at_most(LOOPGAUGE, "bianchi.pole_growth", worst / at_one, 10.0);
    Ok(())
}

fn unit_square(h: f64) -> CliResult<Grid> {
    Ok(Grid::square(0.0, 1.0, h)?)
}

fn smooth_isothermic(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let steps = [1.0 / 32.0, 1.0 / 64.0];
    for (name, kind) in [
        ("cylinder", Example::Cylinder { radius: 1.0 }),
        ("catenoid", Example::Catenoid { neck: 1.0 }),
    ] {
        let mut values = Vec::new();
        for h in steps {
            let p = make_example(&kind, unit_square(h)?)?;
            values.push(build_eta(&p)?.closedness().value);
        }
        r.at_most(ISOTHERMIC, format!("closedness[{name}].h64"), values[1], t.closedness);
        refinement(r, ISOTHERMIC, &format!("closedness[{name}]"), values[0], values[1], t);
        r.tables.push(RefinementTable::new(format!("closedness[{name}]"), steps.to_vec(), values));
    }
    // Graph of a non-umbilic, non-isothermic height function.
    let g = unit_square(1.0 / 32.0)?;
    let graph = Field::from_fn(g, |_, _, x, y| Vector3::new(x, y, x * x + 2.0 * y * y * y));
    let control = CurvatureLinePatch::from_points(graph, FdOrder::Sixth)?;
    r.at_least(ISOTHERMIC, "closedness_control", build_eta(&control)?.closedness().value, t.closedness);

    let cat = make_example(&Example::Catenoid { neck: 1.0 }, g)?;
    let (dual, rep) = christoffel_dual(&cat, t.christoffel)?;
    let (_, fit) = affine_fit_residual(dual.points(), &unit_normals(&cat, FdOrder::Sixth));
    r.at_most(ISOTHERMIC, "christoffel[catenoid].gauss_map", fit, t.christoffel);
    r.at_most(ISOTHERMIC, "christoffel[catenoid].conformal", rep.conformal, t.patch_invariants);
    r.at_most(ISOTHERMIC, "christoffel[catenoid].parallel_planes", rep.parallel_planes, t.patch_invariants);
    r.at_most(ISOTHERMIC, "christoffel[catenoid].determinant", rep.max_determinant, 0.0);
    let (twice, _) = christoffel_dual(&dual, t.christoffel)?;
    r.at_most(ISOTHERMIC, "christoffel[catenoid].involution", max_deviation(twice.points(), cat.points()), t.involution);

    let cyl = make_example(&Example::Cylinder { radius: 1.0 }, g)?;
    let (dual, _) = christoffel_dual(&cyl, t.christoffel)?;
    // Inward normal -(x, y, 0) and H = 1/2.
    let parallel = cyl.points().map(|q| q - Vector3::new(q.x, q.y, 0.0) * 2.0);
    let (_, fit) = affine_fit_residual(dual.points(), &parallel);
    r.at_most(ISOTHERMIC, "christoffel[cylinder].parallel_surface", fit, t.christoffel);
    let (twice, _) = christoffel_dual(&dual, t.christoffel)?;
    r.at_most(ISOTHERMIC, "christoffel[cylinder].involution", max_deviation(twice.points(), cyl.points()), t.involution);

    let g = unit_square(1.0 / 64.0)?;
    let cyl = make_example(&Example::Cylinder { radius: 1.0 }, g)?;
    let eta = build_eta(&cyl)?;
    let d = isothermic::darboux(&cyl, &eta, 1.0, &lift_vector(&Vector3::new(0.3, -0.8, 0.4)))?;
    let dp = d.patch(FdOrder::Sixth)?;
    r.at_most(ISOTHERMIC, "darboux[cylinder].patch", dp.check(FdOrder::Sixth).max(), t.patch_invariants);
    r.at_most(ISOTHERMIC, "darboux[cylinder].closedness", build_eta(&dp)?.closedness().value, t.closedness);
    let ts = t_transform(&cyl, &eta, 1.0)?;
    r.at_most(ISOTHERMIC, "t_transform[cylinder,s=1].closedness", ts.eta.closedness().value, t.closedness);
    Ok(())
}

fn isothermic_quad_and_cube(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 32.0)?)?;
    let eta = build_eta(&p)?;
    let ya = lift_vector(&Vector3::new(0.3, -0.8, 0.4));
    let yb = lift_vector(&Vector3::new(-0.5, 0.2, 1.1));
    let yc = lift_vector(&Vector3::new(2.0, 0.7, -0.3));
    let q = isothermic::bianchi_quad(&p, &eta, 1.0, 2.0, &ya, &yb)?;
    r.at_most(ISOTHERMIC, "quad.candidates", q.report.candidates, t.algebraic);
    r.at_most(ISOTHERMIC, "quad.cross_ratio", q.report.cross_ratio, t.algebraic);
    r.at_most(ISOTHERMIC, "quad.concircularity", q.report.concircularity, t.algebraic);
    r.at_most(ISOTHERMIC, "quad.pencil_identity", q.report.pencil_identity, t.algebraic);
    let c = cube(&p, &eta, 1.0, 2.0, 3.0, &ya, &yb, &yc)?;
    r.at_most(ISOTHERMIC, "cube.closure", c.report.closure, t.algebraic);
    r.at_most(ISOTHERMIC, "cube.cross_ratio", c.report.cross_ratio, t.algebraic);
    r.at_most(ISOTHERMIC, "cube.top_quads", c.report.top_quads, t.algebraic);
    r.at_most(ISOTHERMIC, "cube.permutations", c.report.permutations, t.algebraic);
    Ok(())
}

/// Vertex `(4, 4)` of the planar net lifted off its face circles.
fn perturbed(f: &QuadMap, p: f64, q: f64, lift: f64) -> CliResult<QuadMap> {
    let mut lines = f.lines().to_vec();
    let [nx, ny] = f.dims();
    let (m, k) = (4, 4);
    let x = (m as f64 - (nx as f64 - 1.0) / 2.0) * p;
    let y = (k as f64 - (ny as f64 - 1.0) / 2.0) * q;
    lines[f.index(m, k)] = lift_vector(&Vector3::new(x, y, lift));
    Ok(QuadMap::new(f.dims(), lines)?)
}

/// The discrete acceptance net: 30×30 centred planar grid.
pub const DISCRETE_NET: ([usize; 2], f64, f64) = ([30, 30], 0.05, 0.04);

fn discrete_suite(r: &mut Report, opts: &SuiteOptions) -> CliResult<()> {
    let t = &opts.tolerances;
    let (n, p, q) = DISCRETE_NET;
    let (f, a) = planar_grid(n, p, q)?;
    let iso = is_isothermic(&f, &a, t.discrete)?;
    r.at_most(DISCRETEI, "net.cross_ratio", iso.worst_cross_ratio, t.discrete);
    r.at_most(DISCRETEI, "net.concircularity", iso.worst_concircularity, t.discrete);
    let bent = perturbed(&f, p, q, 1e-2)?;
    let bent_iso = is_isothermic(&bent, &a, t.discrete)?;
    r.at_least(DISCRETEI, "perturbed.cross_ratio", bent_iso.worst_cross_ratio, t.discrete_control);
    for s in T_SAMPLES {
        let c = connection(&f, &a, s)?;
        r.at_most(DISCRETEI, format!("flatness[t={s}]"), flatness(&c).defect, t.discrete);
        let cb = connection(&bent, &a, s)?;
        r.at_least(DISCRETEI, format!("perturbed.flatness[t={s}]"), flatness(&cb).defect, t.discrete_control);
    }
    let cb = connection(&bent, &a, 1.0)?;
    r.at_least(DISCRETEI, "perturbed.flatness[t=1]", flatness(&cb).defect, t.discrete_control);

    let c = connection(&f, &a, 0.37)?;
    let gauge = discretei::trivialize(&c, t.discrete)?;
    r.at_most(DISCRETEI, "trivialize[t=0.37].reconstruction", gauge.reconstruction, t.discrete);
    r.at_most(DISCRETEI, "trivialize[t=0.37].path", gauge.path_defect, t.discrete);

    let y0 = lift_vector(&Vector3::new(-0.6, -0.6, 0.2));
    let y1 = lift_vector(&Vector3::new(-0.5, -0.5, 0.05));
    let d = discretei::darboux(&f, &a, 10.0, &y0)?;
    r.at_most(DISCRETEI, "darboux[10].vertical_cross_ratio", d.vertical_cross_ratio, t.discrete);
    let hat_iso = is_isothermic(&d.map, &a, t.discrete)?;
    r.at_most(DISCRETEI, "darboux[10].isothermic", hat_iso.worst_cross_ratio, t.discrete);
    r.at_most(DISCRETEI, "darboux[10].gauge_identity", d.gauge_identity, t.discrete);

    let triple = triple_system(&f, &a, &[10.0, 20.0], &[y0, y1])?;
    let tr = triple.check(t.discrete_composite)?;
    for (axis, v) in ["x", "y", "z"].iter().zip(tr.level_sets) {
        r.at_most(DISCRETEI, format!("triple.level_sets[{axis}]"), v, t.discrete_composite);
    }
    r.at_most(DISCRETEI, "triple.cell_cross_ratio", tr.cell_cross_ratio, t.discrete_composite);
    r.at_most(DISCRETEI, "triple.cell_concircularity", tr.cell_concircularity, t.discrete_composite);

    let (s, rr) = (0.37, 0.5);
    let fs = t_transform_discrete(&f, &a, s)?;
    r.at_most(DISCRETEI, "t_transform[s=0.37].family", fs.family_residual, t.discrete_composite);
    let fs_iso = is_isothermic(&fs.map, &fs.weights, t.discrete_composite)?;
    r.at_most(DISCRETEI, "t_transform[s=0.37].isothermic", fs_iso.worst_cross_ratio, t.discrete_composite);
    let composed = t_transform_discrete(&fs.map, &fs.weights, rr)?;
    let direct = t_transform_discrete(&f, &a, s + rr)?;
    r.at_most(
        DISCRETEI,
        "t_transform.group",
        projective_spread(&composed.map, &direct.map),
        t.discrete_composite,
    );
    Ok(())
}
