//! Scenario files: one named operation, its parameters, a grid and output
//! choices. Every key is validated before anything runs.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use isogauge::discretei::{self, cylinder_lattice, planar_grid, EdgeWeights, QuadMap};
use isogauge::geomcore::lift_vector;
use isogauge::grid::{partial, Axis, FdOrder, Grid, VecField};
use isogauge::isothermic::{self, build_eta, christoffel_dual, make_example, CurvatureLinePatch, Example};
use isogauge::ksurface::{
    check_tchebyshev, fundamental_forms, integrate_frame, lelieuvre_residual, one_soliton, pseudosphere_init,
    pseudosphere_patch, soliton_field, solve_sine_gordon_from, DegeneracyPolicy, FrameOptions,
};
use isogauge::loopgauge::{self, backlund, holonomy_residual, spectral_deform, split_connection, SymOptions, C64};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::io::{
    complex_field_file, obj_from_field, obj_from_quad_map, quad_map_file, scalar_field_file, vec_field_file,
    write_json, write_text, ObjMesh,
};
use crate::report::Report;
use crate::tolerances::Tolerances;

const TOP_LEVEL_KEYS: [&str; 7] = ["name", "module", "operation", "parameters", "grid", "outputs", "tolerances"];

const NET: [&str; 7] = ["net", "nx", "ny", "p", "q", "delta", "h"];
const SMOOTH: [&str; 2] = ["surface", "size"];

/// An operation a scenario can name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operation {
    pub module: &'static str,
    pub name: &'static str,
    pub needs_grid: bool,
    pub parameters: &'static [&'static [&'static str]],
}

pub const OPERATIONS: [Operation; 11] = [
    op("ksurface", "sine-gordon", true, &[&["rho"]]),
    op("ksurface", "pseudosphere", true, &[&["rho", "degeneracy"]]),
    op("loopgauge", "holonomy", true, &[&["lambda_re", "lambda_im"]]),
    op("loopgauge", "pseudosphere-backlund", true, &[&["a", "seed_angle"]]),
    op("loopgauge", "lie-transform", true, &[&["mu"]]),
    op("isothermic", "darboux", true, &[&SMOOTH, &["a", "y0_x", "y0_y", "y0_z"]]),
    op("isothermic", "christoffel", true, &[&SMOOTH]),
    op(
        "isothermic",
        "bianchi-cube",
        true,
        &[&SMOOTH, &["a", "b", "c", "ya_x", "ya_y", "ya_z", "yb_x", "yb_y", "yb_z", "yc_x", "yc_y", "yc_z"]],
    ),
    op("discretei", "discrete-isothermic", false, &[&NET]),
    op("discretei", "discrete-darboux", false, &[&NET, &["a_hat", "y0_x", "y0_y", "y0_z"]]),
    op("discretei", "discrete-t-transform", false, &[&NET, &["s", "r"]]),
];

const fn op(
    module: &'static str,
    name: &'static str,
    needs_grid: bool,
    parameters: &'static [&'static [&'static str]],
) -> Operation {
    Operation {
        module,
        name,
        needs_grid,
        parameters,
    }
}

impl Operation {
    fn accepts(&self, key: &str) -> bool {
        self.parameters.iter().any(|group| group.contains(&key))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extents: [usize; 2],
    pub steps: [f64; 2],
    pub origin: [f64; 2],
}

impl GridSpec {
    /// Refines by `scale`: steps shrink by `scale`, the covered rectangle is
    /// kept.
    pub fn scaled(&self, scale: f64) -> CliResult<Grid> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(scenario_err("grid-scale", "must be positive"));
        }
        let n = |e: usize| ((e as f64 - 1.0) * scale).round() as usize + 1;
        Ok(Grid::new(n(self.extents[0]), n(self.extents[1]), self.steps[0] / scale, self.steps[1] / scale)?
            .with_origin(self.origin[0], self.origin[1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub obj: bool,
    pub json: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { obj: true, json: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub module: String,
    pub operation: String,
    pub parameters: Map<String, Value>,
    pub grid: Option<GridSpec>,
    pub outputs: Outputs,
    pub tolerances: Map<String, Value>,
    /// The file as read, echoed into the report.
    pub source: Value,
}

fn scenario_err(key: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Scenario {
        key: key.into(),
        reason: reason.into(),
    }
}

fn typed<T: serde::de::DeserializeOwned>(key: &str, v: &Value) -> CliResult<T> {
    serde_json::from_value(v.clone()).map_err(|e| scenario_err(key, e.to_string()))
}

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let source: Value = serde_json::from_str(text)?;
        Self::from_value(source)
    }

    pub fn from_value(source: Value) -> CliResult<Self> {
        let obj = source.as_object().ok_or_else(|| scenario_err("(root)", "expected an object"))?;
        if let Some(k) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
            return Err(scenario_err(k.clone(), "unknown key"));
        }
        let string = |key: &str| -> CliResult<String> {
            obj.get(key)
                .ok_or_else(|| scenario_err(key, "missing"))?
                .as_str()
                .map(str::to_owned)
                .ok_or_else(|| scenario_err(key, "expected a string"))
        };
        let map = |key: &str| -> CliResult<Map<String, Value>> {
            match obj.get(key) {
                None => Ok(Map::new()),
                Some(Value::Object(m)) => Ok(m.clone()),
                Some(_) => Err(scenario_err(key, "expected an object")),
            }
        };
        let name = string("name")?;
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(scenario_err("name", "must be a plain file name"));
        }
        let module = string("module")?;
        let operation = string("operation")?;
        let Some(spec) = OPERATIONS.iter().find(|o| o.name == operation) else {
            return Err(CliError::UnknownOperation(operation));
        };
        if spec.module != module {
            return Err(scenario_err("module", format!("operation `{operation}` belongs to `{}`", spec.module)));
        }
        let grid = obj.get("grid").map(|g| typed::<GridSpec>("grid", g)).transpose()?;
        match (spec.needs_grid, grid.is_some()) {
            (true, false) => return Err(scenario_err("grid", format!("missing; `{operation}` samples a grid"))),
            (false, true) => return Err(scenario_err("grid", format!("not used by `{operation}`"))),
            _ => {}
        }
        let outputs = obj.get("outputs").map(|o| typed::<Outputs>("outputs", o)).transpose()?.unwrap_or_default();
        let tolerances = map("tolerances")?;
        Tolerances::default().with_overrides(&tolerances)?;
        let parameters = map("parameters")?;
        if let Some((k, _)) = parameters.iter().find(|(_, v)| !(v.is_number() || v.is_string())) {
            return Err(scenario_err(format!("parameters.{k}"), "expected a number or a string"));
        }
        if let Some(k) = parameters.keys().find(|k| !spec.accepts(k)) {
            return Err(scenario_err(format!("parameters.{k}"), format!("not a parameter of `{operation}`")));
        }
        Ok(Self {
            name,
            module,
            operation,
            parameters,
            grid,
            outputs,
            tolerances,
            source,
        })
    }
}

/// Reads parameters by name and rejects any left unread.
struct Params<'a> {
    map: &'a Map<String, Value>,
    read: BTreeSet<&'a str>,
}

impl<'a> Params<'a> {
    fn new(map: &'a Map<String, Value>) -> Self {
        Self {
            map,
            read: BTreeSet::new(),
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.read.insert(key);
        self.map.get(key)
    }

    fn number_or(&mut self, key: &'static str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| scenario_err(format!("parameters.{key}"), "expected a finite number")),
        }
    }

    fn count_or(&mut self, key: &'static str, default: usize) -> CliResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| scenario_err(format!("parameters.{key}"), "expected a non-negative integer")),
        }
    }

    fn text_or(&mut self, key: &'static str, default: &'a str) -> CliResult<&'a str> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_str()
                .ok_or_else(|| scenario_err(format!("parameters.{key}"), "expected a string")),
        }
    }

    fn point_or(&mut self, prefix: [&'static str; 3], default: [f64; 3]) -> CliResult<Vector3<f64>> {
        Ok(Vector3::new(
            self.number_or(prefix[0], default[0])?,
            self.number_or(prefix[1], default[1])?,
            self.number_or(prefix[2], default[2])?,
        ))
    }

    fn finish(self, operation: &str) -> CliResult<()> {
        match self.map.keys().find(|k| !self.read.contains(k.as_str())) {
            Some(k) => Err(scenario_err(format!("parameters.{k}"), format!("not a parameter of `{operation}`"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub tol_scale: f64,
    pub grid_scale: f64,
    /// Directory receiving `<scenario name>/…`.
    pub out_dir: PathBuf,
    /// Adds runtimes to the report (which then differs between runs).
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            grid_scale: 1.0,
            out_dir: PathBuf::from("out"),
            timing: false,
        }
    }
}

/// Where artifacts go and what has been written.
struct Sink<'a> {
    dir: PathBuf,
    outputs: Outputs,
    report: &'a mut Report,
}

impl Sink<'_> {
    fn obj(&mut self, stem: &str, mesh: CliResult<ObjMesh>) -> CliResult<()> {
        if !self.outputs.obj {
            return Ok(());
        }
        let mesh = mesh?;
        write_text(&self.dir.join(format!("{stem}.obj")), &mesh.text)?;
        self.report.notes.push(format!(
            "{stem}.obj: {} vertices, {} faces, {} masked faces omitted",
            mesh.vertices, mesh.faces, mesh.masked_faces
        ));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> CliResult<()> {
        if self.outputs.json {
            write_json(&self.dir.join(format!("{stem}.json")), value)?;
        }
        Ok(())
    }

    fn surface(&mut self, stem: &str, f: &VecField) -> CliResult<()> {
        self.obj(stem, obj_from_field(f))?;
        self.json(stem, &vec_field_file(f))
    }

    fn net(&mut self, stem: &str, f: &QuadMap) -> CliResult<()> {
        self.obj(stem, obj_from_quad_map(f))?;
        self.json(stem, &quad_map_file(f))
    }
}

/// Executes a scenario, writes its artifacts and `report.json` under
/// `out_dir/<name>`, and returns the report.
pub fn run(s: &Scenario, opts: &RunOptions) -> CliResult<Report> {
    let tol = Tolerances::default().scaled(opts.tol_scale).with_overrides(&s.tolerances)?;
    let grid = s.grid.map(|g| g.scaled(opts.grid_scale)).transpose()?;
    let mut report = Report::new(s.source.clone());
    let dir = opts.out_dir.join(&s.name);
    let start = Instant::now();
    {
        let mut sink = Sink {
            dir: dir.clone(),
            outputs: s.outputs,
            report: &mut report,
        };
        let mut p = Params::new(&s.parameters);
        let op = s.operation.as_str();
        match op {
            "sine-gordon" => sine_gordon(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "pseudosphere" => pseudosphere(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "holonomy" => holonomy(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "pseudosphere-backlund" => pseudosphere_backlund(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "lie-transform" => lie_transform(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "darboux" => smooth_darboux(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "christoffel" => christoffel(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "bianchi-cube" => bianchi_cube(&mut p, grid.expect("validated"), &tol, &mut sink)?,
            "discrete-isothermic" => discrete_isothermic(&mut p, &tol, &mut sink)?,
            "discrete-darboux" => discrete_darboux(&mut p, &tol, &mut sink)?,
            "discrete-t-transform" => discrete_t_transform(&mut p, &tol, &mut sink)?,
            other => return Err(CliError::UnknownOperation(other.into())),
        }
        p.finish(op)?;
    }
    if opts.timing {
        report.time(&s.operation, start.elapsed().as_secs_f64());
    }
    report.recompute();
    write_text(&dir.join("report.json"), &report.to_json())?;
    Ok(report)
}

/// Reads, validates and runs a scenario file.
pub fn run_file(path: &Path, opts: &RunOptions) -> CliResult<Report> {
    let text = crate::io::read_text(path)?;
    run(&Scenario::from_json(&text)?, opts)
}

const KS: &str = "ksurface";
const LG: &str = "loopgauge";
const ISO: &str = "isothermic";
const DI: &str = "discretei";

fn sine_gordon(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let rho = p.number_or("rho", 1.0)?;
    let w = solve_sine_gordon_from(g, rho, |x, y| one_soliton(x, y, rho))?;
    let exact = soliton_field(g, rho);
    let err = w.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.report.at_most(KS, "sine_gordon.error", err, tol.sine_gordon_error);
    out.json("omega", &scalar_field_file(&w))
}

fn pseudosphere(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let rho = p.number_or("rho", 1.0)?;
    let policy = match p.text_or("degeneracy", "mask")? {
        "mask" => DegeneracyPolicy::Mask,
        "error" => DegeneracyPolicy::Error,
        _ => return Err(scenario_err("parameters.degeneracy", "expected `mask` or `error`")),
    };
    let opts = FrameOptions {
        init: pseudosphere_init(g, rho),
        policy,
        ..Default::default()
    };
    let s = integrate_frame(&soliton_field(g, rho), rho, &opts)?;
    let ff = fundamental_forms(&s.f, FdOrder::Sixth);
    let r = &mut *out.report;
    r.at_most(KS, "gauss_curvature", ff.gauss_deviation(-1.0 / (rho * rho)), tol.gauss_curvature);
    r.at_most(KS, "cayley_hamilton", ff.cayley_hamilton_residual(), tol.cayley_hamilton);
    r.at_most(KS, "tchebyshev", check_tchebyshev(&s.f, tol.tchebyshev, FdOrder::Sixth).deviation, tol.tchebyshev);
    r.at_most(KS, "lelieuvre", lelieuvre_residual(&s.f, &s.normal, rho, FdOrder::Sixth)?.max(), tol.lelieuvre);
    r.at_most(KS, "gauss_map", s.gauss_map_residual(), tol.gauss_map);
    let masked = s.degenerate.iter().filter(|&&d| d).count();
    r.notes.push(format!("{masked} vertices with |sin ω| below the degeneracy threshold"));
    out.surface("surface", &s.f)?;
    out.json("normal", &vec_field_file(&s.normal))
}

fn holonomy(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let lambda = C64::new(p.number_or("lambda_re", 2.0)?, p.number_or("lambda_im", 0.0)?);
    let mut defects = Vec::new();
    let mut grids = vec![g, g.refined()];
    for gg in &grids {
        let (_, n) = pseudosphere_patch(*gg, 1.0);
        defects.push(holonomy_residual(&split_connection(&n)?, lambda)?.defect);
    }
    let r = &mut *out.report;
    r.at_most(LG, format!("holonomy[{lambda}]"), defects[0], tol.holonomy);
    if defects[0] >= tol.refinement_floor || defects[1] >= tol.refinement_floor {
        r.within(LG, format!("holonomy[{lambda}].ratio"), defects[0] / defects[1], tol.refinement_ratio);
    }
    r.tables.push(crate::report::RefinementTable::new(
        format!("holonomy[{lambda}]"),
        grids.iter().map(|g| g.hx()).collect(),
        defects,
    ));
    let g = grids.swap_remove(0);
    let (_, n) = pseudosphere_patch(g, 1.0);
    let gauge = loopgauge::trivialize(&split_connection(&n)?, lambda, f64::INFINITY)?;
    out.json("gauge_trace", &complex_field_file(&gauge.gauges.map(|m| m.trace())))
}

fn pseudosphere_backlund(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let a = p.number_or("a", 1.5)?;
    let turn = p.number_or("seed_angle", 0.0)?;
    let (f, n) = pseudosphere_patch(g, 1.0);
    let fam = split_connection(&n)?.with_position(f.clone())?;
    let init = pseudosphere_init(g, 1.0);
    let t0 = init.tangent * turn.cos() + init.normal.cross(&init.tangent) * turn.sin();
    let bt = backlund(&fam, a, &t0)?;
    let distance = 2.0 / (a + 1.0 / a);
    let angle = (1.0 / a - a) / (1.0 / a + a);
    let (mut dd, mut da): (f64, f64) = (0.0, 0.0);
    for (i, j) in g.vertices() {
        dd = dd.max(((bt.position.at(i, j) - f.at(i, j)).norm() - distance).abs());
        da = da.max((bt.normal.at(i, j).dot(n.at(i, j)) - angle).abs());
    }
    let r = &mut *out.report;
    r.at_most(LG, format!("distance_constant[{distance:.6}]"), dd, tol.backlund_constant);
    r.at_most(LG, format!("normal_angle_constant[{angle:.6}]"), da, tol.backlund_constant);
    let k = fundamental_forms(&bt.position, FdOrder::Sixth).gauss_deviation_regular(-1.0, tol.regular_sin);
    r.at_most(LG, "gauss_curvature", k, tol.backlund_curvature);
    out.surface("surface", &f)?;
    out.surface("backlund", &bt.position)
}

fn lie_transform(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let mu = p.number_or("mu", 2.0)?;
    let (f, n) = pseudosphere_patch(g, 1.0);
    let fam = split_connection(&n)?.with_position(f)?;
    let (_, fm) = spectral_deform(&fam, mu, &SymOptions::default())?;
    let omega = soliton_field(g, 1.0);
    let mut worst: f64 = 0.0;
    for (i, j) in g.vertices() {
        if let (Some(fx), Some(fy)) = (partial(&fm, i, j, Axis::X, FdOrder::Sixth), partial(&fm, i, j, Axis::Y, FdOrder::Sixth)) {
            worst = worst
                .max((fx.norm_squared() - mu * mu).abs())
                .max((fx.dot(&fy) - omega.at(i, j).cos()).abs())
                .max((fy.norm_squared() - 1.0 / (mu * mu)).abs());
        }
    }
    let r = &mut *out.report;
    r.at_most(LG, "metric", worst, tol.lie_metric);
    let k = fundamental_forms(&fm, FdOrder::Sixth).gauss_deviation_regular(-1.0, tol.regular_sin);
    r.at_most(LG, "gauss_curvature", k, tol.gauss_curvature);
    out.surface("lie", &fm)
}

fn example(p: &mut Params, g: Grid) -> CliResult<CurvatureLinePatch> {
    let size = p.number_or("size", 1.0)?;
    let kind = match p.text_or("surface", "cylinder")? {
        "cylinder" => Example::Cylinder { radius: size },
        "catenoid" => Example::Catenoid { neck: size },
        "sphere" => Example::Sphere { radius: size },
        other => return Err(scenario_err("parameters.surface", format!("unknown surface `{other}`"))),
    };
    Ok(make_example(&kind, g)?)
}

fn smooth_darboux(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let patch = example(p, g)?;
    let a = p.number_or("a", 1.0)?;
    let y0 = p.point_or(["y0_x", "y0_y", "y0_z"], [0.3, -0.8, 0.4])?;
    let eta = build_eta(&patch)?;
    let d = isothermic::darboux(&patch, &eta, a, &lift_vector(&y0))?;
    let dp = d.patch(FdOrder::Sixth)?;
    let r = &mut *out.report;
    r.at_most(ISO, "base.closedness", eta.closedness().value, tol.closedness);
    r.at_most(ISO, "transform.patch", dp.check(FdOrder::Sixth).max(), tol.patch_invariants);
    r.at_most(ISO, "transform.closedness", build_eta(&dp)?.closedness().value, tol.closedness);
    out.surface("surface", patch.points())?;
    out.surface("darboux", dp.points())
}

fn christoffel(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let patch = example(p, g)?;
    let (dual, rep) = christoffel_dual(&patch, tol.christoffel)?;
    let (twice, _) = christoffel_dual(&dual, tol.christoffel)?;
    let involution = twice
        .points()
        .values()
        .iter()
        .zip(patch.points().values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let r = &mut *out.report;
    r.at_most(ISO, "conformal", rep.conformal, tol.patch_invariants);
    r.at_most(ISO, "parallel_planes", rep.parallel_planes, tol.patch_invariants);
    r.at_most(ISO, "determinant", rep.max_determinant, 0.0);
    r.at_most(ISO, "involution", involution, tol.involution);
    out.surface("surface", patch.points())?;
    out.surface("dual", dual.points())
}

fn bianchi_cube(p: &mut Params, g: Grid, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let patch = example(p, g)?;
    let (a, b, c) = (p.number_or("a", 1.0)?, p.number_or("b", 2.0)?, p.number_or("c", 3.0)?);
    let ya = lift_vector(&p.point_or(["ya_x", "ya_y", "ya_z"], [0.3, -0.8, 0.4])?);
    let yb = lift_vector(&p.point_or(["yb_x", "yb_y", "yb_z"], [-0.5, 0.2, 1.1])?);
    let yc = lift_vector(&p.point_or(["yc_x", "yc_y", "yc_z"], [2.0, 0.7, -0.3])?);
    let eta = build_eta(&patch)?;
    let cube = isothermic::cube(&patch, &eta, a, b, c, &ya, &yb, &yc)?;
    let r = &mut *out.report;
    r.at_most(ISO, "closure", cube.report.closure, tol.algebraic);
    r.at_most(ISO, format!("cross_ratio[{:.6}]", (1.0 - c / b) / (1.0 - c / a)), cube.report.cross_ratio, tol.algebraic);
    r.at_most(ISO, "top_quads", cube.report.top_quads, tol.algebraic);
    r.at_most(ISO, "permutations", cube.report.permutations, tol.algebraic);
    let n = [g.nx(), g.ny()];
    out.net("f_abc", &QuadMap::new(n, cube.fabc.clone())?)
}

fn net(p: &mut Params) -> CliResult<(QuadMap, EdgeWeights)> {
    let n = [p.count_or("nx", 8)?, p.count_or("ny", 8)?];
    match p.text_or("net", "plane")? {
        "plane" => Ok(planar_grid(n, p.number_or("p", 1.0)?, p.number_or("q", 1.0)?)?),
        "cylinder" => Ok(cylinder_lattice(n, p.number_or("delta", 0.2)?, p.number_or("h", 0.2)?)?),
        other => Err(scenario_err("parameters.net", format!("unknown net `{other}`"))),
    }
}

fn discrete_isothermic(p: &mut Params, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let (f, a) = net(p)?;
    let iso = discretei::is_isothermic(&f, &a, tol.discrete)?;
    let r = &mut *out.report;
    r.at_most(DI, "cross_ratio", iso.worst_cross_ratio, tol.discrete);
    r.at_most(DI, "concircularity", iso.worst_concircularity, tol.discrete);
    for t in discretei::T_SAMPLES {
        let c = discretei::connection(&f, &a, t)?;
        r.at_most(DI, format!("flatness[t={t}]"), discretei::flatness(&c).defect, tol.discrete);
    }
    out.net("net", &f)
}

fn discrete_darboux(p: &mut Params, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let (f, a) = net(p)?;
    let a_hat = p.number_or("a_hat", 10.0)?;
    let y0 = p.point_or(["y0_x", "y0_y", "y0_z"], [-0.6, -0.6, 0.2])?;
    let d = discretei::darboux(&f, &a, a_hat, &lift_vector(&y0))?;
    let iso = discretei::is_isothermic(&d.map, &a, tol.discrete)?;
    let r = &mut *out.report;
    r.at_most(DI, "vertical_cross_ratio", d.vertical_cross_ratio, tol.discrete);
    r.at_most(DI, "transform.cross_ratio", iso.worst_cross_ratio, tol.discrete);
    r.at_most(DI, "gauge_identity", d.gauge_identity, tol.discrete);
    let mut expected: Vec<f64> = a.along_x.iter().chain(&a.along_y).map(|w| w / a_hat).collect();
    expected.sort_by(f64::total_cmp);
    expected.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs().max(1.0));
    r.notes.push(format!("vertical cross-ratios a/â take the values {expected:?}"));
    out.net("net", &f)?;
    out.net("darboux", &d.map)
}

fn discrete_t_transform(p: &mut Params, tol: &Tolerances, out: &mut Sink) -> CliResult<()> {
    let (f, a) = net(p)?;
    let s = p.number_or("s", 0.37)?;
    let then = p.number_or("r", 0.5)?;
    let fs = discretei::t_transform_discrete(&f, &a, s)?;
    let iso = discretei::is_isothermic(&fs.map, &fs.weights, tol.discrete_composite)?;
    let composed = discretei::t_transform_discrete(&fs.map, &fs.weights, then)?;
    let direct = discretei::t_transform_discrete(&f, &a, s + then)?;
    let r = &mut *out.report;
    r.at_most(DI, "family", fs.family_residual, tol.discrete_composite);
    r.at_most(DI, "cross_ratio", iso.worst_cross_ratio, tol.discrete_composite);
    r.at_most(
        DI,
        "group",
        discretei::projective_spread(&composed.map, &direct.map),
        tol.discrete_composite,
    );
    out.net("transform", &fs.map)
}
