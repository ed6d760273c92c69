//! Smooth isothermic surfaces in the light-cone model of the conformal
//! 3-sphere: the closed form `η`, the pencil `d + tη`, Christoffel duals,
//! Darboux and T-transforms, Bianchi quadrilaterals and the cube theorem.
//!
//! Surfaces are sampled on a grid in conformal curvature-line coordinates
//! `(x, y)`, with `I = e^{2u}(dx² + dy²)`.

use std::fmt;

use nalgebra::{Matrix2, Matrix5, Vector3, Vector5};

use crate::error::{param, Error, Result};
use crate::geomcore::gamma::gamma_matrix;
use crate::geomcore::lightcone::project_vector;
use crate::geomcore::{cross_ratio, inner, lift_vector, orth_inverse, wedge, NullLine, Projected};
use crate::grid::{mixed_partial, partial, partial_anywhere, second_partial, Axis, FdOrder, Field, Grid, ScalarField, VecField};
use crate::linalg::{frob, identity_defect};

/// `|(σ̂, σ)| / (|σ̂| |σ|)` below this means the two points coincide.
pub const COLLISION_TOL: f64 = 1e-10;

/// A surface in conformal curvature-line coordinates.
#[derive(Debug, Clone)]
pub struct CurvatureLinePatch {
    f: VecField,
    u: ScalarField,
}

/// Finite-difference checks of the patch invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchReport {
    /// `max ||f_x| - |f_y|| / e^u`.
    pub conformality: f64,
    /// `max |f_x · f_y| / e^{2u}`.
    pub orthogonality: f64,
    /// `max |II_xy| / (|f_xx| + |f_yy|)`.
    pub curvature_lines: f64,
}

impl PatchReport {
    pub fn max(&self) -> f64 {
        self.conformality.max(self.orthogonality).max(self.curvature_lines)
    }
}

impl CurvatureLinePatch {
    pub fn new(f: VecField, u: ScalarField) -> Result<Self> {
        if f.grid() != u.grid() {
            return Err(param("u", "must live on the grid of f"));
        }
        if let Some(k) = u.values().iter().position(|v| !v.is_finite()) {
            let (i, j) = (k % f.grid().nx(), k / f.grid().nx());
            return Err(Error::Degenerate {
                i,
                j,
                reason: "conformal factor is not finite".into(),
            });
        }
        Ok(Self { f, u })
    }

    /// Takes `e^u` from finite differences, `e^{2u} = (|f_x|² + |f_y|²)/2`.
    /// Boundary vertices use one-sided differences of the same order.
    pub fn from_points(f: VecField, order: FdOrder) -> Result<Self> {
        let g = *f.grid();
        let u = Field::from_fn(g, |i, j, _, _| {
            let fx = partial_anywhere(&f, i, j, Axis::X, order);
            let fy = partial_anywhere(&f, i, j, Axis::Y, order);
            0.5 * (0.5 * (fx.norm_squared() + fy.norm_squared())).ln()
        });
        Self::new(f, u)
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }

    pub fn points(&self) -> &VecField {
        &self.f
    }

    pub fn conformal_factor(&self) -> &ScalarField {
        &self.u
    }

    /// The Euclidean light-cone lift `(f, (|f|² - 1)/2, (|f|² + 1)/2)`.
    pub fn lift(&self, i: usize, j: usize) -> Vector5<f64> {
        lift_vector(self.f.at(i, j))
    }

    /// All lifts as a field.
    pub fn lifts(&self) -> Field<Vector5<f64>> {
        Field::from_fn(*self.grid(), |i, j, _, _| self.lift(i, j))
    }

    /// Checks conformality and the curvature-line property at vertices where
    /// the stencil fits.
    pub fn check(&self, order: FdOrder) -> PatchReport {
        let g = self.grid();
        let mut rep = PatchReport {
            conformality: 0.0,
            orthogonality: 0.0,
            curvature_lines: 0.0,
        };
        for (i, j) in g.vertices() {
            let (Some(fx), Some(fy), Some(fxx), Some(fyy), Some(fxy)) = (
                partial(&self.f, i, j, Axis::X, order),
                partial(&self.f, i, j, Axis::Y, order),
                second_partial(&self.f, i, j, Axis::X, order),
                second_partial(&self.f, i, j, Axis::Y, order),
                mixed_partial(&self.f, i, j, order),
            ) else {
                continue;
            };
            let eu = self.u.at(i, j).exp();
            let n = fx.cross(&fy).normalize();
            rep.conformality = rep.conformality.max((fx.norm() - fy.norm()).abs() / eu);
            rep.orthogonality = rep.orthogonality.max(fx.dot(&fy).abs() / (eu * eu));
            rep.curvature_lines = rep
                .curvature_lines
                .max(n.dot(&fxy).abs() / (fxx.norm() + fyy.norm()));
        }
        rep
    }
}

/// A profile curve `(r(τ), z(τ))`, `r > 0`, for a surface of revolution.
pub struct Profile {
    point: Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
    velocity: Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
    start: f64,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile").field("start", &self.start).finish_non_exhaustive()
    }
}

impl Profile {
    /// `start` is the parameter placed at `y = 0`.
    pub fn new(
        point: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        velocity: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        start: f64,
    ) -> Self {
        Self {
            point: Box::new(point),
            velocity: Box::new(velocity),
            start,
        }
    }

    /// The circle of radius `radius` about `(centre, 0)`, giving a torus.
    pub fn circle(centre: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && centre > radius) {
            return Err(param("centre", "must exceed the radius so that r > 0"));
        }
        Ok(Self::new(
            move |t| (centre + radius * t.cos(), radius * t.sin()),
            move |t| (-radius * t.sin(), radius * t.cos()),
            0.0,
        ))
    }

    /// Parameter values at hyperbolic arclengths `ys` (measured from
    /// `start`), by RK4 on `dτ/ds = r / |γ'|`.
    pub fn hyperbolic_reparametrise(&self, ys: &[f64], substeps: usize) -> Result<Vec<f64>> {
        let rhs = |t: f64| -> Result<f64> {
            let (r, _) = (self.point)(t);
            let (dr, dz) = (self.velocity)(t);
            let speed = dr.hypot(dz);
            if !(r > 0.0) || speed == 0.0 {
                return Err(param("profile", "needs r > 0 and a regular parametrisation"));
            }
            Ok(r / speed)
        };
        let solve = |target: f64| -> Result<f64> {
            let n = substeps.max(1) * ((target.abs() / 0.01).ceil() as usize).max(1);
            let h = target / n as f64;
            let mut t = self.start;
            for _ in 0..n {
                let k1 = rhs(t)?;
                let k2 = rhs(t + 0.5 * h * k1)?;
                let k3 = rhs(t + 0.5 * h * k2)?;
                let k4 = rhs(t + h * k3)?;
                t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            Ok(t)
        };
        ys.iter().map(|&y| solve(y)).collect()
    }
}

/// Built-in isothermic examples.
#[derive(Debug)]
pub enum Example {
    /// `(R cos x, R sin x, R y)`.
    Cylinder { radius: f64 },
    /// `c (cosh y cos x, cosh y sin x, y)`.
    Catenoid { neck: f64 },
    /// `R (sech y cos x, sech y sin x, tanh y)`.
    Sphere { radius: f64 },
    /// Any profile, reparametrised by hyperbolic arclength.
    Revolution(Profile),
}

/// Samples an example on `grid` (`x` the rotation angle).
pub fn make_example(kind: &Example, grid: Grid) -> Result<CurvatureLinePatch> {
    let positive = |name: &'static str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(param(name, "must be positive"))
        }
    };
    let revolve = |r: f64, z: f64, x: f64| Vector3::new(r * x.cos(), r * x.sin(), z);
    let (f, u) = match kind {
        Example::Cylinder { radius } => {
            positive("radius", *radius)?;
            let r = *radius;
            (
                Field::from_fn(grid, |_, _, x, y| revolve(r, r * y, x)),
                Field::from_fn(grid, |_, _, _, _| r.ln()),
            )
        }
        Example::Catenoid { neck } => {
            positive("neck", *neck)?;
            let c = *neck;
            (
                Field::from_fn(grid, |_, _, x, y| revolve(c * y.cosh(), c * y, x)),
                Field::from_fn(grid, |_, _, _, y| (c * y.cosh()).ln()),
            )
        }
        Example::Sphere { radius } => {
            positive("radius", *radius)?;
            let r = *radius;
            (
                Field::from_fn(grid, |_, _, x, y| revolve(r / y.cosh(), r * y.tanh(), x)),
                Field::from_fn(grid, |_, _, _, y| (r / y.cosh()).ln()),
            )
        }
        Example::Revolution(profile) => {
            let ys: Vec<f64> = (0..grid.ny()).map(|j| grid.coords(0, j).1).collect();
            let taus = profile.hyperbolic_reparametrise(&ys, 8)?;
            let rz: Vec<(f64, f64)> = taus.iter().map(|&t| (profile.point)(t)).collect();
            (
                Field::from_fn(grid, |_, j, x, _| revolve(rz[j].0, rz[j].1, x)),
                Field::from_fn(grid, |_, j, _, _| rz[j].0.ln()),
            )
        }
    };
    CurvatureLinePatch::new(f, u)
}

/// Edge values of `η` per unit coordinate length.
///
/// On the edge `i -> j` with midpoint `m = (f_i + f_j)/2`,
/// `η = ± e^{-2u_m} φ(m) ∧ (φ(f_j) - φ(f_i)) / h`, `+` on `x`-edges and `-`
/// on `y`-edges. Since `φ(f_j) - φ(f_i) ⊥ φ(m)`, the value lies in
/// `φ(m) ∧ φ(m)^⊥` exactly.
#[derive(Debug, Clone)]
pub struct RetractionForm {
    grid: Grid,
    ex: Vec<Matrix5<f64>>,
    ey: Vec<Matrix5<f64>>,
    mid_x: Vec<Vector5<f64>>,
    mid_y: Vec<Vector5<f64>>,
    /// Face-centre values, used for the abelian check.
    faces: Vec<(Matrix5<f64>, Matrix5<f64>)>,
}

/// Worst face of a curvature scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceReport {
    pub value: f64,
    pub face: (usize, usize),
}

fn worst_face(g: &Grid, mut value: impl FnMut(usize, usize) -> f64) -> FaceReport {
    let mut out = FaceReport {
        value: 0.0,
        face: (0, 0),
    };
    for (i, j) in g.faces() {
        let v = value(i, j);
        if !(v <= out.value) {
            out = FaceReport { value: v, face: (i, j) };
        }
    }
    out
}

/// Builds `η` from a patch.
pub fn build_eta(patch: &CurvatureLinePatch) -> Result<RetractionForm> {
    let g = *patch.grid();
    let f = patch.points();
    let u = patch.conformal_factor();
    let mut ex = vec![Matrix5::zeros(); g.len()];
    let mut ey = vec![Matrix5::zeros(); g.len()];
    let mut mid_x = vec![Vector5::zeros(); g.len()];
    let mut mid_y = vec![Vector5::zeros(); g.len()];
    let edge = |i: usize, j: usize, a: usize, b: usize, h: f64, sign: f64| -> Result<(Matrix5<f64>, Vector5<f64>)> {
        let (p, q) = (f.at(i, j), f.at(a, b));
        if (q - p).norm() == 0.0 {
            return Err(Error::Degenerate {
                i,
                j,
                reason: "coincident neighbouring points".into(),
            });
        }
        let m = lift_vector(&((p + q) * 0.5));
        let scale = sign * (-(u.at(i, j) + u.at(a, b))).exp() / h;
        Ok((wedge(&m, &(lift_vector(q) - lift_vector(p))) * scale, m))
    };
    for (i, j) in g.vertices() {
        let k = g.index(i, j);
        if i + 1 < g.nx() {
            (ex[k], mid_x[k]) = edge(i, j, i + 1, j, g.hx(), 1.0)?;
        }
        if j + 1 < g.ny() {
            (ey[k], mid_y[k]) = edge(i, j, i, j + 1, g.hy(), -1.0)?;
        }
    }
    let faces = g
        .faces()
        .map(|(i, j)| {
            let p = |a: usize, b: usize| *f.at(a, b);
            let right = (p(i + 1, j) + p(i + 1, j + 1)) * 0.5;
            let left = (p(i, j) + p(i, j + 1)) * 0.5;
            let top = (p(i, j + 1) + p(i + 1, j + 1)) * 0.5;
            let bottom = (p(i, j) + p(i + 1, j)) * 0.5;
            let c = lift_vector(&((right + left) * 0.5));
            let uc = 0.25 * (u.at(i, j) + u.at(i + 1, j) + u.at(i, j + 1) + u.at(i + 1, j + 1));
            let w = (-2.0 * uc).exp();
            (
                wedge(&c, &(lift_vector(&right) - lift_vector(&left))) * (w / g.hx()),
                wedge(&c, &(lift_vector(&top) - lift_vector(&bottom))) * (-w / g.hy()),
            )
        })
        .collect();
    Ok(RetractionForm {
        grid: g,
        ex,
        ey,
        mid_x,
        mid_y,
        faces,
    })
}

impl RetractionForm {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The value on the edge from `(i, j)` one step along `axis`.
    pub fn value(&self, i: usize, j: usize, axis: Axis) -> &Matrix5<f64> {
        let k = self.grid.index(i, j);
        match axis {
            Axis::X => &self.ex[k],
            Axis::Y => &self.ey[k],
        }
    }

    fn step(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.grid.hx(),
            Axis::Y => self.grid.hy(),
        }
    }

    /// Discrete `dη`: the plaquette circulation divided by the face area.
    pub fn closedness(&self) -> FaceReport {
        let g = self.grid;
        worst_face(&g, |i, j| {
            let curl = (self.value(i + 1, j, Axis::Y) - self.value(i, j, Axis::Y)) / g.hx()
                - (self.value(i, j + 1, Axis::X) - self.value(i, j, Axis::X)) / g.hy();
            frob(&curl)
        })
    }

    /// Largest of `|η m| / (|η| |m|)` and `|η³| / |η|³` over edges, with `m`
    /// the edge midpoint lift.
    pub fn nilpotency_residual(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            let k = g.index(i, j);
            for (x, m, ok) in [
                (&self.ex[k], &self.mid_x[k], i + 1 < g.nx()),
                (&self.ey[k], &self.mid_y[k], j + 1 < g.ny()),
            ] {
                if !ok {
                    continue;
                }
                let n = frob(x);
                if n == 0.0 {
                    continue;
                }
                worst = worst
                    .max((x * m).norm() / (n * m.norm()))
                    .max(frob(&(x * x * x)) / n.powi(3));
            }
        }
        worst
    }

    /// Largest `|[η_x, η_y]| / (|η_x| |η_y|)` of the face-centre values.
    pub fn abelian_residual(&self) -> f64 {
        self.faces
            .iter()
            .map(|(x, y)| frob(&(x * y - y * x)) / (frob(x) * frob(y)))
            .fold(0.0, f64::max)
    }

    /// Transport of `d + tη` along an edge, `exp(-t h η)`, exact because
    /// `η³ = 0`.
    pub fn transport(&self, i: usize, j: usize, axis: Axis, t: f64) -> Matrix5<f64> {
        let x = self.value(i, j, axis) * (-t * self.step(axis));
        Matrix5::identity() + x + x * x * 0.5
    }

    /// `Ad_{T} η` edge by edge, with `T` given at the edge start.
    fn conjugated(&self, gauges: &[Matrix5<f64>]) -> RetractionForm {
        let g = self.grid;
        let ad = |k: usize, x: &Matrix5<f64>| gauges[k] * x * orth_inverse(&gauges[k]);
        let mut out = self.clone();
        for k in 0..g.len() {
            out.ex[k] = ad(k, &self.ex[k]);
            out.ey[k] = ad(k, &self.ey[k]);
            out.mid_x[k] = gauges[k] * self.mid_x[k];
            out.mid_y[k] = gauges[k] * self.mid_y[k];
        }
        // Face values are only used for the abelian check; conjugate by the
        // lower-left gauge.
        for ((i, j), fv) in g.faces().zip(out.faces.iter_mut()) {
            let k = g.index(i, j);
            *fv = (ad(k, &fv.0), ad(k, &fv.1));
        }
        out
    }
}

/// Worst area-normalised plaquette holonomy of `d + tη`.
pub fn pencil_flatness(eta: &RetractionForm, t: f64) -> FaceReport {
    let g = eta.grid;
    worst_face(&g, |i, j| {
        let p1 = eta.transport(i, j, Axis::X, t);
        let p2 = eta.transport(i + 1, j, Axis::Y, t);
        let p3 = eta.transport(i, j + 1, Axis::X, t);
        let p4 = eta.transport(i, j, Axis::Y, t);
        let hol = orth_inverse(&p4) * orth_inverse(&p3) * p2 * p1;
        identity_defect(&hol) / (g.hx() * g.hy())
    })
}

/// Trivialising gauge of `d + tη` with the loopgauge spanning order.
#[derive(Debug, Clone)]
pub struct PencilGauge {
    pub t: f64,
    pub gauges: Field<Matrix5<f64>>,
    pub path_defect: f64,
}

pub fn trivialize_pencil(eta: &RetractionForm, t: f64) -> Result<PencilGauge> {
    let g = eta.grid;
    let run = |rows_first: bool| {
        let mut tg = vec![Matrix5::identity(); g.len()];
        let mut step = |i: usize, j: usize, axis: Axis| {
            let (a, b) = match axis {
                Axis::X => (i + 1, j),
                Axis::Y => (i, j + 1),
            };
            tg[g.index(a, b)] = tg[g.index(i, j)] * orth_inverse(&eta.transport(i, j, axis, t));
        };
        if rows_first {
            for i in 0..g.nx() - 1 {
                step(i, 0, Axis::X);
            }
            for i in 0..g.nx() {
                for j in 0..g.ny() - 1 {
                    step(i, j, Axis::Y);
                }
            }
        } else {
            for j in 0..g.ny() - 1 {
                step(0, j, Axis::Y);
            }
            for j in 0..g.ny() {
                for i in 0..g.nx() - 1 {
                    step(i, j, Axis::X);
                }
            }
        }
        tg
    };
    let tg = run(true);
    let other = run(false);
    let path_defect = tg.iter().zip(&other).map(|(a, b)| frob(&(a - b))).fold(0.0, f64::max);
    Ok(PencilGauge {
        t,
        gauges: Field::new(g, tg)?,
        path_defect,
    })
}

fn to_r3(v: &Vector5<f64>, i: usize, j: usize) -> Result<Vector3<f64>> {
    match project_vector(v) {
        Projected::Finite(x) => Ok(x),
        Projected::Infinity => Err(Error::Singular {
            location: format!("vertex ({i}, {j})"),
            reason: "point at infinity".into(),
        }),
    }
}

/// A T-transform `f_s = T_s f` with its transported form `Ad_{T_s} η`.
#[derive(Debug, Clone)]
pub struct TTransform {
    pub s: f64,
    pub patch: CurvatureLinePatch,
    pub eta: RetractionForm,
    pub path_defect: f64,
}

/// The T-transform with parameter `s`. The conformal factor of `f_s` is
/// `u - ln|l₅ - l₄|` for `l = T_s φ(f)`.
pub fn t_transform(patch: &CurvatureLinePatch, eta: &RetractionForm, s: f64) -> Result<TTransform> {
    let g = *patch.grid();
    let gauge = trivialize_pencil(eta, s)?;
    let mut pts = Vec::with_capacity(g.len());
    let mut us = Vec::with_capacity(g.len());
    for (i, j) in g.vertices() {
        let l = gauge.gauges.at(i, j) * patch.lift(i, j);
        pts.push(to_r3(&l, i, j)?);
        us.push(patch.conformal_factor().at(i, j) - (l[4] - l[3]).abs().ln());
    }
    let out = CurvatureLinePatch::new(Field::new(g, pts)?, Field::new(g, us)?)?;
    let eta_s = eta.conjugated(gauge.gauges.values());
    Ok(TTransform {
        s,
        patch: out,
        eta: eta_s,
        path_defect: gauge.path_defect,
    })
}

/// A Darboux transform as a field of null lines.
#[derive(Debug, Clone)]
pub struct Darboux {
    pub a: f64,
    /// Unit-norm (Euclidean) representatives.
    pub lines: Field<Vector5<f64>>,
    /// Vertices where `f̂` meets `f`.
    pub singular: Vec<bool>,
    /// Largest projective distance between a line carried once around a
    /// face and its start, divided by the face area.
    pub loop_defect: f64,
}

fn unit(v: Vector5<f64>) -> Vector5<f64> {
    v / v.norm()
}

fn projective_gap(a: &Vector5<f64>, b: &Vector5<f64>) -> f64 {
    crate::geomcore::lightcone::projective_distance(a, b)
}

/// Transports `y0` with `d + aη` along the spanning order.
pub fn darboux(patch: &CurvatureLinePatch, eta: &RetractionForm, a: f64, y0: &Vector5<f64>) -> Result<Darboux> {
    if a == 0.0 || !a.is_finite() {
        return Err(param("a", "must be finite and nonzero"));
    }
    let y0 = NullLine::new(*y0)?;
    let base = patch.lift(0, 0);
    if inner(y0.rep(), &base).abs() < COLLISION_TOL * base.norm() {
        return Err(param("y0", "must differ from f at the base vertex"));
    }
    let g = *patch.grid();
    let mut lines = vec![Vector5::zeros(); g.len()];
    lines[0] = *y0.rep();
    let mut step = |i: usize, j: usize, axis: Axis| {
        let (p, q) = match axis {
            Axis::X => (i + 1, j),
            Axis::Y => (i, j + 1),
        };
        lines[g.index(p, q)] = unit(eta.transport(i, j, axis, a) * lines[g.index(i, j)]);
    };
    for i in 0..g.nx() - 1 {
        step(i, 0, Axis::X);
    }
    for i in 0..g.nx() {
        for j in 0..g.ny() - 1 {
            step(i, j, Axis::Y);
        }
    }
    let singular = g
        .vertices()
        .map(|(i, j)| {
            let s = patch.lift(i, j);
            inner(&lines[g.index(i, j)], &s).abs() < COLLISION_TOL * s.norm()
        })
        .collect();
    let loop_defect = worst_face(&g, |i, j| {
        let start = lines[g.index(i, j)];
        let around = orth_inverse(&eta.transport(i, j, Axis::Y, a))
            * orth_inverse(&eta.transport(i, j + 1, Axis::X, a))
            * eta.transport(i + 1, j, Axis::Y, a)
            * eta.transport(i, j, Axis::X, a)
            * start;
        projective_gap(&around, &start) / (g.hx() * g.hy())
    })
    .value;
    Ok(Darboux {
        a,
        lines: Field::new(g, lines)?,
        singular,
        loop_defect,
    })
}

impl Darboux {
    /// The transform as a patch in `R³`, its conformal factor from finite
    /// differences. Fails at singular vertices or points at infinity.
    pub fn patch(&self, order: FdOrder) -> Result<CurvatureLinePatch> {
        let g = *self.lines.grid();
        if let Some(k) = self.singular.iter().position(|&s| s) {
            return Err(Error::Singular {
                location: format!("vertex ({}, {})", k % g.nx(), k / g.nx()),
                reason: "the transform meets the surface".into(),
            });
        }
        let pts = g
            .vertices()
            .map(|(i, j)| to_r3(self.lines.at(i, j), i, j))
            .collect::<Result<Vec<_>>>()?;
        CurvatureLinePatch::from_points(Field::new(g, pts)?, order)
    }

    /// Largest distance of `∂σ̂` from the sphere spanned by `σ, σ_x, σ_y,
    /// σ̂`, relative to `|∂σ̂|`: both surfaces touch a common sphere.
    pub fn sphere_contact_residual(&self, patch: &CurvatureLinePatch, order: FdOrder) -> f64 {
        let g = *patch.grid();
        let lifts = patch.lifts();
        let hat = Field::from_fn(g, |i, j, _, _| {
            let l = self.lines.at(i, j);
            // Euclidean scaling, so that differences are smooth.
            l / (l[4] - l[3])
        });
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            let (Some(sx), Some(sy), Some(hx), Some(hy)) = (
                partial(&lifts, i, j, Axis::X, order),
                partial(&lifts, i, j, Axis::Y, order),
                partial(&hat, i, j, Axis::X, order),
                partial(&hat, i, j, Axis::Y, order),
            ) else {
                continue;
            };
            let basis = nalgebra::Matrix5x4::from_columns(&[*lifts.at(i, j), sx, sy, *hat.at(i, j)]);
            let q = basis.qr().q();
            for v in [hx, hy] {
                let resid = v - q * (q.transpose() * v);
                worst = worst.max(resid.norm() / v.norm());
            }
        }
        worst
    }
}

/// `Γ^x_y(t) z` for raw representatives.
fn gamma_apply(x: &Vector5<f64>, y: &Vector5<f64>, t: f64, z: &Vector5<f64>) -> Vector5<f64> {
    unit(gamma_matrix(x, y, t) * z)
}

fn null(v: &Vector5<f64>) -> Result<NullLine<f64, 5>> {
    NullLine::with_tolerance(*v, 1e-8)
}

/// Checks of one Bianchi quadrilateral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadReport {
    /// Projective distance between `Γ^{f_a}_f(1 - b/a) f_b` and
    /// `Γ^{f_b}_f(1 - a/b) f_a`.
    pub candidates: f64,
    /// `max |(f_b, f_a; f, f_ab) - a/b|`.
    pub cross_ratio: f64,
    /// `max` concircularity residual of `f, f_a, f_b, f_ab`.
    pub concircularity: f64,
    /// The three members of the pencil identity agree at sampled `t`.
    pub pencil_identity: f64,
}

/// `t` values at which the pencil identity is evaluated.
pub const PENCIL_SAMPLES: [f64; 3] = [-1.0, 0.3, 5.0];

/// Completes `f, f_a, f_b` to `f_ab = Γ^{f_a}_f(1 - b/a) f_b` pointwise.
pub fn complete_quad(
    f: &[Vector5<f64>],
    fa: &[Vector5<f64>],
    fb: &[Vector5<f64>],
    a: f64,
    b: f64,
) -> Result<(Vec<Vector5<f64>>, QuadReport)> {
    if a == 0.0 || b == 0.0 || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        return Err(param("a, b", "must be distinct and nonzero"));
    }
    let mut out = Vec::with_capacity(f.len());
    let mut rep = QuadReport {
        candidates: 0.0,
        cross_ratio: 0.0,
        concircularity: 0.0,
        pencil_identity: 0.0,
    };
    for k in 0..f.len() {
        if projective_gap(&fa[k], &fb[k]) < 1e-10 {
            return Err(Error::Singular {
                location: format!("vertex index {k}"),
                reason: "the two transforms coincide".into(),
            });
        }
        let fab = gamma_apply(&fa[k], &f[k], 1.0 - b / a, &fb[k]);
        let fba = gamma_apply(&fb[k], &f[k], 1.0 - a / b, &fa[k]);
        rep.candidates = rep.candidates.max(projective_gap(&fab, &fba));
        let pts = [null(&f[k])?, null(&fa[k])?, null(&fb[k])?, null(&fab)?];
        rep.concircularity = rep
            .concircularity
            .max(crate::geomcore::concircularity_residual(&pts));
        let cr = cross_ratio(&pts[2], &pts[1], &pts[0], &pts[3])?;
        rep.cross_ratio = rep.cross_ratio.max((cr - a / b).abs());
        for t in PENCIL_SAMPLES {
            let left = gamma_matrix(&fab, &fa[k], 1.0 - t / b) * gamma_matrix(&fa[k], &f[k], 1.0 - t / a);
            let middle = gamma_matrix(&fb[k], &fa[k], (1.0 - t / b) / (1.0 - t / a));
            let right = gamma_matrix(&fab, &fb[k], 1.0 - t / a) * gamma_matrix(&fb[k], &f[k], 1.0 - t / b);
            let scale = frob(&middle);
            rep.pencil_identity = rep
                .pencil_identity
                .max(frob(&(left - middle)) / scale)
                .max(frob(&(right - middle)) / scale);
        }
        out.push(fab);
    }
    Ok((out, rep))
}

/// Two Darboux transforms and their simultaneous transform.
#[derive(Debug, Clone)]
pub struct BianchiQuad {
    pub fa: Darboux,
    pub fb: Darboux,
    pub fab: Field<Vector5<f64>>,
    pub report: QuadReport,
}

pub fn bianchi_quad(
    patch: &CurvatureLinePatch,
    eta: &RetractionForm,
    a: f64,
    b: f64,
    ya: &Vector5<f64>,
    yb: &Vector5<f64>,
) -> Result<BianchiQuad> {
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        return Err(param("a, b", "must be distinct"));
    }
    let fa = darboux(patch, eta, a, ya)?;
    let fb = darboux(patch, eta, b, yb)?;
    let f: Vec<_> = patch.lifts().into_values();
    let (fab, report) = complete_quad(&f, fa.lines.values(), fb.lines.values(), a, b)?;
    Ok(BianchiQuad {
        fab: Field::new(*patch.grid(), fab)?,
        fa,
        fb,
        report,
    })
}

/// Checks of the cube theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeReport {
    /// Projective spread of the three expressions for `f_abc`.
    pub closure: f64,
    /// `max |(f_b, f_a; f_c, f_abc) - (1 - c/b)/(1 - c/a)|`.
    pub cross_ratio: f64,
    /// Worst cross-ratio error of the three top quadrilaterals.
    pub top_quads: f64,
    /// Projective spread of `f_abc` over the six orderings of `(a, b, c)`.
    pub permutations: f64,
}

/// The eight surfaces of a Bianchi cube, as lines per vertex.
#[derive(Debug, Clone)]
pub struct Cube {
    pub f: Vec<Vector5<f64>>,
    pub fa: Vec<Vector5<f64>>,
    pub fb: Vec<Vector5<f64>>,
    pub fc: Vec<Vector5<f64>>,
    pub fab: Vec<Vector5<f64>>,
    pub fac: Vec<Vector5<f64>>,
    pub fbc: Vec<Vector5<f64>>,
    pub fabc: Vec<Vector5<f64>>,
    pub report: CubeReport,
}

/// `f_abc` from the quadrilateral with base `f_a`:
/// `Γ^{f_ab}_{f_a}(1 - c/b) f_ac`.
fn cube_vertex(fa: &Vector5<f64>, fab: &Vector5<f64>, fac: &Vector5<f64>, b: f64, c: f64) -> Vector5<f64> {
    gamma_apply(fab, fa, 1.0 - c / b, fac)
}

/// Builds the cube pointwise from `f` and three transforms.
pub fn cube_from_lines(
    f: &[Vector5<f64>],
    fa: &[Vector5<f64>],
    fb: &[Vector5<f64>],
    fc: &[Vector5<f64>],
    a: f64,
    b: f64,
    c: f64,
) -> Result<Cube> {
    if [a, b, c].contains(&0.0) || a == b || b == c || a == c {
        return Err(param("a, b, c", "must be pairwise distinct and nonzero"));
    }
    let (fab, _) = complete_quad(f, fa, fb, a, b)?;
    let (fac, _) = complete_quad(f, fa, fc, a, c)?;
    let (fbc, _) = complete_quad(f, fb, fc, b, c)?;
    let mut rep = CubeReport {
        closure: 0.0,
        cross_ratio: 0.0,
        top_quads: 0.0,
        permutations: 0.0,
    };
    let mut fabc = Vec::with_capacity(f.len());
    let expected = (1.0 - c / b) / (1.0 - c / a);
    for k in 0..f.len() {
        let left = cube_vertex(&fa[k], &fab[k], &fac[k], b, c);
        let middle = gamma_apply(&fb[k], &fa[k], expected, &fc[k]);
        let right = gamma_apply(&fab[k], &fb[k], 1.0 - c / a, &fbc[k]);
        rep.closure = rep
            .closure
            .max(projective_gap(&left, &middle))
            .max(projective_gap(&right, &middle))
            .max(projective_gap(&left, &right));

        let n = |v: &Vector5<f64>| null(v);
        let cr = cross_ratio(&n(&fb[k])?, &n(&fa[k])?, &n(&fc[k])?, &n(&left)?)?;
        rep.cross_ratio = rep.cross_ratio.max((cr - expected).abs());

        // Each top face is a Bianchi quadrilateral over f_a, f_b or f_c.
        let top = [
            (&fa[k], &fab[k], &fac[k], b, c),
            (&fb[k], &fab[k], &fbc[k], a, c),
            (&fc[k], &fac[k], &fbc[k], a, b),
        ];
        for (base, p, q, s, t) in top {
            let cr = cross_ratio(&n(q)?, &n(p)?, &n(base)?, &n(&left)?)?;
            rep.top_quads = rep.top_quads.max((cr - s / t).abs());
        }

        // Rebuild f_abc from every ordering of the parameters.
        let lines = [(&fa[k], a), (&fb[k], b), (&fc[k], c)];
        for (p, q, r) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            let (xp, pp) = lines[p];
            let (xq, pq) = lines[q];
            let (xr, pr) = lines[r];
            let xpq = gamma_apply(xp, &f[k], 1.0 - pq / pp, xq);
            let xpr = gamma_apply(xp, &f[k], 1.0 - pr / pp, xr);
            let v = cube_vertex(xp, &xpq, &xpr, pq, pr);
            rep.permutations = rep.permutations.max(projective_gap(&v, &left));
        }
        fabc.push(left);
    }
    Ok(Cube {
        f: f.to_vec(),
        fa: fa.to_vec(),
        fb: fb.to_vec(),
        fc: fc.to_vec(),
        fab,
        fac,
        fbc,
        fabc,
        report: rep,
    })
}

/// Three Darboux transforms of a patch and their cube.
#[allow(clippy::too_many_arguments)]
pub fn cube(
    patch: &CurvatureLinePatch,
    eta: &RetractionForm,
    a: f64,
    b: f64,
    c: f64,
    ya: &Vector5<f64>,
    yb: &Vector5<f64>,
    yc: &Vector5<f64>,
) -> Result<Cube> {
    let fa = darboux(patch, eta, a, ya)?;
    let fb = darboux(patch, eta, b, yb)?;
    let fc = darboux(patch, eta, c, yc)?;
    let f = patch.lifts().into_values();
    cube_from_lines(&f, fa.lines.values(), fb.lines.values(), fc.lines.values(), a, b, c)
}

/// The three defining properties of a Christoffel pair, measured by finite
/// differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelReport {
    /// Conformality defect of `f^c`.
    pub conformal: f64,
    /// `max |n × n^c|` of the unit normals.
    pub parallel_planes: f64,
    /// Largest value of `det(df⁻¹ ∘ df^c)`; negative when the orientation
    /// condition holds.
    pub max_determinant: f64,
    /// Difference between row-first and column-first integration.
    pub path_defect: f64,
}

/// The dual with edge increments `h² Δf / |Δf|²` on `x`-edges and
/// `-h² Δf / |Δf|²` on `y`-edges, anchored at `f^c(base) = f(base)`.
/// Its conformal factor is `-u`, and dualising twice returns `f` up to
/// round-off.
pub fn christoffel_dual(
    patch: &CurvatureLinePatch,
    max_path_defect: f64,
) -> Result<(CurvatureLinePatch, ChristoffelReport)> {
    let g = *patch.grid();
    let f = patch.points();
    let inc = |i: usize, j: usize, axis: Axis| -> Vector3<f64> {
        let (a, b, h, sign) = match axis {
            Axis::X => (i + 1, j, g.hx(), 1.0),
            Axis::Y => (i, j + 1, g.hy(), -1.0),
        };
        let d = f.at(a, b) - f.at(i, j);
        d * (sign * h * h / d.norm_squared())
    };
    let mut rows = vec![*f.at(0, 0); g.len()];
    for i in 1..g.nx() {
        rows[g.index(i, 0)] = rows[g.index(i - 1, 0)] + inc(i - 1, 0, Axis::X);
    }
    for i in 0..g.nx() {
        for j in 1..g.ny() {
            rows[g.index(i, j)] = rows[g.index(i, j - 1)] + inc(i, j - 1, Axis::Y);
        }
    }
    let mut cols = vec![*f.at(0, 0); g.len()];
    for j in 1..g.ny() {
        cols[g.index(0, j)] = cols[g.index(0, j - 1)] + inc(0, j - 1, Axis::Y);
    }
    for j in 0..g.ny() {
        for i in 1..g.nx() {
            cols[g.index(i, j)] = cols[g.index(i - 1, j)] + inc(i - 1, j, Axis::X);
        }
    }
    let path_defect = rows.iter().zip(&cols).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if path_defect > max_path_defect {
        return Err(Error::NotIsothermic(format!(
            "dual depends on the integration path, defect {path_defect:e}"
        )));
    }
    let u = patch.conformal_factor().map(|v| -v);
    let dual = CurvatureLinePatch::new(Field::new(g, rows)?, u)?;

    let order = FdOrder::default();
    let mut report = ChristoffelReport {
        conformal: 0.0,
        parallel_planes: 0.0,
        max_determinant: f64::NEG_INFINITY,
        path_defect,
    };
    let check = dual.check(order);
    report.conformal = check.conformality.max(check.orthogonality);
    for (i, j) in g.vertices() {
        let (Some(fx), Some(fy), Some(cx), Some(cy)) = (
            partial(f, i, j, Axis::X, order),
            partial(f, i, j, Axis::Y, order),
            partial(dual.points(), i, j, Axis::X, order),
            partial(dual.points(), i, j, Axis::Y, order),
        ) else {
            continue;
        };
        let n = fx.cross(&fy).normalize();
        let nc = cx.cross(&cy).normalize();
        report.parallel_planes = report.parallel_planes.max(n.cross(&nc).norm());
        // df^c = df ∘ M in the tangent plane.
        let j1 = nalgebra::Matrix3x2::from_columns(&[fx, fy]);
        let j2 = nalgebra::Matrix3x2::from_columns(&[cx, cy]);
        let gram: Matrix2<f64> = j1.transpose() * j1;
        if let Some(inv) = gram.try_inverse() {
            let m = inv * j1.transpose() * j2;
            report.max_determinant = report.max_determinant.max(m.determinant());
        }
    }
    Ok((dual, report))
}

/// Best `|a - (s b + d)|` over scalars `s` and translations `d`.
pub fn affine_fit_residual(a: &VecField, b: &VecField) -> (f64, f64) {
    let n = a.values().len() as f64;
    let mean = |f: &VecField| f.values().iter().fold(Vector3::zeros(), |s, v| s + v) / n;
    let (ma, mb) = (mean(a), mean(b));
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, q) in a.values().iter().zip(b.values()) {
        num += (p - ma).dot(&(q - mb));
        den += (q - mb).norm_squared();
    }
    let s = if den > 0.0 { num / den } else { 0.0 };
    let worst = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(p, q)| ((p - ma) - (q - mb) * s).norm())
        .fold(0.0, f64::max);
    (s, worst)
}

/// Unit normals `f_x × f_y / |f_x × f_y|` by finite differences (one-sided
/// on the boundary).
pub fn unit_normals(patch: &CurvatureLinePatch, order: FdOrder) -> VecField {
    let f = patch.points();
    Field::from_fn(*patch.grid(), |i, j, _, _| {
        partial_anywhere(f, i, j, Axis::X, order)
            .cross(&partial_anywhere(f, i, j, Axis::Y, order))
            .normalize()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(h: f64) -> Grid {
        Grid::square(0.0, 1.0, h).unwrap()
    }

    #[test]
    fn examples_satisfy_patch_invariants() {
        let g = unit_square(1.0 / 32.0);
        for kind in [
            Example::Cylinder { radius: 1.0 },
            Example::Catenoid { neck: 1.0 },
            Example::Sphere { radius: 2.0 },
            Example::Revolution(Profile::circle(3.0, 1.0).unwrap()),
        ] {
            let p = make_example(&kind, g).unwrap();
            let r = p.check(FdOrder::Sixth);
            assert!(r.max() < 1e-6, "{kind:?}: {r:?}");
        }
    }

    #[test]
    fn cylinder_of_radius_one_has_zero_conformal_factor() {
        let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(0.25)).unwrap();
        assert!(p.conformal_factor().values().iter().all(|&u| u == 0.0));
        let (x, y) = p.grid().coords(2, 3);
        assert!((p.points().at(2, 3) - Vector3::new(x.cos(), x.sin(), y)).norm() < 1e-15);
    }

    #[test]
    fn torus_reparametrisation_matches_closed_form() {
        // ∫ ρ dτ / (c + ρ cos τ) = 2ρ/√(c²-ρ²) atan(√((c-ρ)/(c+ρ)) tan(τ/2))
        let (c, r) = (3.0_f64, 1.0_f64);
        let prof = Profile::circle(c, r).unwrap();
        let taus = prof.hyperbolic_reparametrise(&[0.1, 0.3, -0.2], 8).unwrap();
        for (s, t) in [0.1, 0.3, -0.2].iter().zip(taus) {
            let k = (c * c - r * r).sqrt();
            let closed = 2.0 * r / k * (((c - r) / (c + r)).sqrt() * (t / 2.0).tan()).atan();
            assert!((closed - s).abs() < 1e-10, "{closed} vs {s}");
        }
    }

    #[test]
    fn invalid_example_parameters_are_rejected() {
        let g = unit_square(0.25);
        assert!(make_example(&Example::Cylinder { radius: 0.0 }, g).is_err());
        assert!(Profile::circle(1.0, 2.0).is_err());
    }

    #[test]
    fn eta_values_are_nilpotent_and_abelian() {
        let p = make_example(&Example::Catenoid { neck: 1.0 }, unit_square(1.0 / 16.0)).unwrap();
        let eta = build_eta(&p).unwrap();
        assert!(eta.nilpotency_residual() < 1e-12);
        assert!(eta.abelian_residual() < 1e-12);
    }

    #[test]
    fn pencil_at_zero_is_trivial() {
        let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 8.0)).unwrap();
        let eta = build_eta(&p).unwrap();
        assert_eq!(pencil_flatness(&eta, 0.0).value, 0.0);
        let t = t_transform(&p, &eta, 0.0).unwrap();
        let d = p
            .points()
            .values()
            .iter()
            .zip(t.patch.points().values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-14);
    }

    #[test]
    fn pencil_transport_preserves_metric() {
        let p = make_example(&Example::Sphere { radius: 1.0 }, unit_square(1.0 / 8.0)).unwrap();
        let eta = build_eta(&p).unwrap();
        let m = eta.transport(2, 2, Axis::Y, 3.7);
        assert!(crate::geomcore::metric_defect(&m) < 1e-12);
    }

    #[test]
    fn darboux_rejects_base_point() {
        let p = make_example(&Example::Cylinder { radius: 1.0 }, unit_square(1.0 / 8.0)).unwrap();
        let eta = build_eta(&p).unwrap();
        assert!(matches!(darboux(&p, &eta, 1.0, &p.lift(0, 0)), Err(Error::Parameter { .. })));
    }

    #[test]
    fn christoffel_dual_is_an_involution() {
        let p = make_example(&Example::Catenoid { neck: 1.0 }, unit_square(1.0 / 16.0)).unwrap();
        let (d, _) = christoffel_dual(&p, 1e-2).unwrap();
        let (dd, _) = christoffel_dual(&d, 1e-2).unwrap();
        let worst = dd
            .points()
            .values()
            .iter()
            .zip(p.points().values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn quad_rejects_equal_parameters() {
        let v = lift_vector(&Vector3::zeros());
        assert!(complete_quad(&[v], &[v], &[v], 1.0, 1.0).is_err());
    }
}
