//! Loops of flat connections attached to a harmonic Gauss map: the family
//! `d_λ = 𝒟 + λ𝒩⁺ + λ⁻¹𝒩⁻`, trivialising gauges, the Sym formula, spectral
//! deformation, Bäcklund transforms by dressing and Bianchi permutability.
//!
//! Skew `3 × 3` matrices are identified with vectors by `v -> (u -> v × u)`.
//! Surfaces here have `K = -1`.
//!
//! On the grid, `𝒩` on the edge `i -> j` is the generator `W` of the
//! rotation taking `N_i` to `N_j` about `N_i × N_j`. The `d_λ` transport is
//! then `exp(-(λ - 1) W)` on `ξ`-edges and `exp(-(λ⁻¹ - 1) W)` on `η`-edges,
//! so `d_1 = d`, `conj(d_λ̄) = d_λ` and `ρ^N · d_λ = d_{-λ}` hold edge by edge
//! up to round-off.

use nalgebra::{Complex, Matrix3, Vector3};

use crate::error::{param, Error, Result};
use crate::geomcore::inner;
use crate::grid::{Axis, Field, Grid, VecField};
use crate::linalg::{frob, hat, identity_defect, vee};

pub type C64 = Complex<f64>;
pub type CMatrix3 = Matrix3<C64>;

const UNIT_TOL: f64 = 1e-10;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn complexify(m: &Matrix3<f64>) -> CMatrix3 {
    m.map(c)
}

fn real_part(v: &Vector3<C64>) -> Vector3<f64> {
    v.map(|z| z.re)
}

/// `exp(s · hat(w))` for complex `s`, by Rodrigues' formula.
pub fn rotation_power(w: &Vector3<f64>, s: C64) -> CMatrix3 {
    let theta = w.norm();
    let k = complexify(&hat(w));
    let k2 = k * k;
    let st = s * theta;
    let (a, b) = if theta < 1e-6 {
        // series of sin(sθ)/θ and (1 - cos(sθ))/θ²
        let s2 = s * s;
        (s * (c(1.0) - s2 * theta * theta / 6.0), s2 * (c(0.5) - s2 * theta * theta / 24.0))
    } else {
        (st.sin() / theta, (c(1.0) - st.cos()) / (theta * theta))
    };
    CMatrix3::identity() + k * a + k2 * b
}

/// Reflection across `N^⊥`.
pub fn reflection_across(n: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - n * n.transpose() * 2.0
}

/// A loop of connections on the trivial `C³` bundle over a grid.
pub trait LoopFamily {
    fn grid(&self) -> &Grid;

    /// Transport from vertex `(i, j)` to its neighbour one step along `axis`.
    fn transport(&self, i: usize, j: usize, axis: Axis, lambda: C64) -> CMatrix3;

    /// The harmonic map at a vertex.
    fn normal(&self, i: usize, j: usize) -> Vector3<f64>;

    /// The surface carried by the family (the Sym formula at `λ = 1`).
    fn position(&self, i: usize, j: usize) -> Vector3<f64>;
}

fn neighbour(i: usize, j: usize, axis: Axis) -> (usize, usize) {
    match axis {
        Axis::X => (i + 1, j),
        Axis::Y => (i, j + 1),
    }
}

/// The family `d_λ` of a unit normal field.
#[derive(Debug, Clone)]
pub struct LoopConnection {
    normal: VecField,
    position: VecField,
    /// Rotation generators on `(i, j) -> (i + 1, j)`.
    wx: Vec<Vector3<f64>>,
    /// Rotation generators on `(i, j) -> (i, j + 1)`.
    wy: Vec<Vector3<f64>>,
}

fn rotation_generator(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<Vector3<f64>> {
    let axis = a.cross(b);
    let s = axis.norm();
    let cth = a.dot(b);
    if cth < -1.0 + 1e-12 {
        return Err(Error::Data("antipodal normals on an edge".into()));
    }
    let theta = s.atan2(cth);
    if s < 1e-300 {
        return Ok(Vector3::zeros());
    }
    Ok(axis * (theta / s))
}

/// Builds `d = 𝒟 + 𝒩` from `N` and the loop `d_λ` from it.
///
/// The carried surface is the μ = 1 Sym surface, `f(base) = 0`; use
/// [`LoopConnection::with_position`] to anchor a known surface instead.
pub fn split_connection(normal: &VecField) -> Result<LoopConnection> {
    let g = *normal.grid();
    for (i, j) in g.vertices() {
        let n = normal.at(i, j).norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Data(format!("normal at ({i}, {j}) has length {n}")));
        }
    }
    let mut wx = vec![Vector3::zeros(); g.len()];
    let mut wy = vec![Vector3::zeros(); g.len()];
    for (i, j) in g.vertices() {
        let k = g.index(i, j);
        if i + 1 < g.nx() {
            wx[k] = rotation_generator(normal.at(i, j), normal.at(i + 1, j))?;
        }
        if j + 1 < g.ny() {
            wy[k] = rotation_generator(normal.at(i, j), normal.at(i, j + 1))?;
        }
    }
    // f_ξ = N × N_ξ, f_η = -N × N_η, integrated row 0 then columns.
    let mut pos = Field::new(g, vec![Vector3::zeros(); g.len()])?;
    for i in 1..g.nx() {
        *pos.at_mut(i, 0) = pos.at(i - 1, 0) + wx[g.index(i - 1, 0)];
    }
    for i in 0..g.nx() {
        for j in 1..g.ny() {
            *pos.at_mut(i, j) = pos.at(i, j - 1) - wy[g.index(i, j - 1)];
        }
    }
    Ok(LoopConnection {
        normal: normal.clone(),
        position: pos,
        wx,
        wy,
    })
}

impl LoopConnection {
    /// Replaces the carried surface, e.g. by the reconstructed `f`.
    pub fn with_position(mut self, f: VecField) -> Result<Self> {
        if f.grid() != self.normal.grid() {
            return Err(param("f", "must live on the same grid as N"));
        }
        self.position = f;
        Ok(self)
    }

    pub fn normals(&self) -> &VecField {
        &self.normal
    }

    pub fn positions(&self) -> &VecField {
        &self.position
    }

    /// The `𝒩` generator on an edge (the value of `N × dN` integrated along
    /// it).
    pub fn edge_generator(&self, i: usize, j: usize, axis: Axis) -> Vector3<f64> {
        let k = self.normal.grid().index(i, j);
        match axis {
            Axis::X => self.wx[k],
            Axis::Y => self.wy[k],
        }
    }

    /// `𝒟`-transport of an edge, the rotation `N_i -> N_j`.
    pub fn d_transport(&self, i: usize, j: usize, axis: Axis) -> Matrix3<f64> {
        rotation_power(&self.edge_generator(i, j, axis), c(1.0)).map(|z| z.re)
    }

    /// Largest `|𝒟N|` over edges: `|R N_i - N_j|`.
    pub fn d_parallel_residual(&self) -> f64 {
        let g = *self.grid();
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            for axis in [Axis::X, Axis::Y] {
                let (a, b) = neighbour(i, j, axis);
                if a < g.nx() && b < g.ny() {
                    let r = self.d_transport(i, j, axis);
                    worst = worst.max((r * self.normal.at(i, j) - self.normal.at(a, b)).norm());
                }
            }
        }
        worst
    }

    /// Largest `|𝒩ρ + ρ𝒩|` over edges, with `ρ` the reflection at the edge
    /// midpoint normal.
    pub fn anticommutation_residual(&self) -> f64 {
        let g = *self.grid();
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            for axis in [Axis::X, Axis::Y] {
                let (a, b) = neighbour(i, j, axis);
                if a < g.nx() && b < g.ny() {
                    let mid = (self.normal.at(i, j) + self.normal.at(a, b)).normalize();
                    let rho = reflection_across(&mid);
                    let w = hat(&self.edge_generator(i, j, axis));
                    worst = worst.max(frob(&(w * rho + rho * w)));
                }
            }
        }
        worst
    }

    /// Largest deviation of `ρ_j P_λ ρ_i = P_{-λ}` and
    /// `conj(P_{conj λ}) = P_λ` over edges.
    pub fn symmetry_residual(&self, lambda: C64) -> f64 {
        let g = *self.grid();
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            for axis in [Axis::X, Axis::Y] {
                let (a, b) = neighbour(i, j, axis);
                if a < g.nx() && b < g.ny() {
                    let p = self.transport(i, j, axis, lambda);
                    let rho_i = complexify(&reflection_across(self.normal.at(i, j)));
                    let rho_j = complexify(&reflection_across(self.normal.at(a, b)));
                    let twisted = rho_j * p * rho_i - self.transport(i, j, axis, -lambda);
                    let conj = self.transport(i, j, axis, lambda.conj()).map(|z| z.conj()) - p;
                    worst = worst.max(frob(&twisted)).max(frob(&conj));
                }
            }
        }
        worst
    }
}

impl LoopFamily for LoopConnection {
    fn grid(&self) -> &Grid {
        self.normal.grid()
    }

    fn transport(&self, i: usize, j: usize, axis: Axis, lambda: C64) -> CMatrix3 {
        let w = self.edge_generator(i, j, axis);
        let s = match axis {
            Axis::X => c(1.0) - lambda,
            Axis::Y => c(1.0) - lambda.inv(),
        };
        rotation_power(&w, s)
    }

    fn normal(&self, i: usize, j: usize) -> Vector3<f64> {
        *self.normal.at(i, j)
    }

    fn position(&self, i: usize, j: usize) -> Vector3<f64> {
        *self.position.at(i, j)
    }
}

/// Holonomy of one face, counterclockwise from its lower-left corner.
pub fn plaquette_holonomy<F: LoopFamily + ?Sized>(fam: &F, i: usize, j: usize, lambda: C64) -> CMatrix3 {
    let p1 = fam.transport(i, j, Axis::X, lambda);
    let p2 = fam.transport(i + 1, j, Axis::Y, lambda);
    let p3 = fam.transport(i, j + 1, Axis::X, lambda);
    let p4 = fam.transport(i, j, Axis::Y, lambda);
    let inv = |m: CMatrix3| m.try_inverse().unwrap_or_else(|| CMatrix3::from_element(c(f64::NAN)));
    inv(p4) * inv(p3) * p2 * p1
}

/// Worst face holonomy defect `|Hol - 1| / (area of the face)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyReport {
    pub defect: f64,
    pub face: (usize, usize),
}

/// Scans all faces. The defect is normalised by the face area so that it
/// approximates the curvature of the connection: it tends to zero for flat
/// families and to a nonzero limit otherwise.
pub fn holonomy_residual<F: LoopFamily + ?Sized>(fam: &F, lambda: C64) -> Result<HolonomyReport> {
    if lambda.norm() == 0.0 {
        return Err(param("lambda", "must be nonzero"));
    }
    let g = *fam.grid();
    let area = g.hx() * g.hy();
    let mut out = HolonomyReport {
        defect: 0.0,
        face: (0, 0),
    };
    for (i, j) in g.faces() {
        let d = identity_defect(&plaquette_holonomy(fam, i, j, lambda)) / area;
        if !(d <= out.defect) {
            out = HolonomyReport { defect: d, face: (i, j) };
        }
    }
    Ok(out)
}

/// A trivialising gauge `T` of `d_λ`: `dT = T A`, `T(base) = 1`.
#[derive(Debug, Clone)]
pub struct GaugeField {
    pub lambda: C64,
    pub gauges: Field<CMatrix3>,
    /// Largest difference between the row-first and column-first spanning
    /// orders.
    pub path_defect: f64,
    /// Largest `|T(j) P_ji T(i)⁻¹ - 1|` over the spanning-tree edges.
    pub gauge_residual: f64,
}

fn spanning_gauges<F: LoopFamily + ?Sized>(fam: &F, lambda: C64, rows_first: bool) -> Result<Vec<CMatrix3>> {
    let g = *fam.grid();
    let mut t = vec![CMatrix3::identity(); g.len()];
    let step = |t: &mut Vec<CMatrix3>, i: usize, j: usize, axis: Axis| -> Result<()> {
        let (a, b) = neighbour(i, j, axis);
        let p = fam.transport(i, j, axis, lambda);
        let pinv = p.try_inverse().ok_or_else(|| Error::Singular {
            location: format!("edge ({i}, {j}) -> ({a}, {b})"),
            reason: "transport is not invertible".into(),
        })?;
        t[g.index(a, b)] = t[g.index(i, j)] * pinv;
        Ok(())
    };
    if rows_first {
        for i in 0..g.nx() - 1 {
            step(&mut t, i, 0, Axis::X)?;
        }
        for i in 0..g.nx() {
            for j in 0..g.ny() - 1 {
                step(&mut t, i, j, Axis::Y)?;
            }
        }
    } else {
        for j in 0..g.ny() - 1 {
            step(&mut t, 0, j, Axis::Y)?;
        }
        for j in 0..g.ny() {
            for i in 0..g.nx() - 1 {
                step(&mut t, i, j, Axis::X)?;
            }
        }
    }
    Ok(t)
}

/// Integrates `T(j) = T(i) P_ji⁻¹` along row 0, then up each column.
///
/// Fails with [`Error::NotFlat`] when the holonomy defect exceeds
/// `max_defect` (pass `f64::INFINITY` to skip the check).
pub fn trivialize<F: LoopFamily + ?Sized>(fam: &F, lambda: C64, max_defect: f64) -> Result<GaugeField> {
    if max_defect.is_finite() {
        let h = holonomy_residual(fam, lambda)?;
        if h.defect > max_defect {
            return Err(Error::NotFlat {
                defect: h.defect,
                location: format!("face {:?} at λ = {lambda}", h.face),
            });
        }
    }
    let g = *fam.grid();
    let t = spanning_gauges(fam, lambda, true)?;
    let other = spanning_gauges(fam, lambda, false)?;
    let path_defect = t.iter().zip(&other).map(|(a, b)| frob(&(a - b))).fold(0.0, f64::max);
    let mut gauge_residual: f64 = 0.0;
    let mut tree_edge = |i: usize, j: usize, axis: Axis| {
        let (a, b) = neighbour(i, j, axis);
        let ti = t[g.index(i, j)];
        let gauged = t[g.index(a, b)] * fam.transport(i, j, axis, lambda) * ti.try_inverse().unwrap_or(ti);
        gauge_residual = gauge_residual.max(identity_defect(&gauged));
    };
    for i in 0..g.nx() - 1 {
        tree_edge(i, 0, Axis::X);
    }
    for i in 0..g.nx() {
        for j in 0..g.ny() - 1 {
            tree_edge(i, j, Axis::Y);
        }
    }
    Ok(GaugeField {
        lambda,
        gauges: Field::new(g, t)?,
        path_defect,
        gauge_residual,
    })
}

/// Options for the numerical `λ`-derivative in the Sym formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymOptions {
    /// Central-difference step; defaults to `1e-4 · max(1, |μ|)`.
    pub delta: Option<f64>,
    /// Largest accepted discrepancy between steps `δ` and `δ/2`, relative to
    /// the size of the output.
    pub richardson_tol: f64,
}

impl Default for SymOptions {
    fn default() -> Self {
        Self {
            delta: None,
            richardson_tol: 1e-5,
        }
    }
}

/// `f^μ = μ ∂T/∂λ|_μ T_μ⁻¹` converted to vectors; `f^μ(base) = 0`.
pub fn sym<F: LoopFamily + ?Sized>(fam: &F, mu: f64, opts: &SymOptions) -> Result<VecField> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(param("mu", "must be finite and nonzero"));
    }
    let delta = opts.delta.unwrap_or(1e-4 * mu.abs().max(1.0));
    if !(delta > 1e-10 * mu.abs().max(1.0)) {
        return Err(Error::NumericalDerivative(format!("step {delta:e} underflows")));
    }
    let derive = |d: f64| -> Result<Vec<Vector3<C64>>> {
        let tp = spanning_gauges(fam, c(mu + d), true)?;
        let tm = spanning_gauges(fam, c(mu - d), true)?;
        let t0 = spanning_gauges(fam, c(mu), true)?;
        Ok(tp
            .iter()
            .zip(&tm)
            .zip(&t0)
            .map(|((p, m), t)| {
                let dt = (p - m) / c(2.0 * d);
                vee(&(dt * t.try_inverse().unwrap_or(*t) * c(mu)))
            })
            .collect())
    };
    let coarse = derive(delta)?;
    let fine = derive(delta / 2.0)?;
    let size = fine.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut imag: f64 = 0.0;
    for (a, b) in coarse.iter().zip(&fine) {
        worst = worst.max((a - b).norm());
        imag = imag.max(b.map(|z| z.im).norm());
    }
    if worst > opts.richardson_tol * size {
        return Err(Error::NumericalDerivative(format!(
            "steps {delta:e} and {:e} disagree by {worst:e}",
            delta / 2.0
        )));
    }
    if imag > 1e-8 * size {
        return Err(Error::NumericalDerivative(format!("imaginary part {imag:e} at real μ")));
    }
    // Richardson extrapolation of the two central differences.
    let values = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| real_part(&((b * c(4.0) - a) / c(3.0))))
        .collect();
    Field::new(*fam.grid(), values)
}

/// `N^μ = T_μ N` and the Sym surface `f^μ`.
pub fn spectral_deform<F: LoopFamily + ?Sized>(fam: &F, mu: f64, opts: &SymOptions) -> Result<(VecField, VecField)> {
    let gauge = trivialize(fam, c(mu), f64::INFINITY)?;
    let g = *fam.grid();
    let normals = Field::from_fn(g, |i, j, _, _| {
        let t = gauge.gauges.at(i, j);
        real_part(&(t * fam.normal(i, j).map(c)))
    });
    Ok((normals, sym(fam, mu, opts)?))
}

/// The simple factor `r(λ) = Γ^L_{L̄}(m(λ))`,
/// `m(λ) = ((1 + ia)/(1 - ia)) ((λ - ia)/(λ + ia))`, given by a null line
/// `L` per vertex.
#[derive(Debug, Clone)]
pub struct DressingFactor {
    a: f64,
    lines: Field<Vector3<C64>>,
}

/// `|(L, L̄)| / |L|²` below this means `L ∩ L̄ ≠ 0`.
pub const COLLISION_TOL: f64 = 1e-8;

impl DressingFactor {
    /// Takes one null line per vertex.
    pub fn from_lines(a: f64, lines: Field<Vector3<C64>>) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(param("a", "must be positive"));
        }
        let g = *lines.grid();
        let mut normalised = Vec::with_capacity(g.len());
        for (i, j) in g.vertices() {
            let l = lines.at(i, j);
            let n2 = l.norm_squared();
            if n2 == 0.0 {
                return Err(Error::ZeroVector);
            }
            if inner(l, l).norm() > 1e-8 * n2 {
                return Err(Error::NotNull {
                    residual: inner(l, l).norm() / n2,
                });
            }
            let pairing = inner(l, &l.map(|z| z.conj())).norm() / n2;
            if pairing < COLLISION_TOL {
                return Err(Error::Singular {
                    location: format!("vertex ({i}, {j})"),
                    reason: format!("L meets its conjugate, |(L, L̄)| = {pairing:e}"),
                });
            }
            normalised.push(l / c(n2.sqrt()));
        }
        Ok(Self {
            a,
            lines: Field::new(g, normalised)?,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn lines(&self) -> &Field<Vector3<C64>> {
        &self.lines
    }

    pub fn line(&self, i: usize, j: usize) -> &Vector3<C64> {
        self.lines.at(i, j)
    }

    /// The Möbius factor `m(λ)`; `m(1) = 1`, `m(ia) = 0`, `m(-ia) = ∞`.
    pub fn multiplier(&self, lambda: C64) -> C64 {
        let ia = Complex::new(0.0, self.a);
        let front = (c(1.0) + ia) / (c(1.0) - ia);
        if lambda.is_infinite() {
            return front;
        }
        front * (lambda - ia) / (lambda + ia)
    }

    fn gamma(&self, i: usize, j: usize, t: C64) -> CMatrix3 {
        let l = self.lines.at(i, j);
        let lbar = l.map(|z| z.conj());
        crate::geomcore::gamma::gamma_matrix(l, &lbar, t)
    }

    /// `r(λ)` at a vertex.
    pub fn at(&self, i: usize, j: usize, lambda: C64) -> CMatrix3 {
        self.gamma(i, j, self.multiplier(lambda))
    }

    /// `r(λ)⁻¹` at a vertex.
    pub fn inverse_at(&self, i: usize, j: usize, lambda: C64) -> CMatrix3 {
        self.gamma(i, j, self.multiplier(lambda).inv())
    }

    /// `r(∞)`, a real rotation.
    pub fn at_infinity(&self, i: usize, j: usize) -> Matrix3<f64> {
        self.at(i, j, Complex::new(f64::INFINITY, 0.0)).map(|z| z.re)
    }

    /// `∂r/∂λ` at `λ = 1`, equal to `(2a/(1+a²)) hat(t)` for the real unit
    /// `t ⊥ L, L̄`.
    pub fn derivative_at_one(&self, i: usize, j: usize) -> CMatrix3 {
        let l = self.lines.at(i, j);
        let lbar = l.map(|z| z.conj());
        let pairing = inner(l, &lbar);
        let gamma_prime = (l * lbar.transpose() - lbar * l.transpose()) / pairing;
        let ia = Complex::new(0.0, self.a);
        gamma_prime * (ia * 2.0 / (1.0 + self.a * self.a))
    }

    /// Largest `|ρ^N L - conj(L)|` (projectively) over vertices.
    pub fn twisting_residual(&self, normals: &dyn Fn(usize, usize) -> Vector3<f64>) -> f64 {
        let g = *self.lines.grid();
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            let rho = complexify(&reflection_across(&normals(i, j)));
            let l = self.lines.at(i, j);
            let image = rho * l;
            let target = l.map(|z| z.conj());
            worst = worst.max(crate::geomcore::lightcone::projective_distance(&image, &target));
        }
        worst
    }
}

/// The dressed family `r(λ) · d_λ`.
#[derive(Debug, Clone)]
pub struct DressedFamily<F> {
    base: F,
    factor: DressingFactor,
}

impl<F: LoopFamily> DressedFamily<F> {
    pub fn new(base: F, factor: DressingFactor) -> Result<Self> {
        if base.grid() != factor.lines.grid() {
            return Err(param("factor", "must live on the family's grid"));
        }
        Ok(Self { base, factor })
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    pub fn factor(&self) -> &DressingFactor {
        &self.factor
    }
}

impl<F: LoopFamily> LoopFamily for DressedFamily<F> {
    fn grid(&self) -> &Grid {
        self.base.grid()
    }

    fn transport(&self, i: usize, j: usize, axis: Axis, lambda: C64) -> CMatrix3 {
        let (a, b) = neighbour(i, j, axis);
        self.factor.at(a, b, lambda) * self.base.transport(i, j, axis, lambda) * self.factor.inverse_at(i, j, lambda)
    }

    fn normal(&self, i: usize, j: usize) -> Vector3<f64> {
        self.factor.at_infinity(i, j) * self.base.normal(i, j)
    }

    fn position(&self, i: usize, j: usize) -> Vector3<f64> {
        self.base.position(i, j) - real_part(&vee(&self.factor.derivative_at_one(i, j)))
    }
}

/// Transports a line along row 0 and up each column with `d_α`, starting
/// from `seed` at the base vertex.
pub fn parallel_lines<F: LoopFamily + ?Sized>(fam: &F, alpha: C64, seed: Vector3<C64>) -> Result<Field<Vector3<C64>>> {
    let g = *fam.grid();
    let mut lines = vec![Vector3::zeros(); g.len()];
    lines[0] = seed / c(seed.norm());
    let step = |lines: &mut Vec<Vector3<C64>>, i: usize, j: usize, axis: Axis| {
        let (a, b) = neighbour(i, j, axis);
        let v = fam.transport(i, j, axis, alpha) * lines[g.index(i, j)];
        lines[g.index(a, b)] = v / c(v.norm());
    };
    for i in 0..g.nx() - 1 {
        step(&mut lines, i, 0, Axis::X);
    }
    for i in 0..g.nx() {
        for j in 0..g.ny() - 1 {
            step(&mut lines, i, j, Axis::Y);
        }
    }
    Field::new(g, lines)
}

/// Output of [`backlund`].
#[derive(Debug, Clone)]
pub struct Backlund<F> {
    pub family: DressedFamily<F>,
    pub normal: VecField,
    pub position: VecField,
}

/// The `+i` eigenline of `v -> t × v` in `C³`: `N - i (t × N)` for a unit
/// tangent `t` at a point with normal `N`.
pub fn eigenline_seed(t: &Vector3<f64>, n: &Vector3<f64>) -> Vector3<C64> {
    let b = t.cross(n);
    Vector3::new(Complex::new(n.x, -b.x), Complex::new(n.y, -b.y), Complex::new(n.z, -b.z))
}

/// Bäcklund transform with parameter `a > 0`, seeded by a unit tangent `t0`
/// at the base vertex: `L` is the `d_{ia}`-parallel extension of the `+i`
/// eigenline of `t0 ×`, `N̂ = r(∞) N` and `f̂ = f - 2t/(a + 1/a)`; at the base
/// vertex `t = t0`.
pub fn backlund<F: LoopFamily + Clone>(fam: &F, a: f64, t0: &Vector3<f64>) -> Result<Backlund<F>> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(param("a", "must be positive"));
    }
    let n0 = fam.normal(0, 0);
    if (t0.norm() - 1.0).abs() > 1e-8 || t0.dot(&n0).abs() > 1e-8 {
        return Err(param("t0", "must be a unit vector tangent at the base vertex"));
    }
    let lines = parallel_lines(fam, Complex::new(0.0, a), eigenline_seed(t0, &n0))?;
    let factor = DressingFactor::from_lines(a, lines)?;
    let family = DressedFamily::new(fam.clone(), factor)?;
    let g = *fam.grid();
    let normal = Field::from_fn(g, |i, j, _, _| family.normal(i, j));
    let position = Field::from_fn(g, |i, j, _, _| family.position(i, j));
    Ok(Backlund {
        family,
        normal,
        position,
    })
}

/// Checks collected by [`bianchi_quad`].
#[derive(Debug, Clone, PartialEq)]
pub struct BianchiReport {
    /// `max |r̂_b r_a r_b⁻¹ r̂_a⁻¹ - 1|` over vertices, per sampled `λ`.
    pub closure: Vec<(C64, f64)>,
    /// `max |(f_a)_b - (f_b)_a|`.
    pub permutability: f64,
    /// `max` projective distance between `ρ^{N_a} L̂_b` and `conj(L̂_b)`, and
    /// the same for `L̂_a`.
    pub twisting: f64,
}

/// The four surfaces of a Bianchi quadrilateral.
#[derive(Debug, Clone)]
pub struct BianchiQuad<F> {
    pub fa: Backlund<F>,
    pub fb: Backlund<F>,
    /// `(f_a)_b`, dressing the family of `f_a` with `L̂_b = r_a(ib) L_b`.
    pub fab: DressedFamily<DressedFamily<F>>,
    /// `(f_b)_a`, dressing the family of `f_b` with `L̂_a = r_b(ia) L_a`.
    pub fba: DressedFamily<DressedFamily<F>>,
    pub report: BianchiReport,
}

/// The `λ` values at which the closure `r̂_b r_a = r̂_a r_b` is sampled.
pub fn closure_samples() -> Vec<C64> {
    vec![c(1.0), c(3.0), c(0.4), Complex::new(2.0, 1.0)]
}

/// Builds `f_a`, `f_b` from seeds `ta`, `tb` and completes the quadrilateral
/// algebraically.
pub fn bianchi_quad<F: LoopFamily + Clone>(
    fam: &F,
    a: f64,
    b: f64,
    ta: &Vector3<f64>,
    tb: &Vector3<f64>,
) -> Result<BianchiQuad<F>> {
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        return Err(param("a, b", "must be distinct"));
    }
    let fa = backlund(fam, a, ta)?;
    let fb = backlund(fam, b, tb)?;
    let g = *fam.grid();
    let ra = fa.family.factor();
    let rb = fb.family.factor();
    let lb_hat = Field::from_fn(g, |i, j, _, _| ra.at(i, j, Complex::new(0.0, b)) * rb.line(i, j));
    let la_hat = Field::from_fn(g, |i, j, _, _| rb.at(i, j, Complex::new(0.0, a)) * ra.line(i, j));
    let rb_hat = DressingFactor::from_lines(b, lb_hat)?;
    let ra_hat = DressingFactor::from_lines(a, la_hat)?;

    let mut closure = Vec::new();
    for lambda in closure_samples() {
        let mut worst: f64 = 0.0;
        for (i, j) in g.vertices() {
            let r = rb_hat.at(i, j, lambda) * ra.at(i, j, lambda) * rb.inverse_at(i, j, lambda) * ra_hat.inverse_at(i, j, lambda);
            worst = worst.max(identity_defect(&r));
        }
        closure.push((lambda, worst));
    }
    let twisting = rb_hat
        .twisting_residual(&|i, j| fa.family.normal(i, j))
        .max(ra_hat.twisting_residual(&|i, j| fb.family.normal(i, j)));

    let fab = DressedFamily::new(fa.family.clone(), rb_hat)?;
    let fba = DressedFamily::new(fb.family.clone(), ra_hat)?;
    let permutability = g
        .vertices()
        .map(|(i, j)| (fab.position(i, j) - fba.position(i, j)).norm())
        .fold(0.0, f64::max);
    Ok(BianchiQuad {
        fa,
        fb,
        fab,
        fba,
        report: BianchiReport {
            closure,
            permutability,
            twisting,
        },
    })
}

/// Largest `|r̂_b r_a r_b⁻¹|` on a circle of `radius` around `ib` at one
/// vertex, and the same norm at `λ = 1`.
pub fn pole_growth<F: LoopFamily>(quad: &BianchiQuad<F>, i: usize, j: usize, radius: f64, samples: usize) -> (f64, f64) {
    let ra = quad.fa.family.factor();
    let rb = quad.fb.family.factor();
    let rb_hat = quad.fab.factor();
    let b = rb.a();
    let combined = |lambda: C64| frob(&(rb_hat.at(i, j, lambda) * ra.at(i, j, lambda) * rb.inverse_at(i, j, lambda)));
    let mut worst: f64 = 0.0;
    for centre in [Complex::new(0.0, b), Complex::new(0.0, -b)] {
        for k in 0..samples {
            let phase = std::f64::consts::TAU * k as f64 / samples as f64;
            worst = worst.max(combined(centre + Complex::from_polar(radius, phase)));
        }
    }
    (worst, combined(c(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ksurface::{integrate_frame, soliton_field, FrameOptions};

    fn pseudosphere(h: f64) -> (LoopConnection, VecField) {
        let g = Grid::square(-1.0, 1.0, h).unwrap();
        let s = integrate_frame(&soliton_field(g, 1.0), 1.0, &FrameOptions::default()).unwrap();
        let fam = split_connection(&s.normal).unwrap().with_position(s.f.clone()).unwrap();
        (fam, s.f)
    }

    #[test]
    fn rotation_power_matches_exponential() {
        let w = Vector3::new(0.3, -0.2, 0.5);
        let s = Complex::new(0.7, -1.3);
        let direct = crate::linalg::expm(&(complexify(&hat(&w)) * s));
        assert!(frob(&(rotation_power(&w, s) - direct)) < 1e-13);
        let tiny = Vector3::new(1e-9, 0.0, 0.0);
        let direct = crate::linalg::expm(&(complexify(&hat(&tiny)) * s));
        assert!(frob(&(rotation_power(&tiny, s) - direct)) < 1e-15);
    }

    #[test]
    fn constant_normal_gives_trivial_family() {
        let g = Grid::new(5, 5, 0.1, 0.1).unwrap();
        let n = Field::from_fn(g, |_, _, _, _| Vector3::z());
        let fam = split_connection(&n).unwrap();
        let lambda = Complex::new(0.3, 2.0);
        for (i, j) in g.faces() {
            assert!(identity_defect(&fam.transport(i, j, Axis::X, lambda)) < 1e-15);
        }
        let t = trivialize(&fam, lambda, 1e-8).unwrap();
        assert!(t.gauges.values().iter().all(|m| identity_defect(m) < 1e-15));
        let f = sym(&fam, 1.0, &SymOptions::default()).unwrap();
        assert!(f.values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn non_unit_normal_is_rejected() {
        let g = Grid::new(3, 3, 0.1, 0.1).unwrap();
        let n = Field::from_fn(g, |_, _, _, _| Vector3::new(0.0, 0.0, 2.0));
        assert!(matches!(split_connection(&n), Err(Error::Data(_))));
    }

    #[test]
    fn loop_symmetries_hold_edgewise() {
        let (fam, _) = pseudosphere(1.0 / 8.0);
        assert!(fam.d_parallel_residual() < 1e-14);
        assert!(fam.anticommutation_residual() < 1e-13);
        for lambda in [c(2.0), Complex::new(0.5, -0.3), Complex::new(0.0, 1.0)] {
            assert!(fam.symmetry_residual(lambda) < 1e-12);
        }
        assert_eq!(holonomy_residual(&fam, c(1.0)).unwrap().defect, 0.0);
    }

    #[test]
    fn sym_recovers_the_surface() {
        let (fam, f) = pseudosphere(1.0 / 32.0);
        let s = sym(&fam, 1.0, &SymOptions::default()).unwrap();
        let base = f.at(0, 0);
        let worst = s
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - (b - base)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn dressing_factor_basics() {
        let (fam, _) = pseudosphere(1.0 / 8.0);
        let t0 = Vector3::x();
        let bt = backlund(&fam, 1.5, &t0).unwrap();
        let r = bt.family.factor();
        assert!(identity_defect(&r.at(0, 0, c(1.0))) < 1e-14);
        let lambda = Complex::new(0.7, 0.4);
        let lhs = r.at(2, 3, lambda.conj());
        let rhs = r.at(2, 3, lambda).map(|z| z.conj());
        assert!(frob(&(lhs - rhs)) < 1e-12);
        let expected = 2.0 / (1.5 + 1.0 / 1.5);
        let d = (bt.position.at(0, 0) - fam.position(0, 0) + t0 * expected).norm();
        assert!(d < 1e-12, "{d}");
        assert!(r.twisting_residual(&|i, j| fam.normal(i, j)) < 1e-7);
    }

    #[test]
    fn equal_parameters_are_rejected() {
        let (fam, _) = pseudosphere(1.0 / 4.0);
        let t = Vector3::x();
        assert!(matches!(bianchi_quad(&fam, 1.0, 1.0, &t, &t), Err(Error::Parameter { .. })));
    }
}
