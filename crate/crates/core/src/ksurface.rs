//! Surfaces of constant negative curvature in Tchebyshev asymptotic
//! coordinates: the sine-Gordon equation, frame reconstruction, Lelieuvre's
//! formula and finite-difference curvature estimates.
//!
//! Conventions: with `ρ > 0` the surface has `K = -1/ρ²`,
//! `I = dξ² + 2 cos ω dξdη + dη²`, `II = (2/ρ) sin ω dξdη` and
//! `ω_ξη = sin ω / ρ²`.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};

use crate::error::{param, Error, Result};
use crate::grid::{interpolate, mixed_partial, partial, second_partial, Axis, FdOrder, Field, Grid, ScalarField, VecField};
use crate::linalg::expm;

/// `|sin ω|` below this marks a vertex where the immersion degenerates.
pub const DEGENERATE_SIN: f64 = 1e-6;

/// The 1-soliton `ω = 4 arctan(exp((ξ + η)/ρ))`.
pub fn one_soliton(xi: f64, eta: f64, rho: f64) -> f64 {
    4.0 * ((xi + eta) / rho).exp().atan()
}

/// The 1-soliton sampled on `grid`.
pub fn soliton_field(grid: Grid, rho: f64) -> ScalarField {
    Field::from_fn(grid, |_, _, x, y| one_soliton(x, y, rho))
}

/// Marches `ω_ξη = sin ω / ρ²` from data on row 0 (`j = 0`, length `nx`) and
/// column 0 (`i = 0`, length `ny`).
///
/// Each cell is closed by a predictor using the mean of its three known
/// corners and one corrector sweep using the mean of all four.
pub fn solve_sine_gordon(xi_axis: &[f64], eta_axis: &[f64], rho: f64, grid: Grid) -> Result<ScalarField> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(param("rho", "must be finite and nonzero"));
    }
    if xi_axis.len() != grid.nx() {
        return Err(Error::DimensionMismatch {
            expected: grid.nx(),
            got: xi_axis.len(),
        });
    }
    if eta_axis.len() != grid.ny() {
        return Err(Error::DimensionMismatch {
            expected: grid.ny(),
            got: eta_axis.len(),
        });
    }
    if (xi_axis[0] - eta_axis[0]).abs() > 1e-12 * (1.0 + xi_axis[0].abs()) {
        return Err(Error::Data(format!(
            "boundary data disagree at the corner: {} vs {}",
            xi_axis[0], eta_axis[0]
        )));
    }
    let c = grid.hx() * grid.hy() / (rho * rho);
    let mut w = Field::new(grid, vec![0.0; grid.len()])?;
    for (i, &v) in xi_axis.iter().enumerate() {
        *w.at_mut(i, 0) = v;
    }
    for (j, &v) in eta_axis.iter().enumerate() {
        *w.at_mut(0, j) = v;
    }
    for j in 0..grid.ny() - 1 {
        for i in 0..grid.nx() - 1 {
            let (w00, w10, w01) = (*w.at(i, j), *w.at(i + 1, j), *w.at(i, j + 1));
            let base = w10 + w01 - w00;
            let predicted = base + c * ((w00 + w10 + w01) / 3.0).sin();
            let corrected = base + c * ((w00 + w10 + w01 + predicted) / 4.0).sin();
            *w.at_mut(i + 1, j + 1) = corrected;
        }
    }
    Ok(w)
}

/// Solves with boundary data sampled from a closed-form angle.
pub fn solve_sine_gordon_from(grid: Grid, rho: f64, exact: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
    let xi_axis: Vec<f64> = (0..grid.nx())
        .map(|i| {
            let (x, y) = grid.coords(i, 0);
            exact(x, y)
        })
        .collect();
    let eta_axis: Vec<f64> = (0..grid.ny())
        .map(|j| {
            let (x, y) = grid.coords(0, j);
            exact(x, y)
        })
        .collect();
    solve_sine_gordon(&xi_axis, &eta_axis, rho, grid)
}

/// Position and frame at the base vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameInit {
    pub origin: Vector3<f64>,
    /// Unit `f_ξ`.
    pub tangent: Vector3<f64>,
    /// Unit normal, orthogonal to `tangent`.
    pub normal: Vector3<f64>,
}

impl Default for FrameInit {
    fn default() -> Self {
        Self {
            origin: Vector3::zeros(),
            tangent: Vector3::x(),
            normal: Vector3::z(),
        }
    }
}

/// What to do with vertices where `|sin ω| < DEGENERATE_SIN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneracyPolicy {
    /// Fail naming the first such vertex.
    Error,
    /// Integrate through (the frame stays regular) and mark the vertex.
    #[default]
    Mask,
}

/// Signs in `f_ξ = s_ξ ρ N × N_ξ`, `f_η = s_η ρ N × N_η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LelieuvreSigns {
    pub xi: f64,
    pub eta: f64,
}

impl Default for LelieuvreSigns {
    fn default() -> Self {
        Self { xi: 1.0, eta: -1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameOptions {
    pub init: FrameInit,
    pub policy: DegeneracyPolicy,
    pub signs: LelieuvreSigns,
}

/// A reconstructed surface together with its adapted frame.
#[derive(Debug, Clone)]
pub struct KSurface {
    pub rho: f64,
    pub omega: ScalarField,
    pub f: VecField,
    /// The frame normal. It is smooth across lines where `sin ω` changes
    /// sign, where it differs from `f_ξ × f_η / |f_ξ × f_η|` by a sign.
    pub normal: VecField,
    /// Orthonormal frame `(f_ξ, N × f_ξ, N)` as columns.
    pub frames: Field<Matrix3<f64>>,
    /// `true` where `|sin ω| < DEGENERATE_SIN`.
    pub degenerate: Vec<bool>,
    /// Largest distance between the positions reached by the two spanning
    /// orders (row first, column first).
    pub path_defect: f64,
}

impl KSurface {
    /// Largest `|N·e₁|`, `|N·e₂|` over vertices. The frame equations give
    /// `f_ξ` and `f_η` as combinations of `e₁, e₂`, so this bounds
    /// `|N·f_ξ|` and `|N·f_η|` per unit speed.
    pub fn gauss_map_residual(&self) -> f64 {
        self.frames
            .values()
            .iter()
            .zip(self.normal.values())
            .map(|(fr, n)| n.dot(&fr.column(0)).abs().max(n.dot(&fr.column(1)).abs()))
            .fold(0.0, f64::max)
    }
}

const GAUSS_OFFSETS: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];
const INTERP_WIDTH: usize = 5;

/// Generator of the frame motion along `ξ` in the affine `4 × 4` form
/// `dM = M B`, `M = [[F, f], [0, 1]]`.
fn generator_xi(omega_xi: f64, rho: f64, signs: LelieuvreSigns) -> Matrix4<f64> {
    let k = 1.0 / rho;
    #[rustfmt::skip]
    let b = Matrix4::new(
        0.0,       omega_xi, 0.0, signs.xi,
        -omega_xi, 0.0,      -k,  0.0,
        0.0,       k,        0.0, 0.0,
        0.0,       0.0,      0.0, 0.0,
    );
    b
}

fn generator_eta(omega: f64, rho: f64, signs: LelieuvreSigns) -> Matrix4<f64> {
    let (s, c) = omega.sin_cos();
    let k = 1.0 / rho;
    let t = -signs.eta;
    #[rustfmt::skip]
    let b = Matrix4::new(
        0.0,   0.0,    -s * k, t * c,
        0.0,   0.0,    c * k,  t * s,
        s * k, -c * k, 0.0,    0.0,
        0.0,   0.0,    0.0,    0.0,
    );
    b
}

/// One fourth-order Magnus step for `dM = M B`.
fn magnus_step(m: &Matrix4<f64>, b1: &Matrix4<f64>, b2: &Matrix4<f64>, h: f64) -> Matrix4<f64> {
    let comm = b1 * b2 - b2 * b1;
    let omega = (b1 + b2) * (h / 2.0) + comm * (h * h * 3f64.sqrt() / 12.0);
    m * expm(&omega)
}

fn march_xi(m: &mut Matrix4<f64>, row: &[f64], h: f64, k: usize, rho: f64, signs: LelieuvreSigns) {
    let gens: Vec<Matrix4<f64>> = GAUSS_OFFSETS
        .iter()
        .map(|c| {
            let (_, d) = interpolate(row, h, (k as f64 + c) * h, INTERP_WIDTH);
            generator_xi(d, rho, signs)
        })
        .collect();
    *m = magnus_step(m, &gens[0], &gens[1], h);
}

fn march_eta(m: &mut Matrix4<f64>, column: &[f64], h: f64, k: usize, rho: f64, signs: LelieuvreSigns) {
    let gens: Vec<Matrix4<f64>> = GAUSS_OFFSETS
        .iter()
        .map(|c| {
            let (w, _) = interpolate(column, h, (k as f64 + c) * h, INTERP_WIDTH);
            generator_eta(w, rho, signs)
        })
        .collect();
    *m = magnus_step(m, &gens[0], &gens[1], h);
}

fn initial_state(init: &FrameInit) -> Result<Matrix4<f64>> {
    let t = init.tangent;
    let n = init.normal;
    if (t.norm() - 1.0).abs() > 1e-10 || (n.norm() - 1.0).abs() > 1e-10 || t.dot(&n).abs() > 1e-10 {
        return Err(param("init", "tangent and normal must be orthonormal"));
    }
    let e2 = n.cross(&t);
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 1>(0, 0).copy_from(&t);
    m.fixed_view_mut::<3, 1>(0, 1).copy_from(&e2);
    m.fixed_view_mut::<3, 1>(0, 2).copy_from(&n);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&init.origin);
    Ok(m)
}

/// Integrates the Gauss–Weingarten system determined by `ω` and `ρ`: along
/// row 0 in `ξ`, then up every column in `η`, with a fourth-order Magnus
/// scheme on the affine frame and `ω` interpolated between vertices.
pub fn integrate_frame(omega: &ScalarField, rho: f64, opts: &FrameOptions) -> Result<KSurface> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(param("rho", "must be finite and nonzero"));
    }
    let g = *omega.grid();
    let degenerate: Vec<bool> = omega.values().iter().map(|w| w.sin().abs() < DEGENERATE_SIN).collect();
    if opts.policy == DegeneracyPolicy::Error {
        if let Some((i, j)) = g.vertices().find(|&(i, j)| degenerate[g.index(i, j)]) {
            return Err(Error::Degenerate {
                i,
                j,
                reason: format!("|sin ω| = {:e}", omega.at(i, j).sin().abs()),
            });
        }
    }
    let start = initial_state(&opts.init)?;
    let rows: Vec<Vec<f64>> = (0..g.ny()).map(|j| (0..g.nx()).map(|i| *omega.at(i, j)).collect()).collect();
    let cols: Vec<Vec<f64>> = (0..g.nx()).map(|i| (0..g.ny()).map(|j| *omega.at(i, j)).collect()).collect();

    let mut states = vec![Matrix4::zeros(); g.len()];
    let mut m = start;
    states[g.index(0, 0)] = m;
    for i in 0..g.nx() - 1 {
        march_xi(&mut m, &rows[0], g.hx(), i, rho, opts.signs);
        states[g.index(i + 1, 0)] = m;
    }
    for i in 0..g.nx() {
        let mut m = states[g.index(i, 0)];
        for j in 0..g.ny() - 1 {
            march_eta(&mut m, &cols[i], g.hy(), j, rho, opts.signs);
            states[g.index(i, j + 1)] = m;
        }
    }

    // Second spanning order: column 0 first, then along each row.
    let mut path_defect: f64 = 0.0;
    let mut m = start;
    let mut column_start = vec![start; g.ny()];
    for j in 0..g.ny() - 1 {
        march_eta(&mut m, &cols[0], g.hy(), j, rho, opts.signs);
        column_start[j + 1] = m;
    }
    for j in 0..g.ny() {
        let mut m = column_start[j];
        for i in 0..g.nx() - 1 {
            march_xi(&mut m, &rows[j], g.hx(), i, rho, opts.signs);
            let other = &states[g.index(i + 1, j)];
            let d = (m.fixed_view::<3, 1>(0, 3) - other.fixed_view::<3, 1>(0, 3)).norm();
            path_defect = path_defect.max(d);
        }
    }

    let frames = Field::new(g, states.iter().map(|s| s.fixed_view::<3, 3>(0, 0).into_owned()).collect())?;
    let f = Field::new(g, states.iter().map(|s| s.fixed_view::<3, 1>(0, 3).into_owned()).collect())?;
    let normal = frames.map(|fr| fr.column(2).into_owned());
    Ok(KSurface {
        rho,
        omega: omega.clone(),
        f,
        normal,
        frames,
        degenerate,
        path_defect,
    })
}

/// Worst Lelieuvre residuals over vertices where the stencils fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LelieuvreResidual {
    /// `max |ρ N × N_ξ - f_ξ|`.
    pub xi: f64,
    /// `max |ρ N × N_η + f_η|`.
    pub eta: f64,
}

impl LelieuvreResidual {
    pub fn max(&self) -> f64 {
        self.xi.max(self.eta)
    }
}

/// Finite-difference check of `f_ξ = ρ N × N_ξ`, `f_η = -ρ N × N_η`. The
/// residual is unchanged under `N -> -N`.
pub fn lelieuvre_residual(f: &VecField, normal: &VecField, rho: f64, order: FdOrder) -> Result<LelieuvreResidual> {
    if f.grid() != normal.grid() {
        return Err(param("normal", "must live on the same grid as f"));
    }
    let g = f.grid();
    let mut out = LelieuvreResidual { xi: 0.0, eta: 0.0 };
    for (i, j) in g.vertices() {
        if !g.is_interior(i, j, order.radius()) {
            continue;
        }
        let n = normal.at(i, j);
        let fx = partial(f, i, j, Axis::X, order).expect("interior");
        let fy = partial(f, i, j, Axis::Y, order).expect("interior");
        let nx = partial(normal, i, j, Axis::X, order).expect("interior");
        let ny = partial(normal, i, j, Axis::Y, order).expect("interior");
        out.xi = out.xi.max((n.cross(&nx) * rho - fx).norm());
        out.eta = out.eta.max((n.cross(&ny) * rho + fy).norm());
    }
    Ok(out)
}

/// Pointwise fundamental forms and curvatures. Entries are `None` where the
/// vertex is too close to the boundary or not immersed.
#[derive(Debug, Clone)]
pub struct FundForms {
    pub first: Vec<Option<Matrix2<f64>>>,
    pub second: Vec<Option<Matrix2<f64>>>,
    pub third: Vec<Option<Matrix2<f64>>>,
    pub mean: Vec<Option<f64>>,
    pub gauss: Vec<Option<f64>>,
    /// Normal `f_x × f_y / |f_x × f_y|`, oriented continuously along the
    /// spanning order; `None` where the surface is not immersed.
    pub normal: Vec<Option<Vector3<f64>>>,
    /// Vertices whose tangent vectors are (nearly) parallel.
    pub non_immersed: Vec<bool>,
    pub grid: Grid,
}

/// `|f_x × f_y| < IMMERSION_TOL |f_x| |f_y|` flags a non-immersed vertex.
pub const IMMERSION_TOL: f64 = 1e-4;

/// Estimates `I`, `II`, `III`, `H`, `K` by central differences of `f`; `III`
/// uses differences of the normal field.
pub fn fundamental_forms(f: &VecField, order: FdOrder) -> FundForms {
    let g = *f.grid();
    let r = order.radius();
    let n = g.len();
    let mut first = vec![None; n];
    let mut second = vec![None; n];
    let mut raw_normal: Vec<Option<Vector3<f64>>> = vec![None; n];
    let mut non_immersed = vec![false; n];
    for (i, j) in g.vertices() {
        if !g.is_interior(i, j, r) {
            continue;
        }
        let k = g.index(i, j);
        let fx = partial(f, i, j, Axis::X, order).expect("interior");
        let fy = partial(f, i, j, Axis::Y, order).expect("interior");
        let cross = fx.cross(&fy);
        if cross.norm() < IMMERSION_TOL * fx.norm() * fy.norm() {
            non_immersed[k] = true;
            continue;
        }
        let nv = cross / cross.norm();
        let fxx = second_partial(f, i, j, Axis::X, order).expect("interior");
        let fyy = second_partial(f, i, j, Axis::Y, order).expect("interior");
        let fxy = mixed_partial(f, i, j, order).expect("interior");
        first[k] = Some(Matrix2::new(fx.dot(&fx), fx.dot(&fy), fx.dot(&fy), fy.dot(&fy)));
        second[k] = Some(Matrix2::new(nv.dot(&fxx), nv.dot(&fxy), nv.dot(&fxy), nv.dot(&fyy)));
        raw_normal[k] = Some(nv);
    }

    // Orient normals continuously: along row 0, then up each column, each
    // compared with the last oriented vertex on its path.
    let mut flip = vec![false; n];
    let mut normal = raw_normal.clone();
    let mut reference: Option<Vector3<f64>> = None;
    let orient = |k: usize, normal: &mut [Option<Vector3<f64>>], flip: &mut [bool], reference: &mut Option<Vector3<f64>>| {
        if let Some(v) = normal[k] {
            if let Some(r) = reference {
                if v.dot(r) < 0.0 {
                    normal[k] = Some(-v);
                    flip[k] = true;
                }
            }
            *reference = normal[k];
        }
    };
    let row0 = (0..g.ny()).find(|&j| (0..g.nx()).any(|i| raw_normal[g.index(i, j)].is_some()));
    if let Some(j0) = row0 {
        let mut row_refs = vec![None; g.nx()];
        for (i, slot) in row_refs.iter_mut().enumerate() {
            orient(g.index(i, j0), &mut normal, &mut flip, &mut reference);
            *slot = normal[g.index(i, j0)];
        }
        for (i, start) in row_refs.iter().enumerate() {
            let mut col_ref = start.or(reference);
            for j in j0 + 1..g.ny() {
                orient(g.index(i, j), &mut normal, &mut flip, &mut col_ref);
            }
        }
    }
    for k in 0..n {
        if flip[k] {
            second[k] = second[k].map(|m| -m);
        }
    }

    let mut mean = vec![None; n];
    let mut gauss = vec![None; n];
    for k in 0..n {
        if let (Some(i1), Some(i2)) = (first[k], second[k]) {
            let det1 = i1.determinant();
            let shape = i1.try_inverse().map(|inv| inv * i2);
            if let Some(s) = shape {
                mean[k] = Some(0.5 * s.trace());
                gauss[k] = Some(i2.determinant() / det1);
            }
        }
    }

    let mut third = vec![None; n];
    let nfield = Field::new(g, normal.iter().map(|v| v.unwrap_or_else(Vector3::zeros)).collect())
        .expect("sizes match");
    for (i, j) in g.vertices() {
        if !g.is_interior(i, j, 2 * r) {
            continue;
        }
        let stencil_ok = (0..=2 * r).all(|a| {
            let off = a as isize - r as isize;
            normal[g.index((i as isize + off) as usize, j)].is_some()
                && normal[g.index(i, (j as isize + off) as usize)].is_some()
        });
        if !stencil_ok {
            continue;
        }
        let nx = partial(&nfield, i, j, Axis::X, order).expect("interior");
        let ny = partial(&nfield, i, j, Axis::Y, order).expect("interior");
        third[g.index(i, j)] = Some(Matrix2::new(nx.dot(&nx), nx.dot(&ny), nx.dot(&ny), ny.dot(&ny)));
    }

    FundForms {
        first,
        second,
        third,
        mean,
        gauss,
        normal,
        non_immersed,
        grid: g,
    }
}

impl FundForms {
    /// Largest `|K - target|` over vertices with a curvature estimate.
    pub fn gauss_deviation(&self, target: f64) -> f64 {
        self.gauss
            .iter()
            .flatten()
            .map(|k| (k - target).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|K - target|` over vertices where the coordinate directions
    /// meet at an angle with `sin ≥ min_sin`.
    pub fn gauss_deviation_regular(&self, target: f64, min_sin: f64) -> f64 {
        self.first
            .iter()
            .zip(&self.gauss)
            .filter_map(|(i1, k)| {
                let (i1, k) = (i1.as_ref()?, k.as_ref()?);
                let sin = (i1.determinant() / (i1[(0, 0)] * i1[(1, 1)])).max(0.0).sqrt();
                (sin >= min_sin).then(|| (k - target).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Largest relative residual of `III - 2H II + K I = 0`, normalised by
    /// `|III| + 2|H||II| + |K||I|` (Frobenius norms).
    pub fn cayley_hamilton_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.first.len() {
            if let (Some(i1), Some(i2), Some(i3), Some(h), Some(kk)) =
                (self.first[k], self.second[k], self.third[k], self.mean[k], self.gauss[k])
            {
                let res = i3 - i2 * (2.0 * h) + i1 * kk;
                let scale = i3.norm() + 2.0 * h.abs() * i2.norm() + kk.abs() * i1.norm();
                worst = worst.max(res.norm() / scale);
            }
        }
        worst
    }

    /// Number of vertices carrying curvature estimates.
    pub fn estimated(&self) -> usize {
        self.gauss.iter().filter(|k| k.is_some()).count()
    }
}

/// Deviation of the coordinate speeds from one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TchebyshevReport {
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `|f_x| = |f_y| = 1` at every vertex where the stencil fits.
pub fn check_tchebyshev(f: &VecField, tolerance: f64, order: FdOrder) -> TchebyshevReport {
    let g = f.grid();
    let mut deviation: f64 = 0.0;
    for (i, j) in g.vertices() {
        if let (Some(fx), Some(fy)) = (partial(f, i, j, Axis::X, order), partial(f, i, j, Axis::Y, order)) {
            deviation = deviation.max((fx.norm() - 1.0).abs()).max((fy.norm() - 1.0).abs());
        }
    }
    TchebyshevReport {
        deviation,
        tolerance,
        pass: deviation <= tolerance,
    }
}

/// The 1-soliton surface in closed form: with `u = (ξ+η)/ρ`, `v = (ξ-η)/ρ`,
/// `f = ρ (sech u cos v, sech u sin v, u - tanh u)` and the smooth normal
/// `N = (-tanh u cos v, -tanh u sin v, -sech u)`. Its angle is
/// [`one_soliton`] and it satisfies the Lelieuvre signs of
/// [`LelieuvreSigns::default`].
pub fn pseudosphere_patch(grid: Grid, rho: f64) -> (VecField, VecField) {
    let uv = |x: f64, y: f64| ((x + y) / rho, (x - y) / rho);
    let f = Field::from_fn(grid, |_, _, x, y| {
        let (u, v) = uv(x, y);
        let s = 1.0 / u.cosh();
        Vector3::new(s * v.cos(), s * v.sin(), u - u.tanh()) * rho
    });
    let n = Field::from_fn(grid, |_, _, x, y| {
        let (u, v) = uv(x, y);
        Vector3::new(-u.tanh() * v.cos(), -u.tanh() * v.sin(), -1.0 / u.cosh())
    });
    (f, n)
}

/// Frame data of [`pseudosphere_patch`] at the base vertex of `grid`.
pub fn pseudosphere_init(grid: Grid, rho: f64) -> FrameInit {
    let (x, y) = grid.coords(0, 0);
    let (u, v) = ((x + y) / rho, (x - y) / rho);
    let (s, t) = (1.0 / u.cosh(), u.tanh());
    // f_ξ = f_u/ρ·ρ + f_v/ρ·ρ with the unit vectors T = f_u/tanh u, E = f_v/sech u
    let f_xi = Vector3::new(-s * t * v.cos() - s * v.sin(), -s * t * v.sin() + s * v.cos(), t * t);
    FrameInit {
        origin: Vector3::new(s * v.cos(), s * v.sin(), u - t) * rho,
        tangent: f_xi,
        normal: Vector3::new(-t * v.cos(), -t * v.sin(), -s),
    }
}

/// The round sphere of `radius` in polar coordinates `(θ, φ)` taken from the
/// grid coordinates, with its outward normal.
pub fn sphere_patch(grid: Grid, radius: f64) -> (VecField, VecField) {
    let n = Field::from_fn(grid, |_, _, th, ph| Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
    let f = n.map(|v| v * radius);
    (f, n)
}
