//! Rectangular coordinate grids, sampled fields and finite-difference
//! stencils.

use std::ops::{Add, Mul};

use nalgebra::Vector3;

use crate::error::{param, Error, Result};

/// A rectangular grid of `nx × ny` vertices with steps `hx, hy`.
///
/// Vertex `(i, j)` sits at `(x0 + i·hx, y0 + j·hy)`; flat storage is row-major
/// with `i` fastest, so `index(i, j) = j·nx + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(param("extents", format!("need at least 2x2 vertices, got {nx}x{ny}")));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(param("steps", format!("must be positive, got ({hx}, {hy})")));
        }
        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            x0: 0.0,
            y0: 0.0,
        })
    }

    pub fn with_origin(mut self, x0: f64, y0: f64) -> Self {
        self.x0 = x0;
        self.y0 = y0;
        self
    }

    /// The grid on `[lo, hi]²` with step `h`; `(hi - lo)/h` must be an integer.
    pub fn square(lo: f64, hi: f64, h: f64) -> Result<Self> {
        Self::rectangle((lo, hi), (lo, hi), h)
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), h: f64) -> Result<Self> {
        let count = |lo: f64, hi: f64| -> Result<usize> {
            let cells = (hi - lo) / h;
            if !(cells >= 1.0) || (cells - cells.round()).abs() > 1e-9 {
                return Err(param("steps", format!("({lo}, {hi}) is not a multiple of {h}")));
            }
            Ok(cells.round() as usize + 1)
        };
        Ok(Self::new(count(x.0, x.1)?, count(y.0, y.1)?, h, h)?.with_origin(x.0, y.0))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.x0, self.y0)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy)
    }

    /// All vertices in storage order.
    pub fn vertices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }

    /// Lower-left corners of all faces.
    pub fn faces(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny - 1).flat_map(move |j| (0..self.nx - 1).map(move |i| (i, j)))
    }

    /// The same domain with halved steps.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            hx: self.hx / 2.0,
            hy: self.hy / 2.0,
            ..*self
        }
    }

    /// True if the vertex is at least `depth` steps away from every side.
    pub fn is_interior(&self, i: usize, j: usize, depth: usize) -> bool {
        i >= depth && j >= depth && i + depth < self.nx && j + depth < self.ny
    }
}

/// Per-vertex values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<V> {
    grid: Grid,
    values: Vec<V>,
}

pub type ScalarField = Field<f64>;
pub type VecField = Field<Vector3<f64>>;

impl<V> Field<V> {
    pub fn new(grid: Grid, values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(i, j, x, y)` at every vertex.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize, f64, f64) -> V) -> Self {
        let values = grid
            .vertices()
            .map(|(i, j)| {
                let (x, y) = grid.coords(i, j);
                f(i, j, x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &V {
        &self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut V {
        let k = self.grid.index(i, j);
        &mut self.values[k]
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> Field<W> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }
}

/// Accuracy order of the central finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdOrder {
    Second,
    Fourth,
    #[default]
    Sixth,
}

impl FdOrder {
    /// Half-width of the stencil.
    pub fn radius(self) -> usize {
        match self {
            FdOrder::Second => 1,
            FdOrder::Fourth => 2,
            FdOrder::Sixth => 3,
        }
    }

    /// Weights for the first derivative at offsets `-r..=r`.
    fn first(self) -> &'static [f64] {
        match self {
            FdOrder::Second => &[-0.5, 0.0, 0.5],
            FdOrder::Fourth => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
            FdOrder::Sixth => &[
                -1.0 / 60.0,
                3.0 / 20.0,
                -0.75,
                0.0,
                0.75,
                -3.0 / 20.0,
                1.0 / 60.0,
            ],
        }
    }

    /// Weights for the second derivative at offsets `-r..=r`.
    fn second(self) -> &'static [f64] {
        match self {
            FdOrder::Second => &[1.0, -2.0, 1.0],
            FdOrder::Fourth => &[-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0],
            FdOrder::Sixth => &[
                1.0 / 90.0,
                -3.0 / 20.0,
                1.5,
                -49.0 / 18.0,
                1.5,
                -3.0 / 20.0,
                1.0 / 90.0,
            ],
        }
    }
}

/// Coordinate direction on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

fn offset(i: usize, j: usize, axis: Axis, k: isize) -> (usize, usize) {
    match axis {
        Axis::X => ((i as isize + k) as usize, j),
        Axis::Y => (i, (j as isize + k) as usize),
    }
}

fn stencil<V>(field: &Field<V>, i: usize, j: usize, axis: Axis, w: &[f64], scale: f64) -> Option<V>
where
    V: Copy + Add<Output = V> + Mul<f64, Output = V>,
{
    let r = (w.len() / 2) as isize;
    let g = field.grid();
    let (lo, n) = match axis {
        Axis::X => (i as isize, g.nx() as isize),
        Axis::Y => (j as isize, g.ny() as isize),
    };
    if lo - r < 0 || lo + r >= n {
        return None;
    }
    let mut acc: Option<V> = None;
    for (k, &c) in (-r..=r).zip(w) {
        if c == 0.0 {
            continue;
        }
        let (a, b) = offset(i, j, axis, k);
        let term = *field.at(a, b) * (c * scale);
        acc = Some(match acc {
            Some(s) => s + term,
            None => term,
        });
    }
    acc
}

/// Central first derivative along `axis`; `None` if the stencil leaves the grid.
pub fn partial<V>(field: &Field<V>, i: usize, j: usize, axis: Axis, order: FdOrder) -> Option<V>
where
    V: Copy + Add<Output = V> + Mul<f64, Output = V>,
{
    let h = step(field.grid(), axis);
    stencil(field, i, j, axis, order.first(), 1.0 / h)
}

/// Finite-difference weights for the `deriv`-th derivative at 0 from samples
/// at `offsets` (in units of the step), by Fornberg's recursion.
pub fn fd_weights(offsets: &[f64], deriv: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

/// First derivative along `axis` at any vertex: central where the stencil
/// fits, otherwise a one-sided stencil with the same number of points.
pub fn partial_anywhere<V>(field: &Field<V>, i: usize, j: usize, axis: Axis, order: FdOrder) -> V
where
    V: Copy + Add<Output = V> + Mul<f64, Output = V>,
{
    if let Some(v) = partial(field, i, j, axis, order) {
        return v;
    }
    let g = field.grid();
    let (n, k) = match axis {
        Axis::X => (g.nx(), i),
        Axis::Y => (g.ny(), j),
    };
    let width = (2 * order.radius() + 1).min(n);
    let start = k.saturating_sub(width / 2).min(n - width);
    let offsets: Vec<f64> = (start..start + width).map(|m| m as f64 - k as f64).collect();
    let w = fd_weights(&offsets, 1);
    let h = step(g, axis);
    let at = |m: usize| match axis {
        Axis::X => *field.at(m, j),
        Axis::Y => *field.at(i, m),
    };
    let mut acc = at(start) * (w[0] / h);
    for (q, &c) in w.iter().enumerate().skip(1) {
        acc = acc + at(start + q) * (c / h);
    }
    acc
}

/// Central second derivative along `axis`.
pub fn second_partial<V>(field: &Field<V>, i: usize, j: usize, axis: Axis, order: FdOrder) -> Option<V>
where
    V: Copy + Add<Output = V> + Mul<f64, Output = V>,
{
    let h = step(field.grid(), axis);
    stencil(field, i, j, axis, order.second(), 1.0 / (h * h))
}

/// Central mixed derivative `∂x∂y`, the tensor product of two first-derivative
/// stencils.
pub fn mixed_partial<V>(field: &Field<V>, i: usize, j: usize, order: FdOrder) -> Option<V>
where
    V: Copy + Add<Output = V> + Mul<f64, Output = V>,
{
    let g = field.grid();
    let r = order.radius();
    if !g.is_interior(i, j, r) {
        return None;
    }
    let w = order.first();
    let scale = 1.0 / (g.hx() * g.hy());
    let mut acc: Option<V> = None;
    for (a, &ca) in (-(r as isize)..=r as isize).zip(w) {
        if ca == 0.0 {
            continue;
        }
        for (b, &cb) in (-(r as isize)..=r as isize).zip(w) {
            if cb == 0.0 {
                continue;
            }
            let v = *field.at((i as isize + a) as usize, (j as isize + b) as usize) * (ca * cb * scale);
            acc = Some(match acc {
                Some(s) => s + v,
                None => v,
            });
        }
    }
    acc
}

fn step(g: &Grid, axis: Axis) -> f64 {
    match axis {
        Axis::X => g.hx(),
        Axis::Y => g.hy(),
    }
}

/// Lagrange interpolation of equispaced samples `ys` (spacing `h`, first node
/// at 0), using the `width` nodes nearest to `x`. Returns value and derivative.
pub fn interpolate(ys: &[f64], h: f64, x: f64, width: usize) -> (f64, f64) {
    let n = ys.len();
    let width = width.min(n);
    let centre = (x / h).round() as isize;
    let mut start = centre - (width as isize - 1) / 2;
    if (x / h) < centre as f64 && width.is_multiple_of(2) {
        start -= 1;
    }
    let start = start.clamp(0, (n - width) as isize) as usize;
    let nodes: Vec<f64> = (start..start + width).map(|k| k as f64 * h).collect();
    let mut value = 0.0;
    let mut deriv = 0.0;
    for a in 0..width {
        let mut basis = 1.0;
        let mut dbasis = 0.0;
        for b in 0..width {
            if b == a {
                continue;
            }
            let denom = nodes[a] - nodes[b];
            let factor = (x - nodes[b]) / denom;
            dbasis = dbasis * factor + basis / denom;
            basis *= factor;
        }
        value += ys[start + a] * basis;
        deriv += ys[start + a] * dbasis;
    }
    (value, deriv)
}
