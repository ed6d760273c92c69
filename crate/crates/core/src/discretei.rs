//! Discrete isothermic surfaces on `Z²` and `Z³` quad-graphs and their flat
//! families of discrete connections `Γ^t`.
//!
//! Faces are labelled `i = (m, n)`, `j = (m+1, n)`, `k = (m+1, n+1)`,
//! `l = (m, n+1)`. A map is isothermic with factorising function `a` when
//! every face is concircular with `(f(l), f(j); f(i), f(k)) = a(i,j)/a(i,l)`.

use nalgebra::{Matrix5, Vector3, Vector5};

use crate::error::{param, Error, Result};
use crate::geomcore::gamma::gamma_matrix;
use crate::geomcore::lightcone::{project_vector, projective_distance};
use crate::geomcore::{concircularity_residual, cross_ratio, inner, lift_vector, metric_defect, orth_inverse, NullLine};
use crate::linalg::{frob, identity_defect};

/// `|(x, y)| / (|x| |y|)` below this means two null lines coincide.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Sample parameters for "flat for all `t`".
pub const T_SAMPLES: [f64; 5] = [-2.0, -0.5, 0.37, 1.9, 7.0];

/// A map from an `n₁ × n₂` rectangle of `Z²` to the projective light cone.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMap {
    n: [usize; 2],
    lines: Vec<Vector5<f64>>,
}

fn unit(v: Vector5<f64>) -> Vector5<f64> {
    v / v.norm()
}

impl QuadMap {
    /// Index order is `m + n₁ n`. Rejects non-null or coincident neighbours.
    pub fn new(n: [usize; 2], lines: Vec<Vector5<f64>>) -> Result<Self> {
        if n[0] < 2 || n[1] < 2 {
            return Err(param("n", "needs at least 2 × 2 vertices"));
        }
        if lines.len() != n[0] * n[1] {
            return Err(Error::DimensionMismatch {
                expected: n[0] * n[1],
                got: lines.len(),
            });
        }
        let lines: Vec<_> = lines
            .into_iter()
            .map(|v| NullLine::with_tolerance(v, 1e-10).map(|l| *l.rep()))
            .collect::<Result<_>>()?;
        let map = Self { n, lines };
        for m in 0..n[0] {
            for k in 0..n[1] {
                for (a, b) in [(m + 1, k), (m, k + 1)] {
                    if a < n[0] && b < n[1] && map.coincide(map.at(m, k), map.at(a, b)) {
                        return Err(Error::Degenerate {
                            i: m,
                            j: k,
                            reason: format!("coincides with its neighbour ({a}, {b})"),
                        });
                    }
                }
            }
        }
        Ok(map)
    }

    /// Lifts points of `R³`.
    pub fn from_points(n: [usize; 2], points: impl Fn(usize, usize) -> Vector3<f64>) -> Result<Self> {
        let mut lines = Vec::with_capacity(n[0] * n[1]);
        for k in 0..n[1] {
            for m in 0..n[0] {
                lines.push(lift_vector(&points(m, k)));
            }
        }
        Self::new(n, lines)
    }

    fn coincide(&self, x: &Vector5<f64>, y: &Vector5<f64>) -> bool {
        inner(x, y).abs() < COINCIDENCE_TOL * x.norm() * y.norm()
    }

    pub fn dims(&self) -> [usize; 2] {
        self.n
    }

    pub fn index(&self, m: usize, k: usize) -> usize {
        m + self.n[0] * k
    }

    pub fn at(&self, m: usize, k: usize) -> &Vector5<f64> {
        &self.lines[self.index(m, k)]
    }

    pub fn lines(&self) -> &[Vector5<f64>] {
        &self.lines
    }

    /// Points in `R³`, `None` at infinity.
    pub fn points(&self) -> Vec<Option<Vector3<f64>>> {
        self.lines
            .iter()
            .map(|v| project_vector(v).finite())
            .collect()
    }

    fn faces(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n[1] - 1).flat_map(move |k| (0..self.n[0] - 1).map(move |m| (m, k)))
    }
}

/// A factorising function on a rectangle: `x`-edges `(m, n) - (m+1, n)` carry
/// `along_x[m]`, `y`-edges `(m, n) - (m, n+1)` carry `along_y[n]`, so
/// opposite edges of every face agree.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    pub along_x: Vec<f64>,
    pub along_y: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(along_x: Vec<f64>, along_y: Vec<f64>) -> Result<Self> {
        if along_x.iter().chain(&along_y).any(|&a| a == 0.0 || !a.is_finite()) {
            return Err(param("a", "weights must be finite and nonzero"));
        }
        Ok(Self { along_x, along_y })
    }

    pub fn constant(n: [usize; 2], ax: f64, ay: f64) -> Result<Self> {
        Self::new(vec![ax; n[0] - 1], vec![ay; n[1] - 1])
    }

    fn check(&self, n: [usize; 2]) -> Result<()> {
        if self.along_x.len() != n[0] - 1 || self.along_y.len() != n[1] - 1 {
            return Err(param("a", "weight counts must match the map"));
        }
        Ok(())
    }

    /// `a - s` on every edge.
    pub fn shifted(&self, s: f64) -> Result<Self> {
        Self::new(
            self.along_x.iter().map(|a| a - s).collect(),
            self.along_y.iter().map(|a| a - s).collect(),
        )
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.along_x.iter().chain(&self.along_y).copied()
    }
}

/// Per-face result of [`is_isothermic`].
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCheck {
    pub face: (usize, usize),
    pub concircularity: f64,
    /// `NaN` when the face is not concircular.
    pub cross_ratio: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsothermicReport {
    pub tolerance: f64,
    pub worst_cross_ratio: f64,
    pub worst_concircularity: f64,
    pub failing: Vec<FaceCheck>,
}

impl IsothermicReport {
    pub fn pass(&self) -> bool {
        self.failing.is_empty()
    }
}

fn null(v: &Vector5<f64>) -> Result<NullLine<f64, 5>> {
    NullLine::with_tolerance(*v, 1e-10)
}

/// Checks every face for concircularity and the factorised cross-ratio.
pub fn is_isothermic(f: &QuadMap, a: &EdgeWeights, tolerance: f64) -> Result<IsothermicReport> {
    a.check(f.n)?;
    let mut rep = IsothermicReport {
        tolerance,
        worst_cross_ratio: 0.0,
        worst_concircularity: 0.0,
        failing: Vec::new(),
    };
    for (m, k) in f.faces() {
        let (i, j, kk, l) = (f.at(m, k), f.at(m + 1, k), f.at(m + 1, k + 1), f.at(m, k + 1));
        let pts = [null(l)?, null(j)?, null(i)?, null(kk)?];
        let conc = concircularity_residual(&pts);
        let expected = a.along_x[m] / a.along_y[k];
        let cr = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3]).unwrap_or(f64::NAN);
        let err = (cr - expected).abs() / expected.abs().max(1.0);
        rep.worst_concircularity = rep.worst_concircularity.max(conc);
        rep.worst_cross_ratio = rep.worst_cross_ratio.max(if err.is_nan() { f64::INFINITY } else { err });
        if !(err <= tolerance) || conc > tolerance {
            rep.failing.push(FaceCheck {
                face: (m, k),
                concircularity: conc,
                cross_ratio: cr,
                expected,
            });
        }
    }
    Ok(rep)
}

/// A discrete connection on the trivial `R^{4,1}` bundle: `Γ_{ji}` for the
/// edges `i -> j` in the positive coordinate directions; the reverse map is
/// the inverse.
#[derive(Debug, Clone)]
pub struct DiscreteConnection {
    n: [usize; 2],
    forward_x: Vec<Matrix5<f64>>,
    forward_y: Vec<Matrix5<f64>>,
    backward_x: Vec<Matrix5<f64>>,
    backward_y: Vec<Matrix5<f64>>,
}

/// Edge direction of a discrete connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    X,
    Y,
}

impl DiscreteConnection {
    /// The connection with every edge map the identity.
    pub fn trivial(n: [usize; 2]) -> Self {
        let id = vec![Matrix5::identity(); n[0] * n[1]];
        Self {
            n,
            forward_x: id.clone(),
            forward_y: id.clone(),
            backward_x: id.clone(),
            backward_y: id,
        }
    }

    fn index(&self, m: usize, k: usize) -> usize {
        m + self.n[0] * k
    }

    /// `Γ_{ji}` for `i = (m, k)` and `j` its neighbour along `dir`.
    pub fn forward(&self, m: usize, k: usize, dir: Dir) -> &Matrix5<f64> {
        let q = self.index(m, k);
        match dir {
            Dir::X => &self.forward_x[q],
            Dir::Y => &self.forward_y[q],
        }
    }

    /// `Γ_{ij}`, the inverse of [`DiscreteConnection::forward`].
    pub fn backward(&self, m: usize, k: usize, dir: Dir) -> &Matrix5<f64> {
        let q = self.index(m, k);
        match dir {
            Dir::X => &self.backward_x[q],
            Dir::Y => &self.backward_y[q],
        }
    }

    /// Largest metric defect of the edge maps.
    pub fn orthogonality_residual(&self) -> f64 {
        self.edges()
            .map(|(m, k, d)| metric_defect(self.forward(m, k, d)))
            .fold(0.0, f64::max)
    }

    /// Largest `|Γ_{ij} Γ_{ji} - 1|`.
    pub fn inverse_residual(&self) -> f64 {
        self.edges()
            .map(|(m, k, d)| identity_defect(&(self.backward(m, k, d) * self.forward(m, k, d))))
            .fold(0.0, f64::max)
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize, Dir)> + '_ {
        let [n1, n2] = self.n;
        (0..n2).flat_map(move |k| {
            (0..n1).flat_map(move |m| {
                let x = (m + 1 < n1).then_some((m, k, Dir::X));
                let y = (k + 1 < n2).then_some((m, k, Dir::Y));
                x.into_iter().chain(y)
            })
        })
    }

    /// Face holonomy `Γ_{il} Γ_{lk} Γ_{kj} Γ_{ji}`.
    pub fn face_holonomy(&self, m: usize, k: usize) -> Matrix5<f64> {
        self.backward(m, k, Dir::Y)
            * self.backward(m, k + 1, Dir::X)
            * self.forward(m + 1, k, Dir::Y)
            * self.forward(m, k, Dir::X)
    }
}

/// `Γ^t_{ji} = Γ^{f(j)}_{f(i)}(1 - t/a(i,j))`.
pub fn connection(f: &QuadMap, a: &EdgeWeights, t: f64) -> Result<DiscreteConnection> {
    a.check(f.n)?;
    let mut c = DiscreteConnection::trivial(f.n);
    let [n1, n2] = f.n;
    for k in 0..n2 {
        for m in 0..n1 {
            let q = f.index(m, k);
            for (dir, nb, w) in [
                (Dir::X, (m + 1 < n1).then(|| (m + 1, k)), a.along_x.get(m)),
                (Dir::Y, (k + 1 < n2).then(|| (m, k + 1)), a.along_y.get(k)),
            ] {
                let (Some((p, r)), Some(&w)) = (nb, w) else {
                    continue;
                };
                let s = 1.0 - t / w;
                if s.abs() < 1e-12 {
                    return Err(Error::Pole {
                        t,
                        edge: format!("({m}, {k}) -> ({p}, {r})"),
                    });
                }
                let (fi, fj) = (f.at(m, k), f.at(p, r));
                let fwd = gamma_matrix(fj, fi, s);
                let bwd = gamma_matrix(fi, fj, s);
                match dir {
                    Dir::X => {
                        c.forward_x[q] = fwd;
                        c.backward_x[q] = bwd;
                    }
                    Dir::Y => {
                        c.forward_y[q] = fwd;
                        c.backward_y[q] = bwd;
                    }
                }
            }
        }
    }
    Ok(c)
}

/// Worst face of a flatness scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    pub defect: f64,
    pub face: (usize, usize),
}

/// `max |face holonomy - 1|`.
pub fn flatness(c: &DiscreteConnection) -> FlatnessReport {
    let mut out = FlatnessReport {
        defect: 0.0,
        face: (0, 0),
    };
    for k in 0..c.n[1] - 1 {
        for m in 0..c.n[0] - 1 {
            let d = identity_defect(&c.face_holonomy(m, k));
            if !(d <= out.defect) {
                out = FlatnessReport { defect: d, face: (m, k) };
            }
        }
    }
    out
}

/// A trivialising gauge: `Γ_{ji} = T(j)⁻¹ T(i)`, `T(base) = 1`.
#[derive(Debug, Clone)]
pub struct DiscreteGauge {
    pub n: [usize; 2],
    pub gauges: Vec<Matrix5<f64>>,
    /// `max |T(j)⁻¹ T(i) - Γ_{ji}|` over all edges.
    pub reconstruction: f64,
    /// Row-first against column-first spanning orders.
    pub path_defect: f64,
}

impl DiscreteGauge {
    pub fn at(&self, m: usize, k: usize) -> &Matrix5<f64> {
        &self.gauges[m + self.n[0] * k]
    }

    /// The parallel section `σ = T⁻¹ x₀`.
    pub fn parallel_section(&self, x0: &Vector5<f64>) -> Vec<Vector5<f64>> {
        self.gauges.iter().map(|t| orth_inverse(t) * x0).collect()
    }
}

fn spanning(c: &DiscreteConnection, rows_first: bool) -> Vec<Matrix5<f64>> {
    let [n1, n2] = c.n;
    let mut t = vec![Matrix5::identity(); n1 * n2];
    // T(j) = T(i) Γ_{ji}⁻¹ = T(i) Γ_{ij}
    let mut step = |m: usize, k: usize, dir: Dir| {
        let (p, r) = match dir {
            Dir::X => (m + 1, k),
            Dir::Y => (m, k + 1),
        };
        t[p + n1 * r] = t[m + n1 * k] * c.backward(m, k, dir);
    };
    if rows_first {
        for m in 0..n1 - 1 {
            step(m, 0, Dir::X);
        }
        for m in 0..n1 {
            for k in 0..n2 - 1 {
                step(m, k, Dir::Y);
            }
        }
    } else {
        for k in 0..n2 - 1 {
            step(0, k, Dir::Y);
        }
        for k in 0..n2 {
            for m in 0..n1 - 1 {
                step(m, k, Dir::X);
            }
        }
    }
    t
}

/// Trivialises a flat connection; fails if some face holonomy exceeds
/// `max_defect`.
pub fn trivialize(c: &DiscreteConnection, max_defect: f64) -> Result<DiscreteGauge> {
    let flat = flatness(c);
    if flat.defect > max_defect {
        return Err(Error::NotFlat {
            defect: flat.defect,
            location: format!("face {:?}", flat.face),
        });
    }
    let gauges = spanning(c, true);
    let other = spanning(c, false);
    let path_defect = gauges
        .iter()
        .zip(&other)
        .map(|(a, b)| frob(&(a - b)) / frob(a).max(1.0))
        .fold(0.0, f64::max);
    let n1 = c.n[0];
    let reconstruction = c
        .edges()
        .map(|(m, k, d)| {
            let (p, r) = match d {
                Dir::X => (m + 1, k),
                Dir::Y => (m, k + 1),
            };
            let rebuilt = orth_inverse(&gauges[p + n1 * r]) * gauges[m + n1 * k];
            let g = c.forward(m, k, d);
            frob(&(rebuilt - g)) / frob(g)
        })
        .fold(0.0, f64::max);
    Ok(DiscreteGauge {
        n: c.n,
        gauges,
        reconstruction,
        path_defect,
    })
}

/// The parallel section through `x0` at the base vertex, transported edge by
/// edge along the row-first spanning tree and renormalised at every step.
/// Forming `T⁻¹ x₀` from accumulated gauges loses more digits.
pub fn transport_section(c: &DiscreteConnection, x0: &Vector5<f64>) -> Vec<Vector5<f64>> {
    let [n1, n2] = c.n;
    let mut out = vec![Vector5::zeros(); n1 * n2];
    out[0] = unit(*x0);
    for m in 0..n1 - 1 {
        out[m + 1] = unit(c.forward(m, 0, Dir::X) * out[m]);
    }
    for k in 0..n2 - 1 {
        for m in 0..n1 {
            out[m + n1 * (k + 1)] = unit(c.forward(m, k, Dir::Y) * out[m + n1 * k]);
        }
    }
    out
}

/// Largest face defect allowed before trivialising an "isothermic" family.
pub const FLAT_TOL: f64 = 1e-8;

/// Output of [`darboux`].
#[derive(Debug, Clone)]
pub struct DiscreteDarboux {
    pub map: QuadMap,
    pub a_hat: f64,
    /// `max |(f̂(i), f(j); f(i), f̂(j)) - a(i,j)/â|`, relative.
    pub vertical_cross_ratio: f64,
    /// `max` relative residual of `Γ^{f̂}_f(1 - t/â) · Γ^t = Γ̂^t` at
    /// [`GAUGE_SAMPLES`].
    pub gauge_identity: f64,
}

/// Spectral parameters for the Darboux gauge identity.
pub const GAUGE_SAMPLES: [f64; 3] = [-1.0, 0.2, 3.0];

/// The `Γ^{â}`-parallel null line through `y0` at the base vertex.
pub fn darboux(f: &QuadMap, a: &EdgeWeights, a_hat: f64, y0: &Vector5<f64>) -> Result<DiscreteDarboux> {
    a.check(f.n)?;
    if a_hat == 0.0 || a.all().any(|w| (w - a_hat).abs() <= 1e-12 * w.abs()) {
        return Err(param("a_hat", "must be nonzero and differ from every edge weight"));
    }
    let y0 = null(y0)?;
    let c = connection(f, a, a_hat)?;
    let flat = flatness(&c);
    if flat.defect > FLAT_TOL {
        return Err(Error::NotFlat {
            defect: flat.defect,
            location: format!("face {:?}", flat.face),
        });
    }
    let lines = transport_section(&c, y0.rep());
    for (q, (x, y)) in f.lines.iter().zip(&lines).enumerate() {
        if f.coincide(x, y) {
            return Err(Error::Singular {
                location: format!("vertex ({}, {})", q % f.n[0], q / f.n[0]),
                reason: "the transform meets the surface".into(),
            });
        }
    }
    let hat = QuadMap::new(f.n, lines)?;

    let mut vertical: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for (m, k, d) in c.edges() {
        let (p, r) = match d {
            Dir::X => (m + 1, k),
            Dir::Y => (m, k + 1),
        };
        let w = match d {
            Dir::X => a.along_x[m],
            Dir::Y => a.along_y[k],
        };
        let (fi, fj, gi, gj) = (f.at(m, k), f.at(p, r), hat.at(m, k), hat.at(p, r));
        let cr = cross_ratio(&null(gi)?, &null(fj)?, &null(fi)?, &null(gj)?)?;
        let expected = w / a_hat;
        vertical = vertical.max((cr - expected).abs() / expected.abs().max(1.0));
        for t in GAUGE_SAMPLES {
            let gauged = gamma_matrix(gj, fj, 1.0 - t / a_hat)
                * gamma_matrix(fj, fi, 1.0 - t / w)
                * gamma_matrix(gi, fi, 1.0 / (1.0 - t / a_hat));
            let target = gamma_matrix(gj, gi, 1.0 - t / w);
            identity = identity.max(frob(&(gauged - target)) / frob(&target));
        }
    }
    Ok(DiscreteDarboux {
        map: hat,
        a_hat,
        vertical_cross_ratio: vertical,
        gauge_identity: identity,
    })
}

/// A map from an `n₁ × n₂ × n₃` box of `Z³`.
#[derive(Debug, Clone)]
pub struct TripleSystem {
    pub dims: [usize; 3],
    pub levels: Vec<QuadMap>,
    pub weights: EdgeWeights,
    /// Weights on the edges between consecutive levels.
    pub along_z: Vec<f64>,
}

/// Level-set and cell checks of a triple system.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleReport {
    /// Worst cross-ratio error over the three families of level sets.
    pub level_sets: [f64; 3],
    pub all_pass: bool,
    /// Worst concircularity residual of `x₁, x₂, x₃, x₁₂₃` over cells.
    pub cell_concircularity: f64,
    /// Worst error of `(x₂, x₁; x₃, x₁₂₃) = (1 - c/b)/(1 - c/a)`.
    pub cell_cross_ratio: f64,
}

impl TripleSystem {
    pub fn at(&self, m: usize, k: usize, level: usize) -> &Vector5<f64> {
        self.levels[level].at(m, k)
    }

    /// The level set with `n₁ = m` fixed, indexed by `(n₂, n₃)`.
    pub fn slice_x(&self, m: usize) -> Result<(QuadMap, EdgeWeights)> {
        let [_, n2, n3] = self.dims;
        let mut lines = Vec::with_capacity(n2 * n3);
        for l in 0..n3 {
            for k in 0..n2 {
                lines.push(*self.at(m, k, l));
            }
        }
        Ok((
            QuadMap::new([n2, n3], lines)?,
            EdgeWeights::new(self.weights.along_y.clone(), self.along_z.clone())?,
        ))
    }

    /// The level set with `n₂ = k` fixed, indexed by `(n₁, n₃)`.
    pub fn slice_y(&self, k: usize) -> Result<(QuadMap, EdgeWeights)> {
        let [n1, _, n3] = self.dims;
        let mut lines = Vec::with_capacity(n1 * n3);
        for l in 0..n3 {
            for m in 0..n1 {
                lines.push(*self.at(m, k, l));
            }
        }
        Ok((
            QuadMap::new([n1, n3], lines)?,
            EdgeWeights::new(self.weights.along_x.clone(), self.along_z.clone())?,
        ))
    }

    pub fn check(&self, tolerance: f64) -> Result<TripleReport> {
        let [n1, n2, n3] = self.dims;
        let mut level_sets = [0.0f64; 3];
        let mut all_pass = true;
        for level in &self.levels {
            let r = is_isothermic(level, &self.weights, tolerance)?;
            level_sets[2] = level_sets[2].max(r.worst_cross_ratio);
            all_pass &= r.pass();
        }
        for m in 0..n1 {
            let (q, w) = self.slice_x(m)?;
            let r = is_isothermic(&q, &w, tolerance)?;
            level_sets[0] = level_sets[0].max(r.worst_cross_ratio);
            all_pass &= r.pass();
        }
        for k in 0..n2 {
            let (q, w) = self.slice_y(k)?;
            let r = is_isothermic(&q, &w, tolerance)?;
            level_sets[1] = level_sets[1].max(r.worst_cross_ratio);
            all_pass &= r.pass();
        }
        let mut conc: f64 = 0.0;
        let mut cross: f64 = 0.0;
        for l in 0..n3 - 1 {
            for k in 0..n2 - 1 {
                for m in 0..n1 - 1 {
                    let (a, b, c) = (self.weights.along_x[m], self.weights.along_y[k], self.along_z[l]);
                    let x1 = null(self.at(m + 1, k, l))?;
                    let x2 = null(self.at(m, k + 1, l))?;
                    let x3 = null(self.at(m, k, l + 1))?;
                    let x123 = null(self.at(m + 1, k + 1, l + 1))?;
                    conc = conc.max(concircularity_residual(&[x1, x2, x3, x123]));
                    let expected = (1.0 - c / b) / (1.0 - c / a);
                    let cr = cross_ratio(&x2, &x1, &x3, &x123).unwrap_or(f64::NAN);
                    let err = (cr - expected).abs() / expected.abs().max(1.0);
                    cross = cross.max(if err.is_nan() { f64::INFINITY } else { err });
                }
            }
        }
        Ok(TripleReport {
            level_sets,
            all_pass: all_pass && conc <= tolerance && cross <= tolerance,
            cell_concircularity: conc,
            cell_cross_ratio: cross,
        })
    }
}

/// Iterated Darboux transforms: level `l + 1` is the transform of level `l`
/// with parameter `a_hats[l]` through `seeds[l]`.
pub fn triple_system(f: &QuadMap, a: &EdgeWeights, a_hats: &[f64], seeds: &[Vector5<f64>]) -> Result<TripleSystem> {
    if a_hats.len() != seeds.len() || a_hats.is_empty() {
        return Err(param("seeds", "need one seed per parameter"));
    }
    for (p, x) in a_hats.iter().enumerate() {
        if a_hats[..p].iter().any(|y| (x - y).abs() <= 1e-12 * x.abs()) {
            return Err(param("a_hats", "must be distinct"));
        }
    }
    let mut levels = vec![f.clone()];
    for (&ah, y0) in a_hats.iter().zip(seeds) {
        let next = darboux(levels.last().expect("nonempty"), a, ah, y0)?;
        levels.push(next.map);
    }
    Ok(TripleSystem {
        dims: [f.n[0], f.n[1], levels.len()],
        levels,
        weights: a.clone(),
        along_z: a_hats.to_vec(),
    })
}

/// Output of [`t_transform_discrete`].
#[derive(Debug, Clone)]
pub struct DiscreteTTransform {
    pub map: QuadMap,
    /// The factorising function of `f_s`, `a - s`.
    pub weights: EdgeWeights,
    pub gauge: DiscreteGauge,
    /// `max` relative deviation between the `Γ`-family of `f_s` at `t` and
    /// `T_s · Γ^{s+t}`, over [`GAUGE_SAMPLES`].
    pub family_residual: f64,
}

/// `f_s(i) = T_s(i) f(i)` with `T_s` trivialising `Γ^s`.
///
/// Since `Γ^{s+t} = Γ^s Γ^{f(j)}_{f(i)}(1 - t/(a - s))` edge by edge, the
/// gauged family is the family of `f_s` with factorising function `a - s`.
pub fn t_transform_discrete(f: &QuadMap, a: &EdgeWeights, s: f64) -> Result<DiscreteTTransform> {
    let c = connection(f, a, s)?;
    let gauge = trivialize(&c, FLAT_TOL)?;
    let lines = f.lines.iter().zip(&gauge.gauges).map(|(x, t)| unit(t * x)).collect();
    let map = QuadMap::new(f.n, lines)?;
    let weights = a.shifted(s)?;
    let mut residual: f64 = 0.0;
    for t in GAUGE_SAMPLES {
        let own = connection(&map, &weights, t)?;
        let base = connection(f, a, s + t)?;
        for (m, k, d) in c.edges() {
            let (p, r) = match d {
                Dir::X => (m + 1, k),
                Dir::Y => (m, k + 1),
            };
            let gauged = gauge.at(p, r) * base.forward(m, k, d) * orth_inverse(gauge.at(m, k));
            let g = own.forward(m, k, d);
            residual = residual.max(frob(&(gauged - g)) / frob(g));
        }
    }
    Ok(DiscreteTTransform {
        map,
        weights,
        gauge,
        family_residual: residual,
    })
}

/// Largest projective distance between corresponding lines.
pub fn projective_spread(a: &QuadMap, b: &QuadMap) -> f64 {
    a.lines
        .iter()
        .zip(&b.lines)
        .map(|(x, y)| projective_distance(x, y))
        .fold(0.0, f64::max)
}

/// The planar grid `(m p, n q, 0)`, translated so that its centre is the
/// origin, with its factorising function `a = 1/p²` on `x`-edges and
/// `-1/q²` on `y`-edges.
///
/// Far from the origin neighbouring null lines are nearly parallel and the
/// edge maps have entries of order `|x|⁴/p²`, so keep `|x| ≲ 3`.
pub fn planar_grid(n: [usize; 2], p: f64, q: f64) -> Result<(QuadMap, EdgeWeights)> {
    if !(p > 0.0 && q > 0.0) {
        return Err(param("p, q", "must be positive"));
    }
    let (cx, cy) = centre(n);
    let map = QuadMap::from_points(n, |m, k| Vector3::new((m as f64 - cx) * p, (k as f64 - cy) * q, 0.0))?;
    Ok((map, EdgeWeights::constant(n, 1.0 / (p * p), -1.0 / (q * q))?))
}

fn centre(n: [usize; 2]) -> (f64, f64) {
    ((n[0] - 1) as f64 / 2.0, (n[1] - 1) as f64 / 2.0)
}

/// The unit cylinder sampled at angles `m δ` and heights `n h` (centred). Faces are
/// rectangles with sides `2 sin(δ/2)` and `h`.
pub fn cylinder_lattice(n: [usize; 2], delta: f64, h: f64) -> Result<(QuadMap, EdgeWeights)> {
    if !(delta > 0.0 && delta < std::f64::consts::PI && h > 0.0) {
        return Err(param("delta, h", "need 0 < δ < π and h > 0"));
    }
    let map = QuadMap::from_points(n, |m, k| {
        let t = m as f64 * delta;
        Vector3::new(t.cos(), t.sin(), (k as f64 - centre(n).1) * h)
    })?;
    let chord = 2.0 * (delta / 2.0).sin();
    Ok((map, EdgeWeights::constant(n, 1.0 / (chord * chord), -1.0 / (h * h))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameter_gives_identity_edges() {
        let (f, a) = planar_grid([4, 3], 0.5, 0.7).unwrap();
        let c = connection(&f, &a, 0.0).unwrap();
        for (m, k, d) in c.edges() {
            assert!(identity_defect(c.forward(m, k, d)) < 1e-14);
        }
        assert!(flatness(&c).defect < 1e-14);
    }

    #[test]
    fn pole_is_rejected() {
        let (f, a) = planar_grid([3, 3], 0.5, 0.5).unwrap();
        assert!(matches!(connection(&f, &a, 4.0), Err(Error::Pole { .. })));
    }

    #[test]
    fn trivial_connection_has_identity_gauge() {
        let c = DiscreteConnection::trivial([3, 4]);
        let g = trivialize(&c, 1e-12).unwrap();
        assert!(g.gauges.iter().all(|t| identity_defect(t) == 0.0));
    }

    #[test]
    fn coincident_neighbours_are_rejected() {
        let r = QuadMap::from_points([2, 2], |_, k| Vector3::new(0.0, k as f64, 0.0));
        assert!(matches!(r, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn weight_counts_must_match() {
        let (f, _) = planar_grid([3, 3], 1.0, 1.0).unwrap();
        let a = EdgeWeights::constant([4, 3], 1.0, -1.0).unwrap();
        assert!(is_isothermic(&f, &a, 1e-9).is_err());
    }

    #[test]
    fn cylinder_lattice_is_isothermic() {
        let (f, a) = cylinder_lattice([6, 5], 0.3, 0.2).unwrap();
        let r = is_isothermic(&f, &a, 1e-9).unwrap();
        assert!(r.pass(), "{r:?}");
        for t in T_SAMPLES {
            assert!(flatness(&connection(&f, &a, t).unwrap()).defect < 1e-9);
        }
    }
}
