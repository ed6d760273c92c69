use nalgebra::{DMatrix, SMatrix, Vector5};

use super::{flat, inner, metric_defect, orth_inverse, MetricVec, NullLine};
use crate::error::{param, Error, Result};
use crate::linalg::Scalar;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Ratio `σ₄/σ₁` of the representative matrix: zero for concircular points.
pub fn concircularity_residual(points: &[NullLine<f64, 5>]) -> f64 {
    if points.len() < 4 {
        return 0.0;
    }
    let sv = singular_values(points);
    sv[3] / sv[0]
}

fn singular_values(points: &[NullLine<f64, 5>]) -> Vec<f64> {
    let m = DMatrix::from_fn(5, points.len(), |i, j| points[j].rep()[i]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// True iff the points lie on a common circle (or are at most two distinct
/// points): their representatives span a subspace of dimension at most three,
/// of signature (2,1) when the dimension is three.
pub fn concircular(points: &[NullLine<f64, 5>]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let m = DMatrix::from_fn(5, points.len(), |i, j| points[j].rep()[i]);
    let svd = m.svd(true, false);
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let smax = svd.singular_values[idx[0]];
    let rank = idx
        .iter()
        .filter(|&&k| svd.singular_values[k] > RANK_TOL * smax)
        .count();
    match rank {
        0..=2 => true,
        3 => {
            let u = svd.u.as_ref().expect("left singular vectors requested");
            let basis: Vec<Vector5<f64>> = idx[..3]
                .iter()
                .map(|&k| Vector5::from_iterator(u.column(k).iter().copied()))
                .collect();
            let gram = DMatrix::from_fn(3, 3, |i, j| inner(&basis[i], &basis[j]));
            let eig = gram.symmetric_eigenvalues();
            let neg = eig.iter().filter(|&&e| e < -1e-10).count();
            let pos = eig.iter().filter(|&&e| e > 1e-10).count();
            neg == 1 && pos == 2
        }
        _ => false,
    }
}

/// The cross-ratio `(x, y; z, w)`: the unique `t` with `Γ^x_y(t) z = w`
/// projectively. Returns `+∞` when `w = x`.
pub fn cross_ratio(
    x: &NullLine<f64, 5>,
    y: &NullLine<f64, 5>,
    z: &NullLine<f64, 5>,
    w: &NullLine<f64, 5>,
) -> Result<f64> {
    const DISTINCT: f64 = 1e-10;
    if x.projective_distance(y) < DISTINCT {
        return Err(param("x, y", "must be distinct points"));
    }
    if z.projective_distance(x) < DISTINCT || z.projective_distance(y) < DISTINCT {
        return Err(param("z", "must differ from x and y"));
    }
    if !concircular(&[*x, *y, *z, *w]) {
        return Err(Error::NotConcircular);
    }
    let (xv, yv, zv, wv) = (x.rep(), y.rep(), z.rep(), w.rep());
    let xy = inner(xv, yv);
    let alpha = inner(zv, yv) / xy;
    let beta = inner(zv, xv) / xy;
    let z_perp = zv - xv * alpha - yv * beta;
    let wy = inner(wv, yv);
    let wx = inner(wv, xv);
    let w_perp = wv - xv * (wy / xy) - yv * (wx / xy);
    let c = w_perp.dot(&z_perp) / z_perp.norm_squared();
    if c.abs() < 1e-12 {
        // w lies on the span of x and y, so it is one of them.
        return Ok(if wy.abs() < wx.abs() { 0.0 } else { f64::INFINITY });
    }
    // w ∝ λ Γz, so (w,y)(z,x) / ((w,x)(z,y)) = t²; the pairings keep their
    // relative precision for nearby points, the perpendicular parts do not.
    let zy = alpha * xy;
    let zx = beta * xy;
    let t2 = (wy * zx) / (wx * zy);
    let sign = (c * wy / zy).signum();
    Ok(sign * t2.abs().sqrt())
}

/// A metric-preserving linear map of the ambient space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthMap<T: Scalar, const D: usize> {
    matrix: SMatrix<T, D, D>,
}

impl<T: Scalar, const D: usize> OrthMap<T, D> {
    pub const TOL: f64 = 1e-10;

    pub fn new(matrix: SMatrix<T, D, D>) -> Result<Self> {
        let scale = 1.0 + matrix.norm_squared();
        if metric_defect(&matrix) > Self::TOL * scale {
            return Err(Error::Data("matrix does not preserve the metric".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: SMatrix::identity(),
        }
    }

    pub fn matrix(&self) -> &SMatrix<T, D, D> {
        &self.matrix
    }

    pub fn apply(&self, v: &MetricVec<T, D>) -> MetricVec<T, D> {
        self.matrix * v
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix * other.matrix,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: orth_inverse(&self.matrix),
        }
    }

    pub fn determinant(&self) -> T {
        crate::linalg::determinant(&self.matrix)
    }

    /// Determinant +1 (within `1e-10`).
    pub fn is_special(&self) -> bool {
        (self.determinant() - T::one()).modulus() < 1e-10
    }
}

/// Reflection across the subspace spanned by `basis`: fixes it and negates
/// its orthogonal complement.
pub fn reflection<T: Scalar, const D: usize>(basis: &[MetricVec<T, D>]) -> Result<OrthMap<T, D>> {
    let k = basis.len();
    if k == 0 {
        return Ok(OrthMap {
            matrix: -SMatrix::<T, D, D>::identity(),
        });
    }
    let gram = DMatrix::from_fn(k, k, |i, j| inner(&basis[i], &basis[j]));
    let scale = basis.iter().map(|b| b.norm_squared()).fold(0.0, f64::max);
    let svals = gram.clone().singular_values();
    let smin = svals.iter().copied().fold(f64::INFINITY, f64::min);
    if smin < 1e-12 * scale {
        return Err(Error::DegenerateSubspace);
    }
    let gram_inv = gram.try_inverse().ok_or(Error::DegenerateSubspace)?;
    let mut proj = SMatrix::<T, D, D>::zeros();
    for i in 0..k {
        for j in 0..k {
            proj += basis[i] * flat(&basis[j]).transpose() * gram_inv[(i, j)];
        }
    }
    Ok(OrthMap {
        matrix: proj * T::from_real(2.0) - SMatrix::<T, D, D>::identity(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomcore::{lift_euclidean, project_to_r3, GammaMap};
    use crate::linalg::frob;
    use nalgebra::{Complex, Vector2, Vector3};
    use rand::{Rng, SeedableRng};

    fn pt(x: f64, y: f64, z: f64) -> NullLine<f64, 5> {
        lift_euclidean(&Vector3::new(x, y, z))
    }

    /// Classical cross-ratio in the chart sending x -> ∞, y -> 0, z -> 1.
    fn complex_cross_ratio(x: Complex<f64>, y: Complex<f64>, z: Complex<f64>, w: Complex<f64>) -> Complex<f64> {
        (w - y) * (z - x) / ((w - x) * (z - y))
    }

    #[test]
    fn w_equal_z_gives_one() {
        let (x, y, z) = (pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 0.0), pt(0.0, 1.0, 0.0));
        assert!((cross_ratio(&x, &y, &z, &z).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cross_ratio(&x, &y, &z, &x).unwrap(), f64::INFINITY);
        assert!(cross_ratio(&x, &y, &z, &y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn forward_inverse_on_random_circles() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let mut p = || pt(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (x, y, z) = (p(), p(), p());
            for t0 in [2.5, -3.0, -1.0, 0.5, 2.0, 10.0] {
                let w = NullLine::new(GammaMap::new(x, y, t0).unwrap().apply(z.rep())).unwrap();
                let t = cross_ratio(&x, &y, &z, &w).unwrap();
                assert!((t - t0).abs() < 1e-10 * t0.abs().max(1.0), "{t} vs {t0}");
            }
        }
    }

    #[test]
    fn agrees_with_classical_complex_cross_ratio() {
        // The fixture: with points of the plane z = 0 read as complex numbers,
        // (x, y; z, w) = (w - y)(z - x) / ((w - x)(z - y)).
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let centre = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.3..2.0);
            let angles: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let cs: Vec<Complex<f64>> = angles
                .iter()
                .map(|a| Complex::new(centre.x + r * a.cos(), centre.y + r * a.sin()))
                .collect();
            let ls: Vec<_> = cs.iter().map(|c| pt(c.re, c.im, 0.0)).collect();
            let expected = complex_cross_ratio(cs[0], cs[1], cs[2], cs[3]);
            assert!(expected.im.abs() < 1e-9);
            let t = cross_ratio(&ls[0], &ls[1], &ls[2], &ls[3]).unwrap();
            assert!((t - expected.re).abs() < 1e-8 * (1.0 + expected.re.abs()), "{t} vs {}", expected.re);
        }
    }

    #[test]
    fn rejects_non_concircular_quadruple() {
        let q = [pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 0.0), pt(0.0, 1.0, 0.0), pt(0.0, 0.0, 1.0)];
        assert!(!concircular(&q));
        assert_eq!(cross_ratio(&q[0], &q[1], &q[2], &q[3]), Err(Error::NotConcircular));
    }

    #[test]
    fn square_corners_are_concircular() {
        let q = [pt(0.0, 0.0, 0.0), pt(1.0, 0.0, 0.0), pt(0.0, 1.0, 0.0), pt(1.0, 1.0, 0.0)];
        assert!(concircular(&q));
        assert!(concircularity_residual(&q) < 1e-12);
    }

    #[test]
    fn any_three_points_are_concircular() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let mut p = || pt(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            assert!(concircular(&[p(), p(), p()]));
        }
    }

    #[test]
    fn full_space_reflection_is_identity() {
        let basis: Vec<Vector5<f64>> = (0..5).map(|i| Vector5::from_fn(|r, _| if r == i { 1.0 } else { 0.0 })).collect();
        let r = reflection(&basis).unwrap();
        assert!(frob(&(r.matrix() - SMatrix::<f64, 5, 5>::identity())) < 1e-14);
    }

    #[test]
    fn reflection_across_unit_sphere_plane_inverts() {
        let e = |i: usize| Vector5::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
        let r = reflection(&[e(0), e(1), e(2), e(4)]).unwrap();
        assert!(frob(&(r.matrix() * r.matrix() - SMatrix::<f64, 5, 5>::identity())) < 1e-12);
        assert!(!r.is_special());
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let x = Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let image = NullLine::new(r.apply(pt(x.x, x.y, x.z).rep())).unwrap();
            let got = project_to_r3(&image).finite().unwrap();
            let expected = x / x.norm_squared();
            assert!((got - expected).norm() < 1e-10 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn degenerate_subspace_is_rejected() {
        let null = *pt(0.0, 0.0, 0.0).rep();
        assert_eq!(reflection(&[null]).unwrap_err(), Error::DegenerateSubspace);
    }
}
