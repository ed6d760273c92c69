//! Metric linear algebra for R^{4,1} and complexified 3-space, the light-cone
//! model of the conformal 3-sphere, the eigen-decomposed orthogonal maps
//! `Γ^x_y(t)`, cross-ratios and circle tests.
//!
//! Vectors are plain `nalgebra` column vectors. The metric is fixed by the
//! dimension: `D = 5` carries the Lorentzian form `(+,+,+,+,-)`, every other
//! dimension the (complex-bilinear) Euclidean form. Pairings are bilinear,
//! never Hermitian, also over `Complex64`.

mod circle;
pub(crate) mod gamma;
pub(crate) mod lightcone;

pub use circle::{concircular, concircularity_residual, cross_ratio, reflection, OrthMap, RANK_TOL};
pub use gamma::GammaMap;
pub use lightcone::{infinity, lift_euclidean, lift_vector, project_to_r3, NullLine, Projected};

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::linalg::Scalar;

/// A vector of the ambient metric space; see the module docs for the metric.
pub type MetricVec<T, const D: usize> = SVector<T, D>;

/// Sign of the `i`-th diagonal metric entry in dimension `D`.
#[inline]
pub fn metric_sign<const D: usize>(i: usize) -> f64 {
    if D == 5 && i == 4 {
        -1.0
    } else {
        1.0
    }
}

/// The symmetric bilinear form of the ambient space.
pub fn inner<T: Scalar, const D: usize>(u: &MetricVec<T, D>, v: &MetricVec<T, D>) -> T {
    let mut acc = T::zero();
    for i in 0..D {
        acc += (u[i] * v[i]).scale(metric_sign::<D>(i));
    }
    acc
}

/// Lowers the index: returns `G v` so that `inner(u, v) = u^T (G v)`.
pub fn flat<T: Scalar, const D: usize>(v: &MetricVec<T, D>) -> MetricVec<T, D> {
    let mut out = *v;
    for i in 0..D {
        out[i] = out[i].scale(metric_sign::<D>(i));
    }
    out
}

/// The diagonal Gram matrix of the metric.
pub fn metric_matrix<T: Scalar, const D: usize>() -> SMatrix<T, D, D> {
    let mut g = SMatrix::<T, D, D>::identity();
    for i in 0..D {
        g[(i, i)] = T::from_real(metric_sign::<D>(i));
    }
    g
}

/// Builds a `MetricVec` from a runtime slice, checking its length.
pub fn metric_vec_from_slice<T: Scalar, const D: usize>(coords: &[T]) -> Result<MetricVec<T, D>> {
    if coords.len() != D {
        return Err(Error::DimensionMismatch {
            expected: D,
            got: coords.len(),
        });
    }
    Ok(MetricVec::<T, D>::from_column_slice(coords))
}

/// Inner product of two runtime-sized coordinate lists. Length 5 uses the
/// Lorentzian form, length 3 the Euclidean one.
pub fn inner_dyn(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    match u.len() {
        5 => Ok(inner::<f64, 5>(
            &metric_vec_from_slice(u)?,
            &metric_vec_from_slice(v)?,
        )),
        3 => Ok(inner::<f64, 3>(
            &metric_vec_from_slice(u)?,
            &metric_vec_from_slice(v)?,
        )),
        n => Err(Error::DimensionMismatch { expected: 5, got: n }),
    }
}

/// `u ∧ v` acting by `w -> (u, w) v - (v, w) u`.
pub fn wedge<T: Scalar, const D: usize>(
    u: &MetricVec<T, D>,
    v: &MetricVec<T, D>,
) -> SMatrix<T, D, D> {
    v * flat(u).transpose() - u * flat(v).transpose()
}

/// Frobenius norm of `M^T G M - G`: zero iff `M` preserves the metric.
pub fn metric_defect<T: Scalar, const D: usize>(m: &SMatrix<T, D, D>) -> f64 {
    let g = metric_matrix::<T, D>();
    crate::linalg::frob(&(m.transpose() * g * m - g))
}

/// Inverse of a metric-orthogonal matrix, `G M^T G`.
pub fn orth_inverse<T: Scalar, const D: usize>(m: &SMatrix<T, D, D>) -> SMatrix<T, D, D> {
    let g = metric_matrix::<T, D>();
    g * m.transpose() * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector3, Vector5};

    #[test]
    fn lift_of_infinity_direction_is_null() {
        let v = Vector5::new(0.0, 0.0, 0.0, 1.0, 1.0);
        assert_eq!(inner(&v, &v), 0.0);
    }

    #[test]
    fn timelike_basis_vector_has_norm_minus_one() {
        let e5 = Vector5::new(0.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(inner(&e5, &e5), -1.0);
    }

    #[test]
    fn lifted_points_pair_to_minus_half_squared_distance() {
        // (phi(x), phi(y)) = x.y - (|x|^2-1)(|y|^2-1)/4 - ... expands to -|x-y|^2/2
        let x = Vector3::new(1.0, 0.0, 0.0);
        let y = Vector3::new(0.0, 1.0, 0.0);
        let p = inner(&lift_vector(&x), &lift_vector(&y));
        assert!((p + 1.0).abs() < 1e-15);
    }

    #[test]
    fn dynamic_inner_rejects_mismatched_lengths() {
        assert!(matches!(
            inner_dyn(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(inner_dyn(&[0.0, 0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 0.0, 1.0]), Ok(-1.0));
        assert_eq!(inner_dyn(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), Ok(6.0));
    }

    #[test]
    fn wedge_kills_its_first_factor_when_null_and_orthogonal() {
        let s = lift_vector(&Vector3::new(0.2, -0.4, 1.0));
        let v = Vector5::new(1.0, 0.0, 0.0, 0.2, 0.2); // d/dx of the lift at that point
        assert!(inner(&s, &v).abs() < 1e-15);
        let w = wedge(&s, &v);
        assert!((w * s).norm() < 1e-14);
        assert!(metric_defect(&crate::linalg::expm(&w)) < 1e-12);
    }
}
