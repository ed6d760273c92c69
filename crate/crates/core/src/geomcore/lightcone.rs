use nalgebra::{Vector3, Vector5};

use super::{inner, MetricVec};
use crate::error::{Error, Result};
use crate::linalg::Scalar;

/// Relative tolerance for `(v, v) = 0` when a line is built without an
/// explicit tolerance.
pub const NULL_TOL: f64 = 1e-12;

/// A null line through the origin, stored by a unit-length representative.
///
/// Normalisation: Euclidean (Hermitian) norm one, and the first coordinate of
/// modulus above `1e-9` is real and positive. Two lines are equal iff their
/// representatives are parallel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullLine<T: Scalar, const D: usize> {
    rep: MetricVec<T, D>,
}

impl<T: Scalar, const D: usize> NullLine<T, D> {
    /// Builds the line spanned by `v`, requiring `|(v,v)| <= 1e-12 |v|^2`.
    pub fn new(v: MetricVec<T, D>) -> Result<Self> {
        Self::with_tolerance(v, NULL_TOL)
    }

    pub fn with_tolerance(v: MetricVec<T, D>, tol: f64) -> Result<Self> {
        let n2 = v.norm_squared();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::ZeroVector);
        }
        let residual = inner(&v, &v).modulus() / n2;
        if residual > tol {
            return Err(Error::NotNull { residual });
        }
        Ok(Self {
            rep: normalize(v),
        })
    }

    /// Unit representative.
    pub fn rep(&self) -> &MetricVec<T, D> {
        &self.rep
    }

    /// Sine of the Hermitian angle between the lines: zero iff they coincide.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        projective_distance(&self.rep, &other.rep)
    }

    pub fn same_line(&self, other: &Self, tol: f64) -> bool {
        self.projective_distance(other) <= tol
    }

    /// The line spanned by `m` applied to the representative.
    pub fn map(&self, m: &nalgebra::SMatrix<T, D, D>, tol: f64) -> Result<Self> {
        Self::with_tolerance(m * self.rep, tol)
    }
}

impl<const D: usize> NullLine<nalgebra::Complex<f64>, D> {
    /// The complex-conjugate line.
    pub fn conj(&self) -> Self {
        Self {
            rep: normalize(self.rep.map(|c| c.conj())),
        }
    }
}

fn normalize<T: Scalar, const D: usize>(v: MetricVec<T, D>) -> MetricVec<T, D> {
    let n = v.norm();
    let mut u = v.map(|c| c.unscale(n));
    if let Some(lead) = u.iter().find(|c| c.modulus() > 1e-9).copied() {
        let phase = lead.unscale(lead.modulus());
        let inv = phase.recip();
        u = u.map(|c| c * inv);
    }
    u
}

/// Projective distance between the lines spanned by two nonzero vectors.
pub fn projective_distance<T: Scalar, const D: usize>(a: &MetricVec<T, D>, b: &MetricVec<T, D>) -> f64 {
    let ua = a.unscale(a.norm());
    let ub = b.unscale(b.norm());
    // the sine of the angle, via the residual of projecting a onto b
    (ua - ub * ub.dotc(&ua)).norm()
}

/// The flat-chart lift `x -> (x, (|x|^2 - 1)/2, (|x|^2 + 1)/2)`.
pub fn lift_vector(x: &Vector3<f64>) -> Vector5<f64> {
    let r2 = x.norm_squared();
    Vector5::new(x[0], x[1], x[2], 0.5 * (r2 - 1.0), 0.5 * (r2 + 1.0))
}

/// The point of the conformal 3-sphere corresponding to `x`.
pub fn lift_euclidean(x: &Vector3<f64>) -> NullLine<f64, 5> {
    NullLine {
        rep: normalize(lift_vector(x)),
    }
}

/// The point at infinity, `span(0,0,0,1,1)`.
pub fn infinity() -> NullLine<f64, 5> {
    NullLine {
        rep: normalize(Vector5::new(0.0, 0.0, 0.0, 1.0, 1.0)),
    }
}

/// Result of the inverse chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projected {
    Finite(Vector3<f64>),
    Infinity,
}

impl Projected {
    pub fn finite(self) -> Option<Vector3<f64>> {
        match self {
            Projected::Finite(x) => Some(x),
            Projected::Infinity => None,
        }
    }
}

/// Inverse of [`lift_euclidean`]: `x = (l1,l2,l3)/(l5 - l4)`.
pub fn project_to_r3(l: &NullLine<f64, 5>) -> Projected {
    project_vector(l.rep())
}

pub(crate) fn project_vector(v: &Vector5<f64>) -> Projected {
    let d = v[4] - v[3];
    if d.abs() <= 1e-14 * v.norm() {
        Projected::Infinity
    } else {
        Projected::Finite(Vector3::new(v[0] / d, v[1] / d, v[2] / d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use proptest::prelude::*;

    #[test]
    fn origin_lifts_to_expected_representative() {
        let v = lift_vector(&Vector3::zeros());
        assert_eq!(v, Vector5::new(0.0, 0.0, 0.0, -0.5, 0.5));
        let l = lift_euclidean(&Vector3::zeros());
        assert!(projective_distance(l.rep(), &v) < 1e-15);
    }

    #[test]
    fn lift_is_null() {
        let v = lift_vector(&Vector3::new(3.0, 4.0, 0.0));
        assert!(inner(&v, &v).abs() < 1e-12);
    }

    #[test]
    fn projection_of_origin_and_infinity() {
        let l = NullLine::new(Vector5::new(0.0, 0.0, 0.0, -0.5, 0.5)).unwrap();
        assert_eq!(project_to_r3(&l), Projected::Finite(Vector3::zeros()));
        assert_eq!(project_to_r3(&infinity()), Projected::Infinity);
    }

    #[test]
    fn non_null_vector_is_rejected() {
        let v = Vector5::new(1.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(NullLine::new(v), Err(Error::NotNull { .. })));
        assert!(matches!(NullLine::new(Vector5::<f64>::zeros()), Err(Error::ZeroVector)));
    }

    #[test]
    fn lines_compare_projectively() {
        let v = lift_vector(&Vector3::new(0.5, -1.0, 2.0));
        let a = NullLine::new(v).unwrap();
        let b = NullLine::new(v * -3.7).unwrap();
        assert!(a.same_line(&b, 1e-14));
        assert!((a.rep() - b.rep()).norm() < 1e-15);
    }

    #[test]
    fn complex_lines_normalise_phase() {
        let v = nalgebra::Vector3::new(Complex::new(1.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 0.0));
        let a = NullLine::new(v).unwrap();
        let b = NullLine::new(v * Complex::new(0.3, 2.0)).unwrap();
        assert!((a.rep() - b.rep()).norm() < 1e-15);
        assert!(a.rep()[0].im.abs() < 1e-15 && a.rep()[0].re > 0.0);
        let c = a.conj();
        assert!(a.projective_distance(&c) > 0.5);
    }

    proptest! {
        #[test]
        fn lift_project_roundtrip(x in -50.0..50.0f64, y in -50.0..50.0f64, z in -50.0..50.0f64) {
            let p = Vector3::new(x, y, z);
            let back = project_to_r3(&lift_euclidean(&p)).finite().unwrap();
            prop_assert!((back - p).norm() <= 1e-12 * (1.0 + p.norm_squared()));
        }

        #[test]
        fn projection_is_scale_invariant(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64, s in 0.1..10.0f64) {
            let v = lift_vector(&Vector3::new(x, y, z));
            let p1 = project_vector(&v).finite().unwrap();
            let p2 = project_vector(&(v * s)).finite().unwrap();
            let p3 = project_vector(&(v * -s)).finite().unwrap();
            prop_assert!((p1 - p2).norm() < 1e-12 * (1.0 + p1.norm()));
            prop_assert!((p1 - p3).norm() < 1e-12 * (1.0 + p1.norm()));
        }
    }
}
