use nalgebra::SMatrix;

use super::{flat, inner, MetricVec, NullLine};
use crate::error::{param, Error, Result};
use crate::linalg::Scalar;

/// Relative pairing below which `x ⊕ y` counts as degenerate.
pub const SINGULAR_PAIR_TOL: f64 = 1e-12;

/// The orthogonal map with eigenvalue `t` on `x`, `1/t` on `y` and `1` on
/// `(x ⊕ y)^⊥`.
///
/// For fixed `x, y` this is a homomorphism `t -> Γ^x_y(t)` from the
/// multiplicative group; for fixed `z` the orbit `t -> Γ^x_y(t) z` is the
/// rational parametrisation of the circle through `x, y, z` with
/// `∞ -> x`, `0 -> y`, `1 -> z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMap<T: Scalar, const D: usize> {
    x: NullLine<T, D>,
    y: NullLine<T, D>,
    t: T,
    pairing: T,
}

impl<T: Scalar, const D: usize> GammaMap<T, D> {
    pub fn new(x: NullLine<T, D>, y: NullLine<T, D>, t: T) -> Result<Self> {
        if t.modulus() == 0.0 || !t.modulus().is_finite() {
            return Err(param("t", "must be finite and nonzero"));
        }
        let pairing = inner(x.rep(), y.rep());
        if pairing.modulus() < SINGULAR_PAIR_TOL {
            return Err(Error::SingularPair {
                pairing: pairing.modulus(),
            });
        }
        Ok(Self { x, y, t, pairing })
    }

    pub fn x(&self) -> &NullLine<T, D> {
        &self.x
    }

    pub fn y(&self) -> &NullLine<T, D> {
        &self.y
    }

    pub fn t(&self) -> T {
        self.t
    }

    /// The same pair at a different parameter.
    pub fn at(&self, t: T) -> Result<Self> {
        Self::new(self.x, self.y, t)
    }

    /// `v = αx + βy + w` with `w ⊥ x, y` is sent to `tαx + t⁻¹βy + w`.
    pub fn apply(&self, v: &MetricVec<T, D>) -> MetricVec<T, D> {
        let x = self.x.rep();
        let y = self.y.rep();
        let alpha = inner(v, y) / self.pairing;
        let beta = inner(v, x) / self.pairing;
        v + x * (alpha * (self.t - T::one())) + y * (beta * (self.t.recip() - T::one()))
    }

    pub fn matrix(&self) -> SMatrix<T, D, D> {
        gamma_matrix(self.x.rep(), self.y.rep(), self.t)
    }

    /// `d/dt Γ^x_y(t)` at the stored parameter.
    pub fn derivative(&self) -> SMatrix<T, D, D> {
        let x = self.x.rep();
        let y = self.y.rep();
        let inv_t = self.t.recip();
        (x * flat(y).transpose() - y * flat(x).transpose() * (inv_t * inv_t)) / self.pairing
    }

    pub fn inverse(&self) -> Self {
        Self {
            t: self.t.recip(),
            ..*self
        }
    }
}

/// `Γ^x_y(t)` for raw (not necessarily normalised) representatives.
pub(crate) fn gamma_matrix<T: Scalar, const D: usize>(
    x: &MetricVec<T, D>,
    y: &MetricVec<T, D>,
    t: T,
) -> SMatrix<T, D, D> {
    let pairing = inner(x, y);
    let id = SMatrix::<T, D, D>::identity();
    id + (x * flat(y).transpose()) * ((t - T::one()) / pairing)
        + (y * flat(x).transpose()) * ((t.recip() - T::one()) / pairing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomcore::{lift_euclidean, metric_defect};
    use crate::linalg::frob;
    use nalgebra::{Complex, Vector3, Vector5};
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64) -> NullLine<f64, 5> {
        lift_euclidean(&Vector3::new(x, y, z))
    }

    #[test]
    fn identity_at_one() {
        let g = GammaMap::new(pt(0.0, 0.0, 0.0), pt(1.0, 2.0, -1.0), 1.0).unwrap();
        let v = Vector5::new(0.3, -1.0, 2.0, 0.5, 7.0);
        assert!((g.apply(&v) - v).norm() < 1e-14);
        assert!(frob(&(g.matrix() - SMatrix::<f64, 5, 5>::identity())) < 1e-14);
    }

    #[test]
    fn eigenvalue_t_on_x_and_inverse_on_y() {
        let x = pt(0.0, 1.0, 0.0);
        let y = pt(2.0, 0.0, 1.0);
        let g = GammaMap::new(x, y, 2.5).unwrap();
        assert!((g.apply(x.rep()) - x.rep() * 2.5).norm() < 1e-14);
        assert!((g.apply(y.rep()) - y.rep() / 2.5).norm() < 1e-14);
        assert!((g.matrix() * x.rep() - x.rep() * 2.5).norm() < 1e-14);
    }

    #[test]
    fn coincident_lines_are_a_singular_pair() {
        let x = pt(0.5, 0.5, 0.5);
        assert!(matches!(
            GammaMap::new(x, x, 2.0),
            Err(Error::SingularPair { .. })
        ));
        assert!(GammaMap::new(x, pt(0.0, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn complex_gamma_is_complex_orthogonal() {
        let x = NullLine::new(Vector3::new(
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(0.0, 0.0),
        ))
        .unwrap();
        let g = GammaMap::new(x, x.conj(), Complex::new(0.3, 0.8)).unwrap();
        assert!(metric_defect(&g.matrix()) < 1e-13);
        let d = g.at(Complex::new(1.0, 0.0)).unwrap().derivative();
        // derivative at t = 1 lies in the Lie algebra: skew
        assert!(frob(&(d + d.transpose())) < 1e-14);
    }

    proptest! {
        #[test]
        fn gamma_preserves_the_metric(
            a in prop::array::uniform3(-3.0..3.0f64),
            b in prop::array::uniform3(-3.0..3.0f64),
            t in prop::sample::select(vec![-3.0, -1.0, 0.5, 2.0, 10.0, 0.1]),
            v in prop::array::uniform5(-2.0..2.0f64),
            w in prop::array::uniform5(-2.0..2.0f64),
        ) {
            let x = pt(a[0], a[1], a[2]);
            let y = pt(b[0], b[1], b[2]);
            prop_assume!(x.projective_distance(&y) > 1e-3);
            let g = GammaMap::new(x, y, t).unwrap();
            let v = Vector5::from(v);
            let w = Vector5::from(w);
            let lhs = inner(&g.apply(&v), &g.apply(&w));
            let scale = 1.0 + g.matrix().norm().powi(2) * v.norm() * w.norm();
            prop_assert!((lhs - inner(&v, &w)).abs() <= 1e-13 * scale);
            prop_assert!(metric_defect(&g.matrix()) <= 1e-12 * g.matrix().norm().powi(2));
        }

        #[test]
        fn gamma_is_a_homomorphism(
            a in prop::array::uniform3(-3.0..3.0f64),
            b in prop::array::uniform3(-3.0..3.0f64),
            s in 0.2..5.0f64,
            t in -5.0..-0.2f64,
        ) {
            let x = pt(a[0], a[1], a[2]);
            let y = pt(b[0], b[1], b[2]);
            prop_assume!(x.projective_distance(&y) > 1e-3);
            let gs = GammaMap::new(x, y, s).unwrap().matrix();
            let gt = GammaMap::new(x, y, t).unwrap().matrix();
            let gst = GammaMap::new(x, y, s * t).unwrap().matrix();
            let scale = gs.norm() * gt.norm();
            prop_assert!(frob(&(gs * gt - gst)) <= 1e-12 * scale);
        }
    }
}
