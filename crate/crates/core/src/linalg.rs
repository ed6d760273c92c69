//! Small dense linear algebra shared by the transport code.

use nalgebra::{ComplexField, DMatrix, Matrix3, SMatrix, Vector3};

/// Field of scalars the metric code runs over: `f64` or `Complex64`.
pub trait Scalar: ComplexField<RealField = f64> + Copy {}

impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

pub type SquareMatrix<T, const D: usize> = SMatrix<T, D, D>;

const PADE_DEGREE: usize = 6;

fn pade_coefficients() -> [f64; PADE_DEGREE + 1] {
    let m = PADE_DEGREE as f64;
    let mut c = [0.0; PADE_DEGREE + 1];
    c[0] = 1.0;
    for k in 1..=PADE_DEGREE {
        let kf = k as f64;
        c[k] = c[k - 1] * (m - kf + 1.0) / (kf * (2.0 * m - kf + 1.0));
    }
    c
}

/// Matrix exponential by scaling and squaring with a diagonal Padé(6)
/// approximant.
///
/// Diagonal Padé approximants map quadratic Lie algebras into the
/// corresponding groups, so skew matrices (for any constant metric) come out
/// metric-orthogonal up to round-off.
pub fn expm<T: Scalar, const D: usize>(a: &SquareMatrix<T, D>) -> SquareMatrix<T, D> {
    let norm1 = (0..D)
        .map(|j| (0..D).map(|i| a[(i, j)].modulus()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.map(|v| v.scale(2f64.powi(-squarings)));

    let c = pade_coefficients();
    let id = SquareMatrix::<T, D>::identity();
    let mut power = id;
    let mut numer = id;
    let mut denom = id;
    for (k, &ck) in c.iter().enumerate().skip(1) {
        power *= scaled;
        let term = power.map(|v| v.scale(ck));
        numer += term;
        if k % 2 == 0 {
            denom += term;
        } else {
            denom -= term;
        }
    }
    let solved = DMatrix::from_fn(D, D, |i, j| denom[(i, j)])
        .lu()
        .solve(&DMatrix::from_fn(D, D, |i, j| numer[(i, j)]))
        .expect("Padé denominator is invertible for scaled norm <= 1/2");
    let mut result = SquareMatrix::<T, D>::from_fn(|i, j| solved[(i, j)]);
    for _ in 0..squarings {
        result = result * result;
    }
    result
}

/// The identification `v -> (u -> v x u)` of 3-space with skew 3x3 matrices.
pub fn hat<T: Scalar>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v[2], v[1], v[2], z, -v[0], -v[1], v[0], z)
}

/// Inverse of [`hat`] applied to the skew part of `m`.
pub fn vee<T: Scalar>(m: &Matrix3<T>) -> Vector3<T> {
    let half = T::from_real(0.5);
    Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Frobenius norm.
pub fn frob<T: Scalar, const R: usize, const C: usize>(m: &SMatrix<T, R, C>) -> f64 {
    m.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt()
}

/// Determinant of a statically sized square matrix.
pub fn determinant<T: Scalar, const D: usize>(m: &SquareMatrix<T, D>) -> T {
    DMatrix::from_fn(D, D, |i, j| m[(i, j)]).determinant()
}

/// Frobenius distance to the identity.
pub fn identity_defect<T: Scalar, const D: usize>(m: &SquareMatrix<T, D>) -> f64 {
    frob(&(m - SquareMatrix::<T, D>::identity()))
}

/// Inverse of a 3x3 matrix known to be (complex) orthogonal.
pub fn orth3_inverse<T: Scalar>(m: &Matrix3<T>) -> Matrix3<T> {
    m.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Complex, Matrix3, Vector3};

    #[test]
    fn pade_coefficients_match_closed_form() {
        let c = pade_coefficients();
        let expected = [
            1.0,
            0.5,
            5.0 / 44.0,
            1.0 / 66.0,
            1.0 / 792.0,
            1.0 / 15840.0,
            1.0 / 665280.0,
        ];
        for (a, b) in c.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15 * b);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let theta = 2.3_f64;
        let a = hat(&Vector3::new(0.0, 0.0, theta));
        let r = expm(&a);
        let expected = Matrix3::new(
            theta.cos(),
            -theta.sin(),
            0.0,
            theta.sin(),
            theta.cos(),
            0.0,
            0.0,
            0.0,
            1.0,
        );
        assert!(frob(&(r - expected)) < 1e-13);
    }

    #[test]
    fn expm_of_complex_skew_is_complex_orthogonal() {
        let v = Vector3::new(
            Complex::new(0.3, -1.2),
            Complex::new(2.0, 0.5),
            Complex::new(-0.7, 0.1),
        );
        let r = expm(&hat(&v));
        let defect = identity_defect(&(r.transpose() * r));
        assert!(defect < 1e-12, "defect {defect}");
    }

    #[test]
    fn expm_of_nilpotent_is_polynomial() {
        let mut a = Matrix3::<f64>::zeros();
        a[(0, 1)] = 3.0;
        a[(1, 2)] = 2.0;
        let r = expm(&a);
        let expected = Matrix3::identity() + a + a * a * 0.5;
        assert!(frob(&(r - expected)) < 1e-13);
    }

    #[test]
    fn hat_vee_roundtrip_and_cross_product() {
        let v = Vector3::new(1.0, -2.0, 0.5);
        let u = Vector3::new(0.3, 0.4, -1.0);
        assert!((vee(&hat(&v)) - v).norm() < 1e-15);
        assert!((hat(&v) * u - v.cross(&u)).norm() < 1e-15);
    }
}
