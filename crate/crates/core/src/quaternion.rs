//! Hamilton quaternions in the basis `{1, i, j, k}`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

/// `a + b i + c j + d k`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// The imaginary unit selected by a frame index (0 → i, 1 → j, 2 → k).
    pub fn imaginary_unit(index: usize) -> Self {
        match index {
            0 => Self::I,
            1 => Self::J,
            2 => Self::K,
            _ => panic!("imaginary unit index {index} out of range"),
        }
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.a, self.b, self.c, self.d)
    }

    pub fn conj(self) -> Self {
        quat_conj(self)
    }

    pub fn norm_squared(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Matrix of `x ↦ x ∘ self` acting on `(a, b, c, d)` column vectors.
    pub fn right_mul_matrix(self) -> Matrix4<f64> {
        let Quaternion { a, b, c, d } = self;
        Matrix4::new(
            a, -b, -c, -d, //
            b, a, d, -c, //
            c, -d, a, b, //
            d, c, -b, a,
        )
    }

    /// Matrix of `x ↦ self ∘ x`.
    pub fn left_mul_matrix(self) -> Matrix4<f64> {
        let Quaternion { a, b, c, d } = self;
        Matrix4::new(
            a, -b, -c, -d, //
            b, a, -d, c, //
            c, d, a, -b, //
            d, -c, b, a,
        )
    }

    /// `exp(self)` for a purely imaginary quaternion.
    pub fn exp_imaginary(self) -> Self {
        let theta = (self.b * self.b + self.c * self.c + self.d * self.d).sqrt();
        if theta == 0.0 {
            return Self::ONE;
        }
        let s = theta.sin() / theta;
        Self::new(theta.cos(), self.b * s, self.c * s, self.d * s)
    }
}

/// Hamilton product `p ∘ q`.
pub fn quat_mul(p: Quaternion, q: Quaternion) -> Quaternion {
    Quaternion::new(
        p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    )
}

/// `a + bi + cj + dk ↦ a − bi − cj − dk`.
pub fn quat_conj(q: Quaternion) -> Quaternion {
    Quaternion::new(q.a, -q.b, -q.c, -q.d)
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        quat_mul(self, rhs)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c, self.d + rhs.d)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(self.a - rhs.a, self.b - rhs.b, self.c - rhs.c, self.d - rhs.d)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.a, -self.b, -self.c, -self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(p: Quaternion, q: Quaternion, tol: f64) -> bool {
        (p - q).norm() < tol
    }

    #[test]
    fn basis_relations() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::K, Quaternion::I);
        assert_eq!(Quaternion::K * Quaternion::I, Quaternion::J);
        assert_eq!(Quaternion::I * Quaternion::I, -Quaternion::ONE);
    }

    #[test]
    fn identity_and_conjugate() {
        let q = Quaternion::new(0.3, -1.2, 2.0, 0.7);
        assert_eq!(Quaternion::ONE * q, q);
        assert_eq!(quat_conj(q), Quaternion::new(0.3, 1.2, -2.0, -0.7));
        assert_eq!(quat_conj(Quaternion::ONE), Quaternion::ONE);
        let n = q * q.conj();
        assert!(close(n, Quaternion::new(q.norm_squared(), 0.0, 0.0, 0.0), 1e-14));
    }

    #[test]
    fn matrices_agree_with_product() {
        let p = Quaternion::new(0.1, 0.2, -0.5, 0.9);
        let x = Quaternion::new(-0.4, 0.8, 0.3, 0.1);
        let right = Quaternion::from_vector(&(p.right_mul_matrix() * x.to_vector()));
        let left = Quaternion::from_vector(&(p.left_mul_matrix() * x.to_vector()));
        assert!(close(right, x * p, 1e-15));
        assert!(close(left, p * x, 1e-15));
    }

    fn quat() -> impl Strategy<Value = Quaternion> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
            .prop_map(|(a, b, c, d)| Quaternion::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn norm_multiplicative(p in quat(), q in quat()) {
            prop_assert!(((p * q).norm() - p.norm() * q.norm()).abs() < 1e-12);
        }

        #[test]
        fn associative(p in quat(), q in quat(), r in quat()) {
            prop_assert!(close((p * q) * r, p * (q * r), 1e-11));
        }

        #[test]
        fn conjugation_is_anti_homomorphism(p in quat(), q in quat()) {
            prop_assert!(close((p * q).conj(), q.conj() * p.conj(), 1e-12));
            prop_assert_eq!(p.conj().conj(), p);
        }
    }
}
