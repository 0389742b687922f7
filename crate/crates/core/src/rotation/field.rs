//! Rotation generators J, J′ and normalized rotational vector fields.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Generator of rotations in the (x1, x2) plane; J·e1 = e2.
pub fn j() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = -1.0;
    m[(1, 0)] = 1.0;
    m
}

/// Generator of rotations in the (x3, x4) plane; J′·e3 = e4.
pub fn j_prime() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(2, 3)] = -1.0;
    m[(3, 2)] = 1.0;
    m
}

pub fn orthogonality_error(s: &Matrix4<f64>) -> f64 {
    (s.transpose() * s - Matrix4::identity()).abs().max()
}

/// K(x) = S·J·S⁻¹·(x − q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationField {
    pub s: Matrix4<f64>,
    pub q: Vector4<f64>,
}

impl RotationField {
    pub fn new(s: Matrix4<f64>, q: Vector4<f64>) -> Result<Self> {
        let err = orthogonality_error(&s);
        if err > 1e-12 {
            return invalid(format!("S is not orthogonal (error {err:e})"));
        }
        Ok(RotationField { s, q })
    }

    /// K₀(x) = Jx.
    pub fn standard() -> Self {
        RotationField {
            s: Matrix4::identity(),
            q: Vector4::zeros(),
        }
    }

    /// S·J·Sᵀ.
    pub fn matrix(&self) -> Matrix4<f64> {
        self.s * j() * self.s.transpose()
    }

    pub fn eval(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.matrix() * (x - self.q)
    }

    /// Distance from x to the rotation plane q + S·span(e3, e4).
    pub fn plane_distance(&self, x: &Vector4<f64>) -> f64 {
        let local = self.s.transpose() * (x - self.q);
        local[0].hypot(local[1])
    }

    /// The field seen after x ↦ λ·R·x + c is applied to space.
    pub fn transformed(&self, scale: f64, rotation: &Matrix4<f64>, offset: &Vector4<f64>) -> Self {
        RotationField {
            s: rotation * self.s,
            q: rotation * self.q * scale + offset,
        }
    }

    pub fn negated(&self) -> AffineField {
        AffineField::from(self).scaled(-1.0)
    }
}

/// Affine vector field x ↦ A·x + b.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub a: Matrix4<f64>,
    pub b: Vector4<f64>,
}

impl AffineField {
    pub fn eval(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.a * x + self.b
    }

    pub fn scaled(&self, c: f64) -> Self {
        AffineField {
            a: self.a * c,
            b: self.b * c,
        }
    }

    pub fn sub(&self, o: &AffineField) -> Self {
        AffineField {
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }

    pub fn add(&self, o: &AffineField) -> Self {
        AffineField {
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }

    /// M·(x − a) with a chosen so that the constant lies in M's range.
    pub fn linear_about(m: Matrix4<f64>, a: Vector4<f64>) -> Self {
        AffineField { a: m, b: -(m * a) }
    }
}

impl From<&RotationField> for AffineField {
    fn from(k: &RotationField) -> Self {
        let m = k.matrix();
        AffineField {
            a: m,
            b: -(m * k.q),
        }
    }
}

/// evaluate_field: S·J·S⁻¹·(x − q).
pub fn evaluate_field(k: &RotationField, x: &Vector4<f64>) -> Vector4<f64> {
    k.eval(x)
}
