//! Rigid transforms in SE(3) and their axis-angle parameterization.
//!
//! Rotations are stored as 3x3 matrices. The axis-angle form only appears at
//! the parameter boundary, where particles are perturbed and averaged as plain
//! 6-vectors `[w, b]`.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Angles this close to pi are treated as exactly pi when choosing the sign
/// of the rotation axis.
const PI_AXIS_TOLERANCE: f64 = 1e-10;

/// An element of SE(3): `p' = R p + t`. Translations are in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from raw parts. The rotation is not checked; use
    /// [`RigidTransform::orthonormalized`] when it comes from an untrusted
    /// or accumulated source.
    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    /// Exponential map of the axis-angle vector `w` (rad) plus translation `b` (mm).
    pub fn from_axis_angle(w: &Vector3<f64>, b: &Vector3<f64>) -> Self {
        Self {
            rotation: rotation_from_axis_angle(w),
            translation: *b,
        }
    }

    pub fn from_homogeneous(m: &Matrix4<f64>) -> Self {
        Self {
            rotation: m.fixed_view::<3, 3>(0, 0).into_owned(),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Projects the rotation back onto SO(3) (nearest rotation in the
    /// Frobenius sense).
    pub fn orthonormalized(&self) -> RigidTransform {
        let svd = self.rotation.svd(true, true);
        let u = svd.u.expect("svd u");
        let v_t = svd.v_t.expect("svd v_t");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        RigidTransform {
            rotation: r,
            translation: self.translation,
        }
    }

    /// Rotation angle in `[0, pi]`.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rotation)
    }

    pub fn to_axis_angle(&self) -> AxisAnglePose {
        AxisAnglePose {
            w: axis_angle_from_rotation(&self.rotation),
            b: self.translation,
        }
    }

    /// Largest elementwise difference between the homogeneous matrices.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        let dr = (self.rotation - other.rotation).amax();
        let dt = (self.translation - other.translation).amax();
        dr.max(dt)
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl Mul<&RigidTransform> for &RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}

/// Axis-angle rotation `w` (rad, magnitude is the angle) and translation `b` (mm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAnglePose {
    pub w: Vector3<f64>,
    pub b: Vector3<f64>,
}

impl AxisAnglePose {
    pub fn new(w: Vector3<f64>, b: Vector3<f64>) -> Self {
        Self { w, b }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_array(v: &[f64; 6]) -> Self {
        Self {
            w: Vector3::new(v[0], v[1], v[2]),
            b: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.w.x, self.w.y, self.w.z, self.b.x, self.b.y, self.b.z]
    }

    pub fn to_transform(&self) -> RigidTransform {
        RigidTransform::from_axis_angle(&self.w, &self.b)
    }
}

pub fn rotation_from_axis_angle(w: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::new(*w).into_inner()
}

pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    axis_angle_from_rotation(r).norm()
}

/// Logarithm map of SO(3). At exactly pi the axis sign is ambiguous; the
/// representative whose first nonzero axis component is non-negative is
/// returned.
pub fn axis_angle_from_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    let (mut s, mut v) = (q.w, q.imag());
    if s < 0.0 {
        s = -s;
        v = -v;
    }
    let vn = v.norm();
    if vn < 1e-300 {
        return Vector3::zeros();
    }
    let angle = 2.0 * vn.atan2(s);
    let mut axis = v / vn;
    if PI - angle < PI_AXIS_TOLERANCE {
        if let Some(first) = axis.iter().copied().find(|c| c.abs() > 1e-12) {
            if first < 0.0 {
                axis = -axis;
            }
        }
    }
    axis * angle
}

/// Translation and rotation discrepancy between a ground-truth and an
/// estimated pose: `eps_b = |b - b_hat|` (mm) and `eps_w` is the angle of
/// `R R_hat^T` (rad, in `[0, pi]`).
pub fn pose_error(truth: &RigidTransform, estimate: &RigidTransform) -> (f64, f64) {
    let eps_b = (truth.translation - estimate.translation).norm();
    let relative = truth.rotation * estimate.rotation.transpose();
    (eps_b, rotation_angle(&relative))
}
