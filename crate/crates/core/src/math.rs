//! Small numeric helpers shared by the other modules.

use core::f64::consts::{PI, TAU};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec4 = nalgebra::Vector4<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat3x4 = nalgebra::Matrix3x4<f64>;
pub type Mat4x3 = nalgebra::Matrix4x3<f64>;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let w = libm::remainder(angle, TAU);
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Shortest signed angular difference `to - from`, in `(-pi, pi]`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap_angle(to - from)
}

/// Sign of `x` as -1/0/+1, with `|x| <= eps` reported as 0.
pub fn sign_beyond(x: f64, eps: f64) -> i8 {
    if x > eps {
        1
    } else if x < -eps {
        -1
    } else {
        0
    }
}

pub fn diag3(d: &Vec3) -> Mat3 {
    Mat3::from_diagonal(d)
}

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
