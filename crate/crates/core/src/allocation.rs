//! Weighted pseudo-inverse thrust allocation.

use crate::math::{Mat3x4, Mat4x3, Vec3, Vec4};
use crate::thruster::{thrust_forces, ThrusterBank, ThrusterGeometry, THRUSTER_COUNT};
use crate::{Error, Result};

/// Body-frame force and moment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wrench {
    pub surge: f64,
    pub sway: f64,
    pub yaw: f64,
}

impl Wrench {
    pub const fn new(surge: f64, sway: f64, yaw: f64) -> Self {
        Self { surge, sway, yaw }
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector(self) -> Vec3 {
        Vec3::new(self.surge, self.sway, self.yaw)
    }

    pub fn is_finite(&self) -> bool {
        self.surge.is_finite() && self.sway.is_finite() && self.yaw.is_finite()
    }
}

/// Minimum-norm right inverse `T' (T T')^-1` of a 3x4 matrix.
pub fn pseudo_inverse(t: &Mat3x4) -> Result<Mat4x3> {
    let gram = t * t.transpose();
    let scale = gram.trace() / 3.0;
    if !(scale > 0.0) || gram.determinant().abs() <= 1e-12 * scale * scale * scale {
        return Err(Error::RankDeficient);
    }
    let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
    Ok(t.transpose() * inv)
}

/// Result of one allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// `W_hat^-1 K^-1 T^+ tau_c` before saturation.
    pub raw: Vec4,
    /// What the thrusters actually receive.
    pub command: Vec4,
    pub saturated: bool,
    /// Thruster left out of the allocation because its estimate is on the floor.
    pub excluded: Option<usize>,
}

/// `u_hat = W_hat^-1 K^-1 T^+ tau_c`, clamped to the command limit.
///
/// When exactly one thruster's estimate has reached the floor `w_min`, that
/// thruster is treated as failed and the wrench is distributed over the
/// remaining three through the inverse of the reduced configuration.
pub fn allocate(
    tau_c: &Wrench,
    bank: &ThrusterBank,
    geom: &ThrusterGeometry,
) -> Result<Allocation> {
    let w_hat = bank.estimates();
    for (i, w) in w_hat.iter().enumerate() {
        if !(*w >= bank.w_min()) {
            return Err(Error::WeightBelowFloor {
                thruster: i + 1,
                value: *w,
                floor: bank.w_min(),
            });
        }
    }
    let mut written_off = (0..THRUSTER_COUNT).filter(|&i| bank.is_written_off(i));
    let excluded = match (written_off.next(), written_off.next()) {
        (Some(i), None) => Some(i),
        _ => None,
    };
    let pinv = match excluded {
        Some(i) => geom.pinv_without(i),
        None => geom.pinv(),
    };
    let forces = pinv * tau_c.to_vector();
    let raw = forces
        .component_div(bank.coefficients())
        .component_div(w_hat);
    let command = bank.saturate(&raw);
    Ok(Allocation {
        raw,
        command,
        saturated: command != raw,
        excluded,
    })
}

/// `tau = T K W u`: the wrench the thrusters really produce.
pub fn achieved_wrench(u_cmd: &Vec4, bank: &ThrusterBank, geom: &ThrusterGeometry) -> Wrench {
    Wrench::from_vector(&(geom.t_conf() * thrust_forces(u_cmd, bank)))
}
