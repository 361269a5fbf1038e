//! Thruster layout and the linear thrust model with multiplicative fault
//! weights.

use core::f64::consts::FRAC_PI_2;

use crate::allocation::pseudo_inverse;
use crate::math::{Mat3x4, Mat4x3, Vec3, Vec4};
use crate::{Error, Result};

pub const THRUSTER_COUNT: usize = 4;

/// Configuration matrix of the X layout: column `i` is the body wrench
/// produced by one unit of thrust from thruster `i + 1`.
pub fn config_matrix(alpha: f64, arm: f64) -> Result<Mat3x4> {
    if !(alpha > 0.0 && alpha < FRAC_PI_2) || !(arm > 0.0) || !arm.is_finite() {
        return Err(Error::Geometry { alpha, arm });
    }
    let (s, c) = (libm::sin(alpha), libm::cos(alpha));
    #[rustfmt::skip]
    let t = Mat3x4::new(
         c,    c,   -c,   -c,
        -s,    s,   -s,    s,
        -arm,  arm,  arm, -arm,
    );
    Ok(t)
}

/// Geometry plus cached right inverses.
///
/// Besides the pseudo-inverse of the full matrix, one inverse per thruster
/// is kept for the matrix with that thruster's column removed; allocation
/// switches to it once the thruster has been written off as failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ThrusterGeometry {
    alpha: f64,
    arm: f64,
    t_conf: Mat3x4,
    pinv: Mat4x3,
    pinv_without: [Mat4x3; THRUSTER_COUNT],
}

impl ThrusterGeometry {
    pub fn new(alpha: f64, arm: f64) -> Result<Self> {
        let t_conf = config_matrix(alpha, arm)?;
        let pinv = pseudo_inverse(&t_conf)?;
        let mut pinv_without = [Mat4x3::zeros(); THRUSTER_COUNT];
        for (i, slot) in pinv_without.iter_mut().enumerate() {
            let mut reduced = t_conf;
            reduced.set_column(i, &Vec3::zeros());
            *slot = pseudo_inverse(&reduced)?;
        }
        Ok(Self {
            alpha,
            arm,
            t_conf,
            pinv,
            pinv_without,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn arm(&self) -> f64 {
        self.arm
    }

    pub fn t_conf(&self) -> &Mat3x4 {
        &self.t_conf
    }

    pub fn pinv(&self) -> &Mat4x3 {
        &self.pinv
    }

    /// Right inverse of the configuration with thruster `index` (0-based) removed.
    pub fn pinv_without(&self, index: usize) -> &Mat4x3 {
        &self.pinv_without[index]
    }

    /// Body wrench direction of thruster `index` (0-based).
    pub fn column(&self, index: usize) -> Vec3 {
        self.t_conf.column(index).into_owned()
    }
}

/// Thrust coefficients, true and estimated fault weights, and the last
/// command sent to the thrusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ThrusterBank {
    coefficients: Vec4,
    weights: Vec4,
    estimates: Vec4,
    pub command: Vec4,
    u_max: f64,
    w_min: f64,
}

impl ThrusterBank {
    /// A healthy bank: `W = W_hat = 1`, zero command.
    pub fn new(coefficients: Vec4, u_max: f64, w_min: f64) -> Result<Self> {
        if coefficients.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::Parameter {
                name: "K",
                value: coefficients.min(),
                reason: "thrust coefficients must be positive",
            });
        }
        if !(u_max > 0.0) {
            return Err(Error::Parameter {
                name: "u_max",
                value: u_max,
                reason: "must be positive",
            });
        }
        if !(w_min > 0.0 && w_min < 1.0) {
            return Err(Error::Parameter {
                name: "w_min",
                value: w_min,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self {
            coefficients,
            weights: Vec4::repeat(1.0),
            estimates: Vec4::repeat(1.0),
            command: Vec4::zeros(),
            u_max,
            w_min,
        })
    }

    pub fn coefficients(&self) -> &Vec4 {
        &self.coefficients
    }

    /// True fault weights `W`.
    pub fn weights(&self) -> &Vec4 {
        &self.weights
    }

    /// Estimated weights `W_hat` used by allocation.
    pub fn estimates(&self) -> &Vec4 {
        &self.estimates
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    pub fn set_weights(&mut self, weights: Vec4) -> Result<()> {
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Parameter {
                name: "W",
                value: *w,
                reason: "weights must lie in [0, 1]",
            });
        }
        self.weights = weights;
        Ok(())
    }

    pub fn set_estimates(&mut self, estimates: Vec4) -> Result<()> {
        for (i, w) in estimates.iter().enumerate() {
            if !(*w >= self.w_min) {
                return Err(Error::WeightBelowFloor {
                    thruster: i + 1,
                    value: *w,
                    floor: self.w_min,
                });
            }
            if *w > 1.0 {
                return Err(Error::Parameter {
                    name: "W_hat",
                    value: *w,
                    reason: "estimates must not exceed 1",
                });
            }
        }
        self.estimates = estimates;
        Ok(())
    }

    /// Whether the estimate of thruster `index` (0-based) sits on the floor,
    /// i.e. the thruster is treated as failed.
    pub fn is_written_off(&self, index: usize) -> bool {
        self.estimates[index] <= self.w_min * (1.0 + 1e-9)
    }

    /// Clamp a command vector to `[-u_max, u_max]`.
    pub fn saturate(&self, u: &Vec4) -> Vec4 {
        u.map(|c| c.clamp(-self.u_max, self.u_max))
    }
}

/// `F = K W u`: thrust produced by each thruster for the given command.
pub fn thrust_forces(u_cmd: &Vec4, bank: &ThrusterBank) -> Vec4 {
    bank.coefficients
        .component_mul(&bank.weights)
        .component_mul(u_cmd)
}
