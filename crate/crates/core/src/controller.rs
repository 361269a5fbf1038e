//! Backstepping trajectory-tracking controller.
//!
//! Step one stabilises the pose error `e_eta = eta_d - eta` with the virtual
//! velocity `alpha_nu = J' (eta_d_dot + G1^-1 A1 e_eta)`. Step two drives the
//! velocity error `e_nu = alpha_nu - nu` to zero with
//!
//! ```text
//! tau_c = B^-1 (alpha_nu_dot - F_V(nu) + G2^-1 A2 e_nu + G2^-1 J' G1 e_eta)
//! ```
//!
//! which makes `V2 = e_eta' G1 e_eta / 2 + e_nu' G2 e_nu / 2` satisfy
//! `V2_dot = -e_eta' A1 e_eta - e_nu' A2 e_nu <= -lambda V2`, with `lambda`
//! the smallest entry of `G1^-1 A1` and `G2^-1 A2`.

use crate::allocation::Wrench;
use crate::math::{self, Vec3};
use crate::vehicle::{eval_fv, rotation_matrix, VehicleParams, VehicleState};
use crate::{Error, Result};

/// Diagonal gain matrices, stored as their diagonals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    gamma1: Vec3,
    gamma2: Vec3,
    a1: Vec3,
    a2: Vec3,
    lambda: f64,
}

impl ControllerGains {
    pub fn new(gamma1: Vec3, gamma2: Vec3, a1: Vec3, a2: Vec3) -> Result<Self> {
        for (name, d) in [
            ("gamma1", &gamma1),
            ("gamma2", &gamma2),
            ("a1", &a1),
            ("a2", &a2),
        ] {
            if let Some(bad) = d.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
                return Err(Error::Parameter {
                    name,
                    value: *bad,
                    reason: "gain entries must be positive",
                });
            }
        }
        let lambda = a1
            .component_div(&gamma1)
            .min()
            .min(a2.component_div(&gamma2).min());
        Ok(Self {
            gamma1,
            gamma2,
            a1,
            a2,
            lambda,
        })
    }

    /// G1 = diag(1, 1, 10), G2 = diag(100, 100, 300), A1 = diag(1, 1, 10),
    /// A2 = diag(100, 100, 300).
    pub fn reference_gains() -> Self {
        Self::new(
            Vec3::new(1.0, 1.0, 10.0),
            Vec3::new(100.0, 100.0, 300.0),
            Vec3::new(1.0, 1.0, 10.0),
            Vec3::new(100.0, 100.0, 300.0),
        )
        .expect("reference gains are positive")
    }

    pub fn gamma1(&self) -> &Vec3 {
        &self.gamma1
    }

    pub fn gamma2(&self) -> &Vec3 {
        &self.gamma2
    }

    pub fn a1(&self) -> &Vec3 {
        &self.a1
    }

    pub fn a2(&self) -> &Vec3 {
        &self.a2
    }

    /// Guaranteed exponential decay rate of `V2`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn pose_rate(&self) -> Vec3 {
        self.a1.component_div(&self.gamma1)
    }

    fn velocity_rate(&self) -> Vec3 {
        self.a2.component_div(&self.gamma2)
    }
}

/// Reference pose and its first two derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub eta_d: Vec3,
    pub eta_d_dot: Vec3,
    pub eta_d_ddot: Vec3,
    /// `false` at segment joints, where the derivatives are right limits.
    pub smooth: bool,
}

impl ReferenceSample {
    pub fn hold(eta_d: Vec3) -> Self {
        Self {
            eta_d,
            eta_d_dot: Vec3::zeros(),
            eta_d_ddot: Vec3::zeros(),
            smooth: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    /// `eta_d - eta`, heading component wrapped.
    pub e_eta: Vec3,
    /// `alpha_nu - nu`.
    pub e_nu: Vec3,
    pub alpha_nu: Vec3,
}

/// `eta_d - eta` with the heading difference taken on the circle.
pub fn pose_error(eta_d: &Vec3, state: &VehicleState) -> Vec3 {
    Vec3::new(
        eta_d.x - state.x,
        eta_d.y - state.y,
        math::angle_diff(eta_d.z, state.psi),
    )
}

/// `e_eta_dot = eta_d_dot - J nu`.
pub fn error_rate(reference: &ReferenceSample, state: &VehicleState) -> Vec3 {
    reference.eta_d_dot - rotation_matrix(state.psi) * state.velocity()
}

/// Virtual velocity `alpha_nu = J' (eta_d_dot + G1^-1 A1 e_eta)`.
pub fn stabilization_function(
    reference: &ReferenceSample,
    e_eta: &Vec3,
    psi: f64,
    gains: &ControllerGains,
) -> Vec3 {
    rotation_matrix(psi).transpose()
        * (reference.eta_d_dot + gains.pose_rate().component_mul(e_eta))
}

/// Time derivative of `alpha_nu` along the plant trajectory, by the chain
/// rule (`J_dot = J S(r)`), so no differentiation of measured signals is
/// needed.
pub fn stabilization_derivative(
    reference: &ReferenceSample,
    state: &VehicleState,
    e_eta: &Vec3,
    gains: &ControllerGains,
) -> Vec3 {
    let jt = rotation_matrix(state.psi).transpose();
    let k = gains.pose_rate();
    let w = reference.eta_d_dot + k.component_mul(e_eta);
    let w_dot = reference.eta_d_ddot + k.component_mul(&error_rate(reference, state));
    let jt_w = jt * w;
    let r = state.r;
    jt * w_dot - Vec3::new(-r * jt_w.y, r * jt_w.x, 0.0)
}

pub fn tracking_errors(
    state: &VehicleState,
    reference: &ReferenceSample,
    gains: &ControllerGains,
) -> TrackingErrors {
    let e_eta = pose_error(&reference.eta_d, state);
    let alpha_nu = stabilization_function(reference, &e_eta, state.psi, gains);
    TrackingErrors {
        e_eta,
        e_nu: alpha_nu - state.velocity(),
        alpha_nu,
    }
}

/// Commanded body wrench `tau_c`.
pub fn control_law(
    state: &VehicleState,
    reference: &ReferenceSample,
    errors: &TrackingErrors,
    gains: &ControllerGains,
    params: &VehicleParams,
) -> Wrench {
    let alpha_dot = stabilization_derivative(reference, state, &errors.e_eta, gains);
    let coupling =
        rotation_matrix(state.psi).transpose() * gains.gamma1.component_mul(&errors.e_eta);
    let accel = alpha_dot - eval_fv(&state.velocity(), params)
        + gains.velocity_rate().component_mul(&errors.e_nu)
        + coupling.component_div(&gains.gamma2);
    Wrench::from_vector(&(params.control_gain_inv() * accel))
}

/// `V2 = e_eta' G1 e_eta / 2 + e_nu' G2 e_nu / 2`.
pub fn lyapunov_value(errors: &TrackingErrors, gains: &ControllerGains) -> f64 {
    0.5 * errors.e_eta.dot(&gains.gamma1.component_mul(&errors.e_eta))
        + 0.5 * errors.e_nu.dot(&gains.gamma2.component_mul(&errors.e_nu))
}
