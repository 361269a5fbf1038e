//! Planar (surge, sway, yaw) vehicle kinematics and dynamics.
//!
//! Kinematics: `eta_dot = J(psi) nu`. Dynamics: `nu_dot = F_V(nu) + B tau`
//! with `F_V(nu) = -M^-1 (C(nu) nu + D(nu) nu)`, where `C` is the Coriolis
//! and centripetal matrix built from the (rigid body + added mass) inertia
//! `M`, and `D(nu) = D_lin + diag(d_quad .* |nu|)`. There is no restoring
//! term on the horizontal plane.

use crate::math::{self, Mat3, Vec3};
use crate::{Error, Result};

/// Pose in the navigation frame and velocity in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Heading, kept in `(-pi, pi]`.
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, psi: f64, u: f64, v: f64, r: f64) -> Self {
        Self {
            x,
            y,
            psi: math::wrap_angle(psi),
            u,
            v,
            r,
        }
    }

    pub fn from_vectors(eta: &Vec3, nu: &Vec3) -> Self {
        Self::new(eta.x, eta.y, eta.z, nu.x, nu.y, nu.z)
    }

    pub fn pose(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.psi)
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.u, self.v, self.r)
    }

    pub fn is_finite(&self) -> bool {
        math::all_finite(&[self.x, self.y, self.psi, self.u, self.v, self.r])
    }

    /// Largest absolute component, used by the divergence guard.
    pub fn magnitude(&self) -> f64 {
        [self.x, self.y, self.psi, self.u, self.v, self.r]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

/// Inertia, damping and control-gain parameters of the planar model.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    inertia: Mat3,
    inertia_inv: Mat3,
    lin_damping: Mat3,
    quad_damping: Vec3,
    control_gain: Mat3,
    control_gain_inv: Mat3,
}

impl VehicleParams {
    /// `control_gain` defaults to `M^-1`, which is what `nu_dot = M^-1 (tau - ...)`
    /// implies.
    pub fn new(
        inertia: Mat3,
        lin_damping: Mat3,
        quad_damping: Vec3,
        control_gain: Option<Mat3>,
    ) -> Result<Self> {
        if (inertia - inertia.transpose()).abs().max() > 1e-9 * inertia.abs().max().max(1.0) {
            return Err(Error::NotPositiveDefinite("inertia matrix (symmetric)"));
        }
        if inertia.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("inertia matrix"));
        }
        let inertia_inv = inertia
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite("inertia matrix"))?;
        let control_gain = control_gain.unwrap_or(inertia_inv);
        // x' B x > 0 for all x iff the symmetric part of B is positive definite.
        let sym = (control_gain + control_gain.transpose()) * 0.5;
        if sym.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite("control gain matrix B"));
        }
        let control_gain_inv = control_gain
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite("control gain matrix B"))?;
        if !math::all_finite(lin_damping.as_slice()) || !math::all_finite(quad_damping.as_slice()) {
            return Err(Error::Parameter {
                name: "damping",
                value: f64::NAN,
                reason: "damping terms must be finite",
            });
        }
        Ok(Self {
            inertia,
            inertia_inv,
            lin_damping,
            quad_damping,
            control_gain,
            control_gain_inv,
        })
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    pub fn lin_damping(&self) -> &Mat3 {
        &self.lin_damping
    }

    pub fn quad_damping(&self) -> &Vec3 {
        &self.quad_damping
    }

    /// The matrix `B` of `nu_dot = F_V + B tau`.
    pub fn control_gain(&self) -> &Mat3 {
        &self.control_gain
    }

    pub fn control_gain_inv(&self) -> &Mat3 {
        &self.control_gain_inv
    }

    /// Velocity-dependent damping matrix `D(nu)`.
    pub fn damping_matrix(&self, nu: &Vec3) -> Mat3 {
        self.lin_damping + Mat3::from_diagonal(&self.quad_damping.component_mul(&nu.abs()))
    }

    /// Kinetic energy `nu' M nu / 2`.
    pub fn kinetic_energy(&self, nu: &Vec3) -> f64 {
        0.5 * nu.dot(&(self.inertia * nu))
    }
}

/// Body-to-navigation rotation about the vertical axis.
pub fn rotation_matrix(psi: f64) -> Mat3 {
    let (s, c) = (libm::sin(psi), libm::cos(psi));
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `eta_dot = J(psi) nu`.
pub fn kinematics_rhs(state: &VehicleState) -> Vec3 {
    rotation_matrix(state.psi) * state.velocity()
}

/// Coriolis and centripetal matrix for a symmetric inertia matrix.
pub fn coriolis_matrix(nu: &Vec3, inertia: &Mat3) -> Mat3 {
    let m_nu = inertia * nu;
    let (a1, a2) = (m_nu.x, m_nu.y);
    Mat3::new(0.0, 0.0, -a2, 0.0, 0.0, a1, a2, -a1, 0.0)
}

/// Modelled nonlinear dynamics `F_V(nu)`.
pub fn eval_fv(nu: &Vec3, params: &VehicleParams) -> Vec3 {
    let c = coriolis_matrix(nu, &params.inertia);
    let d = params.damping_matrix(nu);
    -(params.inertia_inv * (c * nu + d * nu))
}

/// Analytic Jacobian of [`eval_fv`] with respect to `nu`.
pub fn fv_jacobian(nu: &Vec3, params: &VehicleParams) -> Mat3 {
    let m = &params.inertia;
    let m_nu = m * nu;
    let (a1, a2) = (m_nu.x, m_nu.y);
    let (u, v, r) = (nu.x, nu.y, nu.z);
    let row0 = m.row(0);
    let row1 = m.row(1);

    // d(C(nu) nu)/d(nu), with C nu = (-a2 r, a1 r, a2 u - a1 v).
    let mut dc = Mat3::zeros();
    dc.set_row(0, &(-r * row1));
    dc[(0, 2)] -= a2;
    dc.set_row(1, &(r * row0));
    dc[(1, 2)] += a1;
    dc.set_row(2, &(u * row1 - v * row0));
    dc[(2, 0)] += a2;
    dc[(2, 1)] -= a1;

    // d(D(nu) nu)/d(nu): the quadratic terms d_i |nu_i| nu_i differentiate to 2 d_i |nu_i|.
    let dd = params.lin_damping
        + Mat3::from_diagonal(&(2.0 * params.quad_damping.component_mul(&nu.abs())));

    -(params.inertia_inv * (dc + dd))
}

/// `nu_dot = F_V(nu) + B tau`.
pub fn dynamics_rhs(state: &VehicleState, tau: &Vec3, params: &VehicleParams) -> Vec3 {
    eval_fv(&state.velocity(), params) + params.control_gain * tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;

    fn diag_params(m: [f64; 3], d: [f64; 3]) -> VehicleParams {
        VehicleParams::new(
            Mat3::from_diagonal(&Vec3::from(m)),
            Mat3::from_diagonal(&Vec3::from(d)),
            Vec3::zeros(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn rotation_special_angles() {
        assert_eq!(rotation_matrix(0.0), Mat3::identity());
        let q = rotation_matrix(FRAC_PI_2);
        let expected = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(q, expected, epsilon = 1e-15);
        let j = rotation_matrix(0.7);
        assert_relative_eq!(j * j.transpose(), Mat3::identity(), epsilon = 1e-12);
        assert_relative_eq!(j.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kinematics_examples() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert_relative_eq!(kinematics_rhs(&s), Vec3::new(1.0, 0.0, 0.0));
        let s = VehicleState::new(0.0, 0.0, FRAC_PI_2, 1.0, 0.0, 0.0);
        assert_relative_eq!(
            kinematics_rhs(&s),
            Vec3::new(0.0, 1.0, 0.0),
            epsilon = 1e-15
        );
        for psi in [-2.0, 0.3, 1.7] {
            let s = VehicleState::new(0.0, 0.0, psi, 0.0, 0.0, 0.05);
            assert_relative_eq!(
                kinematics_rhs(&s),
                Vec3::new(0.0, 0.0, 0.05),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn fv_zero_at_rest_and_decoupled_surge() {
        let p = diag_params([20.0, 25.0, 0.5], [4.0, 6.0, 0.1]);
        assert_eq!(eval_fv(&Vec3::zeros(), &p), Vec3::zeros());
        let f = eval_fv(&Vec3::new(1.0, 0.0, 0.0), &p);
        assert_relative_eq!(f, Vec3::new(-4.0 / 20.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn dynamics_is_fv_plus_gain() {
        let p = diag_params([2.0, 4.0, 0.5], [1.0, 1.0, 1.0]);
        let s = VehicleState::default();
        let nd = dynamics_rhs(&s, &Vec3::new(1.0, 0.0, 0.0), &p);
        assert_relative_eq!(nd, Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(dynamics_rhs(&s, &Vec3::zeros(), &p), Vec3::zeros());
    }

    #[test]
    fn coriolis_does_no_work() {
        let m = Mat3::new(20.0, 0.5, 0.1, 0.5, 25.0, 0.2, 0.1, 0.2, 0.6);
        let nu = Vec3::new(0.8, -0.3, 0.2);
        assert_relative_eq!(
            nu.dot(&(coriolis_matrix(&nu, &m) * nu)),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_indefinite_inertia() {
        let bad = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0));
        assert!(VehicleParams::new(bad, Mat3::zeros(), Vec3::zeros(), None).is_err());
        let asym = Mat3::new(1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(VehicleParams::new(asym, Mat3::zeros(), Vec3::zeros(), None).is_err());
        let m = Mat3::identity();
        let b = Mat3::from_diagonal(&Vec3::new(1.0, 0.0, 1.0));
        assert!(VehicleParams::new(m, Mat3::zeros(), Vec3::zeros(), Some(b)).is_err());
    }

    #[test]
    fn psi_is_wrapped_on_construction() {
        let s = VehicleState::new(0.0, 0.0, 7.0, 0.0, 0.0, 0.0);
        assert!(s.psi > -core::f64::consts::PI && s.psi <= core::f64::consts::PI);
    }
}
