#![allow(dead_code)]

use ftc_core::math::{Mat3, Vec3, Vec4};
use ftc_core::{Scenario, ThrusterGeometry, TrajectoryPlan, VehicleParams};

pub const MASS: [f64; 3] = [19.86, 20.62, 0.59];
pub const LIN_DAMPING: [f64; 3] = [4.03, 6.22, 0.07];
pub const QUAD_DAMPING: [f64; 3] = [18.18, 21.66, 1.55];

pub fn vehicle() -> VehicleParams {
    VehicleParams::new(
        Mat3::from_diagonal(&Vec3::from(MASS)),
        Mat3::from_diagonal(&Vec3::from(LIN_DAMPING)),
        Vec3::from(QUAD_DAMPING),
        None,
    )
    .unwrap()
}

pub fn geometry() -> ThrusterGeometry {
    ThrusterGeometry::new(core::f64::consts::FRAC_PI_4, 0.2).unwrap()
}

pub fn scenario(plan: TrajectoryPlan) -> Scenario {
    Scenario::new("test", vehicle(), geometry(), Vec4::repeat(40.0), 1.0, plan)
}
