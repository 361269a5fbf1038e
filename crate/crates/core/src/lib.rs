//! Fault-tolerant trajectory tracking for a planar marine vehicle driven by
//! four horizontal thrusters in an X layout.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerical
//! pieces: the 3DOF plant, thrust allocation, the backstepping tracking
//! controller, residual-based fault detection and identification, and a
//! deterministic fixed-step closed-loop simulator. File formats, the command
//! line front end and batch execution live in the `ftc` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod allocation;
pub mod controller;
mod error;
pub mod fault;
pub mod fdi;
pub mod math;
pub mod sim;
pub mod thruster;
pub mod trajectory;
pub mod vehicle;

pub use allocation::{achieved_wrench, allocate, pseudo_inverse, Allocation, Wrench};
pub use controller::{ControllerGains, ReferenceSample, TrackingErrors};
pub use error::{Error, ScheduleError};
pub use fault::{FaultEvent, FaultSchedule};
pub use fdi::{FdiConfig, FdiState, SignPattern};
pub use sim::{FaultReport, Scenario, SimRecord, Simulation, Summary};
pub use thruster::{ThrusterBank, ThrusterGeometry, THRUSTER_COUNT};
pub use trajectory::{Segment, TrajectoryPlan};
pub use vehicle::{VehicleParams, VehicleState};

pub type Result<T> = core::result::Result<T, Error>;
