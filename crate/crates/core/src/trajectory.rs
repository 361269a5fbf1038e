//! Piecewise-analytic reference trajectories.

use alloc::vec::Vec;

use crate::controller::ReferenceSample;
use crate::math::{self, Vec3};
use crate::{Error, Result};

/// Joints closer than this (relative to `max(1, t)`) to a sample time are
/// treated as coinciding with it.
const JOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum Segment {
    /// Stay at the segment's start pose.
    Hold { duration: f64 },
    /// Move at constant `speed` along course `heading`, pointing along it.
    Straight {
        duration: f64,
        speed: f64,
        heading: f64,
    },
    /// Constant-speed arc starting from the current heading.
    Turn {
        duration: f64,
        speed: f64,
        yaw_rate: f64,
    },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Hold { duration }
            | Segment::Straight { duration, .. }
            | Segment::Turn { duration, .. } => duration,
        }
    }

    /// Pose, velocity and acceleration `tau` seconds into the segment.
    fn evaluate(&self, start: &Vec3, tau: f64) -> (Vec3, Vec3, Vec3) {
        match *self {
            Segment::Hold { .. } => (*start, Vec3::zeros(), Vec3::zeros()),
            Segment::Straight { speed, heading, .. } => {
                let (s, c) = (libm::sin(heading), libm::cos(heading));
                let pose = Vec3::new(
                    start.x + speed * tau * c,
                    start.y + speed * tau * s,
                    heading,
                );
                (pose, Vec3::new(speed * c, speed * s, 0.0), Vec3::zeros())
            }
            Segment::Turn {
                speed, yaw_rate, ..
            } => {
                let psi0 = start.z;
                let psi = psi0 + yaw_rate * tau;
                let (s, c) = (libm::sin(psi), libm::cos(psi));
                let pos = if yaw_rate.abs() < 1e-12 {
                    (start.x + speed * tau * c, start.y + speed * tau * s)
                } else {
                    let radius = speed / yaw_rate;
                    (
                        start.x + radius * (s - libm::sin(psi0)),
                        start.y - radius * (c - libm::cos(psi0)),
                    )
                };
                (
                    Vec3::new(pos.0, pos.1, psi),
                    Vec3::new(speed * c, speed * s, yaw_rate),
                    Vec3::new(-speed * yaw_rate * s, speed * yaw_rate * c, 0.0),
                )
            }
        }
    }
}

/// Ordered list of segments chained end to start.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPlan {
    initial: Vec3,
    segments: Vec<Segment>,
    /// Start time and start pose of every segment, plus the final pose.
    starts: Vec<(f64, Vec3)>,
}

impl TrajectoryPlan {
    pub fn new(initial: Vec3, segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Plan {
                segment: 0,
                reason: "plan needs at least one segment",
            });
        }
        let mut starts = Vec::with_capacity(segments.len() + 1);
        let mut t = 0.0;
        let mut pose = initial;
        for (i, seg) in segments.iter().enumerate() {
            let d = seg.duration();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Plan {
                    segment: i + 1,
                    reason: "duration must be positive",
                });
            }
            let finite = match *seg {
                Segment::Hold { .. } => true,
                Segment::Straight { speed, heading, .. } => {
                    speed.is_finite() && heading.is_finite()
                }
                Segment::Turn {
                    speed, yaw_rate, ..
                } => speed.is_finite() && yaw_rate.is_finite(),
            };
            if !finite {
                return Err(Error::Plan {
                    segment: i + 1,
                    reason: "parameters must be finite",
                });
            }
            starts.push((t, pose));
            pose = seg.evaluate(&pose, d).0;
            t += d;
        }
        starts.push((t, pose));
        Ok(Self {
            initial,
            segments,
            starts,
        })
    }

    /// The reference used in the numerical study: from `(10, 5, pi/2)` move
    /// along +y at 1 m/s for 300 s, then turn at 0.05 rad/s keeping 1 m/s.
    pub fn reference_plan(turn_duration: f64) -> Self {
        let h = core::f64::consts::FRAC_PI_2;
        Self::new(
            Vec3::new(10.0, 5.0, h),
            alloc::vec![
                Segment::Straight {
                    duration: 300.0,
                    speed: 1.0,
                    heading: h
                },
                Segment::Turn {
                    duration: turn_duration,
                    speed: 1.0,
                    yaw_rate: 0.05
                },
            ],
        )
        .expect("reference plan is valid")
    }

    pub fn initial(&self) -> &Vec3 {
        &self.initial
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration(&self) -> f64 {
        self.starts[self.segments.len()].0
    }

    /// Segment joint times, including the end of the plan.
    pub fn joints(&self) -> impl Iterator<Item = f64> + '_ {
        self.starts[1..].iter().map(|(t, _)| *t)
    }

    fn at_joint(&self, t: f64) -> bool {
        let tol = JOINT_TOL * t.abs().max(1.0);
        self.joints().any(|j| (t - j).abs() <= tol)
    }

    /// Whether a joint lies in `(t0, t1]`.
    pub fn joint_between(&self, t0: f64, t1: f64) -> bool {
        let tol = JOINT_TOL * t1.abs().max(1.0);
        self.joints().any(|j| j > t0 + tol && j <= t1 + tol)
    }

    /// Reference pose and derivatives at time `t`. At a joint the
    /// derivatives are right limits and `smooth` is false; past the end the
    /// final pose is held.
    pub fn sample(&self, t: f64) -> ReferenceSample {
        let tol = JOINT_TOL * t.abs().max(1.0);
        let smooth = !self.at_joint(t);
        let end = self.duration();
        if t >= end - tol {
            let mut s = ReferenceSample::hold(self.starts[self.segments.len()].1);
            s.eta_d.z = math::wrap_angle(s.eta_d.z);
            s.smooth = smooth;
            return s;
        }
        let idx = self.starts[..self.segments.len()]
            .iter()
            .rposition(|(t0, _)| *t0 <= t + tol)
            .unwrap_or(0);
        let (t0, start) = self.starts[idx];
        let (mut pose, vel, acc) = self.segments[idx].evaluate(&start, (t - t0).max(0.0));
        pose.z = math::wrap_angle(pose.z);
        ReferenceSample {
            eta_d: pose,
            eta_d_dot: vel,
            eta_d_ddot: acc,
            smooth,
        }
    }
}

/// Free-function form of [`TrajectoryPlan::sample`].
pub fn reference_trajectory(t: f64, plan: &TrajectoryPlan) -> ReferenceSample {
    plan.sample(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn straight_leg_of_reference_plan() {
        let plan = TrajectoryPlan::reference_plan(300.0);
        let s = plan.sample(10.0);
        assert_relative_eq!(s.eta_d, Vec3::new(10.0, 15.0, FRAC_PI_2), epsilon = 1e-12);
        assert!(s.smooth);
        let s = plan.sample(299.9);
        assert_relative_eq!(s.eta_d_dot, Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        assert_eq!(s.eta_d_ddot, Vec3::zeros());
    }

    #[test]
    fn turn_leg_is_a_twenty_metre_circle() {
        let plan = TrajectoryPlan::reference_plan(300.0);
        for t in [300.5, 350.0, 420.0, 599.0] {
            let s = plan.sample(t);
            assert_relative_eq!(s.eta_d_dot.xy().norm(), 1.0, epsilon = 1e-12);
            assert_eq!(s.eta_d_dot.z, 0.05);
            // Curvature radius |v|^2 / |a| = u / r = 20 m.
            assert_relative_eq!(1.0 / s.eta_d_ddot.xy().norm(), 20.0, epsilon = 1e-9);
        }
        // Centre of the circle: 20 m to the left of the heading at the joint.
        let centre = Vec3::new(10.0 - 20.0, 305.0, 0.0);
        let p = plan.sample(400.0).eta_d;
        assert_relative_eq!((p.xy() - centre.xy()).norm(), 20.0, epsilon = 1e-9);
    }

    #[test]
    fn joint_flags_and_continuity() {
        let plan = TrajectoryPlan::reference_plan(300.0);
        let at = plan.sample(300.0);
        assert!(!at.smooth);
        assert_eq!(at.eta_d_dot.z, 0.05, "right limit");
        let before = plan.sample(300.0 - 1e-6);
        assert_relative_eq!(before.eta_d, at.eta_d, epsilon = 1e-5);
        assert!(plan.joint_between(299.995, 300.005));
        assert!(!plan.joint_between(300.0, 300.01));
        assert!(plan.sample(299.99).smooth);
    }

    #[test]
    fn holds_after_the_end() {
        let plan = TrajectoryPlan::reference_plan(100.0);
        let end = plan.sample(400.0);
        let s = plan.sample(450.0);
        assert_eq!(s.eta_d_dot, Vec3::zeros());
        assert_relative_eq!(s.eta_d, end.eta_d);
    }

    #[test]
    fn rejects_bad_segments() {
        assert!(TrajectoryPlan::new(Vec3::zeros(), alloc::vec![]).is_err());
        let r = TrajectoryPlan::new(Vec3::zeros(), alloc::vec![Segment::Hold { duration: 0.0 }]);
        assert!(matches!(r, Err(Error::Plan { segment: 1, .. })));
    }
}
