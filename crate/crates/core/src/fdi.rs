//! Fault detection, identification and weight reconfiguration.
//!
//! Detection compares the tracking-error residual
//! `R = sqrt(x_e^2 + y_e^2 + c1 psi_e^2)` with `c2 + f`, where `f` accounts
//! for reference non-smoothness. Identification looks at the sign pattern of
//! `e_eta_dot`: losing thrust on thruster `i` makes the error grow along the
//! navigation-frame direction of that thruster's force (times the sign of
//! its command), and in the direction of its yaw moment. Once a thruster is
//! isolated its weight estimate is lowered by `delta_w` every `t_s` seconds
//! until the residual falls back under the threshold.

use alloc::vec::Vec;

use crate::controller::ReferenceSample;
use crate::math::{self, Vec3, Vec4};
use crate::thruster::{ThrusterGeometry, THRUSTER_COUNT};
use crate::vehicle::rotation_matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FdiConfig {
    /// Heading weight in the residual.
    pub c1: f64,
    /// Base detection threshold, m.
    pub c2: f64,
    /// Threshold allowance for reference non-smoothness, m.
    pub f_smooth: f64,
    /// Extra allowance while a joint hold window is open, m.
    pub hold_widen: f64,
    /// Length of the hold window after a non-smooth reference sample, s.
    pub hold_window: f64,
    /// Position error-rate threshold, m/s.
    pub delta1: f64,
    /// Heading error-rate threshold, rad/s.
    pub delta2: f64,
    /// Weight update period, s.
    pub t_s: f64,
    /// Weight decrement per update.
    pub delta_w: f64,
    /// Commands with `|u_i| <= eps_u` have no usable sign.
    pub eps_u: f64,
    /// Geometric factors with magnitude `<= eps_g` have no usable sign.
    pub eps_g: f64,
    /// Floor for weight estimates.
    pub w_min: f64,
    /// Consecutive above-threshold samples needed to raise the trigger.
    pub debounce_steps: u32,
    /// The detector arms once the residual has stayed under the threshold
    /// this long, s.
    pub settle_time: f64,
}

impl Default for FdiConfig {
    fn default() -> Self {
        Self {
            c1: 5.0,
            c2: 0.01,
            f_smooth: 0.3,
            hold_widen: 0.2,
            hold_window: 5.0,
            delta1: 0.02,
            delta2: 0.01,
            t_s: 5.0,
            delta_w: 0.05,
            eps_u: 0.01,
            eps_g: 0.05,
            w_min: 0.05,
            debounce_steps: 5,
            settle_time: 5.0,
        }
    }
}

impl FdiConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("f_smooth", self.f_smooth),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("t_s", self.t_s),
            ("delta_w", self.delta_w),
            ("eps_u", self.eps_u),
            ("eps_g", self.eps_g),
            ("w_min", self.w_min),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Parameter {
                    name,
                    value,
                    reason: "must be strictly positive",
                });
            }
        }
        for (name, value) in [
            ("hold_widen", self.hold_widen),
            ("hold_window", self.hold_window),
            ("settle_time", self.settle_time),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Parameter {
                    name,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        if self.delta_w >= 1.0 {
            return Err(Error::Parameter {
                name: "delta_w",
                value: self.delta_w,
                reason: "must be below 1",
            });
        }
        if self.w_min >= 1.0 {
            return Err(Error::Parameter {
                name: "w_min",
                value: self.w_min,
                reason: "must be below 1",
            });
        }
        if self.debounce_steps == 0 {
            return Err(Error::Parameter {
                name: "debounce_steps",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Predicted signs of `(x_e_dot, y_e_dot, psi_e_dot)` when a thruster loses
/// thrust; 0 means indeterminate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignPattern {
    pub x: i8,
    pub y: i8,
    pub psi: i8,
}

impl SignPattern {
    pub const fn new(x: i8, y: i8, psi: i8) -> Self {
        Self { x, y, psi }
    }

    pub fn is_determinate(&self) -> bool {
        self.x != 0 && self.y != 0 && self.psi != 0
    }
}

/// `sqrt(x_e^2 + y_e^2 + c1 psi_e^2)`.
pub fn residual(e_eta: &Vec3, c1: f64) -> f64 {
    libm::sqrt(e_eta.x * e_eta.x + e_eta.y * e_eta.y + c1 * e_eta.z * e_eta.z)
}

/// `c2 + f`, widened by `hold_widen` while a joint hold window is open.
pub fn detection_threshold(cfg: &FdiConfig, reference: &ReferenceSample, hold_active: bool) -> f64 {
    let widen = if hold_active || !reference.smooth {
        cfg.hold_widen
    } else {
        0.0
    };
    cfg.c2 + cfg.f_smooth + widen
}

pub fn detect(residual: f64, threshold: f64) -> bool {
    residual > threshold
}

/// Signs of the error-rate deviation caused by a thrust loss on `thruster`
/// (1-based) while it is commanded `u_i` and the vehicle heads `psi`.
pub fn predict_sign_pattern(
    thruster: usize,
    u_i: f64,
    psi: f64,
    geom: &ThrusterGeometry,
    cfg: &FdiConfig,
) -> SignPattern {
    let u_sign = math::sign_beyond(u_i, cfg.eps_u);
    if u_sign == 0 {
        return SignPattern::default();
    }
    let b = geom.column(thruster - 1);
    let planar = b.xy();
    let norm = planar.norm();
    let (dx, dy) = if norm > 0.0 {
        let d = rotation_matrix(psi) * Vec3::new(planar.x / norm, planar.y / norm, 0.0);
        (d.x, d.y)
    } else {
        (0.0, 0.0)
    };
    SignPattern {
        x: u_sign * math::sign_beyond(dx, cfg.eps_g),
        y: u_sign * math::sign_beyond(dy, cfg.eps_g),
        psi: u_sign * math::sign_beyond(b.z, cfg.eps_g * geom.arm().min(1.0)),
    }
}

/// The unique thruster (1-based) whose predicted pattern is matched by
/// `e_eta_dot` beyond the rate thresholds; `None` when no thruster or more
/// than one matches.
pub fn identify_fault(
    e_eta_dot: &Vec3,
    u_cmd: &Vec4,
    psi: f64,
    cfg: &FdiConfig,
    geom: &ThrusterGeometry,
) -> Option<usize> {
    let mut found = None;
    for i in 1..=THRUSTER_COUNT {
        let p = predict_sign_pattern(i, u_cmd[i - 1], psi, geom, cfg);
        let matches = p.is_determinate()
            && e_eta_dot.x * f64::from(p.x) > cfg.delta1
            && e_eta_dot.y * f64::from(p.y) > cfg.delta1
            && e_eta_dot.z * f64::from(p.psi) > cfg.delta2;
        if matches {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        }
    }
    found
}

/// Lowers the estimate of `thruster` (1-based) by `delta_w`, not below `w_min`.
pub fn reconfigure_step(w_hat: &Vec4, thruster: usize, cfg: &FdiConfig) -> Vec4 {
    let mut next = *w_hat;
    let w = &mut next[thruster - 1];
    *w = (*w - cfg.delta_w).max(cfg.w_min);
    next
}

/// Signals the detector samples once per control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdiInputs {
    pub t: f64,
    pub e_eta: Vec3,
    pub e_eta_dot: Vec3,
    pub u_cmd: Vec4,
    pub psi: f64,
    pub reference: ReferenceSample,
    /// A reference joint was crossed since the previous sample.
    pub joint_crossed: bool,
}

/// What one call to [`FdiState::update`] did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FdiStep {
    /// New weight estimates, when an update was due.
    pub weight_update: Option<Vec4>,
    pub identified: Option<usize>,
    pub triggered: bool,
    pub cleared: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Identification {
    pub time: f64,
    pub thruster: usize,
}

/// Detector and identifier state carried between control steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FdiState {
    pub b_trig: bool,
    pub b_first_check: bool,
    /// Identified thruster (1-based) for the current trigger.
    pub fault_num: Option<usize>,
    /// Time since the last weight update (or since identification).
    pub w_time: f64,
    pub residual: f64,
    pub threshold: f64,
    pub armed: bool,
    pub identified_log: Vec<Identification>,
    settled_for: f64,
    above_count: u32,
    hold_left: f64,
    hold_active: bool,
}

impl Default for FdiState {
    fn default() -> Self {
        Self::new()
    }
}

impl FdiState {
    pub fn new() -> Self {
        Self {
            b_trig: false,
            b_first_check: true,
            fault_num: None,
            w_time: 0.0,
            residual: 0.0,
            threshold: 0.0,
            armed: false,
            identified_log: Vec::new(),
            settled_for: 0.0,
            above_count: 0,
            hold_left: 0.0,
            hold_active: false,
        }
    }

    /// A detector that skips the settling phase.
    pub fn armed() -> Self {
        Self {
            armed: true,
            ..Self::new()
        }
    }

    /// Whether the latest threshold was widened by the joint hold window.
    pub fn in_hold(&self) -> bool {
        self.hold_active
    }

    /// One pass of the detect / identify / reconfigure loop.
    pub fn update(
        &mut self,
        inputs: &FdiInputs,
        w_hat: &Vec4,
        geom: &ThrusterGeometry,
        dt: f64,
        cfg: &FdiConfig,
    ) -> FdiStep {
        let mut out = FdiStep::default();
        if !inputs.reference.smooth || inputs.joint_crossed {
            self.hold_left = cfg.hold_window;
        }
        self.residual = residual(&inputs.e_eta, cfg.c1);
        self.hold_active = self.hold_left > 0.0;
        self.threshold = detection_threshold(cfg, &inputs.reference, self.hold_active);
        self.hold_left = (self.hold_left - dt).max(0.0);
        let above = detect(self.residual, self.threshold);

        if !self.armed {
            if above {
                self.settled_for = 0.0;
            } else {
                self.settled_for += dt;
                if self.settled_for >= cfg.settle_time - 0.5 * dt {
                    self.armed = true;
                }
            }
            return out;
        }

        self.above_count = if above {
            self.above_count.saturating_add(1)
        } else {
            0
        };
        if !self.b_trig && self.above_count >= cfg.debounce_steps {
            self.b_trig = true;
            self.b_first_check = true;
            self.fault_num = None;
            self.w_time = 0.0;
            out.triggered = true;
        } else if self.b_trig && !above {
            self.b_trig = false;
            self.b_first_check = true;
            self.fault_num = None;
            self.w_time = 0.0;
            out.cleared = true;
            return out;
        }
        if !self.b_trig {
            return out;
        }

        if self.b_first_check {
            if let Some(i) = identify_fault(&inputs.e_eta_dot, &inputs.u_cmd, inputs.psi, cfg, geom)
            {
                self.fault_num = Some(i);
                self.b_first_check = false;
                self.identified_log.push(Identification {
                    time: inputs.t,
                    thruster: i,
                });
                out.identified = Some(i);
            }
        }
        if let Some(i) = self.fault_num {
            self.w_time += dt;
            if self.w_time >= cfg.t_s - 0.5 * dt {
                out.weight_update = Some(reconfigure_step(w_hat, i, cfg));
                self.w_time = 0.0;
            }
        }
        out
    }
}

/// Free-function form of [`FdiState::update`].
pub fn fdi_update(
    state: &mut FdiState,
    inputs: &FdiInputs,
    w_hat: &Vec4,
    geom: &ThrusterGeometry,
    dt: f64,
    cfg: &FdiConfig,
) -> FdiStep {
    state.update(inputs, w_hat, geom, dt, cfg)
}
