//! Deterministic fixed-step closed-loop simulation.
//!
//! Each step samples the reference, runs the controller and allocation,
//! applies the true fault weights, integrates the plant with classical
//! fourth-order Runge-Kutta and then runs the detector. The control law is
//! re-evaluated at every Runge-Kutta stage, so the closed loop is integrated
//! as one ODE; the detector, fault schedule and recording run once per step.

use alloc::string::String;
use alloc::vec::Vec;

use crate::allocation::{achieved_wrench, allocate, Allocation, Wrench};
use crate::controller::{self, ControllerGains, ReferenceSample, TrackingErrors};
use crate::fault::FaultSchedule;
use crate::fdi::{self, FdiConfig, FdiInputs, FdiState, Identification};
use crate::math::{Vec3, Vec4};
use crate::thruster::{ThrusterBank, ThrusterGeometry};
use crate::trajectory::TrajectoryPlan;
use crate::vehicle::{dynamics_rhs, kinematics_rhs, VehicleParams, VehicleState};
use crate::{Error, Result};

/// Everything needed to run one closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub vehicle: VehicleParams,
    pub geometry: ThrusterGeometry,
    /// Thrust coefficients `K`.
    pub coefficients: Vec4,
    pub u_max: f64,
    pub gains: ControllerGains,
    pub fdi: FdiConfig,
    pub fdi_enabled: bool,
    pub plan: TrajectoryPlan,
    pub schedule: FaultSchedule,
    pub initial_state: VehicleState,
    pub dt: f64,
    pub duration: f64,
    /// Emit every n-th step.
    pub decimation: usize,
    /// A fault counts as handled only if the residual is back under the
    /// threshold within this many seconds.
    pub recovery_window: f64,
    /// Tracking-error radius used to report the convergence time, m.
    pub convergence_radius: f64,
    pub divergence_limit: f64,
}

impl Scenario {
    /// A no-fault scenario with the reference gains and detector defaults.
    pub fn new(
        name: impl Into<String>,
        vehicle: VehicleParams,
        geometry: ThrusterGeometry,
        coefficients: Vec4,
        u_max: f64,
        plan: TrajectoryPlan,
    ) -> Self {
        Self {
            name: name.into(),
            vehicle,
            geometry,
            coefficients,
            u_max,
            gains: ControllerGains::reference_gains(),
            fdi: FdiConfig::default(),
            fdi_enabled: true,
            plan,
            schedule: FaultSchedule::empty(),
            initial_state: VehicleState::default(),
            dt: 0.01,
            duration: 600.0,
            decimation: 10,
            recovery_window: 200.0,
            convergence_radius: 0.05,
            divergence_limit: 1e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("dt", self.dt),
            ("duration", self.duration),
            ("recovery_window", self.recovery_window),
            ("convergence_radius", self.convergence_radius),
            ("divergence_limit", self.divergence_limit),
        ];
        for (name, value) in checks {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Parameter {
                    name,
                    value,
                    reason: "must be strictly positive",
                });
            }
        }
        if self.decimation == 0 {
            return Err(Error::Parameter {
                name: "decimation",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !self.initial_state.is_finite() {
            return Err(Error::Parameter {
                name: "initial_state",
                value: f64::NAN,
                reason: "must be finite",
            });
        }
        self.fdi.validate()?;
        ThrusterBank::new(self.coefficients, self.u_max, self.fdi.w_min)?;
        Ok(())
    }

    pub fn step_count(&self) -> u64 {
        libm::round(self.duration / self.dt) as u64
    }
}

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimRecord {
    pub t: f64,
    pub eta: [f64; 3],
    pub nu: [f64; 3],
    pub eta_d: [f64; 3],
    pub e_eta: [f64; 3],
    pub residual: f64,
    pub threshold: f64,
    pub b_trig: bool,
    pub fault_num: Option<usize>,
    pub w: [f64; 4],
    pub w_hat: [f64; 4],
    pub u_cmd: [f64; 4],
    pub tau_c: [f64; 3],
    pub tau: [f64; 3],
    pub v2: f64,
    pub saturated: bool,
}

/// How the loop dealt with one scheduled fault.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FaultReport {
    pub time: f64,
    pub thruster: usize,
    pub weight: f64,
    /// Up to the next event or the end of the run.
    pub window_end: f64,
    pub detected_at: Option<f64>,
    pub detection_latency: Option<f64>,
    /// First thruster identified after the fault.
    pub identified: Option<usize>,
    /// Identifications in this window that named another thruster.
    pub misidentifications: usize,
    pub max_residual: f64,
    /// Start of the final under-threshold stretch of the window, if the
    /// window ends under the threshold.
    pub recovered_at: Option<f64>,
    /// Estimate of the faulted thruster's weight at the end of the window.
    pub final_estimate: f64,
    pub estimate_error: f64,
    /// Residual recovered within the recovery window and the estimate ended
    /// within two weight steps of the true weight.
    pub reconfigured: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Summary {
    pub scenario: String,
    pub steps: u64,
    pub end_time: f64,
    /// Times at which the detector raised its trigger.
    pub detections: Vec<f64>,
    pub identifications: Vec<Identification>,
    /// Triggers raised before the first scheduled fault.
    pub false_triggers: usize,
    pub faults: Vec<FaultReport>,
    pub final_weights: [f64; 4],
    pub final_estimates: [f64; 4],
    pub max_residual: f64,
    /// Largest residual after the detector armed and before the first fault.
    pub max_residual_fault_free: f64,
    pub armed_at: Option<f64>,
    /// Earliest time after which `|e_eta| <= convergence_radius` for the
    /// rest of the fault-free part of the run.
    pub convergence_time: Option<f64>,
    pub saturated_steps: u64,
    pub reconfiguration_failed: bool,
    /// Set when the run was cut short.
    pub aborted_at: Option<f64>,
}

/// A run that stopped early, with the summary up to that point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub error: Error,
    pub summary: Summary,
}

/// Signals computed at one instant of the closed loop.
#[derive(Debug, Clone, Copy)]
pub struct LoopSample {
    pub reference: ReferenceSample,
    pub errors: TrackingErrors,
    pub tau_c: Wrench,
    pub allocation: Allocation,
    pub tau: Wrench,
    pub eta_dot: Vec3,
    pub nu_dot: Vec3,
}

/// Classical RK4 step of the pose/velocity state. `deriv(offset, state)`
/// returns `(eta_dot, nu_dot)` at `offset` seconds into the step. The
/// heading is integrated unwrapped within the step and wrapped at the end.
pub fn rk4_step<F>(state: &VehicleState, dt: f64, mut deriv: F) -> Result<VehicleState>
where
    F: FnMut(f64, &VehicleState) -> Result<(Vec3, Vec3)>,
{
    let eta = Vec3::new(state.x, state.y, state.psi);
    let nu = state.velocity();
    let at = |de: &Vec3, dn: &Vec3, h: f64| {
        let e = eta + de * h;
        let n = nu + dn * h;
        VehicleState {
            x: e.x,
            y: e.y,
            psi: e.z,
            u: n.x,
            v: n.y,
            r: n.z,
        }
    };
    let (k1e, k1n) = deriv(0.0, state)?;
    let (k2e, k2n) = deriv(0.5 * dt, &at(&k1e, &k1n, 0.5 * dt))?;
    let (k3e, k3n) = deriv(0.5 * dt, &at(&k2e, &k2n, 0.5 * dt))?;
    let (k4e, k4n) = deriv(dt, &at(&k3e, &k3n, dt))?;
    let eta1 = eta + (k1e + 2.0 * k2e + 2.0 * k3e + k4e) * (dt / 6.0);
    let nu1 = nu + (k1n + 2.0 * k2n + 2.0 * k3n + k4n) * (dt / 6.0);
    Ok(VehicleState::from_vectors(&eta1, &nu1))
}

/// Closed-loop state owned by one run.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    state: VehicleState,
    bank: ThrusterBank,
    fdi: FdiState,
    step: u64,
    tracker: SummaryTracker,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let bank = ThrusterBank::new(scenario.coefficients, scenario.u_max, scenario.fdi.w_min)?;
        let tracker = SummaryTracker::new(&scenario);
        Ok(Self {
            state: scenario.initial_state,
            bank,
            fdi: FdiState::new(),
            step: 0,
            tracker,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn bank(&self) -> &ThrusterBank {
        &self.bank
    }

    pub fn bank_mut(&mut self) -> &mut ThrusterBank {
        &mut self.bank
    }

    pub fn fdi(&self) -> &FdiState {
        &self.fdi
    }

    /// Replaces the detector state, e.g. to start from an armed detector.
    pub fn set_fdi(&mut self, fdi: FdiState) {
        self.fdi = fdi;
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scenario.dt
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.scenario.step_count()
    }

    /// Evaluates the closed loop at time `t` for `state` with the bank's
    /// current weights and estimates.
    pub fn evaluate(&self, t: f64, state: &VehicleState) -> Result<LoopSample> {
        let sc = &self.scenario;
        let reference = sc.plan.sample(t);
        let errors = controller::tracking_errors(state, &reference, &sc.gains);
        let tau_c = controller::control_law(state, &reference, &errors, &sc.gains, &sc.vehicle);
        let allocation = allocate(&tau_c, &self.bank, &sc.geometry)?;
        let tau = achieved_wrench(&allocation.command, &self.bank, &sc.geometry);
        let nu_dot = dynamics_rhs(state, &tau.to_vector(), &sc.vehicle);
        let eta_dot = kinematics_rhs(state);
        Ok(LoopSample {
            reference,
            errors,
            tau_c,
            allocation,
            tau,
            eta_dot,
            nu_dot,
        })
    }

    /// Advances one control cycle and returns the record for its start time.
    pub fn step(&mut self) -> Result<SimRecord> {
        let dt = self.scenario.dt;
        let t = self.time();
        let weights = self.scenario.schedule.weights_at(t);
        self.bank.set_weights(weights)?;

        let sample = self.evaluate(t, &self.state)?;
        let estimates = *self.bank.estimates();
        self.bank.command = sample.allocation.command;

        let joint_crossed = self.step > 0 && self.scenario.plan.joint_between(t - dt, t);
        let inputs = FdiInputs {
            t,
            e_eta: sample.errors.e_eta,
            e_eta_dot: controller::error_rate(&sample.reference, &self.state),
            u_cmd: sample.allocation.command,
            psi: self.state.psi,
            reference: sample.reference,
            joint_crossed,
        };
        let mut pending = None;
        if self.scenario.fdi_enabled {
            let out = self.fdi.update(
                &inputs,
                &estimates,
                &self.scenario.geometry,
                dt,
                &self.scenario.fdi,
            );
            pending = out.weight_update;
        } else {
            let hold = !sample.reference.smooth || joint_crossed;
            self.fdi.residual = fdi::residual(&inputs.e_eta, self.scenario.fdi.c1);
            self.fdi.threshold =
                fdi::detection_threshold(&self.scenario.fdi, &sample.reference, hold);
        }

        let record = SimRecord {
            t,
            eta: self.state.pose().into(),
            nu: self.state.velocity().into(),
            eta_d: sample.reference.eta_d.into(),
            e_eta: sample.errors.e_eta.into(),
            residual: self.fdi.residual,
            threshold: self.fdi.threshold,
            b_trig: self.fdi.b_trig,
            fault_num: self.fdi.fault_num,
            w: weights.into(),
            w_hat: estimates.into(),
            u_cmd: sample.allocation.command.into(),
            tau_c: sample.tau_c.to_vector().into(),
            tau: sample.tau.to_vector().into(),
            v2: controller::lyapunov_value(&sample.errors, &self.scenario.gains),
            saturated: sample.allocation.saturated,
        };

        let mut first = true;
        let next = rk4_step(&self.state, dt, |offset, s| {
            if core::mem::take(&mut first) {
                return Ok((sample.eta_dot, sample.nu_dot));
            }
            let ls = self.evaluate(t + offset, s)?;
            Ok((ls.eta_dot, ls.nu_dot))
        })?;
        let magnitude = next.magnitude();
        if !next.is_finite() || magnitude > self.scenario.divergence_limit {
            return Err(Error::Diverged {
                time: t + dt,
                magnitude,
            });
        }
        self.state = next;
        if let Some(w_hat) = pending {
            self.bank.set_estimates(w_hat)?;
        }
        self.tracker.observe(&record, &self.fdi, &self.bank);
        self.step += 1;
        Ok(record)
    }

    /// Runs to the end, passing every `decimation`-th record to `sink`.
    pub fn run<F: FnMut(&SimRecord)>(
        &mut self,
        mut sink: F,
    ) -> core::result::Result<Summary, RunFailure> {
        let decimation = self.scenario.decimation as u64;
        while !self.is_finished() {
            let k = self.step;
            match self.step() {
                Ok(rec) => {
                    if k.is_multiple_of(decimation) {
                        sink(&rec);
                    }
                }
                Err(error) => {
                    let mut summary = self.summary();
                    summary.aborted_at = Some(self.time());
                    return Err(RunFailure { error, summary });
                }
            }
        }
        Ok(self.summary())
    }

    /// Runs to the end and keeps the decimated records.
    pub fn run_collect(&mut self) -> core::result::Result<(Vec<SimRecord>, Summary), RunFailure> {
        let mut rows = Vec::new();
        let summary = self.run(|r| rows.push(*r))?;
        Ok((rows, summary))
    }

    /// Summary of everything observed so far.
    pub fn summary(&self) -> Summary {
        self.tracker
            .finish(&self.scenario, &self.fdi, &self.bank, self.step)
    }
}

/// Runs a scenario start to end.
pub fn run_scenario<F: FnMut(&SimRecord)>(
    scenario: Scenario,
    sink: F,
) -> core::result::Result<Summary, RunFailure> {
    let mut sim = Simulation::new(scenario).map_err(|error| RunFailure {
        error,
        summary: Summary::default(),
    })?;
    sim.run(sink)
}

#[derive(Debug, Clone, Default)]
struct WindowTrack {
    max_residual: f64,
    last_above: Option<f64>,
    ends_above: bool,
    final_estimate: f64,
}

/// Accumulates the run summary one full-rate sample at a time.
#[derive(Debug, Clone)]
struct SummaryTracker {
    events: Vec<crate::fault::FaultEvent>,
    first_fault: f64,
    radius: f64,
    detections: Vec<f64>,
    prev_trig: bool,
    max_residual: f64,
    max_residual_fault_free: f64,
    armed_at: Option<f64>,
    last_far: Option<f64>,
    saturated_steps: u64,
    windows: Vec<WindowTrack>,
}

impl SummaryTracker {
    fn new(scenario: &Scenario) -> Self {
        let events: Vec<_> = scenario.schedule.events().to_vec();
        Self {
            first_fault: events.first().map_or(f64::INFINITY, |e| e.time),
            windows: events
                .iter()
                .map(|_| WindowTrack {
                    final_estimate: 1.0,
                    ..Default::default()
                })
                .collect(),
            events,
            radius: scenario.convergence_radius,
            detections: Vec::new(),
            prev_trig: false,
            max_residual: 0.0,
            max_residual_fault_free: 0.0,
            armed_at: None,
            last_far: None,
            saturated_steps: 0,
        }
    }

    fn observe(&mut self, rec: &SimRecord, fdi: &FdiState, bank: &ThrusterBank) {
        let t = rec.t;
        let tol = 1e-9 * t.abs().max(1.0);
        if rec.b_trig && !self.prev_trig {
            self.detections.push(t);
        }
        self.prev_trig = rec.b_trig;
        self.max_residual = self.max_residual.max(rec.residual);
        if rec.saturated {
            self.saturated_steps += 1;
        }
        if self.armed_at.is_none() && fdi.armed {
            self.armed_at = Some(t);
        }
        if t + tol < self.first_fault {
            if fdi.armed {
                self.max_residual_fault_free = self.max_residual_fault_free.max(rec.residual);
            }
            if Vec3::from(rec.e_eta).norm() > self.radius {
                self.last_far = Some(t);
            }
        }
        if let Some(idx) = self.events.iter().rposition(|e| e.time <= t + tol) {
            let thruster = self.events[idx].thruster;
            let w = &mut self.windows[idx];
            w.max_residual = w.max_residual.max(rec.residual);
            w.ends_above = rec.residual > rec.threshold;
            if w.ends_above {
                w.last_above = Some(t);
            }
            w.final_estimate = bank.estimates()[thruster - 1];
        }
    }

    fn finish(
        &self,
        scenario: &Scenario,
        fdi: &FdiState,
        bank: &ThrusterBank,
        steps: u64,
    ) -> Summary {
        let dt = scenario.dt;
        let end_time = steps as f64 * dt;
        let tolerance = 2.0 * scenario.fdi.delta_w + 1e-9;
        let mut faults = Vec::with_capacity(self.events.len());
        for (i, (e, w)) in self.events.iter().zip(&self.windows).enumerate() {
            if e.time > end_time {
                break;
            }
            let window_end = self
                .events
                .get(i + 1)
                .map_or(end_time, |n| n.time.min(end_time));
            let in_window = |t: f64| t >= e.time - 1e-9 && t < window_end - 1e-9;
            let detected_at = self.detections.iter().copied().find(|t| in_window(*t));
            let ids: Vec<usize> = fdi
                .identified_log
                .iter()
                .filter(|id| in_window(id.time))
                .map(|id| id.thruster)
                .collect();
            let recovered_at = if w.ends_above {
                None
            } else {
                Some(w.last_above.map_or(e.time, |a| a + dt))
            };
            let estimate_error = libm::fabs(w.final_estimate - e.weight);
            let reconfigured = recovered_at.is_some_and(|r| r - e.time <= scenario.recovery_window)
                && estimate_error <= tolerance;
            faults.push(FaultReport {
                time: e.time,
                thruster: e.thruster,
                weight: e.weight,
                window_end,
                detected_at,
                detection_latency: detected_at.map(|d| d - e.time),
                identified: ids.first().copied(),
                misidentifications: ids.iter().filter(|&&i| i != e.thruster).count(),
                max_residual: w.max_residual,
                recovered_at,
                final_estimate: w.final_estimate,
                estimate_error,
                reconfigured,
            });
        }
        let fault_free_end = self.first_fault.min(end_time);
        let convergence_time = match self.last_far {
            None => Some(0.0),
            Some(t) if t + dt < fault_free_end - 1e-9 => Some(t + dt),
            Some(_) => None,
        };
        Summary {
            scenario: scenario.name.clone(),
            steps,
            end_time,
            false_triggers: self
                .detections
                .iter()
                .filter(|t| **t < self.first_fault - 1e-9)
                .count(),
            detections: self.detections.clone(),
            identifications: fdi.identified_log.clone(),
            reconfiguration_failed: faults.iter().any(|f| !f.reconfigured),
            faults,
            final_weights: (*bank.weights()).into(),
            final_estimates: (*bank.estimates()).into(),
            max_residual: self.max_residual,
            max_residual_fault_free: self.max_residual_fault_free,
            armed_at: self.armed_at,
            convergence_time,
            saturated_steps: self.saturated_steps,
            aborted_at: None,
        }
    }
}
