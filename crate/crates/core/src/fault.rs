//! Scheduled thruster faults.

use alloc::vec::Vec;

use crate::error::ScheduleError;
use crate::math::Vec4;
use crate::thruster::{ThrusterBank, THRUSTER_COUNT};
use crate::Result;

/// At `time`, thruster `thruster` (1-based) drops to `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FaultEvent {
    pub time: f64,
    pub thruster: usize,
    pub weight: f64,
}

/// Validated, time-ordered list of fault events.
///
/// Events must strictly increase in time, touch one thruster each, only
/// ever lower a weight, and start no earlier than `earliest` (the loop must
/// have settled before anything breaks).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaultSchedule {
    events: Vec<FaultEvent>,
}

impl FaultSchedule {
    pub fn new(
        events: Vec<FaultEvent>,
        earliest: f64,
    ) -> core::result::Result<Self, ScheduleError> {
        let mut current = [1.0_f64; THRUSTER_COUNT];
        let mut previous: Option<f64> = None;
        for (k, e) in events.iter().enumerate() {
            let event = k + 1;
            if !(1..=THRUSTER_COUNT).contains(&e.thruster) {
                return Err(ScheduleError::ThrusterIndex {
                    event,
                    thruster: e.thruster,
                });
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(ScheduleError::WeightRange {
                    event,
                    weight: e.weight,
                });
            }
            if let Some(p) = previous {
                if !(e.time > p) {
                    return Err(ScheduleError::NotIncreasing {
                        event,
                        time: e.time,
                        previous: p,
                    });
                }
            } else if !(e.time >= earliest) {
                return Err(ScheduleError::TooEarly {
                    event,
                    time: e.time,
                    earliest,
                });
            }
            let w = &mut current[e.thruster - 1];
            if !(e.weight < *w) {
                return Err(ScheduleError::WeightIncrease {
                    event,
                    thruster: e.thruster,
                    from: *w,
                    to: e.weight,
                });
            }
            *w = e.weight;
            previous = Some(e.time);
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[FaultEvent] {
        &self.events
    }

    /// True weights in effect at time `t`; an event applies from its own
    /// time onwards.
    pub fn weights_at(&self, t: f64) -> Vec4 {
        let tol = 1e-9 * t.abs().max(1.0);
        let mut w = Vec4::repeat(1.0);
        for e in self.events.iter().take_while(|e| e.time <= t + tol) {
            w[e.thruster - 1] = e.weight;
        }
        w
    }
}

/// Writes the weights in effect at `t` into `bank`.
pub fn apply_fault_schedule(
    t: f64,
    schedule: &FaultSchedule,
    bank: &mut ThrusterBank,
) -> Result<Vec4> {
    let w = schedule.weights_at(t);
    bank.set_weights(w)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ev(time: f64, thruster: usize, weight: f64) -> FaultEvent {
        FaultEvent {
            time,
            thruster,
            weight,
        }
    }

    #[test]
    fn empty_schedule_is_healthy() {
        let s = FaultSchedule::empty();
        assert_eq!(s.weights_at(1e4), Vec4::repeat(1.0));
    }

    #[test]
    fn step_change_at_event_time() {
        let s = FaultSchedule::new(vec![ev(100.0, 2, 0.6)], 50.0).unwrap();
        assert_eq!(s.weights_at(99.99)[1], 1.0);
        assert_eq!(s.weights_at(100.0)[1], 0.6);
        assert_eq!(s.weights_at(10000.0 * 0.01)[1], 0.6);
    }

    #[test]
    fn sequential_failure_schedule() {
        let s = FaultSchedule::new(
            vec![
                ev(100.0, 1, 0.3),
                ev(250.0, 3, 0.2),
                ev(400.0, 4, 0.1),
                ev(550.0, 2, 0.0),
            ],
            50.0,
        )
        .unwrap();
        assert_eq!(s.weights_at(1000.0), Vec4::new(0.3, 0.0, 0.2, 0.1));
        assert_eq!(s.weights_at(300.0), Vec4::new(0.3, 1.0, 0.2, 1.0));
    }

    #[test]
    fn guards() {
        assert!(matches!(
            FaultSchedule::new(vec![ev(100.0, 1, 0.5), ev(200.0, 1, 0.8)], 50.0),
            Err(ScheduleError::WeightIncrease { event: 2, .. })
        ));
        assert!(matches!(
            FaultSchedule::new(vec![ev(100.0, 1, 0.5), ev(100.0, 2, 0.5)], 50.0),
            Err(ScheduleError::NotIncreasing { .. })
        ));
        assert!(matches!(
            FaultSchedule::new(vec![ev(10.0, 1, 0.5)], 50.0),
            Err(ScheduleError::TooEarly { .. })
        ));
        assert!(matches!(
            FaultSchedule::new(vec![ev(100.0, 5, 0.5)], 50.0),
            Err(ScheduleError::ThrusterIndex { .. })
        ));
        assert!(matches!(
            FaultSchedule::new(vec![ev(100.0, 1, -0.1)], 50.0),
            Err(ScheduleError::WeightRange { .. })
        ));
        assert!(matches!(
            FaultSchedule::new(vec![ev(100.0, 1, 1.0)], 50.0),
            Err(ScheduleError::WeightIncrease { .. })
        ));
    }

    #[test]
    fn apply_updates_bank() {
        let s = FaultSchedule::new(vec![ev(100.0, 4, 0.0)], 50.0).unwrap();
        let mut bank = ThrusterBank::new(Vec4::repeat(40.0), 1.0, 0.05).unwrap();
        apply_fault_schedule(120.0, &s, &mut bank).unwrap();
        assert_eq!(bank.weights()[3], 0.0);
    }
}
