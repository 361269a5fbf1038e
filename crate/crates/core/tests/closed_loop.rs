mod common;

use ftc_core::math::Vec3;
use ftc_core::{
    FaultEvent, FaultSchedule, Segment, Simulation, Summary, TrajectoryPlan, VehicleState,
};

fn faults(events: &[(f64, usize, f64)]) -> FaultSchedule {
    let ev = events
        .iter()
        .map(|&(time, thruster, weight)| FaultEvent {
            time,
            thruster,
            weight,
        })
        .collect();
    FaultSchedule::new(ev, 50.0).unwrap()
}

fn run(events: &[(f64, usize, f64)], duration: f64) -> Summary {
    let mut sc = common::scenario(TrajectoryPlan::reference_plan(300.0));
    sc.duration = duration;
    sc.schedule = faults(events);
    Simulation::new(sc).unwrap().run(|_| {}).unwrap()
}

#[test]
fn converges_from_rest_at_origin_within_50s() {
    let s = run(&[], 100.0);
    assert!(
        s.convergence_time.unwrap() < 50.0,
        "{:?}",
        s.convergence_time
    );
    assert!(s.detections.is_empty());
}

#[test]
fn half_thrust_on_thruster_one_steps_estimate_down() {
    let mut sc = common::scenario(TrajectoryPlan::reference_plan(300.0));
    sc.duration = 250.0;
    sc.schedule = faults(&[(100.0, 1, 0.5)]);
    let mut sim = Simulation::new(sc).unwrap();
    let (mut identified, mut steps) = (None, Vec::new());
    let mut last = 1.0;
    while !sim.is_finished() {
        let rec = sim.step().unwrap();
        if identified.is_none() && rec.fault_num.is_some() {
            identified = Some((rec.t, rec.fault_num.unwrap()));
        }
        if rec.w_hat[0] != last {
            steps.push((rec.t, last - rec.w_hat[0]));
            last = rec.w_hat[0];
        }
    }
    let (t_id, which) = identified.unwrap();
    assert_eq!(which, 1);
    assert!(t_id > 100.0 && t_id < 105.0);
    assert_eq!(steps.len(), 10);
    for pair in steps.windows(2) {
        assert!((pair[1].0 - pair[0].0 - 5.0).abs() < 0.011, "{steps:?}");
    }
    assert!(steps.iter().all(|s| (s.1 - 0.05).abs() < 1e-12));
    assert!((sim.bank().estimates()[0] - 0.5).abs() < 1e-9);
}

#[test]
fn thruster_two_at_sixty_percent() {
    let s = run(&[(100.0, 2, 0.6)], 300.0);
    assert_eq!(s.identifications.first().map(|i| i.thruster), Some(2));
    let w = s.final_estimates[1];
    assert!((0.5..=0.65).contains(&w), "{w}");
}

#[test]
fn four_sequential_faults_identified_in_order() {
    let schedule = [
        (100.0, 1, 0.7),
        (220.0, 2, 0.6),
        (340.0, 3, 0.5),
        (460.0, 4, 0.6),
    ];
    let s = run(&schedule, 600.0);
    let ids: Vec<(f64, usize)> = s
        .identifications
        .iter()
        .map(|i| (i.time, i.thruster))
        .collect();
    assert_eq!(ids.len(), 4, "{ids:?}");
    for ((t, i), (ft, fi, _)) in ids.iter().zip(schedule) {
        assert_eq!(*i, fi);
        assert!(*t > ft && *t < ft + 10.0);
    }
    assert!(!s.reconfiguration_failed);
}

/// One scenario per row of the sign table for thruster 1: the command sign
/// comes from driving forwards or backwards, the quadrant of `psi - alpha`
/// from the course.
#[test]
fn thruster_one_identified_for_every_sign_case() {
    let alpha = core::f64::consts::FRAC_PI_4;
    for speed in [1.0, -1.0] {
        for quadrant in 0..4 {
            let heading = alpha
                + core::f64::consts::FRAC_PI_4
                + quadrant as f64 * core::f64::consts::FRAC_PI_2;
            let plan = TrajectoryPlan::new(
                Vec3::new(0.0, 0.0, heading),
                vec![Segment::Straight {
                    duration: 200.0,
                    speed,
                    heading,
                }],
            )
            .unwrap();
            let mut sc = common::scenario(plan);
            sc.duration = 150.0;
            sc.initial_state = VehicleState::new(0.0, 0.0, heading, speed, 0.0, 0.0);
            sc.schedule = faults(&[(60.0, 1, 0.5)]);
            let s = Simulation::new(sc).unwrap().run(|_| {}).unwrap();
            let ids: Vec<usize> = s.identifications.iter().map(|i| i.thruster).collect();
            assert_eq!(ids, vec![1], "speed {speed} heading {heading} {s:?}");
            assert_eq!(s.false_triggers, 0);
            assert!(!s.reconfiguration_failed, "speed {speed} heading {heading}");
        }
    }
}
