use core::fmt;

/// Everything that can go wrong while building or running a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Thruster orientation outside `(0, pi/2)` or non-positive moment arm.
    Geometry {
        alpha: f64,
        arm: f64,
    },
    /// A matrix that must have full row rank does not.
    RankDeficient,
    /// A matrix that must be positive definite is not.
    NotPositiveDefinite(&'static str),
    /// A scalar parameter is outside its admissible range.
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// Allocation was asked to invert a weight estimate below the floor.
    WeightBelowFloor {
        thruster: usize,
        value: f64,
        floor: f64,
    },
    Schedule(ScheduleError),
    /// A trajectory segment is malformed.
    Plan {
        segment: usize,
        reason: &'static str,
    },
    /// The closed loop left the admissible state region.
    Diverged {
        time: f64,
        magnitude: f64,
    },
}

/// Fault schedule violations, one per modelling assumption.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleError {
    ThrusterIndex {
        event: usize,
        thruster: usize,
    },
    WeightRange {
        event: usize,
        weight: f64,
    },
    /// Event times must strictly increase; equal times would fault two
    /// thrusters at once.
    NotIncreasing {
        event: usize,
        time: f64,
        previous: f64,
    },
    /// Faults may only reduce a thruster's weight.
    WeightIncrease {
        event: usize,
        thruster: usize,
        from: f64,
        to: f64,
    },
    /// Faults must not occur before the loop has settled.
    TooEarly {
        event: usize,
        time: f64,
        earliest: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Geometry { alpha, arm } => write!(
                f,
                "degenerate thruster geometry (alpha = {alpha}, l = {arm}): alpha must lie in (0, pi/2) and l > 0 for the configuration matrix to have rank 3"
            ),
            Error::RankDeficient => write!(f, "configuration matrix is rank deficient"),
            Error::NotPositiveDefinite(what) => write!(f, "{what} must be positive definite"),
            Error::Parameter { name, value, reason } => {
                write!(f, "parameter `{name}` = {value}: {reason}")
            }
            Error::WeightBelowFloor { thruster, value, floor } => write!(
                f,
                "weight estimate of thruster {thruster} is {value}, below the floor {floor}"
            ),
            Error::Schedule(e) => write!(f, "fault schedule: {e}"),
            Error::Plan { segment, reason } => write!(f, "trajectory segment {segment}: {reason}"),
            Error::Diverged { time, magnitude } => write!(
                f,
                "simulation diverged at t = {time:.3} s (state magnitude {magnitude:.3e})"
            ),
        }
    }
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::ThrusterIndex { event, thruster } => {
                write!(f, "event {event}: thruster index {thruster} is not in 1..=4")
            }
            ScheduleError::WeightRange { event, weight } => {
                write!(f, "event {event}: weight {weight} is outside [0, 1]")
            }
            ScheduleError::NotIncreasing { event, time, previous } => write!(
                f,
                "event {event}: time {time} s does not come after {previous} s; only one thruster may fault at a time"
            ),
            ScheduleError::WeightIncrease { event, thruster, from, to } => write!(
                f,
                "event {event}: thruster {thruster} weight would rise from {from} to {to}; faults may only reduce weights"
            ),
            ScheduleError::TooEarly { event, time, earliest } => write!(
                f,
                "event {event}: fault at {time} s precedes the settling time {earliest} s; faults must occur after the loop has converged"
            ),
        }
    }
}

impl core::error::Error for Error {}
impl core::error::Error for ScheduleError {}

impl From<ScheduleError> for Error {
    fn from(e: ScheduleError) -> Self {
        Error::Schedule(e)
    }
}
