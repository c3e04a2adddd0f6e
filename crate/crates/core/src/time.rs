//! Simulated time. One tick is 100 ms of simulated time; all clocks,
//! durations and promise timestamps are integer ticks.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// Milliseconds of simulated time per tick.
pub const MS_PER_TICK: u64 = 100;

/// A point in (or span of) simulated time, in ticks.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Tick(pub u64);

impl Tick {
    pub const ZERO: Tick = Tick(0);

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: Tick) -> Tick {
        Tick(self.0.saturating_sub(other.0))
    }

    /// Simulated seconds, for report output.
    pub fn as_secs(self) -> f64 {
        (self.0 * MS_PER_TICK) as f64 / 1000.0
    }
}

impl Add for Tick {
    type Output = Tick;
    fn add(self, rhs: Tick) -> Tick {
        Tick(self.0 + rhs.0)
    }
}

impl AddAssign for Tick {
    fn add_assign(&mut self, rhs: Tick) {
        self.0 += rhs.0;
    }
}

impl Sub for Tick {
    type Output = Tick;
    fn sub(self, rhs: Tick) -> Tick {
        Tick(self.0 - rhs.0)
    }
}

impl From<u64> for Tick {
    fn from(v: u64) -> Tick {
        Tick(v)
    }
}

impl fmt::Display for Tick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A timepoint that may be infinite. `From`/`Until` evaluations return this;
/// the derived ordering places every finite time before `Never`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeBound {
    At(Tick),
    Never,
}

impl TimeBound {
    pub fn is_never(self) -> bool {
        matches!(self, TimeBound::Never)
    }

    pub fn finite(self) -> Option<Tick> {
        match self {
            TimeBound::At(t) => Some(t),
            TimeBound::Never => None,
        }
    }
}

impl From<Tick> for TimeBound {
    fn from(t: Tick) -> Self {
        TimeBound::At(t)
    }
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBound::At(t) => write!(f, "{t}"),
            TimeBound::Never => write!(f, "inf"),
        }
    }
}
