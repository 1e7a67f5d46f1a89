//! Stage timing. The core crate has no clock; callers inject one.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub trait Clock {
    /// Monotonic seconds from an arbitrary origin.
    fn now(&self) -> f64;
}

/// Always reports zero elapsed time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Accumulates named stage durations.
pub struct Stopwatch<'a> {
    clock: &'a dyn Clock,
    mark: f64,
    pub stages: Vec<StageTiming>,
}

impl<'a> Stopwatch<'a> {
    pub fn start(clock: &'a dyn Clock) -> Self {
        Self { clock, mark: clock.now(), stages: Vec::new() }
    }

    /// Closes the current stage under `name` and starts the next one.
    pub fn lap(&mut self, name: &str) {
        let now = self.clock.now();
        self.stages.push(StageTiming { stage: name.into(), seconds: now - self.mark });
        self.mark = now;
    }

    pub fn finish(self) -> Vec<StageTiming> {
        self.stages
    }
}
