// SPDX-License-Identifier: Apache-2.0

//! Wall-time source for attempt records. Replay runs use [`Clock::Frozen`]
//! so that repeated runs write byte-identical workspaces.

use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    System,
    Frozen,
}

#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    started: Option<Instant>,
}

impl Clock {
    pub fn start(self) -> Stopwatch {
        Stopwatch {
            started: match self {
                Clock::System => Some(Instant::now()),
                Clock::Frozen => None,
            },
        }
    }
}

impl Stopwatch {
    /// Seconds since start; always 0 under a frozen clock.
    pub fn elapsed(&self) -> f64 {
        self.started.map_or(0.0, |s| s.elapsed().as_secs_f64())
    }
}
