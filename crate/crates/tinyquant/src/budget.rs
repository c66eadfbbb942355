use std::time::{Duration, Instant};

use tinyquant_core::memplan::Budget;

/// Expires once a wall-clock deadline passes.
pub struct WallClock {
    deadline: Instant,
}

impl WallClock {
    pub fn new(limit: Duration) -> Self {
        Self { deadline: Instant::now() + limit }
    }
}

impl Budget for WallClock {
    fn expired(&mut self) -> bool {
        Instant::now() >= self.deadline
    }
}
