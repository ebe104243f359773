//! Closed-loop simulation harness for the star-world tunnel-MPC stack.
//!
//! The core crate is deliberately clockless and file-free; this crate adds
//! the std half: wall-clock compute budgets, scenario files, the simulation
//! loop with its safety bookkeeping, trace and plot writers, a seeded
//! scenario generator, and the `star-tunnel` CLI.

pub mod outputs;
pub mod randgen;
pub mod scenario;
pub mod sim;

use star_tunnel_core::budget::Budget;
use std::time::{Duration, Instant};

/// Wall-clock compute budget: exhausted once the deadline passes.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    end: Instant,
}

impl Deadline {
    pub fn after(seconds: f64) -> Deadline {
        Deadline {
            end: Instant::now() + Duration::from_secs_f64(seconds.max(0.0)),
        }
    }
}

impl Budget for Deadline {
    fn exhausted(&self) -> bool {
        Instant::now() >= self.end
    }
}
