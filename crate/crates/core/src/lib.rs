//! Motion planning and control for a disk robot among moving, possibly
//! overlapping obstacles.
//!
//! The pipeline has four stages, one module each:
//!
//! 1. [`starworld`] rebuilds the obstacle set as a disjoint collection of
//!    star-shaped regions, inflated by a clearance margin, and projects the
//!    robot and goal positions into the free space of that world.
//! 2. [`dsfield`] evaluates a dynamical system that flows towards the
//!    projected goal and is modulated around the star obstacles.
//! 3. [`refpath`] integrates that field into a unit-speed reference path and
//!    compresses it into a polynomial with a certified error bound.
//! 4. [`ocp`] tracks the path with a sampled-time optimal controller that
//!    keeps the robot inside a safety tunnel around the path.
//!
//! [`geometry`] supplies the shared primitives and [`models`] the robot
//! dynamics. Everything here is deterministic and allocation-only: the crate
//! builds without `std` (enable the `libm` feature for the float intrinsics)
//! so it can run inside firmware or a simulator alike. Wall-clock limits
//! enter through the [`budget`] abstraction instead of `Instant`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("star-tunnel-core needs either the `std` or the `libm` feature");

pub mod budget;
pub mod dsfield;
pub mod geometry;
pub mod models;
pub mod ocp;
pub mod refpath;
pub mod starworld;

mod math;
