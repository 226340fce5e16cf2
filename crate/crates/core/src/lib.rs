//! Ideal-MHD solver using the piecewise parabolic method with Lagrangian
//! remap on a stretched magnetosphere grid, with a partitioned multi-worker
//! harness, halo-exchange transports and a bandwidth performance model.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod config;
pub mod decomp;
pub mod error;
pub mod exchange;
pub mod grid;
pub mod perfmodel;
pub mod physics;
pub mod ppm1d;
pub mod run;
pub mod snapshot;
pub mod stepper;
pub mod tube;
pub mod verify;

pub use error::{Error, Location, Result};
