//! Reference solutions used to check the PPMLR kernel.
//!
//! Nothing in this crate shares code with the solver it checks: the exact
//! gas-dynamics Riemann solver follows the classic pressure-iteration
//! construction and the MHD reference is a plain first-order HLL scheme.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod exact;
pub mod hll;

pub use exact::{ExactRiemann, GasState};
pub use hll::{HllMhd, MhdState};

/// L1 norm of the difference between two equally spaced profiles.
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// Average consecutive groups of `factor` cells.
pub fn coarsen(fine: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor > 0 && fine.len().is_multiple_of(factor));
    fine.chunks(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect()
}
