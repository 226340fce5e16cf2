//! Sod shock tube with gamma = 5/3 against the exact Riemann solution.
//!
//! ```text
//! cargo run --release --example sod_shock_tube -- 512 > sod.csv
//! ```
//!
//! Writes `x,rho,rho_exact,u,p` to stdout and the L1 density error to stderr.

use ppmlr::physics::{Constants, PrimitiveState};
use ppmlr::ppm1d::SweepOptions;
use ppmlr::tube::Tube;
use ppmlr_reference::{l1_distance, ExactRiemann, GasState};

fn main() -> ppmlr::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(512);
    let gamma = 5.0 / 3.0;
    let gas = |rho, p| PrimitiveState::new(rho, [0.0; 3], [0.0; 3], p);

    let mut tube = Tube::riemann(0.0, 1.0, n, 0.5, gas(1.0, 1.0), gas(0.125, 0.1))?;
    tube.run_to(0.2, 0.5, &Constants::hydro(gamma), &SweepOptions::default())?;

    let exact = ExactRiemann::solve(GasState::new(1.0, 0.0, 1.0), GasState::new(0.125, 0.0, 0.1), gamma);
    let reference = exact.density_profile(0.0, 1.0, n, 0.5, 0.2, 16);
    println!("x,rho,rho_exact,u,p");
    for ((x, s), r) in tube.centers().iter().zip(tube.interior()).zip(&reference) {
        println!("{x},{},{r},{},{}", s.rho, s.v[0], s.p);
    }
    eprintln!(
        "N = {n}, {} steps, p* = {:.5}, u* = {:.5}, L1(rho) = {:.3e}",
        tube.steps,
        exact.p_star,
        exact.u_star,
        l1_distance(&tube.density(), &reference, 1.0 / n as f64)
    );
    Ok(())
}
