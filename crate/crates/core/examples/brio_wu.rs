//! Brio-Wu MHD shock tube (gamma = 2, Bx = 0.75) against a fine first-order
//! HLL solution averaged down to the same zones.
//!
//! ```text
//! cargo run --release --example brio_wu -- 800 > brio_wu.csv
//! ```

use ppmlr::physics::{Constants, PrimitiveState};
use ppmlr::ppm1d::SweepOptions;
use ppmlr::tube::Tube;
use ppmlr_reference::{coarsen, l1_distance, HllMhd, MhdState};

fn main() -> ppmlr::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    let refine = 10;
    let left = PrimitiveState::new(1.0, [0.0; 3], [0.75, 1.0, 0.0], 1.0);
    let right = PrimitiveState::new(0.125, [0.0; 3], [0.75, -1.0, 0.0], 0.1);

    let mut tube = Tube::riemann(0.0, 1.0, n, 0.5, left, right)?;
    tube.run_to(0.1, 0.5, &Constants::hydro(2.0), &SweepOptions::default())?;

    let mhd = |s: &PrimitiveState| MhdState {
        rho: s.rho,
        u: 0.0,
        v: 0.0,
        w: 0.0,
        by: s.bprime[1],
        bz: 0.0,
        p: s.p,
    };
    let mut hll = HllMhd::shock_tube(0.0, 1.0, refine * n, 0.5, mhd(&left), mhd(&right), 0.75, 2.0);
    hll.advance_to(0.1);
    let reference = coarsen(&hll.density(), refine);

    println!("x,rho,rho_hll,u,v,by,p");
    for ((x, s), r) in tube.centers().iter().zip(tube.interior()).zip(&reference) {
        println!("{x},{},{r},{},{},{},{}", s.rho, s.v[0], s.v[1], s.bprime[1], s.p);
    }
    eprintln!(
        "N = {n}, {} steps, L1(rho) vs HLL on {} zones = {:.3e}",
        tube.steps,
        refine * n,
        l1_distance(&tube.density(), &reference, 1.0 / n as f64)
    );
    Ok(())
}
