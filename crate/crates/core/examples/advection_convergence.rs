//! Convergence of a smooth density wave carried once around a periodic tube.
//!
//! The Colella-Woodward limiter clips the wave's extrema, so the measured
//! L1 order sits a little above 2 instead of the unlimited 3.

use ppmlr::verify::advection_error;

fn main() -> ppmlr::Result<()> {
    let sizes = [32, 64, 128, 256];
    let errors = sizes.iter().map(|&n| advection_error(n)).collect::<ppmlr::Result<Vec<_>>>()?;
    println!("{:>5} {:>12} {:>7}", "N", "L1(rho)", "order");
    for (i, (n, e)) in sizes.iter().zip(&errors).enumerate() {
        let order = if i == 0 { String::new() } else { format!("{:.3}", (errors[i - 1] / e).log2()) };
        println!("{n:>5} {e:>12.4e} {order:>7}");
    }
    Ok(())
}
