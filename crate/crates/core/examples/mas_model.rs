//! Bandwidth-bound speedup model: the device/host bandwidth ratio caps the
//! speedup, and blocks smaller than the workload floor lose efficiency.

use ppmlr::decomp::REFERENCE_CONFIGS;
use ppmlr::grid::build_default_grid;
use ppmlr::perfmodel::{mas, predict_speedup, BandwidthSpec};

fn main() {
    let spec = BandwidthSpec::TITAN;
    println!("device {} GB/s, host {} GB/s, max speedup {:.4}", spec.device_bw / 1e9, spec.host_bw / 1e9, mas(&spec));
    let grid = build_default_grid();
    println!("{:>9} {:>12} {:>8} {:>8} {:>8}", "config", "cells/block", "eff 0.5", "eff .732", "eff 1.0");
    for c in REFERENCE_CONFIGS {
        let s = |e| predict_speedup(&c, &grid, &spec, e);
        println!(
            "{:>9} {:>12} {:>8.3} {:>8.3} {:>8.3}",
            c.to_string(),
            grid.cell_count() / c.blocks(),
            s(0.5),
            s(0.732),
            s(1.0)
        );
    }
}
