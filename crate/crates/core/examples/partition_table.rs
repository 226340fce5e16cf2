//! Rank counts, shared faces and halo volume per step for the reference
//! partitions of the default grid, plus a few layouts that are rejected.

use ppmlr::decomp::{exchanged_bytes, tde_units, total_ranks, validate, PartitionConfig, BYTES_PER_CELL, REFERENCE_CONFIGS};
use ppmlr::grid::build_default_grid;
use ppmlr::ppm1d::GHOST;

fn main() {
    let grid = build_default_grid();
    println!("{:>9} {:>6} {:>6} {:>14}", "config", "ranks", "faces", "bytes/step");
    for c in REFERENCE_CONFIGS {
        println!(
            "{:>9} {:>6} {:>6} {:>14}",
            c.to_string(),
            total_ranks(&c),
            tde_units(&c),
            exchanged_bytes(&c, &grid, GHOST, BYTES_PER_CELL)
        );
    }
    for c in [PartitionConfig::new(3, 2, 2), PartitionConfig::new(5, 3, 3), PartitionConfig::new(3, 3, 2)] {
        match validate(&c, &grid) {
            Ok(()) => println!("{c} valid"),
            Err(e) => println!("{e}"),
        }
    }
}
