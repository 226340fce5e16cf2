//! Halo exchange between threaded workers: one slab, a short partitioned
//! run under both transports, and the diagnostic for a lost message.

use std::sync::Arc;
use std::time::Duration;

use ppmlr::decomp::{exchanged_bytes, layout, PartitionConfig, BYTES_PER_CELL};
use ppmlr::exchange::{pack, Cluster, ClusterOptions, DroppedSlab, Face, TransportKind};
use ppmlr::grid::StretchedGrid;
use ppmlr::physics::{norm, sub, Constants, PrimitiveState};
use ppmlr::ppm1d::GHOST;
use ppmlr::stepper::Boundary;

fn main() -> ppmlr::Result<()> {
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [24, 15, 15])?;
    let config = PartitionConfig::new(2, 3, 3);
    let init = Arc::new(|pos: [f64; 3], bd: [f64; 3]| {
        let p = if norm(sub(pos, [0.5; 3])) < 0.2 { 5.0 } else { 0.5 };
        PrimitiveState::new(1.0, [0.0; 3], sub([0.0, 0.0, 0.2], bd), p)
    });
    let build = |options: ClusterOptions| -> ppmlr::Result<Cluster> {
        let l = layout(&config, &grid)?;
        Cluster::new(l, &grid, [Boundary::Outflow; 6], Constants::hydro(5.0 / 3.0), options, init.clone())
    };

    let cluster = build(ClusterOptions::default())?;
    let slab = pack(&cluster.blocks[0], Face::XHi, GHOST, 0, 1)?;
    println!(
        "slab 0 -> 1 across {}: plane {:?} x {} layers, {} bytes",
        slab.face,
        slab.plane,
        slab.ghost,
        slab.bytes()
    );
    println!("model bytes per step for {config}: {}", exchanged_bytes(&config, &grid, GHOST, BYTES_PER_CELL));

    let mut fields = Vec::new();
    for transport in [TransportKind::Staged, TransportKind::Direct] {
        let mut c = build(ClusterOptions {
            transport,
            ..ClusterOptions::default()
        })?;
        let outcome = c.advance(3)?;
        for r in &outcome.ledger.rows {
            println!(
                "{transport:>6} step {} messages {} bytes {} copy events {}",
                r.step, r.messages, r.bytes, r.copy_events
            );
        }
        fields.push(c.gather());
    }
    println!("staged and direct fields identical: {}", fields[0] == fields[1]);

    let mut lossy = build(ClusterOptions {
        timeout: Duration::from_millis(200),
        dropped: Some(DroppedSlab {
            src: 0,
            face: Face::XHi,
            step: 1,
        }),
        ..ClusterOptions::default()
    })?;
    match lossy.advance(3) {
        Err(e) => println!("lost slab: {e}"),
        Ok(_) => println!("lost slab went unnoticed"),
    }
    Ok(())
}
