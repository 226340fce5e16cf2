//! Desk-scale magnetosphere: solar wind flowing past the dipole on a
//! stretched grid split over 27 workers plus the ionosphere stand-in.
//!
//! ```text
//! cargo run --release --example magnetosphere -- [steps]
//! ```
//!
//! Prints density, pressure and total B_z along the Sun-Earth line from the
//! final snapshot.

use ppmlr::config::RunConfig;
use ppmlr::physics::{add, dipole_field};
use ppmlr::run::run;
use ppmlr::snapshot::Snapshot;

fn main() -> ppmlr::Result<()> {
    let mut cfg = RunConfig::parse(include_str!("../configs/desk.toml"))?;
    if let Some(n) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.steps = Some(n);
    }
    cfg.out = std::env::temp_dir().join("ppmlr-magnetosphere");
    let summary = run(&cfg)?;
    let totals = summary.totals();
    println!(
        "{} steps to t = {:.3}, {} snapshots in {}, {} messages / {} bytes exchanged",
        summary.steps,
        summary.time,
        summary.snapshots.len(),
        summary.out.display(),
        totals.messages,
        totals.bytes
    );

    let snap = Snapshot::read(summary.snapshots.last().expect("at least one snapshot"))?;
    let grid = cfg.grid.build()?;
    let [nx, ny, _] = grid.dims();
    let (j, k) = (grid.y.locate(0.0)?, grid.z.locate(0.0)?);
    println!("{:>8} {:>8} {:>8} {:>9}", "x", "rho", "p", "Bz");
    for i in (0..nx).rev() {
        let x = grid.x.centers[i];
        if x < -20.0 {
            break;
        }
        let s = &snap.states[i + nx * (j + ny * k)];
        let pos = [x, grid.y.centers[j], grid.z.centers[k]];
        let b = match dipole_field(pos, &cfg.constants) {
            Ok(bd) => add(bd, s.bprime),
            Err(_) => s.bprime,
        };
        println!("{x:>8.2} {:>8.3} {:>8.3} {:>9.4}", s.rho, s.p, b[2]);
    }
    Ok(())
}
