//! Configured runs: build the partitioned cluster, advance it, and write
//! snapshots, the transfer ledger, per-rank timings and a report row.
//!
//! Output directory layout:
//!
//! ```text
//! out/config.toml          resolved configuration
//! out/snapshots/step_00000010.pplr
//! out/ledger.csv           step, transport, messages, bytes, copy_events
//! out/timings.csv          rank, step, compute_seconds, transfer_seconds
//! out/report.csv           one perfmodel report row
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Problem, RunConfig};
use crate::decomp::layout;
use crate::error::Result;
use crate::exchange::{Cluster, ClusterOptions, InitFn, IonosphereRecord, LedgerRow, TransferLedger};
use crate::grid::StretchedGrid;
use crate::perfmodel::{aggregate, ReportRow, StepTiming};
use crate::physics::{norm, sub, PrimitiveState, Vec3};
use crate::ppm1d::SweepOptions;
use crate::snapshot::{Snapshot, SnapshotHeader};
use crate::stepper::{magnetosphere_boundaries, magnetosphere_state, Boundary, StepOptions};

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub steps: u64,
    pub time: f64,
    pub snapshots: Vec<PathBuf>,
    pub ledger: TransferLedger,
    pub timings: Vec<StepTiming>,
    pub ionosphere: Vec<IonosphereRecord>,
    pub report: ReportRow,
    pub out: PathBuf,
}

impl RunSummary {
    pub fn totals(&self) -> LedgerRow {
        self.ledger.totals()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform noise in [-1, 1) keyed by seed and position, so every block
/// sees the same value for the same cell.
pub fn cell_noise(seed: u64, pos: Vec3) -> f64 {
    let key = pos.iter().fold(0u64, |h, x| splitmix(h ^ x.to_bits()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng.gen_range(-1.0..1.0)
}

fn initial_condition(cfg: &RunConfig, grid: &StretchedGrid) -> InitFn {
    let c = cfg.constants;
    let (seed, amp) = (cfg.seed, cfg.perturbation);
    let base: Box<dyn Fn(Vec3, Vec3) -> PrimitiveState + Send + Sync> = match cfg.problem {
        Problem::Magnetosphere => {
            let (sw, profile) = (cfg.solar_wind, cfg.profile);
            Box::new(move |pos, bd| magnetosphere_state(pos, bd, &sw, &profile, &c))
        }
        Problem::Blast => {
            let b = cfg.blast;
            let centre: Vec3 = std::array::from_fn(|a| 0.5 * (grid.axis(a).min() + grid.axis(a).max()));
            Box::new(move |pos, bd| {
                let p = if norm(sub(pos, centre)) < b.radius { b.p_in } else { b.p_out };
                PrimitiveState::new(b.rho, [0.0; 3], sub(b.b, bd), p)
            })
        }
    };
    Arc::new(move |pos, bd| {
        let mut s = base(pos, bd);
        if amp > 0.0 {
            s.rho *= 1.0 + amp * cell_noise(seed, pos);
        }
        s
    })
}

/// Build the cluster described by `cfg` without running it.
pub fn build_cluster(cfg: &RunConfig) -> Result<(StretchedGrid, Cluster)> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let layout = layout(&cfg.partition, &grid)?;
    let boundaries = match cfg.problem {
        Problem::Magnetosphere => magnetosphere_boundaries(&cfg.solar_wind),
        Problem::Blast => [Boundary::Outflow; 6],
    };
    let options = ClusterOptions {
        transport: cfg.transport,
        ghost: cfg.ghost,
        timeout: Duration::from_secs_f64(cfg.timeout_seconds),
        copy_latency: cfg.copy_latency,
        step: StepOptions {
            cfl: cfg.cfl,
            sources: cfg.sources,
            sweep: SweepOptions {
                flattening: cfg.flattening,
                pressure_floor: cfg.pressure_floor,
                ..SweepOptions::default()
            },
        },
        frozen_radius: (cfg.problem == Problem::Magnetosphere).then_some(cfg.frozen_radius),
        dropped: None,
        t_end: cfg.end_time,
    };
    let init = initial_condition(cfg, &grid);
    let cluster = Cluster::new(layout, &grid, boundaries, cfg.constants, options, init)?;
    Ok((grid, cluster))
}

pub fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
    dir.join("snapshots").join(format!("step_{step:08}.pplr"))
}

fn write_timings(path: &Path, timings: &[StepTiming]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in timings {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

/// Execute a run. Snapshots are written every `snapshot_every` steps and
/// after the last step, so a run of `n` steps leaves `ceil(n / every)`
/// snapshots.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let (grid, mut cluster) = build_cluster(cfg)?;
    let out = cfg.out.clone();
    std::fs::create_dir_all(out.join("snapshots"))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml())?;

    let every = cfg.snapshot_every;
    let mut ledger = TransferLedger::new(cfg.transport);
    let mut timings = Vec::new();
    let mut ionosphere = Vec::new();
    let mut snapshots = Vec::new();
    loop {
        let done = cluster.step_count();
        let finished = match (cfg.steps, cfg.end_time) {
            (Some(n), _) => done >= n,
            (None, Some(t)) => t - cluster.time() <= 1e-12 * t.abs().max(1.0),
            (None, None) => unreachable!("validated config has steps or end_time"),
        };
        let due = done > 0 && (done % every == 0 || finished);
        if due {
            let header = SnapshotHeader::new(&grid, cfg.ghost, cluster.time(), done);
            let path = snapshot_path(&out, done);
            Snapshot::new(header, cluster.gather())?.write(&path)?;
            log::info!("step {done} t = {:.6} -> {}", cluster.time(), path.display());
            snapshots.push(path);
        }
        if finished {
            break;
        }
        let segment = match cfg.steps {
            Some(n) => (every - done % every).min(n - done),
            None => 1,
        };
        let outcome = cluster.advance(segment)?;
        ledger.rows.extend(outcome.ledger.rows);
        timings.extend(outcome.timings);
        ionosphere.extend(outcome.ionosphere);
    }

    ledger.write_csv(std::fs::File::create(out.join("ledger.csv"))?)?;
    write_timings(&out.join("timings.csv"), &timings)?;
    let summary = aggregate(&timings).ok();
    let report = ReportRow::new(&cfg.partition, &grid, cfg.ghost, summary.as_ref(), &cfg.bandwidth, cfg.efficiency);
    crate::perfmodel::write_report(std::slice::from_ref(&report), std::fs::File::create(out.join("report.csv"))?)?;
    Ok(RunSummary {
        steps: cluster.step_count(),
        time: cluster.time(),
        snapshots,
        ledger,
        timings,
        ionosphere,
        report,
        out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GridConfig;
    use crate::decomp::{exchanged_bytes, PartitionConfig, BYTES_PER_CELL};

    fn blast(dir: &Path, partition: PartitionConfig, steps: u64, every: u64) -> RunConfig {
        RunConfig {
            problem: Problem::Blast,
            grid: GridConfig::Uniform {
                lo: [-1.0; 3],
                hi: [1.0; 3],
                cells: [12, 12, 12],
            },
            partition,
            constants: crate::physics::Constants::hydro(5.0 / 3.0),
            steps: Some(steps),
            snapshot_every: every,
            out: dir.to_path_buf(),
            blast: crate::config::BlastParams {
                radius: 0.4,
                ..Default::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn noise_is_keyed_by_position() {
        let a = cell_noise(7, [0.5, 1.0, -2.0]);
        assert_eq!(a, cell_noise(7, [0.5, 1.0, -2.0]));
        assert_ne!(a, cell_noise(8, [0.5, 1.0, -2.0]));
        assert_ne!(a, cell_noise(7, [0.5, 1.0, 2.0]));
        assert!((-1.0..1.0).contains(&a));
    }

    #[test]
    fn snapshot_count_and_ledger() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = blast(dir.path(), PartitionConfig::new(3, 1, 1), 7, 3);
        let s = run(&cfg).unwrap();
        assert_eq!(s.steps, 7);
        let steps: Vec<u64> = s
            .snapshots
            .iter()
            .map(|p| Snapshot::read(p).unwrap().header.step)
            .collect();
        assert_eq!(steps, vec![3, 6, 7]);
        assert_eq!(s.ledger.rows.len(), 7);
        let grid = cfg.grid.build().unwrap();
        let per_step = exchanged_bytes(&cfg.partition, &grid, cfg.ghost, BYTES_PER_CELL);
        assert!(s.ledger.rows.iter().all(|r| r.bytes == per_step && r.messages == 4));
        assert!(dir.path().join("ledger.csv").exists());
        assert!(dir.path().join("report.csv").exists());
        assert_eq!(s.timings.len(), 7 * 3);
    }

    #[test]
    fn end_time_is_hit() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = blast(dir.path(), PartitionConfig::new(1, 1, 1), 1, 1000);
        cfg.steps = None;
        cfg.end_time = Some(0.01);
        let s = run(&cfg).unwrap();
        assert!((s.time - 0.01).abs() < 1e-14, "{}", s.time);
        assert_eq!(s.snapshots.len(), 1);
    }

    #[test]
    fn reruns_are_bitwise_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut ca = blast(a.path(), PartitionConfig::new(1, 3, 1), 4, 2);
        ca.perturbation = 0.05;
        ca.seed = 42;
        let mut cb = ca.clone();
        cb.out = b.path().to_path_buf();
        let sa = run(&ca).unwrap();
        let sb = run(&cb).unwrap();
        for (x, y) in sa.snapshots.iter().zip(&sb.snapshots) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}
