//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed in order; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ppmlr::decomp::{exchanged_bytes, layout, tde_units, total_ranks, PartitionConfig, BYTES_PER_CELL, REFERENCE_CONFIGS};
use ppmlr::exchange::{Cluster, ClusterOptions, InitFn, TransportKind};
use ppmlr::grid::StretchedGrid;
use ppmlr::perfmodel::{mas, predict_speedup, BandwidthSpec};
use ppmlr::physics::{norm, prim_to_cons, sub, Constants, PrimitiveState};
use ppmlr::ppm1d::{SweepOptions, GHOST};
use ppmlr::stepper::{BlockState, Boundary, StepOptions};
use ppmlr::tube::{Tube, TubeBoundary};
use ppmlr_reference::{coarsen, l1_distance, ExactRiemann, GasState, HllMhd, MhdState};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Adjacent block pairs by brute force over all pairs of block coordinates.
fn adjacent_pairs(c: PartitionConfig) -> Vec<([usize; 3], [usize; 3])> {
    let mut coords = Vec::new();
    for k in 0..c.nz {
        for j in 0..c.ny {
            for i in 0..c.nx {
                coords.push([i, j, k]);
            }
        }
    }
    let mut pairs = Vec::new();
    for (n, a) in coords.iter().enumerate() {
        for b in &coords[n + 1..] {
            let d: usize = (0..3).map(|x| a[x].abs_diff(b[x])).sum();
            if d == 1 {
                pairs.push((*a, *b));
            }
        }
    }
    pairs
}

/// Halo bytes per step: both directions of every shared face, `ghost`
/// layers deep, 64 bytes per cell.
fn brute_force_bytes(c: PartitionConfig, dims: [usize; 3], ghost: usize) -> u64 {
    let block = [dims[0] / c.nx, dims[1] / c.ny, dims[2] / c.nz];
    adjacent_pairs(c)
        .iter()
        .map(|(a, b)| {
            let axis = (0..3).find(|&x| a[x] != b[x]).unwrap();
            let face: usize = (0..3).filter(|&x| x != axis).map(|x| block[x]).product();
            (face * ghost * 64 * 2) as u64
        })
        .sum()
}

fn blast_init() -> InitFn {
    Arc::new(|pos: [f64; 3], bd: [f64; 3]| {
        let r = norm(sub(pos, [0.4, 0.5, 0.55]));
        let p = if r < 0.25 { 4.0 } else { 0.3 };
        PrimitiveState::new(1.0 + 0.2 * pos[2], [0.05, -0.1, 0.0], sub([0.2, 0.3, -0.1], bd), p)
    })
}

fn cluster(config: PartitionConfig, grid: &StretchedGrid, transport: TransportKind) -> Cluster {
    let l = layout(&config, grid).expect("valid partition");
    let opts = ClusterOptions {
        transport,
        ..ClusterOptions::default()
    };
    Cluster::new(l, grid, [Boundary::Outflow; 6], Constants::hydro(5.0 / 3.0), opts, blast_init()).unwrap()
}

fn partition_table() -> Outcome {
    let ranks: Vec<usize> = REFERENCE_CONFIGS.iter().map(total_ranks).collect();
    outcome(ranks == [4, 28, 37, 55, 101, 151], format!("ranks {ranks:?}"))
}

fn exchange_model() -> Outcome {
    let configs = [(1, 1, 1), (3, 1, 1), (3, 3, 3), (4, 3, 3), (6, 5, 5)].map(|(a, b, c)| PartitionConfig::new(a, b, c));
    let mut tde_ok = true;
    let mut tde = Vec::new();
    for c in configs {
        let brute = adjacent_pairs(c).len();
        tde_ok &= tde_units(&c) == brute;
        tde.push(brute);
    }
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [24, 15, 15]).unwrap();
    let mut bytes_ok = true;
    let mut bytes = Vec::new();
    for c in [PartitionConfig::new(2, 1, 1), PartitionConfig::new(2, 3, 3)] {
        let mut cl = cluster(c, &grid, TransportKind::Staged);
        let ledger = cl.advance(2).unwrap().ledger;
        let model = exchanged_bytes(&c, &grid, GHOST, BYTES_PER_CELL);
        let brute = brute_force_bytes(c, grid.dims(), GHOST);
        bytes_ok &= model == brute && ledger.rows.iter().all(|r| r.bytes == model);
        bytes.push((model, ledger.rows[0].bytes));
    }
    outcome(tde_ok && bytes_ok, format!("tde {tde:?}, (model, ledger) bytes {bytes:?}"))
}

fn mas_model() -> Outcome {
    let spec = BandwidthSpec {
        device_bw: 250e9,
        host_bw: 51.2e9,
    };
    let m = mas(&spec);
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [128, 128, 128]).unwrap();
    let s = predict_speedup(&PartitionConfig::new(1, 1, 1), &grid, &spec, 0.732);
    outcome(
        (m - 4.8828).abs() <= 1e-4 && (s - 3.57).abs() <= 0.01,
        format!("mas {m:.6}, predicted speedup at 0.732 {s:.4}"),
    )
}

fn copy_ledger() -> Outcome {
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [12, 8, 8]).unwrap();
    let config = PartitionConfig::new(3, 1, 1);
    let row = |t| cluster(config, &grid, t).advance(1).unwrap().ledger.rows[0];
    let (staged, direct) = (row(TransportKind::Staged), row(TransportKind::Direct));
    let diff = staged.copy_events - direct.copy_events;
    outcome(
        staged.messages == 4 && direct.messages == 4 && diff == 24,
        format!("messages {}, staged {} - direct {} = {diff}", staged.messages, staged.copy_events, direct.copy_events),
    )
}

fn gas(rho: f64, p: f64) -> PrimitiveState {
    PrimitiveState::new(rho, [0.0; 3], [0.0; 3], p)
}

fn sod() -> Outcome {
    let gamma = 5.0 / 3.0;
    let n = 512;
    let mut tube = Tube::riemann(0.0, 1.0, n, 0.5, gas(1.0, 1.0), gas(0.125, 0.1)).unwrap();
    tube.run_to(0.2, 0.5, &Constants::hydro(gamma), &SweepOptions::default()).unwrap();
    let exact = ExactRiemann::solve(GasState::new(1.0, 0.0, 1.0), GasState::new(0.125, 0.0, 0.1), gamma);
    let reference = exact.density_profile(0.0, 1.0, n, 0.5, 0.2, 32);
    let e = l1_distance(&tube.density(), &reference, 1.0 / n as f64);
    outcome(e < 0.01, format!("L1(rho) {e:.3e} < 1e-2"))
}

fn advection_error(n: usize) -> f64 {
    let dx = 1.0 / n as f64;
    let k = 2.0 * PI;
    // exact cell averages of 1 + 0.2 sin(2 pi x)
    let avg = |x: f64| 1.0 + 0.2 * ((k * (x - dx / 2.0)).cos() - (k * (x + dx / 2.0)).cos()) / (k * dx);
    let mut tube = Tube::new(0.0, 1.0, n, TubeBoundary::Periodic, |x| {
        PrimitiveState::new(avg(x), [1.0, 0.0, 0.0], [0.0; 3], 1.0)
    })
    .unwrap();
    let exact: Vec<f64> = tube.centers().iter().map(|&x| avg(x)).collect();
    tube.run_to(1.0, 0.5, &Constants::hydro(5.0 / 3.0), &SweepOptions::default()).unwrap();
    l1_distance(&tube.density(), &exact, dx)
}

fn convergence() -> Outcome {
    let (e64, e128) = (advection_error(64), advection_error(128));
    let order = (e64 / e128).log2();
    outcome(order >= 2.5, format!("L1 {e64:.3e} -> {e128:.3e}, order {order:.3} >= 2.5"))
}

fn conservation() -> Outcome {
    let c = Constants::hydro(5.0 / 3.0);
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [32; 3]).unwrap();
    let mut block = BlockState::whole(&grid, GHOST, [Boundary::Periodic; 6], &c, |pos, _| {
        let r = norm(sub(pos, [0.5; 3]));
        gas(1.0, if r < 0.15 { 20.0 } else { 0.2 })
    })
    .unwrap();
    let opts = StepOptions {
        sources: false,
        ..StepOptions::default()
    };
    let totals = |b: &BlockState| {
        let mut m = 0.0;
        let mut e = 0.0;
        for s in b.interior_states() {
            let u = prim_to_cons(&s, &c);
            m += u.rho;
            e += u.energy;
        }
        (m, e)
    };
    let (m0, e0) = totals(&block);
    for _ in 0..50 {
        let dt = block.compute_dt(opts.cfl, &c).unwrap();
        block.step(dt, &c, &opts).unwrap();
    }
    let (m1, e1) = totals(&block);
    let (dm, de) = ((m1 - m0).abs() / m0, (e1 - e0).abs() / e0);
    outcome(dm < 1e-11 && de < 1e-11, format!("mass drift {dm:.2e}, energy drift {de:.2e} < 1e-11"))
}

fn partition_invariance() -> Outcome {
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [12; 3]).unwrap();
    let mut serial = cluster(PartitionConfig::new(1, 1, 1), &grid, TransportKind::Staged);
    serial.advance(10).unwrap();
    let reference = serial.gather();
    let mut passed = true;
    let mut notes = Vec::new();
    for c in [PartitionConfig::new(2, 1, 1), PartitionConfig::new(2, 3, 3)] {
        let mut split = cluster(c, &grid, TransportKind::Direct);
        split.advance(10).unwrap();
        let got = split.gather();
        let mut worst = 0.0f64;
        let mut bitwise = true;
        for (a, b) in reference.iter().zip(&got) {
            let fa = [a.rho, a.v[0], a.v[1], a.v[2], a.bprime[0], a.bprime[1], a.bprime[2], a.p];
            let fb = [b.rho, b.v[0], b.v[1], b.v[2], b.bprime[0], b.bprime[1], b.bprime[2], b.p];
            for (x, y) in fa.iter().zip(&fb) {
                bitwise &= x.to_bits() == y.to_bits();
                if x != y {
                    worst = worst.max((x - y).abs() / x.abs().max(y.abs()));
                }
            }
        }
        passed &= worst <= 1e-13;
        notes.push(format!("{c} {}", if bitwise { "bitwise".to_string() } else { format!("max rel {worst:.1e}") }));
    }
    outcome(passed, notes.join(", "))
}

fn brio_wu() -> Outcome {
    let n = 800;
    let left = PrimitiveState::new(1.0, [0.0; 3], [0.75, 1.0, 0.0], 1.0);
    let right = PrimitiveState::new(0.125, [0.0; 3], [0.75, -1.0, 0.0], 0.1);
    let mut tube = Tube::riemann(0.0, 1.0, n, 0.5, left, right).unwrap();
    tube.run_to(0.1, 0.5, &Constants::hydro(2.0), &SweepOptions::default()).unwrap();
    let mhd = |s: &PrimitiveState| MhdState {
        rho: s.rho,
        u: 0.0,
        v: 0.0,
        w: 0.0,
        by: s.bprime[1],
        bz: 0.0,
        p: s.p,
    };
    let refine = 10;
    let mut hll = HllMhd::shock_tube(0.0, 1.0, refine * n, 0.5, mhd(&left), mhd(&right), 0.75, 2.0);
    hll.advance_to(0.1);
    let e = l1_distance(&tube.density(), &coarsen(&hll.density(), refine), 1.0 / n as f64);
    outcome(e < 0.03, format!("L1(rho) vs HLL x{refine} {e:.3e} < 3e-2"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("partition table", Duration::from_secs(1), partition_table),
        ("exchange volume model", Duration::from_secs(60), exchange_model),
        ("bandwidth speedup model", Duration::from_secs(1), mas_model),
        ("copy ledger", Duration::from_secs(10), copy_ledger),
        ("sod shock tube", Duration::from_secs(30), sod),
        ("advection convergence", Duration::from_secs(30), convergence),
        ("conservation", Duration::from_secs(120), conservation),
        ("partition invariance", Duration::from_secs(60), partition_invariance),
        ("brio-wu tube", Duration::from_secs(120), brio_wu),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let ok = out.passed && elapsed < *limit;
        failed += usize::from(!ok);
        println!(
            "criterion {} {:<24} {}  {}; {:.2}s (limit {}s)",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
