//! Verification suites: shock tubes against reference solutions, smooth
//! advection convergence, conservation and partition equivalence.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ppmlr_reference::{coarsen, l1_distance, ExactRiemann, GasState, HllMhd, MhdState};

use crate::decomp::{exchanged_bytes, layout, PartitionConfig, BYTES_PER_CELL};
use crate::error::{Error, Result};
use crate::exchange::{Cluster, ClusterOptions, TransportKind};
use crate::grid::StretchedGrid;
use crate::physics::{norm, prim_to_cons, sub, Constants, PrimitiveState};
use crate::ppm1d::{SweepOptions, GHOST};
use crate::stepper::{BlockState, Boundary, StepOptions};
use crate::tube::{Tube, TubeBoundary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Below,
    AtLeast,
    AtMost,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub metric: f64,
    pub relation: Relation,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, metric: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            name: name.into(),
            metric,
            relation,
            threshold,
        }
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::Below => self.metric < self.threshold,
            Relation::AtLeast => self.metric >= self.threshold,
            Relation::AtMost => self.metric <= self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<32} {:>12.4e} {} {:<10.3e} {}",
            self.name,
            self.metric,
            self.relation,
            self.threshold,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Sod,
    Convergence,
    Conservation,
    Partition,
    BrioWu,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["sod", "convergence", "conservation", "partition", "brio_wu", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sod" => Suite::Sod,
            "convergence" => Suite::Convergence,
            "conservation" => Suite::Conservation,
            "partition" => Suite::Partition,
            "brio_wu" | "brio-wu" => Suite::BrioWu,
            "all" => Suite::All,
            other => {
                return Err(Error::Config(format!(
                    "unknown suite `{other}`; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

fn gas(rho: f64, p: f64) -> PrimitiveState {
    PrimitiveState::new(rho, [0.0; 3], [0.0; 3], p)
}

/// L1 density error of the Sod tube (gamma 5/3) at t = 0.2 on `n` zones.
pub fn sod_error(n: usize) -> Result<f64> {
    let gamma = 5.0 / 3.0;
    let c = Constants::hydro(gamma);
    let mut tube = Tube::riemann(0.0, 1.0, n, 0.5, gas(1.0, 1.0), gas(0.125, 0.1))?;
    tube.run_to(0.2, 0.5, &c, &SweepOptions::default())?;
    let exact = ExactRiemann::solve(GasState::new(1.0, 0.0, 1.0), GasState::new(0.125, 0.0, 0.1), gamma);
    let reference = exact.density_profile(0.0, 1.0, n, 0.5, 0.2, 16);
    Ok(l1_distance(&tube.density(), &reference, 1.0 / n as f64))
}

/// L1 density error after advecting `1 + 0.2 sin(2 pi x)` once around a
/// periodic unit tube at unit speed.
pub fn advection_error(n: usize) -> Result<f64> {
    let c = Constants::hydro(5.0 / 3.0);
    let dx = 1.0 / n as f64;
    let init = |x: f64| {
        let k = 2.0 * PI;
        let avg = 1.0 + 0.2 * ((k * (x - dx / 2.0)).cos() - (k * (x + dx / 2.0)).cos()) / (k * dx);
        PrimitiveState::new(avg, [1.0, 0.0, 0.0], [0.0; 3], 1.0)
    };
    let mut tube = Tube::new(0.0, 1.0, n, TubeBoundary::Periodic, init)?;
    let start = tube.density();
    tube.run_to(1.0, 0.5, &c, &SweepOptions::default())?;
    Ok(l1_distance(&tube.density(), &start, dx))
}

/// Order implied by the error ratio between `n` and `2n` zones.
pub fn convergence_order(n: usize) -> Result<f64> {
    Ok((advection_error(n)? / advection_error(2 * n)?).log2())
}

/// L1 density error of the Brio-Wu tube (gamma 2, t = 0.1) on `n` zones
/// against a first-order HLL solution on `refine * n` zones.
pub fn brio_wu_error(n: usize, refine: usize) -> Result<f64> {
    let c = Constants::hydro(2.0);
    let left = PrimitiveState::new(1.0, [0.0; 3], [0.75, 1.0, 0.0], 1.0);
    let right = PrimitiveState::new(0.125, [0.0; 3], [0.75, -1.0, 0.0], 0.1);
    let mut tube = Tube::riemann(0.0, 1.0, n, 0.5, left, right)?;
    tube.run_to(0.1, 0.5, &c, &SweepOptions::default())?;
    let m = |s: &PrimitiveState| MhdState {
        rho: s.rho,
        u: 0.0,
        v: 0.0,
        w: 0.0,
        by: s.bprime[1],
        bz: 0.0,
        p: s.p,
    };
    let mut reference = HllMhd::shock_tube(0.0, 1.0, refine * n, 0.5, m(&left), m(&right), 0.75, 2.0);
    reference.advance_to(0.1);
    Ok(l1_distance(&tube.density(), &coarsen(&reference.density(), refine), 1.0 / n as f64))
}

/// Relative drift of total mass and total energy over `steps` steps of a
/// periodic blast on an `n`^3 unit box with sources off.
pub fn conservation_drift(n: usize, steps: u64) -> Result<(f64, f64)> {
    let c = Constants::hydro(5.0 / 3.0);
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [n; 3])?;
    let init = |pos: [f64; 3], _| {
        let r = norm(sub(pos, [0.5; 3]));
        PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], if r < 0.2 { 10.0 } else { 0.1 })
    };
    let mut block = BlockState::whole(&grid, GHOST, [Boundary::Periodic; 6], &c, init)?;
    let opts = StepOptions {
        sources: false,
        ..StepOptions::default()
    };
    let totals = |b: &BlockState| {
        b.interior_states().iter().fold((0.0, 0.0), |(m, e), s| {
            let u = prim_to_cons(s, &c);
            (m + u.rho, e + u.energy)
        })
    };
    let (m0, e0) = totals(&block);
    for _ in 0..steps {
        let dt = block.compute_dt(opts.cfl, &c)?;
        block.step(dt, &c, &opts)?;
    }
    let (m1, e1) = totals(&block);
    Ok(((m1 - m0).abs() / m0, (e1 - e0).abs() / e0))
}

/// Outcome of running the same problem partitioned and on one block.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionComparison {
    /// Largest field difference relative to the field's magnitude.
    pub max_relative: f64,
    pub bitwise: bool,
    pub ledger_bytes: Vec<u64>,
    pub model_bytes: u64,
}

/// Magnetized blast on the `n`^3 unit box with outflow faces, run for
/// `steps` steps as `config` and as a single block.
pub fn partition_comparison(config: PartitionConfig, n: usize, steps: u64, transport: TransportKind) -> Result<PartitionComparison> {
    let c = Constants::hydro(5.0 / 3.0);
    let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [n; 3])?;
    let init = Arc::new(|pos: [f64; 3], bd: [f64; 3]| {
        let r = norm(sub(pos, [0.45, 0.5, 0.55]));
        let p = if r < 0.25 { 5.0 } else { 0.2 };
        PrimitiveState::new(1.0 + 0.1 * pos[1], [0.1, 0.0, -0.05], sub([0.3, 0.2, 0.1], bd), p)
    });
    let opts = ClusterOptions {
        transport,
        ..ClusterOptions::default()
    };
    let run = |cfg: PartitionConfig| -> Result<(Vec<PrimitiveState>, Vec<u64>)> {
        let l = layout(&cfg, &grid)?;
        let mut cluster = Cluster::new(l, &grid, [Boundary::Outflow; 6], c, opts.clone(), init.clone())?;
        let outcome = cluster.advance(steps)?;
        Ok((cluster.gather(), outcome.ledger.rows.iter().map(|r| r.bytes).collect()))
    };
    let (serial, _) = run(PartitionConfig::new(1, 1, 1))?;
    let (split, ledger_bytes) = run(config)?;
    let mut max_relative = 0.0f64;
    let mut bitwise = true;
    for (a, b) in serial.iter().zip(&split) {
        let fa = [a.rho, a.v[0], a.v[1], a.v[2], a.bprime[0], a.bprime[1], a.bprime[2], a.p];
        let fb = [b.rho, b.v[0], b.v[1], b.v[2], b.bprime[0], b.bprime[1], b.bprime[2], b.p];
        for (x, y) in fa.iter().zip(&fb) {
            bitwise &= x.to_bits() == y.to_bits();
            max_relative = max_relative.max((x - y).abs() / x.abs().max(y.abs()).max(1e-300));
        }
    }
    Ok(PartitionComparison {
        max_relative,
        bitwise,
        ledger_bytes,
        model_bytes: exchanged_bytes(&config, &grid, GHOST, BYTES_PER_CELL),
    })
}

/// Run one suite and return its checks.
pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Sod {
        checks.push(Check::new("sod L1(rho) N=512", sod_error(512)?, Relation::Below, 0.01));
    }
    if all || suite == Suite::Convergence {
        checks.push(Check::new("advection order 64->128", convergence_order(64)?, Relation::AtLeast, 2.5));
    }
    if all || suite == Suite::Conservation {
        let (m, e) = conservation_drift(32, 50)?;
        checks.push(Check::new("blast 32^3 mass drift", m, Relation::Below, 1e-11));
        checks.push(Check::new("blast 32^3 energy drift", e, Relation::Below, 1e-11));
    }
    if all || suite == Suite::Partition {
        for cfg in [PartitionConfig::new(2, 1, 1), PartitionConfig::new(2, 3, 3)] {
            let cmp = partition_comparison(cfg, 12, 10, TransportKind::Staged)?;
            checks.push(Check::new(
                format!("partition {cfg} max rel diff"),
                cmp.max_relative,
                Relation::AtMost,
                1e-13,
            ));
            let worst = cmp
                .ledger_bytes
                .iter()
                .map(|&b| (b as f64 - cmp.model_bytes as f64).abs())
                .fold(0.0, f64::max);
            checks.push(Check::new(format!("partition {cfg} ledger bytes"), worst, Relation::AtMost, 0.0));
        }
    }
    if all || suite == Suite::BrioWu {
        checks.push(Check::new("brio-wu L1(rho) N=800", brio_wu_error(800, 10)?, Relation::Below, 0.03));
    }
    Ok(checks)
}
