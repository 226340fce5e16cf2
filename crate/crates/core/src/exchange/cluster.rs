//! Threaded block workers exchanging slabs over channels.
//!
//! Each block is owned by one worker thread; the calling thread is the
//! coordinator. A step is barrier-synchronised by the coordinator: it
//! collects every worker's stable timestep, broadcasts the minimum, and
//! waits for every worker to report the step done. One extra worker stands
//! in for the ionosphere solver.

use std::collections::HashMap;
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{pack, transport_copy_profile, unpack, Face, HaloSlab, LedgerRow, TransferLedger, TransportKind};
use crate::decomp::BlockLayout;
use crate::error::{Error, Result};
use crate::grid::StretchedGrid;
use crate::perfmodel::StepTiming;
use crate::physics::{Constants, PrimitiveState, Vec3};
use crate::stepper::{sweep_order, BlockState, Boundary, FaceKind, StepOptions};

/// Initial condition as a function of position and dipole field.
pub type InitFn = Arc<dyn Fn(Vec3, Vec3) -> PrimitiveState + Send + Sync>;

/// Suppress one slab, to exercise the deadlock diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DroppedSlab {
    pub src: usize,
    pub face: Face,
    pub step: u64,
}

#[derive(Clone, Debug)]
pub struct ClusterOptions {
    pub transport: TransportKind,
    /// Ghost layers per block face.
    pub ghost: usize,
    /// How long a worker waits for a neighbour's slab.
    pub timeout: Duration,
    /// Modeled cost of one copy event, added to transfer time.
    pub copy_latency: f64,
    pub step: StepOptions,
    /// Radius of the frozen core, if any.
    pub frozen_radius: Option<f64>,
    pub dropped: Option<DroppedSlab>,
    /// Clip the global timestep so the run does not pass this time.
    pub t_end: Option<f64>,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            transport: TransportKind::Staged,
            ghost: crate::ppm1d::GHOST,
            timeout: Duration::from_secs(10),
            copy_latency: 0.0,
            step: StepOptions::default(),
            frozen_radius: None,
            dropped: None,
            t_end: None,
        }
    }
}

/// Constant inner-boundary record returned by the ionosphere stand-in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IonosphereRecord {
    pub step: u64,
    pub potential: f64,
}

/// Records of one call to [`Cluster::advance`].
#[derive(Debug)]
pub struct RunOutcome {
    pub ledger: TransferLedger,
    pub timings: Vec<StepTiming>,
    pub ionosphere: Vec<IonosphereRecord>,
    /// Global timestep of every step taken.
    pub dts: Vec<f64>,
}

/// Assemble block interiors into one global array, x fastest.
pub fn gather(blocks: &[BlockState], layout: &BlockLayout) -> Vec<PrimitiveState> {
    let d = layout.grid_dims;
    let mut out = vec![PrimitiveState::default(); d[0] * d[1] * d[2]];
    for (b, meta) in blocks.iter().zip(&layout.blocks) {
        for k in 0..meta.dims[2] {
            for j in 0..meta.dims[1] {
                for i in 0..meta.dims[0] {
                    let g = [meta.lo[0] + i, meta.lo[1] + j, meta.lo[2] + k];
                    out[g[0] + d[0] * (g[1] + d[1] * g[2])] = b.states[b.interior_index(i, j, k)];
                }
            }
        }
    }
    out
}

enum ToWorker {
    Slab(HaloSlab),
    Dt(f64),
    Abort,
}

enum ToCoordinator {
    Dt { step: u64, dt: f64 },
    Done { counters: LedgerRow, timing: StepTiming },
    Ionosphere(IonosphereRecord),
    Failed(Error),
    Finished { rank: usize, block: Box<BlockState> },
}

/// Blocks of one partitioned problem.
pub struct Cluster {
    pub layout: BlockLayout,
    pub blocks: Vec<BlockState>,
    pub constants: Constants,
    pub options: ClusterOptions,
}

impl Cluster {
    /// Build every block of `layout`. Outer faces take `boundaries`
    /// (indexed by [`Face::index`]); periodic boundaries require a single
    /// block along that axis.
    pub fn new(
        layout: BlockLayout,
        grid: &StretchedGrid,
        boundaries: [Boundary; 6],
        constants: Constants,
        options: ClusterOptions,
        init: InitFn,
    ) -> Result<Self> {
        let counts = layout.config.counts();
        for face in Face::ALL {
            if boundaries[face.index()] == Boundary::Periodic && counts[face.axis()] > 1 {
                return Err(Error::Halo(format!(
                    "periodic {face} boundary needs a single block along that axis, got {}",
                    counts[face.axis()]
                )));
            }
        }
        let ghost = options.ghost;
        if ghost < crate::ppm1d::GHOST {
            return Err(Error::Halo(format!(
                "ghost width {ghost} below the kernel's {}",
                crate::ppm1d::GHOST
            )));
        }
        let mut blocks = Vec::with_capacity(layout.blocks.len());
        for meta in &layout.blocks {
            if meta.dims.iter().any(|&d| d < ghost) {
                return Err(Error::Halo(format!(
                    "block {} has {:?} cells; every side needs at least the ghost width {ghost}",
                    meta.rank, meta.dims
                )));
            }
            let faces: [FaceKind; 6] = std::array::from_fn(|f| match meta.neighbors[f] {
                Some(n) => FaceKind::Neighbor(n),
                None => FaceKind::Physical(boundaries[f]),
            });
            let mut block = BlockState::new(grid, meta.lo, meta.dims, ghost, faces, &constants, |p, b| init(p, b))?;
            if let Some(r) = options.frozen_radius {
                block.freeze_core(r);
            }
            blocks.push(block);
        }
        Ok(Self {
            layout,
            blocks,
            constants,
            options,
        })
    }

    pub fn time(&self) -> f64 {
        self.blocks[0].time
    }

    pub fn step_count(&self) -> u64 {
        self.blocks[0].step
    }

    /// Interior states of the whole grid, x fastest.
    pub fn gather(&self) -> Vec<PrimitiveState> {
        gather(&self.blocks, &self.layout)
    }

    /// Advance `steps` steps with one worker thread per block. On error the
    /// blocks keep their state from before the call.
    pub fn advance(&mut self, steps: u64) -> Result<RunOutcome> {
        let workers = self.blocks.len();
        let first = self.step_count();
        let (to_coord, from_workers) = channel::<ToCoordinator>();
        let mut inboxes = Vec::with_capacity(workers + 1);
        let mut receivers = Vec::with_capacity(workers + 1);
        for _ in 0..=workers {
            let (tx, rx) = channel::<ToWorker>();
            inboxes.push(tx);
            receivers.push(rx);
        }

        let (outcome, blocks) = std::thread::scope(|scope| {
            let mut receivers = receivers.into_iter();
            for (rank, block) in self.blocks.iter().enumerate() {
                let inbox = receivers.next().expect("one receiver per worker");
                let worker = Worker {
                    rank,
                    block: block.clone(),
                    inbox,
                    peers: inboxes.clone(),
                    pending: HashMap::new(),
                    c: self.constants,
                    opts: self.options.clone(),
                };
                let report = to_coord.clone();
                scope.spawn(move || worker.run(steps, report));
            }
            let inbox = receivers.next().expect("ionosphere receiver");
            let report = to_coord.clone();
            let ion_rank = self.layout.ionosphere_rank;
            scope.spawn(move || ionosphere_stub(ion_rank, first, steps, inbox, report));
            drop(to_coord);
            self.coordinate(first, steps, &from_workers, &inboxes)
        })?;
        self.blocks = blocks;
        Ok(outcome)
    }

    fn coordinate(
        &self,
        first: u64,
        steps: u64,
        reports: &Receiver<ToCoordinator>,
        inboxes: &[Sender<ToWorker>],
    ) -> Result<(RunOutcome, Vec<BlockState>)> {
        let workers = self.blocks.len();
        let participants = workers + 1;
        let abort = |e: Error| {
            for tx in inboxes {
                let _ = tx.send(ToWorker::Abort);
            }
            Err(e)
        };
        let recv = || {
            reports
                .recv()
                .map_err(|_| Error::Worker {
                    rank: usize::MAX,
                    message: "all workers hung up".into(),
                })
        };
        let mut ledger = TransferLedger::new(self.options.transport);
        let mut timings = Vec::new();
        let mut ionosphere = Vec::new();
        let mut dts = Vec::with_capacity(steps as usize);
        // timestep proposals, possibly for a later step than the current one
        let mut proposals: HashMap<u64, (f64, usize)> = HashMap::new();
        let mut time = self.time();
        // a fast worker may hand back its block before the last step closes
        let mut finished: Vec<Option<BlockState>> = vec![None; workers];
        let mut remaining = workers;
        for step in first..first + steps {
            let mut done = 0;
            let mut row = LedgerRow {
                step,
                ..LedgerRow::default()
            };
            let mut dt_sent = false;
            while done < participants {
                match recv()? {
                    ToCoordinator::Dt { step: s, dt: d } => {
                        let e = proposals.entry(s).or_insert((f64::INFINITY, 0));
                        e.0 = e.0.min(d);
                        e.1 += 1;
                    }
                    ToCoordinator::Done { counters, timing, .. } => {
                        row.messages += counters.messages;
                        row.bytes += counters.bytes;
                        row.copy_events += counters.copy_events;
                        if timing.rank != self.layout.ionosphere_rank {
                            timings.push(timing);
                        }
                        done += 1;
                    }
                    ToCoordinator::Ionosphere(rec) => ionosphere.push(rec),
                    ToCoordinator::Failed(error) => return abort(error),
                    ToCoordinator::Finished { rank, block } => {
                        finished[rank] = Some(*block);
                        remaining -= 1;
                    }
                }
                let (mut dt, got) = proposals.get(&step).copied().unwrap_or((f64::INFINITY, 0));
                if got == participants && !dt_sent {
                    if let Some(t_end) = self.options.t_end {
                        dt = dt.min(t_end - time);
                    }
                    if !(dt.is_finite() && dt > 0.0) {
                        return abort(Error::StepRejected {
                            location: crate::error::Location::Unknown,
                            reason: format!("global timestep {dt} at step {step}"),
                        });
                    }
                    for tx in inboxes {
                        let _ = tx.send(ToWorker::Dt(dt));
                    }
                    dts.push(dt);
                    time += dt;
                    dt_sent = true;
                }
            }
            proposals.remove(&step);
            ledger.rows.push(row);
        }

        while remaining > 0 {
            match recv()? {
                ToCoordinator::Finished { rank, block } => {
                    finished[rank] = Some(*block);
                    remaining -= 1;
                }
                ToCoordinator::Failed(error) => return abort(error),
                ToCoordinator::Ionosphere(rec) => ionosphere.push(rec),
                _ => {}
            }
        }
        let blocks = finished.into_iter().map(|b| b.expect("every worker finished")).collect();
        Ok((
            RunOutcome {
                ledger,
                timings,
                ionosphere,
                dts,
            },
            blocks,
        ))
    }
}

struct Worker {
    rank: usize,
    block: BlockState,
    inbox: Receiver<ToWorker>,
    peers: Vec<Sender<ToWorker>>,
    /// Slabs that arrived before they were needed, keyed by (step, sender face).
    pending: HashMap<(u64, Face), HaloSlab>,
    c: Constants,
    opts: ClusterOptions,
}

enum Wait {
    Dt(f64),
    Slab(HaloSlab),
}

impl Worker {
    fn run(mut self, steps: u64, report: Sender<ToCoordinator>) {
        let rank = self.rank;
        let result = (0..steps).try_for_each(|_| self.step(&report));
        match result {
            Ok(()) => {
                let _ = report.send(ToCoordinator::Finished {
                    rank,
                    block: Box::new(self.block),
                });
            }
            Err(error) => {
                let _ = report.send(ToCoordinator::Failed(error));
            }
        }
    }

    fn receive(&mut self, want_slab: Option<(u64, Face, usize)>) -> Result<Wait> {
        if let Some((step, face, _)) = want_slab {
            if let Some(s) = self.pending.remove(&(step, face)) {
                return Ok(Wait::Slab(s));
            }
        }
        loop {
            // only slab waits time out; a stalled timestep means some
            // worker is stuck on a slab and the coordinator will abort
            let msg = match want_slab {
                Some(_) => self.inbox.recv_timeout(self.opts.timeout),
                None => self.inbox.recv().map_err(|_| RecvTimeoutError::Disconnected),
            };
            match msg {
                Ok(ToWorker::Slab(s)) => {
                    if let Some((step, face, _)) = want_slab {
                        if s.step == step && s.face == face {
                            return Ok(Wait::Slab(s));
                        }
                    }
                    self.pending.insert((s.step, s.face), s);
                }
                Ok(ToWorker::Dt(dt)) if want_slab.is_none() => return Ok(Wait::Dt(dt)),
                Ok(ToWorker::Dt(_)) => {
                    return Err(Error::Halo("timestep broadcast arrived mid-exchange".into()));
                }
                Ok(ToWorker::Abort) | Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Worker {
                        rank: self.rank,
                        message: "aborted".into(),
                    })
                }
                Err(RecvTimeoutError::Timeout) => {
                    let (step, face, src) = want_slab.expect("only slab waits time out");
                    return Err(Error::Deadlock {
                        src,
                        dst: self.rank,
                        face,
                        step,
                    });
                }
            }
        }
    }

    fn step(&mut self, report: &Sender<ToCoordinator>) -> Result<()> {
        let step = self.block.step;
        let local_dt = self.block.compute_dt(self.opts.step.cfl, &self.c)?;
        report
            .send(ToCoordinator::Dt { step, dt: local_dt })
            .map_err(|_| self.hung_up())?;
        let dt = match self.receive(None)? {
            Wait::Dt(dt) => dt,
            Wait::Slab(_) => unreachable!("slabs are buffered while waiting for the timestep"),
        };

        let profile = transport_copy_profile(self.opts.transport);
        let mut counters = LedgerRow {
            step,
            ..LedgerRow::default()
        };
        let mut compute = Duration::ZERO;
        let mut transfer = Duration::ZERO;
        for axis in sweep_order(step) {
            let t0 = Instant::now();
            self.block.fill_physical(axis);
            let faces = [Face::new(axis, false), Face::new(axis, true)];
            for face in faces {
                if let FaceKind::Neighbor(n) = self.block.faces[face.index()] {
                    let slab = pack(&self.block, face, self.block.ghost, self.rank, n)?;
                    counters.messages += 1;
                    counters.bytes += slab.bytes();
                    counters.copy_events += profile.per_message();
                    let dropped = self.opts.dropped == Some(super::DroppedSlab {
                        src: self.rank,
                        face,
                        step,
                    });
                    if !dropped {
                        self.peers[n].send(ToWorker::Slab(slab)).map_err(|_| self.hung_up())?;
                    }
                }
            }
            for face in faces {
                if let FaceKind::Neighbor(n) = self.block.faces[face.index()] {
                    // the neighbour sends through its face pointing at us
                    let slab = match self.receive(Some((step, face.opposite(), n)))? {
                        Wait::Slab(s) => s,
                        Wait::Dt(_) => unreachable!("timestep requests are not mixed with slab waits"),
                    };
                    unpack(&mut self.block, &slab)?;
                }
            }
            let t1 = Instant::now();
            self.block.substep(axis, dt, &self.c, &self.opts.step)?;
            transfer += t1 - t0;
            compute += t1.elapsed();
        }
        self.block.finish_step(dt);
        let modeled = counters.copy_events as f64 * self.opts.copy_latency;
        report
            .send(ToCoordinator::Done {
                counters,
                timing: StepTiming {
                    rank: self.rank,
                    step,
                    compute_seconds: compute.as_secs_f64(),
                    transfer_seconds: transfer.as_secs_f64() + modeled,
                },
            })
            .map_err(|_| self.hung_up())
    }

    fn hung_up(&self) -> Error {
        Error::Worker {
            rank: self.rank,
            message: "coordinator hung up".into(),
        }
    }
}

/// Stand-in for the ionosphere solver: joins every barrier and returns a
/// constant potential.
fn ionosphere_stub(rank: usize, first: u64, steps: u64, inbox: Receiver<ToWorker>, report: Sender<ToCoordinator>) {
    for step in first..first + steps {
        if report.send(ToCoordinator::Dt {
            step,
            dt: f64::INFINITY,
        }).is_err() {
            return;
        }
        loop {
            match inbox.recv() {
                Ok(ToWorker::Dt(_)) => break,
                Ok(ToWorker::Slab(_)) => continue,
                Ok(ToWorker::Abort) | Err(_) => return,
            }
        }
        let _ = report.send(ToCoordinator::Ionosphere(IonosphereRecord { step, potential: 0.0 }));
        let _ = report.send(ToCoordinator::Done {
            counters: LedgerRow {
                step,
                ..LedgerRow::default()
            },
            timing: StepTiming {
                rank,
                step,
                compute_seconds: 0.0,
                transfer_seconds: 0.0,
            },
        });
    }
}
