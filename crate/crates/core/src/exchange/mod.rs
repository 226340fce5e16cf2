//! Halo exchange between blocks.
//!
//! A halo slab carries the outermost `ghost` interior layers of a block
//! through one face. Transports are behavioural models: both move the same
//! bytes, they differ only in how many copy events a message costs.

mod cluster;

pub use cluster::{gather, Cluster, ClusterOptions, DroppedSlab, InitFn, IonosphereRecord, RunOutcome};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::PrimitiveState;
use crate::stepper::BlockState;

/// Scalars per cell in a slab: rho, v (3), B' (3), p.
pub const SCALARS_PER_CELL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    XLo,
    XHi,
    YLo,
    YHi,
    ZLo,
    ZHi,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::XLo, Face::XHi, Face::YLo, Face::YHi, Face::ZLo, Face::ZHi];

    pub fn new(axis: usize, high: bool) -> Self {
        Self::ALL[2 * axis + usize::from(high)]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> usize {
        self.index() / 2
    }

    pub fn is_high(self) -> bool {
        self.index() % 2 == 1
    }

    pub fn opposite(self) -> Self {
        Self::new(self.axis(), !self.is_high())
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.is_high() { '+' } else { '-' };
        write!(f, "{sign}{}", ['x', 'y', 'z'][self.axis()])
    }
}

/// Boundary data leaving `src_rank` through `face` for `dst_rank`.
///
/// Payload order: for each layer counted inward from the face, for each
/// cell of the face plane with the lower-numbered transverse axis fastest,
/// the eight scalars rho, vx, vy, vz, B'x, B'y, B'z, p.
#[derive(Clone, Debug, PartialEq)]
pub struct HaloSlab {
    pub src_rank: usize,
    pub dst_rank: usize,
    pub face: Face,
    pub step: u64,
    pub ghost: usize,
    /// Interior cell counts of the face plane (lower transverse axis first).
    pub plane: [usize; 2],
    pub payload: Vec<f64>,
}

impl HaloSlab {
    pub fn cells(&self) -> usize {
        self.ghost * self.plane[0] * self.plane[1]
    }

    pub fn bytes(&self) -> u64 {
        (self.payload.len() * std::mem::size_of::<f64>()) as u64
    }
}

/// Transverse axes of `axis`, lower-numbered first.
fn transverse(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Visit the padded flat indices of a layer plane, lower transverse axis fastest.
fn visit_plane(block: &BlockState, axis: usize, pos: usize, mut f: impl FnMut(usize)) {
    let g = block.ghost;
    let (ta, tb) = transverse(axis);
    for b in g..g + block.dims[tb] {
        for a in g..g + block.dims[ta] {
            let mut ijk = [0; 3];
            ijk[axis] = pos;
            ijk[ta] = a;
            ijk[tb] = b;
            f(block.index(ijk[0], ijk[1], ijk[2]));
        }
    }
}

/// Padded position along the face normal of interior layer `layer`
/// (counted inward from `face`).
fn interior_layer(block: &BlockState, face: Face, layer: usize) -> usize {
    let (g, n) = (block.ghost, block.dims[face.axis()]);
    if face.is_high() {
        g + n - 1 - layer
    } else {
        g + layer
    }
}

/// Padded position of ghost layer `layer` (counted outward from `face`).
fn ghost_layer(block: &BlockState, face: Face, layer: usize) -> usize {
    let (g, n) = (block.ghost, block.dims[face.axis()]);
    if face.is_high() {
        g + n + layer
    } else {
        g - 1 - layer
    }
}

fn plane_dims(block: &BlockState, axis: usize) -> [usize; 2] {
    let (ta, tb) = transverse(axis);
    [block.dims[ta], block.dims[tb]]
}

/// Copy the `ghost` interior layers next to `face` into a slab.
pub fn pack(block: &BlockState, face: Face, ghost: usize, src_rank: usize, dst_rank: usize) -> Result<HaloSlab> {
    let axis = face.axis();
    if ghost > block.ghost || ghost > block.dims[axis] {
        return Err(Error::Halo(format!(
            "cannot pack {ghost} layers through {face}: block has {} cells and ghost width {}",
            block.dims[axis], block.ghost
        )));
    }
    let plane = plane_dims(block, axis);
    let mut payload = Vec::with_capacity(ghost * plane[0] * plane[1] * SCALARS_PER_CELL);
    for layer in 0..ghost {
        visit_plane(block, axis, interior_layer(block, face, layer), |idx| {
            let s = &block.states[idx];
            payload.extend_from_slice(&[s.rho, s.v[0], s.v[1], s.v[2], s.bprime[0], s.bprime[1], s.bprime[2], s.p]);
        });
    }
    Ok(HaloSlab {
        src_rank,
        dst_rank,
        face,
        step: block.step,
        ghost,
        plane,
        payload,
    })
}

/// Write a neighbour's slab into the ghost shell on the opposite face.
/// Interior cells are untouched.
pub fn unpack(block: &mut BlockState, slab: &HaloSlab) -> Result<()> {
    let face = slab.face.opposite();
    let axis = face.axis();
    let plane = plane_dims(block, axis);
    if slab.ghost != block.ghost || slab.plane != plane || slab.payload.len() != slab.cells() * SCALARS_PER_CELL {
        return Err(Error::Halo(format!(
            "slab from rank {} through {} has ghost {} and plane {:?}; block expects ghost {} and plane {:?}",
            slab.src_rank, slab.face, slab.ghost, slab.plane, block.ghost, plane
        )));
    }
    let mut chunks = slab.payload.chunks_exact(SCALARS_PER_CELL);
    for layer in 0..slab.ghost {
        let mut targets = Vec::with_capacity(plane[0] * plane[1]);
        visit_plane(block, axis, ghost_layer(block, face, layer), |idx| targets.push(idx));
        for idx in targets {
            let c = chunks.next().expect("payload length checked");
            block.states[idx] = PrimitiveState::new(c[0], [c[1], c[2], c[3]], [c[4], c[5], c[6]], c[7]);
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    /// Device to host, host MPI buffers, back to device on the receiver.
    #[default]
    Staged,
    /// Device memory handed straight to the network.
    Direct,
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportKind::Staged => "staged",
            TransportKind::Direct => "direct",
        })
    }
}

impl FromStr for TransportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "staged" => Ok(TransportKind::Staged),
            "direct" => Ok(TransportKind::Direct),
            other => Err(Error::Config(format!("unknown transport {other:?}; expected staged or direct"))),
        }
    }
}

/// Copy events charged to one message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CopyProfile {
    pub transfer_events: u64,
    pub staging_copies: u64,
}

impl CopyProfile {
    pub fn per_message(&self) -> u64 {
        self.transfer_events + self.staging_copies
    }
}

/// Staged transfers pay six host-side copies on top of the network transfer.
pub fn transport_copy_profile(kind: TransportKind) -> CopyProfile {
    match kind {
        TransportKind::Staged => CopyProfile {
            transfer_events: 1,
            staging_copies: 6,
        },
        TransportKind::Direct => CopyProfile {
            transfer_events: 1,
            staging_copies: 0,
        },
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: u64,
    pub messages: u64,
    pub bytes: u64,
    pub copy_events: u64,
}

/// Per-step message, byte and copy counters.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferLedger {
    pub transport: TransportKind,
    pub rows: Vec<LedgerRow>,
}

impl TransferLedger {
    pub fn new(transport: TransportKind) -> Self {
        Self {
            transport,
            rows: Vec::new(),
        }
    }

    /// Count one message of `bytes` at `step`.
    pub fn record(&mut self, step: u64, bytes: u64) {
        let copies = transport_copy_profile(self.transport).per_message();
        let row = match self.rows.iter_mut().find(|r| r.step == step) {
            Some(r) => r,
            None => {
                self.rows.push(LedgerRow {
                    step,
                    ..LedgerRow::default()
                });
                self.rows.last_mut().expect("just pushed")
            }
        };
        row.messages += 1;
        row.bytes += bytes;
        row.copy_events += copies;
    }

    pub fn row(&self, step: u64) -> Option<&LedgerRow> {
        self.rows.iter().find(|r| r.step == step)
    }

    pub fn totals(&self) -> LedgerRow {
        self.rows.iter().fold(LedgerRow::default(), |acc, r| LedgerRow {
            step: acc.step.max(r.step),
            messages: acc.messages + r.messages,
            bytes: acc.bytes + r.bytes,
            copy_events: acc.copy_events + r.copy_events,
        })
    }

    /// CSV with columns step, transport, messages, bytes, copy_events.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "transport", "messages", "bytes", "copy_events"])?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                self.transport.to_string(),
                r.messages.to_string(),
                r.bytes.to_string(),
                r.copy_events.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exchange every interior face among blocks held in one place, axis by
/// axis (x, then y, then z). `blocks[r]` must be rank `r` of `layout`.
pub fn exchange_step(
    blocks: &mut [BlockState],
    layout: &crate::decomp::BlockLayout,
    ledger: &mut TransferLedger,
) -> Result<()> {
    for axis in 0..3 {
        exchange_axis(blocks, layout, axis, ledger)?;
    }
    Ok(())
}

/// Exchange the faces normal to `axis` among blocks held in one place.
pub fn exchange_axis(
    blocks: &mut [BlockState],
    layout: &crate::decomp::BlockLayout,
    axis: usize,
    ledger: &mut TransferLedger,
) -> Result<()> {
    let mut slabs = Vec::new();
    for b in &layout.blocks {
        for face in [Face::new(axis, false), Face::new(axis, true)] {
            if let Some(n) = b.neighbors[face.index()] {
                let block = &blocks[b.rank];
                slabs.push(pack(block, face, block.ghost, b.rank, n)?);
            }
        }
    }
    for slab in slabs {
        ledger.record(slab.step, slab.bytes());
        unpack(&mut blocks[slab.dst_rank], &slab)?;
    }
    Ok(())
}
