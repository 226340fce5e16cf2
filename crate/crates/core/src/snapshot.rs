//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `PPLR` |
//! | u32 | format version |
//! | 3 × u32 | cells along x, y, z |
//! | u32 | ghost width of the run |
//! | f64 | time |
//! | u64 | step |
//! | f64 × (n+1) per axis | cell edges of x, then y, then z |
//! | u32 + bytes | field order tag, length-prefixed ASCII |
//! | f64 × 8 × cells | one full field after another, x fastest |
//!
//! Fields are `rho, vx, vy, vz, bx, by, bz, p` where `b` is the field
//! deviation from the dipole.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::StretchedGrid;
use crate::physics::PrimitiveState;

pub const MAGIC: [u8; 4] = *b"PPLR";
pub const VERSION: u32 = 1;
pub const FIELD_ORDER: &str = "rho,vx,vy,vz,bx,by,bz,p";
const NFIELDS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub dims: [u32; 3],
    pub ghost: u32,
    pub time: f64,
    pub step: u64,
    pub edges: [Vec<f64>; 3],
    pub field_order: String,
}

impl SnapshotHeader {
    pub fn new(grid: &StretchedGrid, ghost: usize, time: f64, step: u64) -> Self {
        Self {
            dims: grid.dims().map(|d| d as u32),
            ghost: ghost as u32,
            time,
            step,
            edges: std::array::from_fn(|a| grid.axis(a).edges.clone()),
            field_order: FIELD_ORDER.to_string(),
        }
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    /// Cell states, x fastest.
    pub states: Vec<PrimitiveState>,
}

fn field(s: &PrimitiveState, f: usize) -> f64 {
    match f {
        0 => s.rho,
        1..=3 => s.v[f - 1],
        4..=6 => s.bprime[f - 4],
        _ => s.p,
    }
}

fn set_field(s: &mut PrimitiveState, f: usize, x: f64) {
    match f {
        0 => s.rho = x,
        1..=3 => s.v[f - 1] = x,
        4..=6 => s.bprime[f - 4] = x,
        _ => s.p = x,
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| bad(format!("truncated snapshot: {e}")))?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

impl Snapshot {
    pub fn new(header: SnapshotHeader, states: Vec<PrimitiveState>) -> Result<Self> {
        let snap = Self { header, states };
        snap.check()?;
        Ok(snap)
    }

    fn check(&self) -> Result<()> {
        let h = &self.header;
        for a in 0..3 {
            if h.edges[a].len() != h.dims[a] as usize + 1 {
                return Err(bad(format!(
                    "axis {a} has {} edges for {} cells",
                    h.edges[a].len(),
                    h.dims[a]
                )));
            }
        }
        if self.states.len() != h.cells() {
            return Err(bad(format!("{} states for {} cells", self.states.len(), h.cells())));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        self.check()?;
        let h = &self.header;
        let mut buf = Vec::with_capacity(64 + 8 * NFIELDS * self.states.len());
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        for d in h.dims {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        buf.extend_from_slice(&h.ghost.to_le_bytes());
        buf.extend_from_slice(&h.time.to_le_bytes());
        buf.extend_from_slice(&h.step.to_le_bytes());
        for e in h.edges.iter().flatten() {
            buf.extend_from_slice(&e.to_le_bytes());
        }
        buf.extend_from_slice(&(h.field_order.len() as u32).to_le_bytes());
        buf.extend_from_slice(h.field_order.as_bytes());
        for f in 0..NFIELDS {
            for s in &self.states {
                buf.extend_from_slice(&field(s, f).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader { inner: r };
        if r.bytes::<4>()? != MAGIC {
            return Err(bad("bad magic, not a snapshot"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(bad(format!("unsupported snapshot version {version}")));
        }
        let dims = [r.u32()?, r.u32()?, r.u32()?];
        let ghost = r.u32()?;
        let time = r.f64()?;
        let step = r.u64()?;
        let mut edges: [Vec<f64>; 3] = Default::default();
        for a in 0..3 {
            edges[a] = (0..=dims[a]).map(|_| r.f64()).collect::<Result<_>>()?;
        }
        let tag_len = r.u32()? as usize;
        if tag_len > 1024 {
            return Err(bad(format!("field order tag of {tag_len} bytes")));
        }
        let mut tag = vec![0u8; tag_len];
        r.inner
            .read_exact(&mut tag)
            .map_err(|e| bad(format!("truncated snapshot: {e}")))?;
        let field_order = String::from_utf8(tag).map_err(|_| bad("field order tag is not text"))?;
        if field_order != FIELD_ORDER {
            return Err(bad(format!("unknown field order `{field_order}`")));
        }
        let header = SnapshotHeader {
            dims,
            ghost,
            time,
            step,
            edges,
            field_order,
        };
        let mut states = vec![PrimitiveState::default(); header.cells()];
        for f in 0..NFIELDS {
            for s in states.iter_mut() {
                set_field(s, f, r.f64()?);
            }
        }
        let mut rest = [0u8; 1];
        if r.inner.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after payload"));
        }
        Self::new(header, states)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// One field as a flat array, x fastest; `f` indexes [`FIELD_ORDER`].
    pub fn field(&self, f: usize) -> Vec<f64> {
        self.states.iter().map(|s| field(s, f)).collect()
    }
}
