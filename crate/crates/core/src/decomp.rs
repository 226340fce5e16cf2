//! Domain decomposition into equal blocks plus one ionosphere rank.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exchange::Face;
use crate::grid::StretchedGrid;

/// Bytes per cell in a halo message: eight `f64` fields.
pub const BYTES_PER_CELL: usize = 64;

/// Block counts along x, y and z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl PartitionConfig {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self { nx, ny, nz }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn blocks(&self) -> usize {
        self.nx * self.ny * self.nz
    }
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self::new(1, 1, 1)
    }
}

impl fmt::Display for PartitionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.nx, self.ny, self.nz)
    }
}

/// The six process layouts run on the magnetosphere grid.
pub const REFERENCE_CONFIGS: [PartitionConfig; 6] = [
    PartitionConfig::new(3, 1, 1),
    PartitionConfig::new(3, 3, 3),
    PartitionConfig::new(4, 3, 3),
    PartitionConfig::new(6, 3, 3),
    PartitionConfig::new(4, 5, 5),
    PartitionConfig::new(6, 5, 5),
];

const AXIS: [char; 3] = ['x', 'y', 'z'];

/// One broken partition rule.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    ZeroCount { axis: usize },
    EvenCount { axis: usize, count: usize },
    NotDivisible { axis: usize, cells: usize, count: usize },
    /// The origin sits on the boundary between two blocks along `axis`.
    EarthSplit { axis: usize, coordinate: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::ZeroCount { axis } => write!(f, "n{} must be at least 1", AXIS[axis]),
            Violation::EvenCount { axis, count } => {
                write!(f, "n{} = {count} is even; block counts along y and z must be odd", AXIS[axis])
            }
            Violation::NotDivisible { axis, cells, count } => {
                write!(f, "n{} = {count} does not divide the {cells} {} cells", AXIS[axis], AXIS[axis])
            }
            Violation::EarthSplit { axis, coordinate } => write!(
                f,
                "the Earth at {}=0 lies on a block boundary ({coordinate}); it must be inside one block",
                AXIS[axis]
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct PartitionError {
    pub config: PartitionConfig,
    pub violations: Vec<Violation>,
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid partition {}: ", self.config)?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check oddness along y and z, divisibility, and that the origin (when it
/// lies strictly inside the domain) is not on a block boundary.
pub fn validate(config: &PartitionConfig, grid: &StretchedGrid) -> Result<(), PartitionError> {
    let mut violations = Vec::new();
    let counts = config.counts();
    let dims = grid.dims();
    for a in 0..3 {
        if counts[a] == 0 {
            violations.push(Violation::ZeroCount { axis: a });
        }
    }
    for a in 1..3 {
        if counts[a].is_multiple_of(2) && counts[a] > 0 {
            violations.push(Violation::EvenCount { axis: a, count: counts[a] });
        }
    }
    for a in 0..3 {
        if counts[a] > 0 && !dims[a].is_multiple_of(counts[a]) {
            violations.push(Violation::NotDivisible {
                axis: a,
                cells: dims[a],
                count: counts[a],
            });
        }
    }
    if violations.is_empty() {
        for a in 0..3 {
            let axis = grid.axis(a);
            if !(axis.min() < 0.0 && 0.0 < axis.max()) {
                continue;
            }
            let size = dims[a] / counts[a];
            for b in 1..counts[a] {
                let edge = axis.edges[b * size];
                if edge == 0.0 {
                    violations.push(Violation::EarthSplit { axis: a, coordinate: edge });
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(PartitionError {
            config: *config,
            violations,
        })
    }
}

/// Worker blocks plus the ionosphere rank.
pub fn total_ranks(config: &PartitionConfig) -> usize {
    config.blocks() + 1
}

/// Number of adjacent block pairs:
/// `nx ny (nz-1) + nx (ny-1) nz + (nx-1) ny nz`.
pub fn tde_units(config: &PartitionConfig) -> usize {
    let [nx, ny, nz] = config.counts();
    nx * ny * nz.saturating_sub(1) + nx * ny.saturating_sub(1) * nz + nx.saturating_sub(1) * ny * nz
}

/// Bytes moved by one full halo exchange: every interior block face, both
/// directions, `ghost` layers of `bytes_per_cell`.
pub fn exchanged_bytes(config: &PartitionConfig, grid: &StretchedGrid, ghost: usize, bytes_per_cell: usize) -> u64 {
    let counts = config.counts();
    let dims = grid.dims();
    let size = [0, 1, 2].map(|a| dims[a] / counts[a].max(1));
    let mut total = 0u64;
    for a in 0..3 {
        let (t1, t2) = ((a + 1) % 3, (a + 2) % 3);
        let faces = counts[a].saturating_sub(1) * counts[t1] * counts[t2];
        let face_cells = size[t1] * size[t2];
        total += (faces * face_cells * ghost * bytes_per_cell * 2) as u64;
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub rank: usize,
    /// Position in the block grid.
    pub coords: [usize; 3],
    /// First global cell.
    pub lo: [usize; 3],
    pub dims: [usize; 3],
    /// Neighbour ranks indexed by [`Face::index`]; `None` is a physical face.
    pub neighbors: [Option<usize>; 6],
}

impl Block {
    pub fn contains(&self, cell: [usize; 3]) -> bool {
        (0..3).all(|a| cell[a] >= self.lo[a] && cell[a] < self.lo[a] + self.dims[a])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    pub config: PartitionConfig,
    pub grid_dims: [usize; 3],
    /// Ranks `0 .. blocks`, x fastest.
    pub blocks: Vec<Block>,
    pub ionosphere_rank: usize,
}

impl BlockLayout {
    pub fn total_ranks(&self) -> usize {
        self.blocks.len() + 1
    }

    pub fn rank_of(&self, coords: [usize; 3]) -> usize {
        let [nx, ny, _] = self.config.counts();
        coords[0] + nx * (coords[1] + ny * coords[2])
    }

    /// Block owning a global cell.
    pub fn owner(&self, cell: [usize; 3]) -> Option<&Block> {
        self.blocks.iter().find(|b| b.contains(cell))
    }
}

/// Split `grid` into equal blocks, ranks in row-major order with x fastest.
pub fn layout(config: &PartitionConfig, grid: &StretchedGrid) -> Result<BlockLayout, PartitionError> {
    validate(config, grid)?;
    if config.ny != config.nz {
        log::warn!("partition {config} has ny != nz; allowed, but every listed layout uses ny = nz");
    }
    let counts = config.counts();
    let grid_dims = grid.dims();
    let dims = [0, 1, 2].map(|a| grid_dims[a] / counts[a]);
    let mut blocks = Vec::with_capacity(config.blocks());
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let coords = [i, j, k];
                let rank = i + counts[0] * (j + counts[1] * k);
                let mut neighbors = [None; 6];
                for face in Face::ALL {
                    let a = face.axis();
                    let mut nc = coords;
                    if face.is_high() {
                        if coords[a] + 1 == counts[a] {
                            continue;
                        }
                        nc[a] += 1;
                    } else {
                        if coords[a] == 0 {
                            continue;
                        }
                        nc[a] -= 1;
                    }
                    neighbors[face.index()] = Some(nc[0] + counts[0] * (nc[1] + counts[1] * nc[2]));
                }
                blocks.push(Block {
                    rank,
                    coords,
                    lo: [0, 1, 2].map(|a| coords[a] * dims[a]),
                    dims,
                    neighbors,
                });
            }
        }
    }
    Ok(BlockLayout {
        config: *config,
        grid_dims,
        ionosphere_rank: blocks.len(),
        blocks,
    })
}
