use std::fmt;

use thiserror::Error;

use crate::decomp::PartitionError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where an unphysical state was detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// Zone index within a padded 1D strip.
    Zone(usize),
    /// Global interior cell index.
    Cell([usize; 3]),
    Unknown,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Zone(i) => write!(f, "zone {i}"),
            Location::Cell([i, j, k]) => write!(f, "cell ({i}, {j}, {k})"),
            Location::Unknown => write!(f, "unknown location"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("coordinate {value} outside [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("dipole field is singular at its center")]
    Singularity,

    #[error("unphysical state at {location}: rho = {rho}, p = {pressure}")]
    Unphysical {
        location: Location,
        rho: f64,
        pressure: f64,
    },

    #[error("step rejected at {location}: {reason}")]
    StepRejected { location: Location, reason: String },

    #[error("non-finite signal speed at {0}")]
    NonFiniteSpeed(Location),

    #[error(transparent)]
    Partition(#[from] PartitionError),

    #[error("halo: {0}")]
    Halo(String),

    #[error("deadlock: rank {dst} never received the {face} slab from rank {src} (step {step})")]
    Deadlock {
        src: usize,
        dst: usize,
        face: crate::exchange::Face,
        step: u64,
    },

    #[error("worker {rank} failed: {message}")]
    Worker { rank: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Grid(_) | Error::OutOfRange { .. } => "grid",
            Error::Singularity => "singularity",
            Error::Unphysical { .. } | Error::StepRejected { .. } | Error::NonFiniteSpeed(_) => "numerics",
            Error::Partition(_) => "partition",
            Error::Halo(_) => "halo",
            Error::Deadlock { .. } => "deadlock",
            Error::Worker { .. } => "worker",
            Error::Config(_) => "config",
            Error::Snapshot(_) => "snapshot",
            Error::Empty(_) => "empty",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }

    /// Replace a strip-local location with a global cell index.
    pub(crate) fn relocate(self, map: impl Fn(usize) -> [usize; 3]) -> Self {
        match self {
            Error::Unphysical {
                location: Location::Zone(z),
                rho,
                pressure,
            } => Error::Unphysical {
                location: Location::Cell(map(z)),
                rho,
                pressure,
            },
            Error::StepRejected {
                location: Location::Zone(z),
                reason,
            } => Error::StepRejected {
                location: Location::Cell(map(z)),
                reason,
            },
            Error::NonFiniteSpeed(Location::Zone(z)) => Error::NonFiniteSpeed(Location::Cell(map(z))),
            other => other,
        }
    }
}
