use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A single broken network invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyStationId,
    DuplicateStation(String),
    SelfLoop(String),
    DuplicateEdge(String, String),
    UnknownEdgeEndpoint { edge: (String, String), station: String },
    Disconnected(Vec<String>),
    NoStations,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStationId => write!(f, "empty station id"),
            Violation::DuplicateStation(s) => write!(f, "duplicate station id `{s}`"),
            Violation::SelfLoop(s) => write!(f, "self-loop edge on `{s}`"),
            Violation::DuplicateEdge(a, b) => write!(f, "duplicate edge `{a}`-`{b}`"),
            Violation::UnknownEdgeEndpoint { edge, station } => write!(
                f,
                "edge `{}`-`{}` references unknown station `{station}`",
                edge.0, edge.1
            ),
            Violation::Disconnected(stations) => {
                write!(f, "stations not reachable from the rest of the network: {}", stations.join(", "))
            }
            Violation::NoStations => write!(f, "network has no stations"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("unknown station `{0}`")]
    UnknownStation(String),

    #[error("origin and destination are both `{0}`")]
    SameOriginDestination(String),

    #[error("no path between `{0}` and `{1}`")]
    Unreachable(String, String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero passenger flow on edge `{0}`-`{1}`")]
    ZeroFlow(String, String),

    #[error("pass-through demand density vanishes inside ({0}, {1})")]
    ZeroPassDensity(f64, f64),

    #[error("position {0} outside the admissible interval [{1}, {2}]")]
    OutOfDomain(f64, f64, f64),

    #[error("ticket segments overlap or leave the trip interval: {0}")]
    InvalidSegments(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("missing price for `{0}`-`{1}`")]
    MissingPrice(String, String),

    #[error("fine calibration requires the identity monitoring technology, got {0}")]
    NonLinearTechnology(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("no convergence after {iterations} iterations (max residual {residual:e}){}", if *.oscillating { ", oscillation detected" } else { "" })]
    NonConvergence {
        iterations: usize,
        residual: f64,
        oscillating: bool,
    },

    #[error("pricing scheme expected to be incentive-compatible has {0} violation(s)")]
    NotIncentiveCompatible(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an I/O failure with the file it concerns.
    pub fn file(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::File { path, source }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Validation,
    Convergence,
    Io,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Csv(e) if e.is_io_error() => ErrorCategory::Io,
            Error::Json(e) if e.is_io() => ErrorCategory::Io,
            Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => ErrorCategory::Parse,
            Error::NonConvergence { .. } => ErrorCategory::Convergence,
            Error::Io(_) | Error::File { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
