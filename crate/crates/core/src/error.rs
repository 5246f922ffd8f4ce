//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord { path: PathBuf, line: usize, message: String },

    #[error("{path}: malformed PLY: {message}")]
    MalformedPly { path: PathBuf, message: String },

    #[error("{path}:{line}: unknown semantic class code {code} (valid codes are 1-9)")]
    UnknownClassCode { path: PathBuf, line: usize, code: i64 },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("edge {edge} references vertex {index} but only {vertex_count} vertices exist")]
    DanglingEdgeIndex { edge: usize, index: usize, vertex_count: usize },

    #[error("cloud lacks {0} labels")]
    UnlabeledCloud(&'static str),

    #[error("no points remain after class filtering")]
    EmptyAfterFilter,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("ball radius {radius} produced no triangles")]
    RadiusTooSmall { radius: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("ground-truth value at index {index} is zero")]
    ZeroGroundTruth { index: usize },

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("skeleton has no edges")]
    NoEdges,

    #[error("skeleton is empty")]
    EmptySkeleton,

    #[error("cloud has no crown-class points")]
    NoCrownPoints,

    #[error("skeleton for stem {instance} has fewer than two endpoints")]
    SingleEndpoint { instance: u32 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("scans mix plants {first} and {second}")]
    MixedPlants { first: String, second: String },

    #[error("duplicate value for {trait_name} / {subject} on {date}")]
    DuplicateDate { date: chrono::NaiveDate, trait_name: String, subject: String },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}
