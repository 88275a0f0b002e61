use std::path::PathBuf;

use thiserror::Error;

/// Structural problems found while building a [`crate::mesh::PolyMesh`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no cells")]
    Empty,
    #[error("cell {cell} references vertex {vertex}, but only {count} vertices exist")]
    VertexOutOfRange { cell: usize, vertex: usize, count: usize },
    #[error("cell {cell} has {len} vertices; a polygon needs at least 3")]
    TooFewVertices { cell: usize, len: usize },
    #[error("cell {cell} repeats vertex {vertex}")]
    RepeatedVertex { cell: usize, vertex: usize },
    #[error("cell {cell} has a zero-length edge between vertices {a} and {b}")]
    DegenerateEdge { cell: usize, a: usize, b: usize },
    #[error("cell {cell} is not a simple polygon (edges {first} and {second} intersect)")]
    NotSimple { cell: usize, first: usize, second: usize },
    #[error("cell {cell} has zero area")]
    ZeroArea { cell: usize },
    #[error("edge ({a}, {b}) is traversed in the same direction by cells {first} and {second}")]
    InconsistentOrientation { a: usize, b: usize, first: usize, second: usize },
    #[error("edge ({a}, {b}) is shared by more than two cells")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("vertex {vertex} is not used by any cell")]
    DanglingVertex { vertex: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteVertex { vertex: usize },
}

#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("unknown mesh family `{0}`")]
    UnknownFamily(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("cell {cell}: {reason}")]
    DegenerateCell { cell: usize, reason: String },
    #[error("incompatible sources at t = {time}: ∫G = {integral:e} exceeds tolerance {tolerance:e}")]
    IncompatibleSources { time: f64, integral: f64, tolerance: f64 },
    #[error("{system} solve failed: {reason}")]
    Solver { system: &'static str, reason: String },
    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<VemError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("mesh file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = VemError> = std::result::Result<T, E>;
