//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate face {face}: area {area:.3e} below threshold")]
    DegenerateFace { face: usize, area: f64 },

    #[error("empty mesh")]
    EmptyMesh,

    #[error("mesh is not closed ({boundary_edges} boundary edges); sign undefined")]
    OpenMesh { boundary_edges: usize },

    #[error("non-manifold edge ({a}, {b}) shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("grid layout mismatch: {0}")]
    GridMismatch(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mask touches the image border at ({x}, {y}); Dirichlet boundary required")]
    MaskAtBorder { x: u32, y: u32 },

    #[error("nothing to optimize: all masks empty across all views")]
    EmptyTargets,

    #[error(
        "component {component} is not a disk (boundary loops: {boundary_loops}, genus: {genus})"
    )]
    NonDiskTopology {
        component: usize,
        boundary_loops: usize,
        genus: i64,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("overlapping UV charts: {count} texels claimed by more than one face (first: {first:?})")]
    OverlappingCharts { count: usize, first: (u32, u32) },

    #[error("no boundary vertices: Laplacian system is singular")]
    NoBoundary,

    #[error("config error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("backend miss: no manifest entry for key `{key}`")]
    BackendMiss { key: String },

    #[error("backend asset invalid ({context}): {source}")]
    BackendAsset {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("image error on {path}: {message}")]
    Image { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
