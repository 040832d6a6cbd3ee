use thiserror::Error;

/// Node index `(i, j)`: `i` runs along x, `j` along y.
pub type NodeIx = (usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternion norm {norm:e} below inversion threshold")]
    NearZeroQuaternion { norm: f64 },
    #[error("point has nonzero real part {re:e}")]
    PNotImaginary { re: f64 },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("degenerate quadruple for cross ratio")]
    DegenerateQuadruple,
    #[error("stencil touches a masked node at {0:?}")]
    MaskedNeighbor(NodeIx),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("form is not closed: residual {residual:e} > {tolerance:e}")]
    NotClosed { residual: f64, tolerance: f64 },
    #[error("base node {0:?} is masked")]
    MaskedRegion(NodeIx),
    #[error("Maurer-Cartan residual {residual:e} > {tolerance:e}")]
    NotIntegrable { residual: f64, tolerance: f64 },
    #[error("integration blew up at {0:?}")]
    StepBlowup(NodeIx),
    #[error("tangent plane degenerates at {0:?}")]
    DegenerateTangent(NodeIx),
    #[error("Darboux transform touches the surface at {0:?}")]
    SingularityHit(NodeIx),
    #[error("transform passes through infinity at {0:?}")]
    AffineEscape(NodeIx),
    #[error("frame is not adapted to the surface at {0:?}")]
    NotAdapted(NodeIx),
    #[error("evaluation point too close to a pole")]
    PoleProximity,
    #[error("surface carries no Ribaucour frame")]
    FrameUnavailable,
    #[error("connection form off the Ribaucour pattern: residual {0:e}")]
    PatternMismatch(f64),
    #[error("no non-umbilic nodes left")]
    UmbilicRegion,
    #[error("initial point lies on the boundary sphere")]
    InitialOnBoundary,
    #[error("surface touches the boundary of the half-space at {0:?}")]
    BoundaryContact(NodeIx),
    #[error("Darboux pair of meromorphic functions (both envelopes on the boundary)")]
    DegenerateMeromorphicPair,
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{stage}: {source}{}", fmt_at(.at))]
    Stage {
        stage: String,
        /// Grid coordinates of the offending node, when the error names one.
        at: Option<(f64, f64)>,
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) | Error::Json(_) | Error::InvalidGrid(_) => 2,
            Error::Io(_) => 2,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    /// Node named by the error, if any.
    pub fn node(&self) -> Option<NodeIx> {
        match self {
            Error::MaskedNeighbor(n)
            | Error::MaskedRegion(n)
            | Error::StepBlowup(n)
            | Error::DegenerateTangent(n)
            | Error::SingularityHit(n)
            | Error::AffineEscape(n)
            | Error::NotAdapted(n)
            | Error::BoundaryContact(n) => Some(*n),
            Error::Stage { source, .. } => source.node(),
            _ => None,
        }
    }
}

fn fmt_at(at: &Option<(f64, f64)>) -> String {
    at.map(|(x, y)| format!(" at ({x}, {y})")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, Error>;
