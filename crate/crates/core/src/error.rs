use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Point2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("boundary curve is not star-shaped about the origin: r({theta:.6}) = {radius:.6e}")]
    NotStarShaped { theta: f64, radius: f64 },

    #[error("curve coefficients must be finite")]
    NonFiniteCoefficient,

    #[error("query point ({}, {}) lies outside the domain", .0.x, .0.y)]
    PointOutside(Point2),

    #[error("grid resolution n = {n} is below the minimum of {min}")]
    ResolutionTooLow { n: usize, min: usize },

    #[error(
        "domain too thin for grid: node ({i}, {j}) has boundary arm {arm:.3e}·h; use a larger n"
    )]
    GridTooCoarse { i: usize, j: usize, arm: f64 },

    #[error("field does not live on this grid")]
    GridMismatch,

    #[error("field has {got} values but the grid has {expected} inside nodes")]
    FieldLength { expected: usize, got: usize },

    #[error("linear solver did not converge within {iterations} iterations (last relative residual {:.3e})", .history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("inverse iteration did not converge within {0} iterations")]
    EigenIterationCap(usize),

    #[error("field is identically zero")]
    ZeroField,

    #[error("no node exceeds {margin} of the field maximum")]
    EmptyMargin { margin: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate obstacle: segment {0} has zero length")]
    DegenerateObstacle(usize),

    #[error("start point lies on the obstacle")]
    StartOnObstacle,

    #[error("curve {index} violates the normalization |γ(0)| = 1, |γ(1) − γ(0)| = 1 ({detail})")]
    Normalization { index: usize, detail: String },

    #[error("potential is unbounded or non-finite at ({}, {})", .0.x, .0.y)]
    UnboundedPotential(Point2),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown preset `{name}`; valid presets: {}", .valid.join(", "))]
    UnknownPreset {
        name: String,
        valid: Vec<&'static str>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
