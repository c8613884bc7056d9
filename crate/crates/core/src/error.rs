use thiserror::Error;

use crate::models::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A map evaluation overflowed or produced NaN. `index` is the orbit step
    /// that failed (0 for a single evaluation).
    #[error("non-finite value at step {index} (input ({}, {}))", at.x, at.y)]
    NonFinite { index: usize, at: Point },

    #[error("invalid parameter {name} = {value}: must be finite and strictly positive")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),

    #[error("operation not supported for the {0} family")]
    UnsupportedFamily(&'static str),

    #[error("newton iteration from ({}, {}) diverged: {reason}", seed.x, seed.y)]
    NewtonDivergence { seed: Point, reason: String },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("negative discriminant at {at}")]
    DiscriminantNegative { at: f64 },

    #[error("degenerate branch at {at}: leading and linear coefficients both vanish")]
    DegenerateBranch { at: f64 },

    #[error("region {region} has inconsistent signs across its cells; refine the grid")]
    InconsistentSigns { region: usize },

    #[error("{0}")]
    CaseMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
