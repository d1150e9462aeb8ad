use std::io;

use thiserror::Error;

use crate::beam::Axis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate denominator: |D| = {magnitude:e} <= {threshold:e}")]
    DegenerateDenominator { magnitude: f64, threshold: f64 },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("both control beams modulate the {0} axis")]
    AxisMismatch(Axis),

    #[error("field maps are sampled on different grids")]
    GridMismatch,

    #[error("channel is inactive (signal below normalization threshold)")]
    InactiveChannel,

    #[error("cross-section along {0} never falls below half maximum inside the grid")]
    NoHalfCrossing(Axis),

    #[error("every scan point is inactive")]
    AllInactive,

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
