use alloc::boxed::Box;
use alloc::string::String;

use crate::dynamics::Trajectory;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("fields live on different wave grids")]
    GridMismatch,
    #[error("expected a {expected} field, got {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("dissipation order alpha = {0} outside (0, 2]")]
    AlphaOutOfRange(f64),
    #[error("physical grid size {m} too small, need at least {min}")]
    GridTooSmall { m: usize, min: usize },
    #[error("sample buffer has length {found}, expected {expected}")]
    SampleLength { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("(alpha = {alpha}, eta = {eta}) inadmissible: {bound}")]
    Inadmissible {
        alpha: f64,
        eta: f64,
        bound: String,
    },
    #[error("numerical blow-up at step {step} (t = {time})")]
    BlowUp {
        step: usize,
        time: f64,
        partial: Box<Trajectory>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
