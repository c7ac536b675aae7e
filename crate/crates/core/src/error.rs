use thiserror::Error;

/// Errors raised while fitting or evaluating label-shift classifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("no samples with label {0}")]
    EmptyClass(u8),
    #[error("data contains only label {0}; both labels are required")]
    DegenerateClass(u8),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies outside the support box [{lower}, {upper}]")]
    OutOfDomain { lower: f64, upper: f64 },
    #[error("confusion matrix is singular: |det| = {det:e} below floor {floor:e}")]
    SingularConfusion { det: f64, floor: f64 },
    #[error("invalid label {0}; labels must be 0 or 1")]
    InvalidLabel(u8),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable token used in result flags.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "empty_dataset",
            Error::EmptyClass(_) => "empty_class",
            Error::DegenerateClass(_) => "degenerate_class",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::SingularConfusion { .. } => "singular_confusion",
            Error::InvalidLabel(_) => "invalid_label",
            Error::InvalidParameter { .. } => "invalid_parameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
