//! Text and binary file formats: captured joint positions, manifests,
//! model weights, loss curves and evaluation reports.

mod manifest;
mod positions;
mod report;
mod weights;

use thiserror::Error;

pub use manifest::{read_manifest, write_manifest};
pub use positions::{parse_positions, write_positions, PositionSequence};
pub use report::{write_confusion_csv, write_loss_csv, write_report_csv};
pub use weights::{read_weights, write_weights, WEIGHTS_MAGIC};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line,
        message: message.into(),
    }
}
