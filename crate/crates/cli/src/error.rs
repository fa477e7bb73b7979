use std::io;
use std::path::{Path, PathBuf};

use eventforge_core::codec::CodecError;
use eventforge_core::crf::CrfError;
use eventforge_core::dvs::DvsError;
use eventforge_core::event::ParamError;
use eventforge_core::metrics::MetricsError;
use eventforge_core::sim::SimError;
use eventforge_core::stream::StreamError;
use eventforge_core::transcode::TranscodeError;
use thiserror::Error;

/// Failures surfaced by subcommands. Each class maps to its own exit code.
#[derive(Error, Debug)]
pub enum CliError {
    /// A file could not be read or written
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Input bytes are not in the expected format
    #[error("{0}")]
    Format(String),

    /// Arguments or codec parameters rejected
    #[error("{0}")]
    Param(String),
}

impl CliError {
    pub const EXIT_PARAM: u8 = 2;
    pub const EXIT_IO: u8 = 3;
    pub const EXIT_FORMAT: u8 = 4;

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } => Self::EXIT_IO,
            Self::Format(_) => Self::EXIT_FORMAT,
            Self::Param(_) => Self::EXIT_PARAM,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Self::Param(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Self::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        Self::Format(format!("event stream: {e}"))
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        Self::Format(format!("compressed stream: {e}"))
    }
}

impl From<DvsError> for CliError {
    fn from(e: DvsError) -> Self {
        Self::Format(e.to_string())
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        Self::Param(e.to_string())
    }
}

impl From<CrfError> for CliError {
    fn from(e: CrfError) -> Self {
        Self::Param(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::Param(e.to_string())
    }
}

impl From<TranscodeError> for CliError {
    fn from(e: TranscodeError) -> Self {
        match e {
            TranscodeError::Params(p) => p.into(),
            TranscodeError::Stream(s) => s.into(),
            TranscodeError::PlaneMismatch(..) | TranscodeError::TimeOverflow => Self::Param(e.to_string()),
            TranscodeError::FrameSize { .. } | TranscodeError::OutOfOrder { .. } => Self::Format(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::TimeOverflow => Self::Param(e.to_string()),
            SimError::FrameSize { .. } | SimError::Roi(_) => Self::Format(e.to_string()),
        }
    }
}

impl From<image::ImageError> for CliError {
    fn from(e: image::ImageError) -> Self {
        Self::Format(format!("image: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Format(format!("CSV: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Format(format!("JSON: {e}"))
    }
}
