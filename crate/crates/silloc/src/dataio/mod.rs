//! File formats: city-model JSON, PGM masks, pose and trace CSVs, run config.

mod city;
mod config;
mod pgm;
mod tables;

use std::path::{Path, PathBuf};

pub use city::{parse_city_model, read_city_model, serialize_city_model, write_city_model};
pub use config::{
    Axis, BasinConfig, CameraConfig, CityConfig, CorruptionConfig, PriorConfig, PriorMode, QueryConfig, RefineConfig,
    RunConfig, SamplingConfig, Seeds,
};
pub use pgm::{read_mask, read_mask_file, write_mask, write_mask_file};
pub use tables::{
    read_poses, read_records, write_poses, write_records, write_trace, Outcome, PoseRow, Record, RECORD_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Syntax or schema error; `at` is a field path such as `buildings[3].height`.
    #[error("{at}: {msg}")]
    Schema { at: String, msg: String },
    #[error("pgm: {0}")]
    Pgm(String),
    #[error("csv line {line}: {msg}")]
    Csv { line: u64, msg: String },
    #[error(transparent)]
    Core(#[from] silloc_core::Error),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| DataError::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}
