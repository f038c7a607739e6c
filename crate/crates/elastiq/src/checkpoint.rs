//! Network checkpoints: JSON with a `meta` object and the weight arrays in
//! row-major nested-array form, round-trip safe at full 64-bit precision.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use elastiq_core::nn::NetworkParams;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: parse error: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
}

pub fn save_params(params: &NetworkParams, path: &Path) -> Result<(), CheckpointError> {
    let file = File::create(path).map_err(|e| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::to_writer_pretty(BufWriter::new(file), params).map_err(|e| {
        CheckpointError::Parse {
            path: path.display().to_string(),
            source: e,
        }
    })
}

/// Loads and validates a checkpoint; a truncated or malformed file fails
/// without producing a partial object, and shape mismatches name the field.
pub fn load_params(path: &Path) -> Result<NetworkParams, CheckpointError> {
    let file = File::open(path).map_err(|e| CheckpointError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let params: NetworkParams =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| CheckpointError::Parse {
            path: path.display().to_string(),
            source: e,
        })?;
    params.validate().map_err(|e| CheckpointError::Shape {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(params)
}
