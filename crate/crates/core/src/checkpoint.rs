//! Versioned JSON model checkpoints. Everything needed to reproduce
//! inference travels in one self-describing file: shapes, parameters,
//! scaler, and the training configuration.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    model: T,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
}

/// Serializes a model into a versioned JSON checkpoint.
pub fn save<T: Serialize>(path: impl AsRef<Path>, model: &T) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        model,
    };
    let json = serde_json::to_string(&envelope).map_err(|source| CheckpointError::Format {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(path, json).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads and version-checks a checkpoint written by `save`.
pub fn load<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, CheckpointError> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let envelope: Envelope<T> =
        serde_json::from_str(&raw).map_err(|source| CheckpointError::Format {
            path: path.display().to_string(),
            source,
        })?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Version {
            found: envelope.format_version,
        });
    }
    Ok(envelope.model)
}
