//! Versioned checkpoint container.
//!
//! A checkpoint is a single self-describing JSON file holding a version
//! header, the full run configuration, the flat parameter vector, the
//! optimizer state, the serialized random-stream states, and the number
//! of completed steps. Loading a checkpoint either reproduces every field
//! bit-exactly or fails with an error — there is no partial state.
//! Finite doubles survive the JSON round trip losslessly (shortest
//! round-trip formatting on write, exact decimal conversion on read).
//!
//! Files are written to a temporary sibling and renamed into place, so an
//! interrupted save never leaves a truncated checkpoint behind.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::TrainConfig;
use crate::policy::PolicyParams;
use crate::rng::RandomStream;

/// Format version written into every checkpoint.
pub const CHECKPOINT_VERSION: u32 = 1;

/// A labelled random-stream state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedStream {
    pub name: String,
    pub stream: RandomStream,
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Format version; loading fails on a mismatch.
    pub version: u32,
    /// Number of completed training steps.
    pub step: u64,
    pub config: TrainConfig,
    pub params: PolicyParams,
    /// Optimizer momentum buffer (all zeros when momentum is disabled).
    pub momentum: Vec<f64>,
    /// Live random-stream states owned by the trainer.
    pub streams: Vec<NamedStream>,
}

impl Checkpoint {
    /// Finds a named stream state.
    pub fn stream(&self, name: &str) -> Option<&RandomStream> {
        self.streams
            .iter()
            .find(|s| s.name == name)
            .map(|s| &s.stream)
    }
}

/// Errors raised while saving or loading checkpoints.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint is corrupted or not a checkpoint: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint has no version header")]
    MissingVersion,
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
}

/// Writes a checkpoint atomically (temporary file plus rename).
pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let json = serde_json::to_string(checkpoint)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, json)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads and validates a checkpoint.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let text = fs::read_to_string(path)?;
    // Check the version header before committing to the full schema, so
    // a future format change reports a version error rather than an
    // arbitrary parse failure.
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or(CheckpointError::MissingVersion)?;
    if version != CHECKPOINT_VERSION as u64 {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    Ok(serde_json::from_value(value)?)
}
