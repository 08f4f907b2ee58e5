//! Crash-safe persistence of the iteration state.
//!
//! The file is a JSON envelope holding the serialized payload and its CRC-32.
//! Writes go to a sibling temp file that is renamed into place.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{IterationState, StatsReport};

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("checkpoint is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint checksum mismatch (stored {stored:08x}, computed {computed:08x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("checkpoint state is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub state: IterationState,
    pub stats: Vec<StatsReport>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    crc32: u32,
    payload: String,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let payload = serde_json::to_string(self).expect("checkpoint serializes");
        let env = Envelope {
            crc32: crc32fast::hash(payload.as_bytes()),
            payload,
        };
        serde_json::to_string(&env).expect("envelope serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let env: Envelope = serde_json::from_str(text)?;
        let computed = crc32fast::hash(env.payload.as_bytes());
        if computed != env.crc32 {
            return Err(CheckpointError::Checksum {
                stored: env.crc32,
                computed,
            });
        }
        let cp: Checkpoint = serde_json::from_str(&env.payload)?;
        cp.state
            .check()
            .map_err(|e| CheckpointError::Inconsistent(e.to_string()))?;
        Ok(cp)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut tmp = PathBuf::from(path);
        tmp.as_mut_os_string().push(".tmp");
        fs::write(&tmp, self.to_json())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
