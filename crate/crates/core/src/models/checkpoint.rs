use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelParams, TrainHistory};
use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::fsutil::write_atomic;

pub const CHECKPOINT_FORMAT: u32 = 1;

/// Everything needed to rerun inference: parameters, vocabulary, label
/// names and the resolved experiment settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub params: ModelParams,
    pub vocab: Vocabulary,
    pub labels: Vec<String>,
    pub history: Option<TrainHistory>,
    pub experiment: serde_json::Value,
}

impl Checkpoint {
    pub fn new(
        params: ModelParams,
        vocab: Vocabulary,
        labels: Vec<String>,
        history: Option<TrainHistory>,
        experiment: serde_json::Value,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT,
            params,
            vocab,
            labels,
            history,
            experiment,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::config(format!(
                "checkpoint format {} is not supported (expected {CHECKPOINT_FORMAT})",
                ck.format
            )));
        }
        ck.params.config.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<String> {
        let json = self.to_json()?;
        write_atomic(path, json.as_bytes())?;
        Ok(sha256_hex(json.as_bytes()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the serialized form.
    pub fn checksum(&self) -> Result<String> {
        Ok(sha256_hex(self.to_json()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
