//! Binary checkpoint format.
//!
//! ```text
//! b"LMCKPT1"                 7 bytes
//! metadata length            u32, little endian
//! metadata                   UTF-8 JSON (CheckpointMeta)
//! payload                    f32 little endian, tensors concatenated in manifest order
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Level, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{LanguageModel, ModelConfig};

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"LMCKPT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

impl LayerEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub config: ModelConfig,
    pub level: Option<Level>,
    pub vocabulary: Vocabulary,
    pub layers: Vec<LayerEntry>,
}

impl LanguageModel<f32> {
    pub fn checkpoint_meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            level: self.level,
            vocabulary: self.vocab.clone(),
            layers: self
                .named_params()
                .into_iter()
                .map(|(name, p)| LayerEntry {
                    name,
                    shape: p.shape().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_checkpoint_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.checkpoint_meta())?;
        let meta_len = u32::try_from(meta.len()).map_err(|_| Error::Format("metadata exceeds 4 GiB".into()))?;
        let n_params = self.parameter_count();
        let mut out = Vec::with_capacity(CHECKPOINT_MAGIC.len() + 4 + meta.len() + 4 * n_params);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&meta_len.to_le_bytes());
        out.extend_from_slice(&meta);
        for (_, p) in self.named_params() {
            for v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let (meta, payload) = split_checkpoint(bytes)?;
        let mut model = LanguageModel::zeros(meta.config.clone(), meta.vocabulary.clone())
            .map_err(|e| Error::CorruptCheckpoint(format!("metadata does not describe a valid model: {e}")))?;
        model.level = meta.level;

        let expected: Vec<LayerEntry> = model.checkpoint_meta().layers;
        if expected != meta.layers {
            return Err(Error::CorruptCheckpoint(
                "layer manifest does not match the configured preset".into(),
            ));
        }
        let total: usize = meta.layers.iter().map(LayerEntry::len).sum();
        if payload.len() != total * 4 {
            return Err(Error::CorruptCheckpoint(format!(
                "payload has {} bytes, manifest needs {}",
                payload.len(),
                total * 4
            )));
        }
        let mut floats = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        for p in model.params_mut() {
            for v in p.value.data_mut() {
                *v = floats.next().expect("length checked");
            }
        }
        Ok(model)
    }
}

/// Parses the header and metadata, returning them with the raw payload.
pub(crate) fn split_checkpoint(bytes: &[u8]) -> Result<(CheckpointMeta, &[u8])> {
    if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
        return Err(Error::Format("missing LMCKPT1 magic".into()));
    }
    let rest = &bytes[CHECKPOINT_MAGIC.len()..];
    if rest.len() < 4 {
        return Err(Error::CorruptCheckpoint("truncated header".into()));
    }
    let meta_len = u32::from_le_bytes([rest[0], rest[1], rest[2], rest[3]]) as usize;
    let rest = &rest[4..];
    if rest.len() < meta_len {
        return Err(Error::CorruptCheckpoint(format!(
            "metadata length {meta_len} exceeds file size"
        )));
    }
    let meta: CheckpointMeta = serde_json::from_slice(&rest[..meta_len])
        .map_err(|e| Error::CorruptCheckpoint(format!("bad metadata: {e}")))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            meta.format_version
        )));
    }
    Ok((meta, &rest[meta_len..]))
}

impl CheckpointMeta {
    /// Reads only the metadata block of a checkpoint file.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        Ok(split_checkpoint(&bytes)?.0)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

pub fn save_checkpoint(model: &LanguageModel<f32>, path: &Path) -> Result<()> {
    fs::write(path, model.to_checkpoint_bytes()?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LanguageModel<f32>> {
    LanguageModel::from_checkpoint_bytes(&read_file(path)?)
}
