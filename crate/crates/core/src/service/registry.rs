use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::corpus::Level;
use crate::error::{Error, Result};
use crate::model::{load_checkpoint, LanguageModel};

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model_id: String,
    pub model: Arc<LanguageModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelInfo {
    pub level: Level,
    pub model_id: String,
    pub vocab_size: usize,
    pub window: usize,
}

/// At most one model per level, read-only once built.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<Level, LoadedModel>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `model` under `level`, also stamping the level on the model.
    pub fn insert(&mut self, level: Level, model_id: impl Into<String>, mut model: LanguageModel) -> Result<()> {
        let model_id = model_id.into();
        if let Some(existing) = self.models.get(&level) {
            return Err(Error::config(format!(
                "two models for level {level}: {} and {model_id}",
                existing.model_id
            )));
        }
        model.set_level(Some(level));
        self.models.insert(level, LoadedModel { model_id, model: Arc::new(model) });
        Ok(())
    }

    /// Loads every `*.ckpt` in `dir`. A file named `<level>.ckpt` serves that
    /// level; any other stem is placed by the level recorded in its
    /// metadata, and skipped if it has none. A missing directory is an empty
    /// registry.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut reg = ModelRegistry::new();
        if !dir.exists() {
            tracing::warn!(dir = %dir.display(), "models directory does not exist; serving no models");
            return Ok(reg);
        }
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "ckpt"))
            .collect();
        paths.sort();
        for path in paths {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            let model = load_checkpoint(&path)?;
            let level = match (stem.parse::<Level>(), model.level()) {
                (Ok(named), Some(meta)) if named != meta => {
                    return Err(Error::config(format!(
                        "{} is named for {named} but was trained for {meta}",
                        path.display()
                    )))
                }
                (Ok(named), _) => named,
                (Err(_), Some(meta)) => meta,
                (Err(_), None) => {
                    tracing::warn!(path = %path.display(), "checkpoint has no level; skipped");
                    continue;
                }
            };
            tracing::info!(%level, model_id = %stem, params = model.parameter_count(), "loaded model");
            reg.insert(level, stem, model)?;
        }
        Ok(reg)
    }

    pub fn get(&self, level: Level) -> Option<&LoadedModel> {
        self.models.get(&level)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// One entry per loaded level, in level order.
    pub fn levels(&self) -> Vec<LevelInfo> {
        self.models
            .iter()
            .map(|(&level, m)| LevelInfo {
                level,
                model_id: m.model_id.clone(),
                vocab_size: m.model.config().vocab_size,
                window: m.model.window(),
            })
            .collect()
    }
}
