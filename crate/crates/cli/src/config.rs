//! The `--config` document: one JSON or TOML file with a section per command.
//! Relative paths inside it resolve against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use kgqa_core::eval::ExperimentConfig;
use kgqa_core::sampler::SampleSpec;
use kgqa_core::scorer::{ScorerConfig, TrainHyper};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeSection {
    pub n: Option<usize>,
    pub max_answer_jaccard: Option<f64>,
    pub retry_cap: Option<usize>,
    pub relations: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDoc {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub synthesize: SynthesizeSection,
    pub train: TrainHyper,
    pub scorer: ScorerConfig,
    pub sample: Option<SampleSpec>,
    pub sweep: ExperimentConfig,
}

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub doc: ConfigDoc,
    /// The document as written, copied into every report.
    pub snapshot: serde_json::Value,
    base_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let snapshot: serde_json::Value = if is_toml {
            let value: toml::Value = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            serde_json::to_value(value)?
        } else {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        let doc: ConfigDoc =
            serde_json::from_value(snapshot.clone()).with_context(|| format!("invalid config {}", path.display()))?;
        Ok(Self { doc, snapshot, base_dir: path.parent().map(Path::to_path_buf) })
    }

    /// Paths given on the command line are used as is; paths from the
    /// document are relative to it.
    pub fn resolve(&self, path: &Path, from_cli: bool) -> PathBuf {
        match &self.base_dir {
            Some(dir) if !from_cli && path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}
