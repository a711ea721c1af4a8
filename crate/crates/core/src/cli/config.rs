use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSchema, DelimitedFormat};
use crate::error::{Error, Result};
use crate::features::Scaling;
use crate::lexicon::LabelMapping;
use crate::models::{ModelConfig, ModelKind, OptimizerKind};
use crate::normalize::TechniqueSet;

/// Keys whose values are file paths, resolved against the directory of the
/// config file that sets them.
const PATH_KEYS: &[&str] = &[
    "dataset",
    "train_file",
    "dev_file",
    "test_file",
    "emoticons",
    "misspellings",
    "acronyms",
    "teencode",
    "stopwords",
    "segmentation",
    "lexicon",
    "embeddings",
    "out",
];

const BUILTIN_MAPPINGS: &[&str] = &["VSMEC6", "VSFC3", "VIHSD2"];

fn d_schema() -> String {
    "custom".into()
}
fn d_delimiter() -> char {
    ','
}
fn d_text() -> String {
    "text".into()
}
fn d_label() -> String {
    "label".into()
}
fn d_split() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}
fn d_true() -> bool {
    true
}
fn d_mapping() -> String {
    "VSMEC6".into()
}
fn d_min_freq() -> usize {
    1
}
fn d_out() -> PathBuf {
    PathBuf::from("runs")
}
fn d_seed() -> u64 {
    42
}
fn d_model() -> ModelKind {
    ModelKind::Textcnn
}
fn d_widths() -> Vec<usize> {
    ModelConfig::default().filter_widths
}
fn d_filters() -> usize {
    ModelConfig::default().filters_per_width
}
fn d_dropout() -> f64 {
    ModelConfig::default().dropout
}
fn d_max_len() -> usize {
    ModelConfig::default().max_len
}
fn d_batch() -> usize {
    ModelConfig::default().batch_size
}
fn d_optimizer() -> OptimizerKind {
    ModelConfig::default().optimizer
}
fn d_lr() -> f64 {
    ModelConfig::default().learning_rate
}
fn d_epochs() -> usize {
    ModelConfig::default().epochs
}
fn d_patience() -> usize {
    ModelConfig::default().patience
}
fn d_emb_dim() -> usize {
    ModelConfig::default().embedding_dim
}

/// One experiment, read from a flat TOML file. `include = [..]` pulls in
/// other files first; keys in the including file win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    #[serde(default = "d_schema")]
    pub schema: String,
    /// Label inventory for the `custom` schema.
    pub labels: Option<Vec<String>>,
    #[serde(default = "d_delimiter")]
    pub delimiter: char,
    #[serde(default = "d_text")]
    pub text_column: String,
    #[serde(default = "d_label")]
    pub label_column: String,
    pub id_column: Option<String>,
    pub train_file: Option<PathBuf>,
    pub dev_file: Option<PathBuf>,
    pub test_file: Option<PathBuf>,
    #[serde(default = "d_split")]
    pub split: [f64; 3],
    #[serde(default = "d_true")]
    pub stratified: bool,

    #[serde(default)]
    pub techniques: TechniqueSet,
    pub emoticons: Option<PathBuf>,
    pub misspellings: Option<PathBuf>,
    pub acronyms: Option<PathBuf>,
    pub teencode: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub remove_stopwords: bool,
    pub segmentation: Option<PathBuf>,

    pub lexicon: Option<PathBuf>,
    #[serde(default = "d_mapping")]
    pub mapping: String,
    #[serde(default)]
    pub lexicon_scaling: Scaling,
    /// Optional explicit fusion width, checked against the mapping.
    pub lexicon_dim: Option<usize>,

    pub embeddings: Option<PathBuf>,
    #[serde(default = "d_min_freq")]
    pub min_freq: usize,

    #[serde(default = "d_model")]
    pub model: ModelKind,
    #[serde(default = "d_widths")]
    pub filter_widths: Vec<usize>,
    #[serde(default = "d_filters")]
    pub filters_per_width: usize,
    #[serde(default = "d_dropout")]
    pub dropout: f64,
    #[serde(default = "d_max_len")]
    pub max_len: usize,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_patience")]
    pub patience: usize,
    #[serde(default = "d_emb_dim")]
    pub embedding_dim: usize,
    #[serde(default = "d_true")]
    pub trainable_embeddings: bool,
    pub class_weights: Option<Vec<f64>>,

    #[serde(default = "d_out")]
    pub out: PathBuf,
    #[serde(default = "d_seed")]
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

fn resolve_paths(table: &mut toml::Table, base: &Path) {
    for key in PATH_KEYS {
        if let Some(toml::Value::String(s)) = table.get_mut(*key) {
            let p = Path::new(s.as_str());
            if p.is_relative() {
                *s = base.join(p).to_string_lossy().into_owned();
            }
        }
    }
    if let Some(toml::Value::String(s)) = table.get_mut("mapping") {
        let builtin = BUILTIN_MAPPINGS.iter().any(|b| b.eq_ignore_ascii_case(s));
        if !builtin && Path::new(s.as_str()).is_relative() {
            *s = base.join(s.as_str()).to_string_lossy().into_owned();
        }
    }
}

fn load_table(path: &Path, seen: &mut BTreeSet<PathBuf>) -> Result<toml::Table> {
    let canonical = path.canonicalize().map_err(|e| Error::io(path, e))?;
    if !seen.insert(canonical.clone()) {
        return Err(Error::config(format!(
            "include cycle through {}",
            path.display()
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    resolve_paths(&mut table, base);

    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(toml::Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                toml::Value::String(s) => Ok(base.join(s)),
                _ => Err(Error::config(format!(
                    "{}: include entries must be strings",
                    path.display()
                ))),
            })
            .collect::<Result<_>>()?,
        Some(_) => {
            return Err(Error::config(format!(
                "{}: include must be a list",
                path.display()
            )))
        }
    };
    let mut merged = toml::Table::new();
    for inc in includes {
        merged.extend(load_table(&inc, seen)?);
    }
    merged.extend(table);
    seen.remove(&canonical);
    Ok(merged)
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let table = load_table(path, &mut BTreeSet::new())?;
        Self::from_table(table).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.message().to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        Self::from_table(table)
    }

    pub fn corpus_schema(&self) -> Result<CorpusSchema> {
        if self.schema.eq_ignore_ascii_case("custom") {
            let labels = self
                .labels
                .as_ref()
                .ok_or_else(|| Error::config("the custom schema needs a `labels` list"))?;
            CorpusSchema::custom(labels)
        } else {
            CorpusSchema::by_name(&self.schema)
        }
    }

    pub fn format(&self) -> DelimitedFormat {
        DelimitedFormat {
            delimiter: self.delimiter,
            text_column: self.text_column.clone(),
            label_column: self.label_column.clone(),
            id_column: self.id_column.clone(),
        }
    }

    pub fn label_mapping(&self) -> Result<LabelMapping> {
        LabelMapping::resolve(&self.mapping)
    }

    /// Model settings for one run; `lexicon_dim`, vocabulary size and
    /// class count come from the prepared data.
    pub fn model_config(
        &self,
        kind: ModelKind,
        lexicon_dim: usize,
        vocab_size: usize,
        class_count: usize,
        embedding_dim: usize,
    ) -> ModelConfig {
        ModelConfig {
            kind,
            filter_widths: self.filter_widths.clone(),
            filters_per_width: self.filters_per_width,
            dropout: self.dropout,
            max_len: self.max_len,
            batch_size: self.batch_size,
            lexicon_dim,
            lexicon_scaling: self.lexicon_scaling,
            class_count,
            seed: self.seed,
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            patience: self.patience,
            vocab_size,
            embedding_dim,
            trainable_embeddings: self.trainable_embeddings,
            class_weights: self.class_weights.clone(),
        }
    }

    /// Checks everything that can be checked without reading the data:
    /// referenced files exist, the schema and mapping resolve, and the
    /// model settings are consistent.
    pub fn validate(&self) -> Result<()> {
        let files = [
            ("dataset", &self.dataset),
            ("train_file", &self.train_file),
            ("dev_file", &self.dev_file),
            ("test_file", &self.test_file),
            ("emoticons", &self.emoticons),
            ("misspellings", &self.misspellings),
            ("acronyms", &self.acronyms),
            ("teencode", &self.teencode),
            ("stopwords", &self.stopwords),
            ("segmentation", &self.segmentation),
            ("lexicon", &self.lexicon),
            ("embeddings", &self.embeddings),
        ];
        for (key, path) in files {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::config(format!(
                        "{key}: file `{}` does not exist",
                        p.display()
                    )));
                }
            }
        }
        if self.dataset.is_none() && self.train_file.is_none() {
            return Err(Error::config("set either `dataset` or `train_file`"));
        }
        self.corpus_schema()?;
        if self.lexicon.is_some() {
            let mapping = self.label_mapping()?;
            if let Some(dim) = self.lexicon_dim {
                if dim != mapping.dim() {
                    return Err(Error::config(format!(
                        "lexicon_dim {dim} does not match mapping `{}` with {} dimensions",
                        self.mapping,
                        mapping.dim()
                    )));
                }
            }
        }
        if self.min_freq == 0 {
            return Err(Error::config("min_freq must be at least 1"));
        }
        self.model_config(self.model, 0, 2, 2, self.embedding_dim.max(1))
            .validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_model_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.filter_widths, vec![1, 2, 3, 5]);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.max_len, 100);
        assert_eq!(c.dropout, 0.2);
        assert!(c.techniques.is_empty());
    }

    #[test]
    fn includes_apply_first_and_paths_resolve_per_file() {
        let dir = tempfile::tempdir().unwrap();
        let shared = dir.path().join("shared");
        fs::create_dir(&shared).unwrap();
        fs::write(
            shared.join("common.toml"),
            "teencode = \"teen.tsv\"\nseed = 1\nepochs = 3\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("exp.toml"),
            "include = [\"shared/common.toml\"]\nseed = 9\ntechniques = \"1+4\"\nmodel = \"logreg\"\n",
        )
        .unwrap();
        let c = ExperimentConfig::load(dir.path().join("exp.toml")).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.epochs, 3);
        assert_eq!(c.model, ModelKind::Logreg);
        assert_eq!(c.techniques.to_string(), "1+4");
        assert_eq!(c.teencode.unwrap(), shared.join("teen.tsv"));
    }

    #[test]
    fn unknown_keys_and_cycles_are_errors() {
        assert!(ExperimentConfig::from_toml_str("colour = 1").is_err());
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.toml"), "include = [\"b.toml\"]").unwrap();
        fs::write(dir.path().join("b.toml"), "include = [\"a.toml\"]").unwrap();
        let err = ExperimentConfig::load(dir.path().join("a.toml")).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn lexicon_dim_must_match_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let lex = dir.path().join("lex.tsv");
        let data = dir.path().join("d.csv");
        fs::write(&lex, "vui 1 0 0 0 0 0 0 0\n").unwrap();
        fs::write(&data, "text,label\na,POSITIVE\n").unwrap();
        let mut c = ExperimentConfig {
            dataset: Some(data),
            schema: "vsfc".into(),
            lexicon: Some(lex),
            mapping: "VSFC3".into(),
            lexicon_dim: Some(6),
            ..ExperimentConfig::default()
        };
        let err = c.validate().unwrap_err().to_string();
        assert!(
            err.contains("lexicon_dim 6") && err.contains("VSFC3"),
            "{err}"
        );
        c.lexicon_dim = Some(3);
        c.validate().unwrap();
    }
}
