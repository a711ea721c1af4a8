//! Labeled corpora: schemas, delimited-text loading, descriptive statistics
//! and deterministic splits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SchemaName {
    Vsmec,
    Vsfc,
    Vihsd,
    Custom,
}

/// Label inventory of a corpus. Labels are matched case-insensitively and
/// through per-schema aliases (the public releases of some datasets use
/// numeric codes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSchema {
    pub name: SchemaName,
    pub labels: Vec<String>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl CorpusSchema {
    pub fn vsmec() -> Self {
        Self::with_aliases(
            SchemaName::Vsmec,
            &[
                "FEAR",
                "SURPRISE",
                "ANGER",
                "ENJOYMENT",
                "SADNESS",
                "DISGUST",
                "OTHER",
            ],
            &[],
        )
    }

    pub fn vsfc() -> Self {
        Self::with_aliases(
            SchemaName::Vsfc,
            &["POSITIVE", "NEGATIVE", "NEUTRAL"],
            &[("0", "NEGATIVE"), ("1", "NEUTRAL"), ("2", "POSITIVE")],
        )
    }

    pub fn vihsd() -> Self {
        Self::with_aliases(
            SchemaName::Vihsd,
            &["CLEAN", "OFFENSIVE", "HATE"],
            &[("0", "CLEAN"), ("1", "OFFENSIVE"), ("2", "HATE")],
        )
    }

    pub fn custom<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::config("a custom schema needs at least two labels"));
        }
        let labels: Vec<String> = labels
            .iter()
            .map(|l| l.as_ref().trim().to_string())
            .collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].iter().any(|m| m.eq_ignore_ascii_case(l)) {
                return Err(Error::config(format!("duplicate label `{l}`")));
            }
        }
        Ok(CorpusSchema {
            name: SchemaName::Custom,
            labels,
            aliases: BTreeMap::new(),
        })
    }

    fn with_aliases(name: SchemaName, labels: &[&str], aliases: &[(&str, &str)]) -> Self {
        CorpusSchema {
            name,
            labels: labels.iter().map(|s| s.to_string()).collect(),
            aliases: aliases
                .iter()
                .map(|(a, l)| (a.to_string(), l.to_string()))
                .collect(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().replace('-', "").as_str() {
            "VSMEC" | "UITVSMEC" => Ok(Self::vsmec()),
            "VSFC" | "UITVSFC" => Ok(Self::vsfc()),
            "VIHSD" => Ok(Self::vihsd()),
            other => Err(Error::config(format!(
                "unknown schema `{other}` (custom schemas need an explicit label list)"
            ))),
        }
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    /// Canonical spelling of `raw`, if it names one of the labels.
    pub fn resolve(&self, raw: &str) -> Option<&str> {
        let raw = raw.trim();
        let target = self.aliases.get(raw).map(String::as_str).unwrap_or(raw);
        self.labels
            .iter()
            .find(|l| l.eq_ignore_ascii_case(target))
            .map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        let canonical = self.resolve(label)?;
        self.labels.iter().position(|l| l == canonical)
    }
}

/// Layout of a delimited corpus file with a header row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelimitedFormat {
    pub delimiter: char,
    pub text_column: String,
    pub label_column: String,
    #[serde(default)]
    pub id_column: Option<String>,
}

impl Default for DelimitedFormat {
    fn default() -> Self {
        DelimitedFormat {
            delimiter: ',',
            text_column: "text".into(),
            label_column: "label".into(),
            id_column: None,
        }
    }
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    schema: &CorpusSchema,
    format: &DelimitedFormat,
) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, &path.display().to_string(), schema, format)
}

/// Parses a corpus from any reader; `name` is used in error messages.
/// Rows are numbered like lines in the file, the header being row 1.
pub fn read_corpus<R: Read>(
    reader: R,
    name: &str,
    schema: &CorpusSchema,
    format: &DelimitedFormat,
) -> Result<Vec<Document>> {
    if !format.delimiter.is_ascii() {
        return Err(Error::config(
            "the corpus delimiter must be an ASCII character",
        ));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let malformed = |row: usize, message: String| Error::MalformedRow {
        file: name.to_string(),
        row,
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(Error::EmptyInput(name.to_string()));
    }
    let column = |col: &str| {
        headers
            .iter()
            .position(|h| h.trim().trim_start_matches('\u{feff}') == col)
            .ok_or_else(|| malformed(1, format!("header has no `{col}` column")))
    };
    let text_idx = column(&format.text_column)?;
    let label_idx = column(&format.label_column)?;
    let id_idx = format.id_column.as_deref().map(column).transpose()?;

    let mut docs = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| {
            let row = e.position().map_or(row, |p| p.line() as usize);
            malformed(row, e.to_string())
        })?;
        let text = record
            .get(text_idx)
            .ok_or_else(|| malformed(row, "missing text field".into()))?;
        let raw_label = record
            .get(label_idx)
            .ok_or_else(|| malformed(row, "missing label field".into()))?;
        let label = schema
            .resolve(raw_label)
            .ok_or_else(|| Error::UnknownLabel {
                file: name.to_string(),
                row,
                label: raw_label.to_string(),
            })?;
        let id = match id_idx {
            Some(k) => record.get(k).unwrap_or_default().to_string(),
            None => format!("{}", row - 1),
        };
        docs.push(Document {
            id,
            text: text.to_string(),
            label: label.to_string(),
        });
    }
    if docs.is_empty() {
        return Err(Error::EmptyInput(name.to_string()));
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub size: usize,
    /// Mean number of whitespace-separated tokens in the raw text.
    pub avg_length: f64,
    /// Percentage of documents per label, in schema order.
    pub label_distribution: Vec<(String, f64)>,
}

pub fn corpus_stats(docs: &[Document], schema: &CorpusSchema) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::EmptyInput("corpus".into()));
    }
    let total_tokens: usize = docs.iter().map(|d| d.text.split_whitespace().count()).sum();
    let mut counts = vec![0usize; schema.labels.len()];
    for d in docs {
        if let Some(i) = schema.index_of(&d.label) {
            counts[i] += 1;
        }
    }
    let n = docs.len() as f64;
    Ok(CorpusStats {
        size: docs.len(),
        avg_length: total_tokens as f64 / n,
        label_distribution: schema
            .labels
            .iter()
            .zip(counts)
            .map(|(l, c)| (l.clone(), 100.0 * c as f64 / n))
            .collect(),
    })
}

/// Number of documents per whitespace-token length.
pub fn length_histogram(docs: &[Document]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for d in docs {
        *h.entry(d.text.split_whitespace().count()).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
}

impl Split {
    pub fn part(&self, name: &str) -> Result<&[Document]> {
        match name {
            "train" => Ok(&self.train),
            "dev" => Ok(&self.dev),
            "test" => Ok(&self.test),
            other => Err(Error::config(format!("unknown split `{other}`"))),
        }
    }
}

fn cut_points(n: usize, ratios: [f64; 3]) -> (usize, usize) {
    let train = ((n as f64) * ratios[0]).round() as usize;
    let dev = ((n as f64) * ratios[1]).round() as usize;
    let train = train.min(n);
    (train, dev.min(n - train))
}

/// Partitions `docs` into train/dev/test. Each part keeps the original
/// document order. With `stratified`, every label is cut separately.
pub fn split_corpus(
    docs: &[Document],
    ratios: [f64; 3],
    seed: u64,
    stratified: bool,
) -> Result<Split> {
    if ratios.iter().any(|&r| r.is_nan() || r <= 0.0)
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::config(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        )));
    }
    let mut rng = seed::rng(seed, seed::SPLIT);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    if stratified {
        for (i, d) in docs.iter().enumerate() {
            groups.entry(d.label.as_str()).or_default().push(i);
        }
        if let Some((label, members)) = groups.iter().find(|(_, m)| m.len() < 3) {
            return Err(Error::config(format!(
                "class `{label}` has {} document(s), fewer than the 3 split parts",
                members.len()
            )));
        }
    } else {
        groups.insert("", (0..docs.len()).collect());
    }

    let mut parts: [Vec<usize>; 3] = Default::default();
    for members in groups.values_mut() {
        members.shuffle(&mut rng);
        let (n_train, n_dev) = cut_points(members.len(), ratios);
        parts[0].extend_from_slice(&members[..n_train]);
        parts[1].extend_from_slice(&members[n_train..n_train + n_dev]);
        parts[2].extend_from_slice(&members[n_train + n_dev..]);
    }
    let [train, dev, test] = parts.map(|mut idx| {
        idx.sort_unstable();
        idx.into_iter().map(|i| docs[i].clone()).collect::<Vec<_>>()
    });
    Ok(Split { train, dev, test })
}
