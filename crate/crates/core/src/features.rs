//! Vocabulary, word vectors, sequence encoding and lexicon fusion.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    pub min_frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    min_frequency: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let mut v = Vocabulary {
            tokens: r.tokens,
            index: HashMap::new(),
            min_frequency: r.min_frequency,
        };
        v.reindex();
        v
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            min_frequency: v.min_frequency,
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from an explicit token list; PAD and UNK are
    /// prepended.
    pub fn from_tokens<I, S>(tokens: I, min_frequency: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        all.extend(tokens.into_iter().map(Into::into));
        let mut v = Vocabulary {
            tokens: all,
            index: HashMap::new(),
            min_frequency,
        };
        v.reindex();
        v
    }

    fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn index_of(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// `index<TAB>token` per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(&format!("{i}\t{t}\n"));
        }
        out
    }
}

/// Tokens occurring at least `min_freq` times, most frequent first, ties in
/// lexicographic order.
pub fn build_vocab<D, T>(docs: D, min_freq: usize) -> Result<Vocabulary>
where
    D: IntoIterator<Item = T>,
    T: AsRef<[String]>,
{
    if min_freq == 0 {
        return Err(Error::config("min_freq must be at least 1"));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut any = false;
    for doc in docs {
        for t in doc.as_ref() {
            any = true;
            *counts.entry(t.clone()).or_default() += 1;
        }
    }
    if !any {
        return Err(Error::EmptyInput("vocabulary corpus has no tokens".into()));
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_freq && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_tokens(
        kept.into_iter().map(|(t, _)| t),
        min_freq,
    ))
}

/// Row-major `rows × dim` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
    /// Share of non-reserved vocabulary rows found in the vector file.
    pub coverage: f64,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Every row drawn from the seeded initializer, PAD zeroed.
    pub fn random(rows: usize, dim: usize, root_seed: u64) -> Self {
        let mut rng = seed::rng(root_seed, seed::EMBEDDINGS);
        let bound = oov_bound(dim);
        let mut data = vec![0.0; rows * dim];
        for x in data.iter_mut().skip(dim) {
            *x = rng.random_range(-bound..bound);
        }
        EmbeddingMatrix {
            dim,
            data,
            coverage: 0.0,
        }
    }
}

fn oov_bound(dim: usize) -> f64 {
    0.25 / (dim as f64).sqrt()
}

/// Reads a text word-vector file (`count dim` header, then `token v1 … vd`)
/// for the tokens of `vocab`. Tokens not in the file get seeded uniform
/// rows; the first occurrence of a token in the file wins.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    root_seed: u64,
) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::EmptyInput(name.clone()))?;
    let bad_header = || Error::MalformedRow {
        file: name.clone(),
        row: 1,
        message: "expected a `count dim` header".into(),
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(bad_header());
    }
    let _count: usize = parts[0].parse().map_err(|_| bad_header())?;
    let dim: usize = parts[1].parse().map_err(|_| bad_header())?;
    if dim == 0 {
        return Err(bad_header());
    }

    let mut found: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::MalformedRow {
                file: name.clone(),
                row,
                message: format!("expected {dim} values, found {}", values.len()),
            });
        }
        let Some(idx) = vocab.get(&token.to_lowercase()) else {
            continue;
        };
        if idx <= UNK || found[idx as usize].is_some() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            values.iter().map(|v| v.parse::<f64>()).collect();
        let parsed = parsed
            .ok()
            .filter(|v| v.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::MalformedRow {
                file: name.clone(),
                row,
                message: "vector values must be finite numbers".into(),
            })?;
        found[idx as usize] = Some(parsed);
    }

    let mut m = EmbeddingMatrix::random(vocab.len(), dim, root_seed);
    let mut hits = 0usize;
    for (i, v) in found.into_iter().enumerate() {
        if let Some(v) = v {
            m.data[i * dim..(i + 1) * dim].copy_from_slice(&v);
            hits += 1;
        }
    }
    let real = vocab.len().saturating_sub(2);
    m.coverage = if real == 0 {
        0.0
    } else {
        hits as f64 / real as f64
    };
    Ok(m)
}

/// Maps tokens to indices, right-padding with PAD or truncating.
pub fn encode_sequence<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    max_len: usize,
) -> Vec<u32> {
    let mut out: Vec<u32> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index_of(t.as_ref()))
        .collect();
    out.resize(max_len, PAD);
    out
}

/// Inverse of [`encode_sequence`] up to the first PAD.
pub fn decode_sequence(indices: &[u32], vocab: &Vocabulary) -> Vec<String> {
    indices
        .iter()
        .take_while(|&&i| i != PAD)
        .map(|&i| vocab.token(i).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scaling {
    #[serde(alias = "none")]
    None,
    #[default]
    #[serde(alias = "log1p")]
    Log1p,
    /// Per-vector rescaling to [0, 1]; a constant vector maps to zeros.
    #[serde(alias = "minmax")]
    Minmax,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::None => "NONE",
            Scaling::Log1p => "LOG1P",
            Scaling::Minmax => "MINMAX",
        })
    }
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NONE" => Ok(Scaling::None),
            "LOG1P" => Ok(Scaling::Log1p),
            "MINMAX" => Ok(Scaling::Minmax),
            _ => Err(Error::config(format!("unknown lexicon scaling `{s}`"))),
        }
    }
}

pub fn scale_lexicon(counts: &[f64], scaling: Scaling) -> Vec<f64> {
    match scaling {
        Scaling::None => counts.to_vec(),
        Scaling::Log1p => counts.iter().map(|c| c.ln_1p()).collect(),
        Scaling::Minmax => {
            let lo = counts.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if counts.is_empty() || hi <= lo {
                vec![0.0; counts.len()]
            } else {
                counts.iter().map(|c| (c - lo) / (hi - lo)).collect()
            }
        }
    }
}

/// `concat(pooled, scale(lex))`, checked against the declared widths.
pub fn fuse_features(
    pooled: &[f64],
    lex: &[f64],
    scaling: Scaling,
    declared: (usize, usize),
) -> Result<Vec<f64>> {
    if pooled.len() != declared.0 || lex.len() != declared.1 {
        return Err(Error::Shape(format!(
            "fusion expects {}+{} features, got {}+{}",
            declared.0,
            declared.1,
            pooled.len(),
            lex.len()
        )));
    }
    if lex.iter().any(|&c| c < 0.0) {
        return Err(Error::Shape("lexicon counts must be non-negative".into()));
    }
    let mut out = Vec::with_capacity(pooled.len() + lex.len());
    out.extend_from_slice(pooled);
    out.extend(scale_lexicon(lex, scaling));
    Ok(out)
}
