//! Emotion lexicon: loading, multi-word matching, per-emotion counting and
//! projection of the counts onto a dataset's label space.
//!
//! # File format
//!
//! One entry per line: the word or phrase, then one `0`/`1` flag per
//! column, separated by whitespace (tabs or spaces; the entry itself may
//! contain spaces). An optional header line names the columns, e.g.
//!
//! ```text
//! word      joy sadness anger fear trust disgust surprise anticipation positive negative
//! đáng đời  0   0       1     0    0     1       0        0            0        1
//! ```
//!
//! Without a header the eight emotion columns are read in the order of
//! [`Emotion::ALL`]. `positive`/`negative` columns are optional.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::canonical_key;
use crate::tokens::{scan, SpanKind, TokenTrie};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Emotion {
    Joy,
    Sadness,
    Anger,
    Fear,
    Trust,
    Disgust,
    Surprise,
    Anticipation,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Trust,
        Emotion::Disgust,
        Emotion::Surprise,
        Emotion::Anticipation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Joy => "JOY",
            Emotion::Sadness => "SADNESS",
            Emotion::Anger => "ANGER",
            Emotion::Fear => "FEAR",
            Emotion::Trust => "TRUST",
            Emotion::Disgust => "DISGUST",
            Emotion::Surprise => "SURPRISE",
            Emotion::Anticipation => "ANTICIPATION",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let up = if up == "ENJOYMENT" {
            "JOY".to_string()
        } else {
            up
        };
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == up)
            .ok_or_else(|| Error::config(format!("unknown emotion `{s}`")))
    }
}

/// Set of emotions carried by one lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EmotionFlags(u8);

impl EmotionFlags {
    pub fn of<I: IntoIterator<Item = Emotion>>(emotions: I) -> Self {
        EmotionFlags(
            emotions
                .into_iter()
                .fold(0, |acc, e| acc | (1 << e.index())),
        )
    }

    pub fn contains(self, e: Emotion) -> bool {
        self.0 & (1 << e.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        EmotionFlags(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Emotion> {
        Emotion::ALL.into_iter().filter(move |&e| self.contains(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Entries are keyed by their canonical form: lower-case, tone-normalized
/// words joined by single spaces.
#[derive(Debug, Clone, Default)]
pub struct EmotionLexicon {
    entries: BTreeMap<String, EmotionFlags>,
    polarity: BTreeMap<String, Polarity>,
    /// Rows folded into an earlier entry with the same canonical form.
    pub merged_duplicates: usize,
    /// Non-fatal problems found while loading (rows without any flag).
    pub warnings: Vec<String>,
}

/// Canonical word sequence of a phrase or text fragment.
pub fn canonical_words(phrase: &str) -> Vec<String> {
    let cleaned = phrase.replace('_', " ");
    scan(&cleaned)
        .into_iter()
        .filter(|s| s.kind == SpanKind::Word)
        .map(|s| canonical_key(&cleaned[s.range]))
        .collect()
}

enum Column {
    Emotion(Emotion),
    Positive,
    Negative,
}

fn parse_header(tokens: &[&str]) -> Option<Vec<Column>> {
    let cols: Option<Vec<Column>> = tokens
        .iter()
        .map(|t| match t.to_ascii_lowercase().as_str() {
            "positive" => Some(Column::Positive),
            "negative" => Some(Column::Negative),
            other => other.parse().ok().map(Column::Emotion),
        })
        .collect();
    cols.filter(|c| !c.is_empty())
}

impl EmotionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry, merging flags with an existing entry of the same
    /// canonical form. Entries without flags or words are ignored and
    /// reported as `false`.
    pub fn insert(&mut self, phrase: &str, flags: EmotionFlags) -> bool {
        let key = canonical_words(phrase).join(" ");
        if key.is_empty() || flags.is_empty() {
            return false;
        }
        match self.entries.get_mut(&key) {
            Some(f) => {
                *f = f.union(flags);
                self.merged_duplicates += 1;
            }
            None => {
                self.entries.insert(key, flags);
            }
        }
        true
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut lex = EmotionLexicon::new();
        let mut columns: Vec<Column> = Emotion::ALL.into_iter().map(Column::Emotion).collect();
        let mut first = true;
        for (lineno, line) in text.lines().enumerate() {
            let row = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if std::mem::take(&mut first) {
                if let Some(cols) = parse_header(&tokens[1..]) {
                    columns = cols;
                    continue;
                }
            }
            let k = columns.len();
            let malformed = |message: String| Error::MalformedRow {
                file: name.to_string(),
                row,
                message,
            };
            if tokens.len() < k + 1 {
                return Err(malformed(format!("expected an entry and {k} flag columns")));
            }
            let (words, flags) = tokens.split_at(tokens.len() - k);
            let mut emotions = EmotionFlags::default();
            let mut polarity = None;
            for (col, flag) in columns.iter().zip(flags) {
                let on = match *flag {
                    "0" => false,
                    "1" => true,
                    other => return Err(malformed(format!("flag `{other}` is not 0 or 1"))),
                };
                if !on {
                    continue;
                }
                match col {
                    Column::Emotion(e) => emotions = emotions.union(EmotionFlags::of([*e])),
                    Column::Positive => polarity = Some(Polarity::Positive),
                    Column::Negative => polarity = Some(Polarity::Negative),
                }
            }
            let phrase = words.join(" ");
            if emotions.is_empty() {
                lex.warnings.push(format!(
                    "{name}: row {row}: `{phrase}` has no emotion flag, skipped"
                ));
                continue;
            }
            lex.insert(&phrase, emotions);
            if let Some(p) = polarity {
                lex.polarity.insert(canonical_words(&phrase).join(" "), p);
            }
        }
        Ok(lex)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, phrase: &str) -> Option<EmotionFlags> {
        self.entries
            .get(&canonical_words(phrase).join(" "))
            .copied()
    }

    pub fn polarity(&self, phrase: &str) -> Option<Polarity> {
        self.polarity
            .get(&canonical_words(phrase).join(" "))
            .copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, EmotionFlags)> {
        self.entries.iter().map(|(k, f)| (k.as_str(), *f))
    }
}

/// One lexicon hit, in token positions of [`match_tokens`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconMatch {
    pub start: usize,
    pub len: usize,
    pub flags: EmotionFlags,
}

/// The token stream the matcher sees: canonical words, with `None` for
/// punctuation and other symbols (which never match and break phrases).
/// Segmentation underscores are treated as spaces.
pub fn match_tokens(text: &str) -> Vec<Option<String>> {
    let cleaned = text.replace('_', " ");
    scan(&cleaned)
        .into_iter()
        .map(|s| match s.kind {
            SpanKind::Word => Some(canonical_key(&cleaned[s.range])),
            SpanKind::Symbol => None,
        })
        .collect()
}

/// Compiled matcher: a trie over canonical word sequences with
/// leftmost-longest, non-overlapping semantics.
#[derive(Debug, Clone)]
pub struct LexiconMatcher {
    trie: TokenTrie<EmotionFlags>,
}

impl LexiconMatcher {
    pub fn new(lexicon: &EmotionLexicon) -> Result<Self> {
        if lexicon.is_empty() {
            return Err(Error::config(
                "cannot build a matcher from an empty lexicon",
            ));
        }
        let mut trie = TokenTrie::new();
        for (key, flags) in lexicon.entries() {
            let words: Vec<&str> = key.split(' ').collect();
            trie.insert(&words, flags);
        }
        Ok(LexiconMatcher { trie })
    }

    pub fn find_tokens(&self, tokens: &[Option<String>]) -> Vec<LexiconMatch> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let run_end = tokens[i..]
                .iter()
                .position(Option::is_none)
                .map_or(tokens.len(), |p| i + p);
            if run_end == i {
                i += 1;
                continue;
            }
            let run: Vec<&str> = tokens[i..run_end]
                .iter()
                .map(|t| t.as_deref().expect("word token"))
                .collect();
            let mut j = 0;
            while j < run.len() {
                match self.trie.longest_prefix(&run[j..]) {
                    Some((len, &flags)) => {
                        out.push(LexiconMatch {
                            start: i + j,
                            len,
                            flags,
                        });
                        j += len;
                    }
                    None => j += 1,
                }
            }
            i = run_end;
        }
        out
    }

    pub fn find(&self, text: &str) -> Vec<LexiconMatch> {
        self.find_tokens(&match_tokens(text))
    }
}

/// Raw per-emotion counts for one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EmotionCountVector {
    pub counts: [u32; 8],
}

impl EmotionCountVector {
    pub fn get(&self, e: Emotion) -> u32 {
        self.counts[e.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Every match adds one to each emotion its entry carries.
pub fn count_emotions(matcher: &LexiconMatcher, text: &str) -> EmotionCountVector {
    let mut v = EmotionCountVector::default();
    for m in matcher.find(text) {
        for e in m.flags.iter() {
            v.counts[e.index()] += 1;
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MappingScheme {
    Vsmec6,
    Vsfc3,
    Vihsd2,
    Custom(String),
}

/// Projection of the eight emotions onto a dataset's target dimensions.
/// Every emotion maps to exactly one target or is dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub scheme: MappingScheme,
    pub targets: Vec<String>,
    pub rules: [Option<usize>; 8],
}

impl LabelMapping {
    /// `rules` pairs an emotion with the name of its target, or `None` to
    /// drop it. Every emotion must appear exactly once.
    pub fn new<S: AsRef<str>>(
        scheme: MappingScheme,
        targets: &[S],
        rules: &[(Emotion, Option<&str>)],
    ) -> Result<Self> {
        let targets: Vec<String> = targets.iter().map(|t| t.as_ref().to_string()).collect();
        let mut out: [Option<Option<usize>>; 8] = [None; 8];
        for &(e, target) in rules {
            if out[e.index()].is_some() {
                return Err(Error::config(format!("emotion {e} is mapped twice")));
            }
            let dim = match target {
                None => None,
                Some(t) => Some(
                    targets
                        .iter()
                        .position(|x| x.eq_ignore_ascii_case(t))
                        .ok_or_else(|| {
                            Error::config(format!("{e} maps to undeclared target `{t}`"))
                        })?,
                ),
            };
            out[e.index()] = Some(dim);
        }
        if let Some(e) = Emotion::ALL.into_iter().find(|e| out[e.index()].is_none()) {
            return Err(Error::config(format!(
                "emotion {e} is neither mapped nor dropped"
            )));
        }
        if targets.is_empty() {
            return Err(Error::config("a label mapping needs at least one target"));
        }
        Ok(LabelMapping {
            scheme,
            targets,
            rules: out.map(|r| r.expect("checked above")),
        })
    }

    /// Disgust, Fear, Enjoyment, Sadness, Surprise, Anger; trust and
    /// anticipation dropped.
    pub fn vsmec6() -> Self {
        use Emotion::*;
        Self::new(
            MappingScheme::Vsmec6,
            &[
                "Disgust",
                "Fear",
                "Enjoyment",
                "Sadness",
                "Surprise",
                "Anger",
            ],
            &[
                (Disgust, Some("Disgust")),
                (Fear, Some("Fear")),
                (Joy, Some("Enjoyment")),
                (Sadness, Some("Sadness")),
                (Surprise, Some("Surprise")),
                (Anger, Some("Anger")),
                (Trust, None),
                (Anticipation, None),
            ],
        )
        .expect("static mapping")
    }

    /// Joy and trust are positive; sadness, anger, fear and disgust
    /// negative; the rest neutral.
    pub fn vsfc3() -> Self {
        use Emotion::*;
        Self::new(
            MappingScheme::Vsfc3,
            &["Positive", "Negative", "Neutral"],
            &[
                (Joy, Some("Positive")),
                (Trust, Some("Positive")),
                (Sadness, Some("Negative")),
                (Anger, Some("Negative")),
                (Fear, Some("Negative")),
                (Disgust, Some("Negative")),
                (Surprise, Some("Neutral")),
                (Anticipation, Some("Neutral")),
            ],
        )
        .expect("static mapping")
    }

    /// Anger, fear and disgust are toxic; joy and trust clean.
    pub fn vihsd2() -> Self {
        use Emotion::*;
        Self::new(
            MappingScheme::Vihsd2,
            &["Toxic", "Clean"],
            &[
                (Anger, Some("Toxic")),
                (Fear, Some("Toxic")),
                (Disgust, Some("Toxic")),
                (Joy, Some("Clean")),
                (Trust, Some("Clean")),
                (Sadness, None),
                (Surprise, None),
                (Anticipation, None),
            ],
        )
        .expect("static mapping")
    }

    /// Mapping table file: an optional `targets` line fixing the order of
    /// the output dimensions, then one `EMOTION  TARGET` line per emotion,
    /// with `-` as the target for dropped emotions.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&text, &name).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut targets: Vec<String> = Vec::new();
        let mut rules: Vec<(Emotion, Option<String>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0].eq_ignore_ascii_case("targets") {
                targets = fields[1..].iter().map(|s| s.to_string()).collect();
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::MalformedRow {
                    file: name.to_string(),
                    row: lineno + 1,
                    message: "expected `EMOTION TARGET`".into(),
                });
            }
            let e: Emotion = fields[0].parse()?;
            let target = (fields[1] != "-").then(|| fields[1].to_string());
            if let Some(t) = &target {
                if !targets.iter().any(|x| x.eq_ignore_ascii_case(t)) {
                    targets.push(t.clone());
                }
            }
            rules.push((e, target));
        }
        let rules: Vec<(Emotion, Option<&str>)> =
            rules.iter().map(|(e, t)| (*e, t.as_deref())).collect();
        let scheme = match name.to_ascii_uppercase().as_str() {
            "VSMEC6" => MappingScheme::Vsmec6,
            "VSFC3" => MappingScheme::Vsfc3,
            "VIHSD2" => MappingScheme::Vihsd2,
            _ => MappingScheme::Custom(name.to_string()),
        };
        Self::new(scheme, &targets, &rules)
    }

    /// A built-in scheme name, or else a path to a mapping file.
    pub fn resolve(spec: &str) -> Result<Self> {
        match spec.to_ascii_uppercase().as_str() {
            "VSMEC6" => Ok(Self::vsmec6()),
            "VSFC3" => Ok(Self::vsfc3()),
            "VIHSD2" => Ok(Self::vihsd2()),
            _ => Self::load(spec),
        }
    }

    pub fn dim(&self) -> usize {
        self.targets.len()
    }
}

/// Sums the counts of all emotions that map to each target dimension.
pub fn map_labels(counts: &EmotionCountVector, mapping: &LabelMapping) -> Vec<u32> {
    let mut out = vec![0u32; mapping.dim()];
    for e in Emotion::ALL {
        if let Some(d) = mapping.rules[e.index()] {
            out[d] += counts.get(e);
        }
    }
    out
}
