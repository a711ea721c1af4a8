//! Text pre-processing passes.
//!
//! | id | pass |
//! |----|------|
//! | 1  | word standardization (elongations, tone marks, NFC) |
//! | 2  | emoticons to emoji |
//! | 3  | misspelling and acronym correction |
//! | 4  | teencode expansion and optional stopword removal |
//! | 5  | word segmentation |
//!
//! A [`TechniqueSet`] selects any subset; enabled passes always run in
//! ascending order. [`Pipeline::run`] repeats the ordered passes until the
//! text stops changing, so its output is a fixed point of the pipeline.

mod dict;
mod emoticon;
mod segment;
mod tone;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use dict::{DictionaryKind, ReplacementDictionary, StopwordSet};
pub use emoticon::{count_emoticons, emoticons_to_emoji};
pub use segment::{GreedySegmenter, Segmenter};
pub use tone::{
    canonical_key, place_tone, squeeze_elongation, standardize_word, standardize_words,
};

use crate::error::{Error, Result};
use crate::tokens::{apply_replacements, find_phrases, Replacement};

const MAX_ROUNDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Technique {
    Standardize = 1,
    Emoticons = 2,
    Misspellings = 3,
    TeencodeStopwords = 4,
    Segmentation = 5,
}

impl Technique {
    pub const ALL: [Technique; 5] = [
        Technique::Standardize,
        Technique::Emoticons,
        Technique::Misspellings,
        Technique::TeencodeStopwords,
        Technique::Segmentation,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Technique::ALL.get(usize::from(i).checked_sub(1)?).copied()
    }
}

/// A subset of the five passes. Declaration order is irrelevant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TechniqueSet(u8);

impl TechniqueSet {
    pub const EMPTY: TechniqueSet = TechniqueSet(0);

    pub fn new<I: IntoIterator<Item = Technique>>(techniques: I) -> Self {
        techniques.into_iter().fold(Self::EMPTY, Self::with)
    }

    pub fn all() -> Self {
        Self::new(Technique::ALL)
    }

    /// All 32 subsets, ordered by bit pattern.
    pub fn every_subset() -> impl Iterator<Item = TechniqueSet> {
        (0u8..32).map(TechniqueSet)
    }

    pub fn with(self, t: Technique) -> Self {
        TechniqueSet(self.0 | (1 << (t.index() - 1)))
    }

    pub fn contains(self, t: Technique) -> bool {
        self.0 & (1 << (t.index() - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Enabled passes in execution order.
    pub fn iter(self) -> impl Iterator<Item = Technique> {
        Technique::ALL
            .into_iter()
            .filter(move |&t| self.contains(t))
    }
}

impl fmt::Display for TechniqueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("original");
        }
        let parts: Vec<String> = self.iter().map(|t| t.index().to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for TechniqueSet {
    type Err = Error;

    /// Parses `"1+2+3"`; `""`, `"0"`, `"none"` and `"original"` give the
    /// empty set.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty()
            || s == "0"
            || s.eq_ignore_ascii_case("none")
            || s.eq_ignore_ascii_case("original")
        {
            return Ok(TechniqueSet::EMPTY);
        }
        let mut set = TechniqueSet::EMPTY;
        for part in s.split(['+', ',']) {
            let t = part
                .trim()
                .parse::<u8>()
                .ok()
                .and_then(Technique::from_index)
                .ok_or_else(|| Error::config(format!("bad technique `{part}` in `{s}`")))?;
            set = set.with(t);
        }
        Ok(set)
    }
}

impl serde::Serialize for TechniqueSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for TechniqueSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dictionaries and tools the passes draw on. Only the ones needed by the
/// enabled passes have to be present.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub emoticons: Option<ReplacementDictionary>,
    /// Misspellings and acronyms, merged.
    pub misspellings: Option<ReplacementDictionary>,
    pub teencode: Option<ReplacementDictionary>,
    pub stopwords: Option<StopwordSet>,
    pub remove_stopwords: bool,
    pub segmenter: Option<Arc<dyn Segmenter>>,
}

/// T3: replaces misspelled words and acronyms by their standard form.
pub fn correct_misspellings(text: &str, dict: &ReplacementDictionary) -> String {
    let reps: Vec<Replacement> = find_phrases(text, dict.phrases())
        .into_iter()
        .map(|m| Replacement {
            range: m.range,
            text: m.value.clone(),
        })
        .collect();
    apply_replacements(text, &reps)
}

/// T4: expands teencode, then drops stopwords when `remove_stopwords` is
/// set. A dropped stopword takes the whitespace after it with it (or the
/// whitespace before it, at the end of the text).
pub fn apply_teencode_stopwords(
    text: &str,
    teencode: &ReplacementDictionary,
    stopwords: Option<&StopwordSet>,
    remove_stopwords: bool,
) -> String {
    let expanded = correct_misspellings(text, teencode);
    let Some(stop) = stopwords.filter(|_| remove_stopwords) else {
        return expanded;
    };
    let mut cuts: Vec<std::ops::Range<usize>> = Vec::new();
    for m in find_phrases(&expanded, stop.phrases()) {
        let after = &expanded[m.range.end..];
        let trailing = after.len() - after.trim_start().len();
        let cut = if trailing < after.len() {
            m.range.start..m.range.end + trailing
        } else {
            let before = &expanded[..m.range.start];
            before.trim_end().len()..expanded.len()
        };
        match cuts.last_mut() {
            Some(prev) if cut.start <= prev.end => prev.end = prev.end.max(cut.end),
            _ => cuts.push(cut),
        }
    }
    let reps: Vec<Replacement> = cuts
        .into_iter()
        .map(|range| Replacement {
            range,
            text: String::new(),
        })
        .collect();
    apply_replacements(&expanded, &reps)
}

/// T5 with the given segmenter.
pub fn segment_words(text: &str, segmenter: &dyn Segmenter) -> String {
    segmenter.segment(text)
}

/// A validated combination of passes and the resources they need.
#[derive(Debug, Clone)]
pub struct Pipeline<'r> {
    techniques: TechniqueSet,
    resources: &'r Resources,
    vocabulary: HashSet<String>,
}

impl<'r> Pipeline<'r> {
    pub fn new(techniques: TechniqueSet, resources: &'r Resources) -> Result<Self> {
        let missing = |what: &str, t: Technique| {
            Error::config(format!("technique {} needs a {what}", t.index()))
        };
        for t in techniques.iter() {
            match t {
                Technique::Standardize => {}
                Technique::Emoticons if resources.emoticons.is_none() => {
                    return Err(missing("emoticon dictionary", t))
                }
                Technique::Misspellings if resources.misspellings.is_none() => {
                    return Err(missing("misspelling dictionary", t))
                }
                Technique::TeencodeStopwords if resources.teencode.is_none() => {
                    return Err(missing("teencode dictionary", t))
                }
                Technique::TeencodeStopwords
                    if resources.remove_stopwords && resources.stopwords.is_none() =>
                {
                    return Err(missing("stopword list", t))
                }
                Technique::Segmentation if resources.segmenter.is_none() => {
                    return Err(missing("segmentation lexicon", t))
                }
                _ => {}
            }
        }
        let vocabulary = resources
            .misspellings
            .as_ref()
            .map(ReplacementDictionary::standard_vocabulary)
            .unwrap_or_default();
        Ok(Pipeline {
            techniques,
            resources,
            vocabulary,
        })
    }

    pub fn techniques(&self) -> TechniqueSet {
        self.techniques
    }

    fn run_once(&self, text: &str) -> String {
        let r = self.resources;
        let mut cur = text.to_string();
        for t in self.techniques.iter() {
            cur = match t {
                Technique::Standardize => standardize_words(&cur, &self.vocabulary),
                Technique::Emoticons => {
                    emoticons_to_emoji(&cur, r.emoticons.as_ref().expect("validated"))
                }
                Technique::Misspellings => {
                    correct_misspellings(&cur, r.misspellings.as_ref().expect("validated"))
                }
                Technique::TeencodeStopwords => apply_teencode_stopwords(
                    &cur,
                    r.teencode.as_ref().expect("validated"),
                    r.stopwords.as_ref(),
                    r.remove_stopwords,
                ),
                Technique::Segmentation => {
                    segment_words(&cur, r.segmenter.as_deref().expect("validated"))
                }
            };
        }
        cur
    }

    /// Applies the enabled passes in order, repeating until the text is
    /// stable.
    pub fn run(&self, text: &str) -> String {
        if self.techniques.is_empty() {
            return text.to_string();
        }
        let mut cur = self.run_once(text);
        for _ in 1..MAX_ROUNDS {
            let next = self.run_once(&cur);
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }
}

/// Convenience wrapper: validate, then run.
pub fn run_pipeline(text: &str, techniques: TechniqueSet, resources: &Resources) -> Result<String> {
    Ok(Pipeline::new(techniques, resources)?.run(text))
}
