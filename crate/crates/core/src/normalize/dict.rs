//! Replacement dictionaries and stopword lists.
//!
//! On disk a dictionary is UTF-8 text with one `surface<TAB>canonical`
//! pair per line; blank lines and lines starting with `#` are ignored. A
//! stopword list has one word or phrase per line.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::tone::canonical_key;
use crate::error::{Error, Result};
use crate::tokens::{self, phrase_words, TokenTrie};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DictionaryKind {
    Misspelling,
    Acronym,
    Teencode,
    Emoticon,
}

impl DictionaryKind {
    fn is_word_level(self) -> bool {
        self != DictionaryKind::Emoticon
    }
}

#[derive(Debug, Clone)]
pub struct ReplacementDictionary {
    kind: DictionaryKind,
    entries: BTreeMap<String, String>,
    phrases: TokenTrie<String>,
    by_first_char: HashMap<char, Vec<(String, String)>>,
}

fn nfc(s: &str) -> String {
    s.trim().nfc().collect()
}

impl ReplacementDictionary {
    /// Builds a dictionary, rejecting duplicates with conflicting canonical
    /// forms and any canonical form that contains one of the surface forms.
    pub fn new<I, S, T>(kind: DictionaryKind, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut dict = ReplacementDictionary {
            kind,
            entries: BTreeMap::new(),
            phrases: TokenTrie::new(),
            by_first_char: HashMap::new(),
        };
        for (surface, canonical) in pairs {
            dict.insert(surface.as_ref(), canonical.as_ref())?;
        }
        dict.validate()?;
        Ok(dict)
    }

    pub fn load(path: impl AsRef<Path>, kind: DictionaryKind) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 || fields[0].trim().is_empty() || fields[1].trim().is_empty() {
                return Err(Error::MalformedRow {
                    file,
                    row: lineno + 1,
                    message: "expected `surface<TAB>canonical`".into(),
                });
            }
            pairs.push((fields[0].to_string(), fields[1].to_string()));
        }
        Self::new(kind, pairs).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{file}: {msg}")),
            other => other,
        })
    }

    fn insert(&mut self, surface: &str, canonical: &str) -> Result<()> {
        let canonical = nfc(canonical);
        let surface = if self.kind.is_word_level() {
            let words = phrase_words(&nfc(surface));
            if words.is_empty() {
                return Err(Error::config(format!(
                    "surface form `{surface}` has no words"
                )));
            }
            words.join(" ")
        } else {
            nfc(surface)
        };
        if surface.is_empty() || canonical.is_empty() {
            return Err(Error::config("empty dictionary entry"));
        }
        if let Some(prev) = self.entries.get(&surface) {
            if *prev != canonical {
                return Err(Error::config(format!(
                    "surface form `{surface}` maps to both `{prev}` and `{canonical}`"
                )));
            }
            return Ok(());
        }
        if self.kind.is_word_level() {
            let words: Vec<&str> = surface.split(' ').collect();
            self.phrases.insert(&words, canonical.clone());
        } else {
            let first = surface.chars().next().expect("non-empty surface");
            let bucket = self.by_first_char.entry(first).or_default();
            bucket.push((surface.clone(), canonical.clone()));
            bucket.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        }
        self.entries.insert(surface, canonical);
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (surface, canonical) in &self.entries {
            if let Some(hit) = self.surface_within(canonical) {
                return Err(Error::config(format!(
                    "canonical form `{canonical}` of `{surface}` contains surface form `{hit}`"
                )));
            }
        }
        Ok(())
    }

    /// First surface form found inside `text`, if any.
    fn surface_within(&self, text: &str) -> Option<String> {
        if self.kind.is_word_level() {
            let words = phrase_words(text);
            (0..words.len()).find_map(|i| {
                self.phrases
                    .longest_prefix(&words[i..])
                    .map(|(n, _)| words[i..i + n].join(" "))
            })
        } else {
            self.entries
                .keys()
                .find(|s| text.contains(s.as_str()))
                .cloned()
        }
    }

    /// Adds every entry of `other` to this dictionary.
    pub fn merge(&mut self, other: &ReplacementDictionary) -> Result<()> {
        if self.kind.is_word_level() != other.kind.is_word_level() {
            return Err(Error::config(format!(
                "cannot merge {:?} dictionary into {:?}",
                other.kind, self.kind
            )));
        }
        for (s, c) in &other.entries {
            self.insert(s, c)?;
        }
        self.validate()
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, c)| (s.as_str(), c.as_str()))
    }

    pub(crate) fn phrases(&self) -> &TokenTrie<String> {
        &self.phrases
    }

    /// Emoticon candidates starting with `c`, longest first.
    pub(crate) fn emoticons_starting_with(&self, c: char) -> &[(String, String)] {
        self.by_first_char.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every word that occurs in a canonical form, as lookup keys.
    pub fn standard_vocabulary(&self) -> HashSet<String> {
        self.entries
            .values()
            .flat_map(|c| phrase_words(c))
            .map(|w| canonical_key(&w))
            .collect()
    }

    /// Byte ranges of word-level surface forms found in `text` under the
    /// same leftmost-longest scan used for replacement.
    pub fn find_surfaces(&self, text: &str) -> Vec<Range<usize>> {
        tokens::find_phrases(text, &self.phrases)
            .into_iter()
            .map(|m| m.range)
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct StopwordSet {
    phrases: TokenTrie<()>,
}

impl StopwordSet {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut phrases = TokenTrie::new();
        for w in words {
            let words = phrase_words(&nfc(w.as_ref()));
            phrases.insert(&words, ());
        }
        StopwordSet { phrases }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set = Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        );
        if set.is_empty() {
            return Err(Error::EmptyInput(path.display().to_string()));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.phrases.get(&phrase_words(phrase)).is_some()
    }

    pub(crate) fn phrases(&self) -> &TokenTrie<()> {
        &self.phrases
    }
}
