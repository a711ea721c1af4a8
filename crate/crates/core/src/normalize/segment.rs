use std::fmt::Debug;
use std::fs;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::tokens::{find_phrases, phrase_words, TokenTrie};

/// Word segmentation seam. The built-in [`GreedySegmenter`] can be swapped
/// for an adapter around an external segmenter.
pub trait Segmenter: Debug + Send + Sync {
    /// Returns `text` with the syllables of each multi-syllable word joined
    /// by `_`.
    fn segment(&self, text: &str) -> String;
}

/// Greedy leftmost-longest segmenter over a list of multi-syllable words.
#[derive(Debug, Clone, Default)]
pub struct GreedySegmenter {
    words: TokenTrie<()>,
}

impl GreedySegmenter {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut trie = TokenTrie::new();
        for w in words {
            let syllables = phrase_words(&w.as_ref().nfc().collect::<String>());
            if syllables.len() >= 2 {
                trie.insert(&syllables, ());
            }
        }
        GreedySegmenter { words: trie }
    }

    /// One word per line, syllables separated by spaces or underscores.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let seg = Self::new(
            text.lines()
                .map(|l| l.trim().replace('_', " "))
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        );
        if seg.words.is_empty() {
            return Err(Error::EmptyInput(path.display().to_string()));
        }
        Ok(seg)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Segmenter for GreedySegmenter {
    fn segment(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for m in find_phrases(text, &self.words) {
            out.push_str(&text[last..m.range.start]);
            let joined: Vec<&str> = m.words.iter().map(|r| &text[r.clone()]).collect();
            out.push_str(&joined.join("_"));
            last = m.range.end;
        }
        out.push_str(&text[last..]);
        out
    }
}
