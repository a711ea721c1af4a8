//! Token scanning shared by the normalizer, the lexicon matcher and the
//! model encoders.
//!
//! Text is viewed as a sequence of non-whitespace spans. A span is either a
//! *word* (a maximal run of alphanumeric characters and `_`) or a *symbol*
//! run (a maximal run of anything else that is not whitespace, such as
//! punctuation, emoticons or emoji). Multi-word phrases only ever match
//! across consecutive word spans, so punctuation always breaks a phrase.

use std::collections::HashMap;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    Word,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub range: Range<usize>,
    pub kind: SpanKind,
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits `text` into word and symbol spans, in order.
pub fn scan(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut current: Option<(usize, SpanKind)> = None;
    for (i, c) in text.char_indices() {
        let kind = if c.is_whitespace() {
            None
        } else if is_word_char(c) {
            Some(SpanKind::Word)
        } else {
            Some(SpanKind::Symbol)
        };
        match (current, kind) {
            (Some((_, k)), Some(nk)) if k == nk => {}
            (Some((start, k)), _) => {
                spans.push(Span {
                    range: start..i,
                    kind: k,
                });
                current = kind.map(|nk| (i, nk));
            }
            (None, Some(nk)) => current = Some((i, nk)),
            (None, None) => {}
        }
    }
    if let Some((start, k)) = current {
        spans.push(Span {
            range: start..text.len(),
            kind: k,
        });
    }
    spans
}

/// Lower-cased tokens as seen by the classifiers.
pub fn tokenize(text: &str) -> Vec<String> {
    scan(text)
        .into_iter()
        .map(|s| text[s.range].to_lowercase())
        .collect()
}

/// Splits a dictionary phrase into its word tokens, lower-cased.
pub fn phrase_words(phrase: &str) -> Vec<String> {
    scan(phrase)
        .into_iter()
        .filter(|s| s.kind == SpanKind::Word)
        .map(|s| phrase[s.range].to_lowercase())
        .collect()
}

#[derive(Debug, Clone, Default)]
struct TrieNode<V> {
    children: HashMap<String, usize>,
    value: Option<V>,
}

/// A trie keyed by whole tokens. Each path from the root spells a phrase.
#[derive(Debug, Clone)]
pub struct TokenTrie<V> {
    nodes: Vec<TrieNode<V>>,
    len: usize,
    max_depth: usize,
}

impl<V> Default for TokenTrie<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V> TokenTrie<V> {
    pub fn new() -> Self {
        TokenTrie {
            nodes: vec![TrieNode {
                children: HashMap::new(),
                value: None,
            }],
            len: 0,
            max_depth: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Inserts a phrase, returning the previous payload if the phrase was
    /// already present. Empty phrases are ignored.
    pub fn insert<S: AsRef<str>>(&mut self, phrase: &[S], value: V) -> Option<V> {
        if phrase.is_empty() {
            return None;
        }
        let mut node = 0;
        for tok in phrase {
            let tok = tok.as_ref();
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(TrieNode {
                        children: HashMap::new(),
                        value: None,
                    });
                    self.nodes[node].children.insert(tok.to_string(), next);
                    next
                }
            };
        }
        self.max_depth = self.max_depth.max(phrase.len());
        let old = self.nodes[node].value.replace(value);
        if old.is_none() {
            self.len += 1;
        }
        old
    }

    pub fn get<S: AsRef<str>>(&self, phrase: &[S]) -> Option<&V> {
        let mut node = 0;
        for tok in phrase {
            node = *self.nodes[node].children.get(tok.as_ref())?;
        }
        self.nodes[node].value.as_ref()
    }

    pub fn get_mut<S: AsRef<str>>(&mut self, phrase: &[S]) -> Option<&mut V> {
        let mut node = 0;
        for tok in phrase {
            node = *self.nodes[node].children.get(tok.as_ref())?;
        }
        self.nodes[node].value.as_mut()
    }

    /// Longest phrase that starts at `tokens[0]`; returns its length in
    /// tokens together with its payload.
    pub fn longest_prefix<S: AsRef<str>>(&self, tokens: &[S]) -> Option<(usize, &V)> {
        let mut node = 0;
        let mut best = None;
        for (i, tok) in tokens.iter().enumerate() {
            match self.nodes[node].children.get(tok.as_ref()) {
                Some(&next) => node = next,
                None => break,
            }
            if let Some(v) = self.nodes[node].value.as_ref() {
                best = Some((i + 1, v));
            }
        }
        best
    }
}

/// A phrase found by [`find_phrases`].
pub(crate) struct PhraseMatch<'t, V> {
    /// From the start of the first word to the end of the last.
    pub range: Range<usize>,
    /// The byte range of every word in the phrase.
    pub words: Vec<Range<usize>>,
    pub value: &'t V,
}

/// Scans runs of consecutive word spans left to right and, at each word,
/// takes the longest phrase found in `trie` (keys are lower-cased words),
/// resuming after it. Non-overlapping, in text order.
pub(crate) fn find_phrases<'t, V>(text: &str, trie: &'t TokenTrie<V>) -> Vec<PhraseMatch<'t, V>> {
    let mut out = Vec::new();
    if trie.is_empty() {
        return out;
    }
    let spans = scan(text);
    let keys: Vec<String> = spans
        .iter()
        .map(|s| text[s.range.clone()].to_lowercase())
        .collect();
    let mut i = 0;
    while i < spans.len() {
        if spans[i].kind != SpanKind::Word {
            i += 1;
            continue;
        }
        let mut run_end = i;
        while run_end < spans.len() && spans[run_end].kind == SpanKind::Word {
            run_end += 1;
        }
        match trie.longest_prefix(&keys[i..run_end]) {
            Some((n, value)) => {
                out.push(PhraseMatch {
                    range: spans[i].range.start..spans[i + n - 1].range.end,
                    words: spans[i..i + n].iter().map(|s| s.range.clone()).collect(),
                    value,
                });
                i += n;
            }
            None => i += 1,
        }
    }
    out
}

pub(crate) struct Replacement {
    pub range: Range<usize>,
    pub text: String,
}

pub(crate) fn apply_replacements(text: &str, reps: &[Replacement]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for r in reps {
        out.push_str(&text[last..r.range.start]);
        out.push_str(&r.text);
        last = r.range.end;
    }
    out.push_str(&text[last..]);
    out
}
