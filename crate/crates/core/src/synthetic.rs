//! Constructed corpora with known structure, for checking that training and
//! lexicon fusion behave as designed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::lexicon::{Emotion, EmotionFlags, EmotionLexicon, LabelMapping, MappingScheme};
use crate::models::{Dataset, Example};
use crate::seed;

pub const SEPARABLE_LEN: usize = 8;

/// Two classes with disjoint cue vocabularies plus shared filler; encoded
/// directly. Returns the dataset and the vocabulary size it assumes.
pub fn separable(n: usize, root_seed: u64) -> (Dataset, usize) {
    let mut rng = seed::rng(root_seed, "separable");
    let mut data = Dataset::default();
    for i in 0..n {
        let label = i % 2;
        let cue_base = 2 + 10 * label as u32;
        let mut tokens: Vec<u32> = (0..3).map(|_| cue_base + rng.random_range(0..10)).collect();
        tokens.extend((0..3).map(|_| 22 + rng.random_range(0..10)));
        tokens.shuffle(&mut rng);
        tokens.resize(SEPARABLE_LEN, 0);
        data.examples.push(Example {
            tokens,
            lexicon: Vec::new(),
        });
        data.labels.push(label);
    }
    (data, 32)
}

/// Emotions planted in [`planted`] documents, in label order.
pub const PLANTED_EMOTIONS: [Emotion; 4] = [
    Emotion::Joy,
    Emotion::Sadness,
    Emotion::Anger,
    Emotion::Fear,
];
const WORDS_PER_EMOTION: usize = 6;
const FILLER_WORDS: usize = 300;

pub struct PlantedCorpus {
    pub docs: Vec<Document>,
    pub lexicon: EmotionLexicon,
    pub mapping: LabelMapping,
    pub labels: Vec<String>,
}

/// Paths written by [`PlantedCorpus::write`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedFiles {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub mapping: PathBuf,
}

impl PlantedCorpus {
    /// Writes `corpus.csv` (columns `id,text,label`), `lexicon.tsv` and
    /// `mapping.tsv` into `dir`, in the formats the loaders read.
    pub fn write(&self, dir: &Path) -> Result<PlantedFiles> {
        let files = PlantedFiles {
            corpus: dir.join("corpus.csv"),
            lexicon: dir.join("lexicon.tsv"),
            mapping: dir.join("mapping.tsv"),
        };
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Serde(e.to_string());
        wtr.write_record(["id", "text", "label"]).map_err(csv_err)?;
        for d in &self.docs {
            wtr.write_record([&d.id, &d.text, &d.label])
                .map_err(csv_err)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        write_atomic(&files.corpus, &bytes)?;

        let mut lex = String::from("entry");
        for e in Emotion::ALL {
            let _ = write!(lex, "\t{}", e.name().to_lowercase());
        }
        lex.push('\n');
        for (phrase, flags) in self.lexicon.entries() {
            lex.push_str(phrase);
            for e in Emotion::ALL {
                lex.push_str(if flags.contains(e) { "\t1" } else { "\t0" });
            }
            lex.push('\n');
        }
        write_atomic(&files.lexicon, lex.as_bytes())?;

        let mut map = format!("targets {}\n", self.labels.join(" "));
        for e in Emotion::ALL {
            let target = if PLANTED_EMOTIONS.contains(&e) {
                e.name()
            } else {
                "-"
            };
            let _ = writeln!(map, "{} {target}", e.name());
        }
        write_atomic(&files.mapping, map.as_bytes())?;
        Ok(files)
    }
}

fn emotion_word(e: Emotion, k: usize) -> String {
    format!("{}{k}", e.name().to_lowercase())
}

/// Documents whose label is the emotion with the most lexicon hits. Every
/// document contains words of all four emotions (1 to 3 hits for each
/// loser, one more than the largest loser count for the winner), so the
/// mere presence of an emotion word carries no information about the label:
/// only the counts do.
pub fn planted(n: usize, root_seed: u64) -> PlantedCorpus {
    let mut rng = seed::rng(root_seed, "planted");
    let mut lexicon = EmotionLexicon::new();
    for e in PLANTED_EMOTIONS {
        for k in 0..WORDS_PER_EMOTION {
            lexicon.insert(&emotion_word(e, k), EmotionFlags::of([e]));
        }
    }
    let labels: Vec<String> = PLANTED_EMOTIONS
        .iter()
        .map(|e| e.name().to_string())
        .collect();
    let rules: Vec<(Emotion, Option<&str>)> = Emotion::ALL
        .into_iter()
        .map(|e| {
            let t = PLANTED_EMOTIONS.contains(&e).then(|| e.name());
            (e, t)
        })
        .collect();
    let mapping = LabelMapping::new(MappingScheme::Custom("planted".into()), &labels, &rules)
        .expect("complete mapping");

    let mut docs = Vec::with_capacity(n);
    for i in 0..n {
        let winner = rng.random_range(0..PLANTED_EMOTIONS.len());
        let mut counts = [0usize; 4];
        for (c, slot) in counts.iter_mut().enumerate() {
            if c != winner {
                *slot = rng.random_range(1..=3);
            }
        }
        counts[winner] = counts.iter().max().copied().unwrap_or(0) + 1;
        let mut words: Vec<String> = Vec::new();
        for (c, &k) in counts.iter().enumerate() {
            for _ in 0..k {
                words.push(emotion_word(
                    PLANTED_EMOTIONS[c],
                    rng.random_range(0..WORDS_PER_EMOTION),
                ));
            }
        }
        let filler = rng.random_range(8..=16);
        for _ in 0..filler {
            words.push(format!("w{}", rng.random_range(0..FILLER_WORDS)));
        }
        words.shuffle(&mut rng);
        docs.push(Document {
            id: format!("p{i}"),
            text: words.join(" "),
            label: labels[winner].clone(),
        });
    }
    PlantedCorpus {
        docs,
        lexicon,
        mapping,
        labels,
    }
}
