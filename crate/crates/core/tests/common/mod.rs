#![allow(dead_code)]

use std::path::Path;

use lexsent::cli::{train_run, ExperimentConfig, Workspace};
use lexsent::models::ModelKind;
use lexsent::normalize::TechniqueSet;
use lexsent::synthetic::planted;

pub const PLANTED_DOCS: usize = 2000;

/// Writes the planted corpus for `seed` into `dir` and returns a config
/// training a small Text-CNN on it. Counts are fused unscaled: the label is
/// their argmax, and log scaling shrinks the margin between neighbouring
/// counts enough to slow training down noticeably.
pub fn planted_config(dir: &Path, docs: usize, seed: u64) -> ExperimentConfig {
    let files = planted(docs, seed)
        .write(dir)
        .expect("write planted corpus");
    let toml = format!(
        r#"
dataset = {corpus:?}
labels = ["JOY", "SADNESS", "ANGER", "FEAR"]
id_column = "id"
lexicon = {lexicon:?}
mapping = {mapping:?}
lexicon_scaling = "none"
split = [0.8, 0.1, 0.1]
model = "textcnn"
embedding_dim = 16
filters_per_width = 32
max_len = 40
batch_size = 32
epochs = 20
patience = 5
seed = {seed}
out = {out:?}
"#,
        corpus = files.corpus,
        lexicon = files.lexicon,
        mapping = files.mapping,
        out = dir.join("runs"),
    );
    ExperimentConfig::from_toml_str(&toml).expect("planted config")
}

/// Test macro-F1 of the planted Text-CNN with and without lexicon fusion.
pub fn planted_pair(dir: &Path, docs: usize, seed: u64) -> (f64, f64) {
    let ws = Workspace::open(planted_config(dir, docs, seed)).expect("workspace");
    let split = ws.load_split().expect("split");
    let f1 = |lexicon_on| {
        train_run(
            &ws,
            &split,
            TechniqueSet::EMPTY,
            lexicon_on,
            ModelKind::Textcnn,
            seed,
        )
        .expect("training run")
        .test
        .expect("test split")
        .report
        .macro_f1
    };
    (f1(true), f1(false))
}

pub mod gradcheck {
    use lexsent::models::{init_model, Example, ModelConfig, ModelKind, ModelParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub struct Instance {
        pub params: ModelParams,
        pub batch: Vec<Example>,
        pub golds: Vec<usize>,
    }

    /// A small randomly parameterized model with a random padded batch.
    pub fn instance(kind: ModelKind, seed: u64) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab_size = 12;
        let max_len = 7;
        let lexicon_dim = rng.random_range(0..=3);
        let config = ModelConfig {
            kind,
            filter_widths: vec![1, 2, 3],
            filters_per_width: 3,
            max_len,
            lexicon_dim,
            class_count: 3,
            vocab_size,
            embedding_dim: 4,
            seed,
            ..ModelConfig::default()
        };
        let mut params = init_model(&config, None).expect("init");
        params.randomize(seed, 0.5);
        let batch: Vec<Example> = (0..4)
            .map(|_| {
                let len = rng.random_range(1..=max_len);
                let mut tokens: Vec<u32> = (0..len)
                    .map(|_| rng.random_range(1..vocab_size as u32))
                    .collect();
                tokens.resize(max_len, 0);
                let lexicon = (0..lexicon_dim)
                    .map(|_| f64::from(rng.random_range(0..4u8)))
                    .collect();
                Example { tokens, lexicon }
            })
            .collect();
        let golds = (0..batch.len()).map(|_| rng.random_range(0..3)).collect();
        Instance {
            params,
            batch,
            golds,
        }
    }
}

pub mod fixtures {
    use std::path::PathBuf;
    use std::sync::Arc;

    use lexsent::normalize::{
        DictionaryKind, GreedySegmenter, ReplacementDictionary, Resources, StopwordSet,
    };
    use rand::seq::IndexedRandom;
    use rand::Rng;

    pub fn resource_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../resources")
    }

    pub fn resource(name: &str) -> PathBuf {
        resource_dir().join(name)
    }

    /// The shipped dictionaries, with acronyms folded into misspellings.
    pub fn shipped_resources(remove_stopwords: bool) -> Resources {
        let mut misspellings =
            ReplacementDictionary::load(resource("misspellings.tsv"), DictionaryKind::Misspelling)
                .unwrap();
        misspellings
            .merge(
                &ReplacementDictionary::load(resource("acronyms.tsv"), DictionaryKind::Acronym)
                    .unwrap(),
            )
            .unwrap();
        Resources {
            emoticons: Some(
                ReplacementDictionary::load(resource("emoticons.tsv"), DictionaryKind::Emoticon)
                    .unwrap(),
            ),
            misspellings: Some(misspellings),
            teencode: Some(
                ReplacementDictionary::load(resource("teencode.tsv"), DictionaryKind::Teencode)
                    .unwrap(),
            ),
            stopwords: Some(StopwordSet::load(resource("stopwords.txt")).unwrap()),
            remove_stopwords,
            segmenter: Some(Arc::new(
                GreedySegmenter::load(resource("segmentation.txt")).unwrap(),
            )),
        }
    }

    fn column(file: &str, col: usize) -> Vec<String> {
        std::fs::read_to_string(resource(file))
            .unwrap()
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split('\t').nth(col).map(str::to_string))
            .collect()
    }

    /// Pieces that exercise every pass: dictionary surfaces and their
    /// replacements, emoticons, elongations, old-style tone placement,
    /// segmentation words, punctuation and plain words.
    pub struct TextPieces {
        pieces: Vec<String>,
        emoticons: Vec<String>,
    }

    impl TextPieces {
        pub fn shipped() -> Self {
            let mut pieces = Vec::new();
            for f in ["misspellings.tsv", "acronyms.tsv", "teencode.tsv"] {
                pieces.extend(column(f, 0));
                pieces.extend(column(f, 1));
            }
            pieces.extend(column("stopwords.txt", 0));
            pieces.extend(column("segmentation.txt", 0));
            pieces.extend(column("emoticons.tsv", 1));
            for w in [
                "ủaaa",
                "đẹppp",
                "quáaa",
                "tuỳ",
                "hoà",
                "khoẻ",
                "thuỷ",
                "qúy",
                "Qúy",
                "KO",
                "Ko",
                "vuiii",
                "hảaa",
                "mình",
                "ăn",
                "cơm",
                "trời",
                "ơi",
                "sức_khỏe",
                "the",
                "abc",
                "x",
                "2024",
                "100k",
                "...",
                ".",
                ",",
                "!",
                "?",
                "\"",
                "(",
                ")",
                "-",
                "_",
                "#tag",
                "@user",
                "http://a.vn",
            ] {
                pieces.push(w.to_string());
            }
            TextPieces {
                pieces,
                emoticons: column("emoticons.tsv", 0),
            }
        }

        pub fn sample<R: Rng>(&self, rng: &mut R) -> String {
            let n = rng.random_range(0..14);
            let mut out = String::new();
            for _ in 0..n {
                let sep = *[" ", " ", " ", "  ", "", "\t"].choose(rng).unwrap();
                out.push_str(sep);
                if rng.random_bool(0.2) {
                    let e = self.emoticons.choose(rng).unwrap();
                    out.push_str(e);
                    let last = e.chars().last().unwrap();
                    for _ in 0..rng.random_range(0..3) {
                        out.push(last);
                    }
                } else {
                    out.push_str(self.pieces.choose(rng).unwrap());
                }
            }
            out
        }
    }
}

pub mod oracle {
    use lexsent::lexicon::{match_tokens, EmotionLexicon, LexiconMatch};
    use rand::seq::IndexedRandom;
    use rand::Rng;

    /// Leftmost-longest scan that tries every entry at every position.
    pub fn naive_find(lexicon: &EmotionLexicon, text: &str) -> Vec<LexiconMatch> {
        let tokens = match_tokens(text);
        let entries: Vec<(Vec<String>, _)> = lexicon
            .entries()
            .map(|(p, f)| (p.split(' ').map(str::to_string).collect(), f))
            .collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut best: Option<(usize, _)> = None;
            for (words, flags) in &entries {
                let n = words.len();
                let fits = i + n <= tokens.len()
                    && words
                        .iter()
                        .zip(&tokens[i..i + n])
                        .all(|(w, t)| t.as_deref() == Some(w.as_str()));
                if fits && best.is_none_or(|(len, _)| n > len) {
                    best = Some((n, *flags));
                }
            }
            match best {
                Some((len, flags)) => {
                    out.push(LexiconMatch {
                        start: i,
                        len,
                        flags,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    const SYLLABLES: [&str; 8] = ["an", "bà", "cô", "đi", "ơi", "Ăn", "BÀ", "tuỳ"];

    /// A random lexicon over a tiny syllable inventory, so phrases overlap
    /// and share prefixes, with a text drawn from the same inventory.
    pub fn random_case<R: Rng>(rng: &mut R) -> (EmotionLexicon, String) {
        use lexsent::lexicon::{Emotion, EmotionFlags};
        let mut lex = EmotionLexicon::new();
        for _ in 0..rng.random_range(1..12) {
            let n = rng.random_range(1..=4);
            let phrase: Vec<&str> = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
            let sep = if rng.random_bool(0.2) { "_" } else { " " };
            let e = *Emotion::ALL.choose(rng).unwrap();
            lex.insert(&phrase.join(sep), EmotionFlags::of([e]));
        }
        let mut text = String::new();
        for _ in 0..rng.random_range(0..25) {
            let piece = if rng.random_bool(0.1) {
                *[".", ",", ":)", "!", "-"].choose(rng).unwrap()
            } else {
                *SYLLABLES.choose(rng).unwrap()
            };
            text.push_str(piece);
            text.push_str(if rng.random_bool(0.1) { "_" } else { " " });
        }
        (lex, text)
    }
}

pub mod metric_oracle {
    use lexsent::eval::ConfusionMatrix;
    use rand::Rng;

    /// Accuracy, macro F1 and weighted F1 straight from the definitions,
    /// with 0 for every undefined ratio.
    #[allow(clippy::needless_range_loop)]
    pub fn recompute(cells: &[Vec<u64>]) -> (f64, f64, f64) {
        let k = cells.len();
        let total: u64 = cells.iter().flatten().sum();
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let mut correct = 0.0;
        let mut f1s = Vec::new();
        let mut supports = Vec::new();
        for c in 0..k {
            let tp = cells[c][c] as f64;
            let gold: f64 = cells[c].iter().sum::<u64>() as f64;
            let pred: f64 = (0..k).map(|r| cells[r][c]).sum::<u64>() as f64;
            let p = div(tp, pred);
            let r = div(tp, gold);
            f1s.push(div(2.0 * p * r, p + r));
            supports.push(gold);
            correct += tp;
        }
        let acc = correct / total as f64;
        let macro_f1 = f1s.iter().sum::<f64>() / k as f64;
        let weighted = f1s.iter().zip(&supports).map(|(f, s)| f * s).sum::<f64>() / total as f64;
        (acc, macro_f1, weighted)
    }

    /// A random non-empty matrix of 2 to 7 classes; some rows and columns
    /// are left empty.
    pub fn random_matrix<R: Rng>(rng: &mut R) -> ConfusionMatrix {
        let k = rng.random_range(2..=7);
        let mut cells = vec![vec![0u64; k]; k];
        let empty_row = rng.random_bool(0.3).then(|| rng.random_range(0..k));
        for (r, row) in cells.iter_mut().enumerate() {
            for cell in row.iter_mut() {
                if Some(r) != empty_row && rng.random_bool(0.6) {
                    *cell = rng.random_range(0..50);
                }
            }
        }
        if cells.iter().flatten().sum::<u64>() == 0 {
            cells[0][0] = 1;
        }
        ConfusionMatrix {
            labels: (0..k).map(|i| format!("c{i}")).collect(),
            cells,
        }
    }
}
