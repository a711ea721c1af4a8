use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::corpus::{load_corpus, split_corpus, CorpusSchema, Document, Split};
use crate::error::{Error, Result};
use crate::eval::{metrics, row_normalize, ConfusionMatrix, EvalReport, NormalizedMatrix};
use crate::features::{build_vocab, encode_sequence, load_embeddings, EmbeddingMatrix, Vocabulary};
use crate::lexicon::{count_emotions, map_labels, EmotionLexicon, LabelMapping, LexiconMatcher};
use crate::models::{predict_batch, train, Dataset, Example, ModelKind, ModelParams, TrainHistory};
use crate::normalize::{
    DictionaryKind, GreedySegmenter, Pipeline, ReplacementDictionary, Resources, StopwordSet,
    TechniqueSet,
};
use crate::tokens::tokenize;

/// A compiled lexicon together with the projection onto the label space.
#[derive(Debug, Clone)]
pub struct LexiconFeatures {
    pub matcher: LexiconMatcher,
    pub mapping: LabelMapping,
    pub entries: usize,
    pub warnings: Vec<String>,
}

impl LexiconFeatures {
    pub fn new(lexicon: &EmotionLexicon, mapping: LabelMapping) -> Result<Self> {
        Ok(LexiconFeatures {
            matcher: LexiconMatcher::new(lexicon)?,
            mapping,
            entries: lexicon.len(),
            warnings: lexicon.warnings.clone(),
        })
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        map_labels(&count_emotions(&self.matcher, text), &self.mapping)
            .into_iter()
            .map(f64::from)
            .collect()
    }
}

/// Resolved configuration plus everything loaded from it.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: ExperimentConfig,
    pub schema: CorpusSchema,
    pub resources: Resources,
    pub lexicon: Option<LexiconFeatures>,
}

fn load_dict(
    path: &Option<std::path::PathBuf>,
    kind: DictionaryKind,
) -> Result<Option<ReplacementDictionary>> {
    path.as_ref()
        .map(|p| ReplacementDictionary::load(p, kind))
        .transpose()
}

impl Workspace {
    /// Validates the whole configuration, then loads its resources.
    pub fn open(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Self::open_resources(config)
    }

    /// Loads dictionaries, segmenter and lexicon without requiring the
    /// dataset to be present (inference from a checkpoint).
    pub fn open_resources(config: ExperimentConfig) -> Result<Self> {
        let schema = config.corpus_schema()?;
        let mut misspellings = load_dict(&config.misspellings, DictionaryKind::Misspelling)?;
        if let Some(acr) = load_dict(&config.acronyms, DictionaryKind::Acronym)? {
            match &mut misspellings {
                Some(m) => m.merge(&acr)?,
                None => misspellings = Some(acr),
            }
        }
        let segmenter = match &config.segmentation {
            Some(p) => {
                Some(Arc::new(GreedySegmenter::load(p)?) as Arc<dyn crate::normalize::Segmenter>)
            }
            None => None,
        };
        let resources = Resources {
            emoticons: load_dict(&config.emoticons, DictionaryKind::Emoticon)?,
            misspellings,
            teencode: load_dict(&config.teencode, DictionaryKind::Teencode)?,
            stopwords: config
                .stopwords
                .as_ref()
                .map(StopwordSet::load)
                .transpose()?,
            remove_stopwords: config.remove_stopwords,
            segmenter,
        };
        Pipeline::new(config.techniques, &resources)?;
        let lexicon = match &config.lexicon {
            Some(p) => Some(LexiconFeatures::new(
                &EmotionLexicon::load(p)?,
                config.label_mapping()?,
            )?),
            None => None,
        };
        Ok(Workspace {
            config,
            schema,
            resources,
            lexicon,
        })
    }

    pub fn load_documents(&self) -> Result<Vec<Document>> {
        let path = self
            .config
            .dataset
            .as_ref()
            .ok_or_else(|| Error::config("no `dataset` configured"))?;
        load_corpus(path, &self.schema, &self.config.format())
    }

    /// Explicit split files when configured, else a seeded split of the
    /// dataset.
    pub fn load_split(&self) -> Result<Split> {
        let c = &self.config;
        if let Some(train_path) = &c.train_file {
            let fmt = c.format();
            let load = |p: &Option<std::path::PathBuf>| -> Result<Vec<Document>> {
                p.as_ref()
                    .map_or(Ok(Vec::new()), |p| load_corpus(p, &self.schema, &fmt))
            };
            return Ok(Split {
                train: load_corpus(train_path, &self.schema, &fmt)?,
                dev: load(&c.dev_file)?,
                test: load(&c.test_file)?,
            });
        }
        split_corpus(&self.load_documents()?, c.split, c.seed, c.stratified)
    }

    pub fn labels(&self) -> Vec<String> {
        self.schema.labels.clone()
    }

    /// Runs the normalization pipeline for `techniques` on every document.
    pub fn prepare(
        &self,
        docs: &[Document],
        techniques: TechniqueSet,
        lexicon_on: bool,
    ) -> Result<Prepared> {
        let pipeline =
            Pipeline::new(techniques, &self.resources).map_err(|e| e.in_stage("preprocess"))?;
        let lex = if lexicon_on {
            Some(self.lexicon.as_ref().ok_or_else(|| {
                Error::config("lexicon fusion requested but no `lexicon` configured")
                    .in_stage("lexicon")
            })?)
        } else {
            None
        };
        let mut out = Prepared::default();
        for d in docs {
            let text = pipeline.run(&d.text);
            out.tokens.push(tokenize(&text));
            out.lexicon
                .push(lex.map_or_else(Vec::new, |l| l.vector(&text)));
            out.labels
                .push(self.schema.index_of(&d.label).ok_or_else(|| {
                    Error::config(format!("label `{}` is not in the schema", d.label))
                })?);
            out.texts.push(text);
        }
        Ok(out)
    }

    /// The configuration recorded in artifacts for a run with these
    /// settings.
    pub fn resolved(
        &self,
        techniques: TechniqueSet,
        lexicon_on: bool,
        kind: ModelKind,
        seed: u64,
    ) -> ExperimentConfig {
        let mut c = self.config.clone();
        c.techniques = techniques;
        c.model = kind;
        c.seed = seed;
        if !lexicon_on {
            c.lexicon = None;
        }
        c
    }
}

/// Normalized documents ready for encoding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prepared {
    pub texts: Vec<String>,
    pub tokens: Vec<Vec<String>>,
    pub lexicon: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Prepared {
    pub fn encode(&self, vocab: &Vocabulary, max_len: usize) -> Dataset {
        Dataset {
            examples: self
                .tokens
                .iter()
                .zip(&self.lexicon)
                .map(|(t, l)| Example {
                    tokens: encode_sequence(t, vocab, max_len),
                    lexicon: l.clone(),
                })
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub confusion: ConfusionMatrix,
    pub normalized: NormalizedMatrix,
}

pub fn evaluate_dataset(
    params: &ModelParams,
    data: &Dataset,
    labels: Vec<String>,
) -> Result<EvalOutput> {
    let preds: Vec<usize> = predict_batch(params, &data.examples)?
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let confusion = ConfusionMatrix::from_indices(&data.labels, &preds, labels)?;
    Ok(EvalOutput {
        report: metrics(&confusion)?,
        normalized: row_normalize(&confusion),
        confusion,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub params: ModelParams,
    pub history: TrainHistory,
    pub vocab: Vocabulary,
    pub embedding_coverage: Option<f64>,
    /// Test-split evaluation, when the split has a test part.
    pub test: Option<EvalOutput>,
    pub config: ExperimentConfig,
}

/// Preprocess, count lexicon hits, encode and train one configuration,
/// then evaluate it on the test part.
pub fn train_run(
    ws: &Workspace,
    split: &Split,
    techniques: TechniqueSet,
    lexicon_on: bool,
    kind: ModelKind,
    seed: u64,
) -> Result<TrainedRun> {
    let c = &ws.config;
    let train_docs = ws.prepare(&split.train, techniques, lexicon_on)?;
    let dev_docs = ws.prepare(&split.dev, techniques, lexicon_on)?;
    let vocab = build_vocab(&train_docs.tokens, c.min_freq).map_err(|e| e.in_stage("encode"))?;
    let (embeddings, embedding_dim): (Option<EmbeddingMatrix>, usize) = match (&c.embeddings, kind)
    {
        (Some(p), ModelKind::Textcnn) => {
            let m = load_embeddings(p, &vocab, seed).map_err(|e| e.in_stage("embeddings"))?;
            let d = m.dim;
            (Some(m), d)
        }
        _ => (None, c.embedding_dim),
    };
    let lexicon_dim = if lexicon_on {
        ws.lexicon.as_ref().map_or(0, |l| l.mapping.dim())
    } else {
        0
    };
    let mut model_config = c.model_config(
        kind,
        lexicon_dim,
        vocab.len(),
        ws.schema.class_count(),
        embedding_dim,
    );
    model_config.seed = seed;
    let train_set = train_docs.encode(&vocab, c.max_len);
    let dev_set = dev_docs.encode(&vocab, c.max_len);
    let (params, history) = train(&model_config, &train_set, &dev_set, embeddings.as_ref())
        .map_err(|e| e.in_stage("train"))?;
    let test = if split.test.is_empty() {
        None
    } else {
        let t = ws
            .prepare(&split.test, techniques, lexicon_on)?
            .encode(&vocab, c.max_len);
        Some(evaluate_dataset(&params, &t, ws.labels()).map_err(|e| e.in_stage("evaluate"))?)
    };
    Ok(TrainedRun {
        params,
        history,
        vocab,
        embedding_coverage: embeddings.map(|m| m.coverage),
        test,
        config: ws.resolved(techniques, lexicon_on, kind, seed),
    })
}
