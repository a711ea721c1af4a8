use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{evaluate_dataset, train_run, EvalOutput, Workspace};
use crate::corpus::{corpus_stats, length_histogram, CorpusStats};
use crate::error::{Error, Result};
use crate::eval::{run_ablation, AblationGrid, AblationReport};
use crate::features::encode_sequence;
use crate::fsutil::write_atomic;
use crate::models::{predict, Checkpoint, Example, TrainHistory};
use crate::normalize::{Pipeline, TechniqueSet};
use crate::tokens::tokenize;

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub stats: CorpusStats,
    /// Whitespace-token length to document count.
    pub length_histogram: BTreeMap<usize, usize>,
}

pub fn cmd_stats(config: &ExperimentConfig) -> Result<StatsReport> {
    let ws = Workspace::open(config.clone())?;
    let docs = ws.load_documents()?;
    Ok(StatsReport {
        stats: corpus_stats(&docs, &ws.schema)?,
        length_histogram: length_histogram(&docs),
    })
}

/// Rewrites the text column of `input` with the configured techniques,
/// keeping every other column and the row order. Returns the row count.
pub fn cmd_preprocess(config: &ExperimentConfig, input: &Path, output: &Path) -> Result<usize> {
    let ws = Workspace::open_resources(config.clone())?;
    let pipeline = Pipeline::new(config.techniques, &ws.resources)?;
    let delim = config.delimiter as u8;
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let mut rdr = csv::ReaderBuilder::new().delimiter(delim).from_reader(file);
    let name = input.display().to_string();
    let malformed = |row: usize, message: String| Error::MalformedRow {
        file: name.clone(),
        row,
        message,
    };
    let headers = rdr
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let text_idx = headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}') == config.text_column)
        .ok_or_else(|| malformed(1, format!("header has no `{}` column", config.text_column)))?;
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(delim)
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Serde(e.to_string());
    wtr.write_record(&headers).map_err(csv_err)?;
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(i + 2, e.to_string()))?;
        let fields: Vec<String> = rec
            .iter()
            .enumerate()
            .map(|(k, f)| {
                if k == text_idx {
                    pipeline.run(f)
                } else {
                    f.to_string()
                }
            })
            .collect();
        wtr.write_record(&fields).map_err(csv_err)?;
        rows += 1;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    write_atomic(output, &bytes)?;
    Ok(rows)
}

/// Evaluation artifact written by `train` (test split) and `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFile {
    pub split: String,
    pub checkpoint_checksum: String,
    pub config: ExperimentConfig,
    pub eval: EvalOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub checksum: String,
    pub history: TrainHistory,
    pub embedding_coverage: Option<f64>,
    pub lexicon_warnings: Vec<String>,
    pub test: Option<EvalFile>,
}

/// Writes `checkpoint.json`, `history.json`, `config.json` and, when the
/// split has a test part, `eval_test.json` under the output directory.
pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainSummary> {
    let ws = Workspace::open(config.clone())?;
    let split = ws.load_split().map_err(|e| e.in_stage("load"))?;
    let lexicon_on = ws.lexicon.is_some();
    let run = train_run(
        &ws,
        &split,
        config.techniques,
        lexicon_on,
        config.model,
        config.seed,
    )?;
    let experiment = serde_json::to_value(&run.config)?;
    let ck = Checkpoint::new(
        run.params,
        run.vocab,
        ws.labels(),
        Some(run.history.clone()),
        experiment,
    );
    let out = &config.out;
    let ck_path = out.join("checkpoint.json");
    let checksum = ck.save(&ck_path)?;
    write_json(&out.join("history.json"), &run.history)?;
    write_json(&out.join("config.json"), &run.config)?;
    let test = match run.test {
        Some(eval) => {
            let f = EvalFile {
                split: "test".into(),
                checkpoint_checksum: checksum.clone(),
                config: run.config.clone(),
                eval,
            };
            write_json(&out.join("eval_test.json"), &f)?;
            Some(f)
        }
        None => None,
    };
    Ok(TrainSummary {
        checkpoint: ck_path,
        checksum,
        history: run.history,
        embedding_coverage: run.embedding_coverage,
        lexicon_warnings: ws.lexicon.map(|l| l.warnings).unwrap_or_default(),
        test,
    })
}

fn recorded_config(ck: &Checkpoint) -> Result<ExperimentConfig> {
    serde_json::from_value(ck.experiment.clone()).map_err(|e| {
        Error::config(format!(
            "checkpoint carries an unreadable experiment config: {e}"
        ))
    })
}

/// Lists every way the checkpoint disagrees with the workspace.
fn compatibility_problems(ck: &Checkpoint, ws: &Workspace) -> Vec<String> {
    let mut problems = Vec::new();
    let mc = &ck.params.config;
    if ck.labels != ws.labels() {
        problems.push(format!(
            "labels: checkpoint {:?}, config {:?}",
            ck.labels,
            ws.labels()
        ));
    }
    let ws_dim = ws.lexicon.as_ref().map(|l| l.mapping.dim());
    if mc.lexicon_dim > 0 && ws_dim != Some(mc.lexicon_dim) {
        problems.push(format!(
            "lexicon_dim: checkpoint {}, config {}",
            mc.lexicon_dim,
            ws_dim.map_or("none".into(), |d| d.to_string())
        ));
    }
    if mc.max_len != ws.config.max_len {
        problems.push(format!(
            "max_len: checkpoint {}, config {}",
            mc.max_len, ws.config.max_len
        ));
    }
    if mc.vocab_size != ck.vocab.len() {
        problems.push(format!(
            "vocabulary: model {} rows, stored vocabulary {}",
            mc.vocab_size,
            ck.vocab.len()
        ));
    }
    problems
}

/// Evaluates a checkpoint on one split of the configured data, using the
/// techniques recorded in the checkpoint. Writes `eval_<split>.json`.
pub fn cmd_eval(
    config: &ExperimentConfig,
    checkpoint: &Path,
    split_name: &str,
) -> Result<EvalFile> {
    let ck = Checkpoint::load(checkpoint)?;
    let recorded = recorded_config(&ck)?;
    let ws = Workspace::open(ExperimentConfig {
        techniques: recorded.techniques,
        ..config.clone()
    })?;
    let problems = compatibility_problems(&ck, &ws);
    if !problems.is_empty() {
        return Err(Error::config(format!(
            "incompatible checkpoint: {}",
            problems.join("; ")
        )));
    }
    let split = ws.load_split().map_err(|e| e.in_stage("load"))?;
    let docs = split.part(split_name)?;
    if docs.is_empty() {
        return Err(Error::EmptyInput(format!("{split_name} split")));
    }
    let lexicon_on = ck.params.config.lexicon_dim > 0;
    let data = ws
        .prepare(docs, recorded.techniques, lexicon_on)?
        .encode(&ck.vocab, ck.params.config.max_len);
    let eval = evaluate_dataset(&ck.params, &data, ck.labels.clone())
        .map_err(|e| e.in_stage("evaluate"))?;
    let f = EvalFile {
        split: split_name.to_string(),
        checkpoint_checksum: ck.checksum()?,
        config: recorded,
        eval,
    };
    write_json(&config.out.join(format!("eval_{split_name}.json")), &f)?;
    Ok(f)
}

/// The grid used when none is given: the configured technique set and
/// model, with and without the lexicon.
pub fn default_grid(config: &ExperimentConfig) -> AblationGrid {
    AblationGrid {
        techniques: vec![config.techniques],
        lexicon: vec![false, true],
        models: vec![config.model],
    }
}

/// Trains and tests every grid cell on one shared split and seed. Writes
/// `ablation.json` and `ablation.txt`.
pub fn cmd_ablate(config: &ExperimentConfig, grid: &AblationGrid) -> Result<AblationReport> {
    let ws = Workspace::open(config.clone())?;
    let split = ws.load_split().map_err(|e| e.in_stage("load"))?;
    if split.test.is_empty() {
        return Err(Error::config("ablation needs a test split"));
    }
    let report = run_ablation(grid, config.seed, |t, lex, kind, seed| {
        let run = train_run(&ws, &split, t, lex, kind, seed)?;
        Ok(run.test.expect("test split checked above").report)
    });
    write_json(&config.out.join("ablation.json"), &report)?;
    write_atomic(
        config.out.join("ablation.txt"),
        report.to_table().as_bytes(),
    )?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub probabilities: Vec<(String, f64)>,
    /// The text after the checkpoint's preprocessing.
    pub normalized: String,
}

/// Classifies `text` with the preprocessing and lexicon recorded in the
/// checkpoint.
pub fn cmd_predict(checkpoint: &Path, text: &str) -> Result<Prediction> {
    let ck = Checkpoint::load(checkpoint)?;
    let recorded = recorded_config(&ck)?;
    let ws = Workspace::open_resources(recorded).map_err(|e| e.in_stage("checkpoint resources"))?;
    let techniques: TechniqueSet = ws.config.techniques;
    let pipeline = Pipeline::new(techniques, &ws.resources)?;
    let normalized = pipeline.run(text);
    let mc = &ck.params.config;
    let lexicon = if mc.lexicon_dim > 0 {
        let lex = ws.lexicon.as_ref().ok_or_else(|| {
            Error::config("checkpoint was trained with a lexicon that is not available")
        })?;
        lex.vector(&normalized)
    } else {
        Vec::new()
    };
    let ex = Example {
        tokens: encode_sequence(&tokenize(&normalized), &ck.vocab, mc.max_len),
        lexicon,
    };
    let (label, probs) = predict(&ck.params, &ex)?;
    Ok(Prediction {
        label: ck.labels[label].clone(),
        probabilities: ck.labels.iter().cloned().zip(probs).collect(),
        normalized,
    })
}
