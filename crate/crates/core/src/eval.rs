//! Confusion matrices, classification metrics and the ablation grid.
//!
//! Precision, recall and F1 are 0 whenever their denominator is 0, and
//! classes with no support still count towards the macro average.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::normalize::TechniqueSet;

/// Rows are gold labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_indices(golds: &[usize], preds: &[usize], labels: Vec<String>) -> Result<Self> {
        if golds.len() != preds.len() {
            return Err(Error::Shape(format!(
                "{} gold labels but {} predictions",
                golds.len(),
                preds.len()
            )));
        }
        if golds.is_empty() {
            return Err(Error::EmptyInput("evaluation set".into()));
        }
        let c = labels.len();
        let mut cells = vec![vec![0u64; c]; c];
        for (&g, &p) in golds.iter().zip(preds) {
            if g >= c || p >= c {
                return Err(Error::Shape(format!(
                    "label index {} outside {c} labels",
                    g.max(p)
                )));
            }
            cells[g][p] += 1;
        }
        Ok(ConfusionMatrix { labels, cells })
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.cells.len()).map(|i| self.cells[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.cells[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.cells.iter().map(|r| r[class]).sum()
    }
}

pub fn confusion_matrix<G, P, L>(golds: &[G], preds: &[P], labels: &[L]) -> Result<ConfusionMatrix>
where
    G: AsRef<str>,
    P: AsRef<str>,
    L: AsRef<str>,
{
    let names: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    let index = |s: &str| {
        names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| Error::config(format!("label `{s}` is not among {names:?}")))
    };
    let g: Vec<usize> = golds
        .iter()
        .map(|x| index(x.as_ref()))
        .collect::<Result<_>>()?;
    let p: Vec<usize> = preds
        .iter()
        .map(|x| index(x.as_ref()))
        .collect::<Result<_>>()?;
    ConfusionMatrix::from_indices(&g, &p, names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub total: u64,
    /// Value used for undefined precision, recall or F1.
    pub zero_division: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyInput("confusion matrix".into()));
    }
    let per_class: Vec<ClassMetrics> = cm
        .labels
        .iter()
        .enumerate()
        .map(|(c, label)| {
            let tp = cm.cells[c][c];
            let precision = ratio(tp, cm.predicted(c));
            let recall = ratio(tp, cm.support(c));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label: label.clone(),
                precision,
                recall,
                f1,
                support: cm.support(c),
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / k;
    let weighted_f1 = per_class
        .iter()
        .map(|m| m.support as f64 * m.f1)
        .sum::<f64>()
        / total as f64;
    Ok(EvalReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_f1,
        weighted_f1,
        per_class,
        total,
        zero_division: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Rows with no gold documents, emitted as zeros.
    pub empty_rows: Vec<bool>,
}

pub fn row_normalize(cm: &ConfusionMatrix) -> NormalizedMatrix {
    let mut rows = Vec::with_capacity(cm.cells.len());
    let mut empty_rows = Vec::with_capacity(cm.cells.len());
    for r in &cm.cells {
        let s: u64 = r.iter().sum();
        empty_rows.push(s == 0);
        rows.push(r.iter().map(|&x| ratio(x, s)).collect());
    }
    NormalizedMatrix {
        labels: cm.labels.clone(),
        rows,
        empty_rows,
    }
}

/// Cross product of technique sets, lexicon on/off and model kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub techniques: Vec<TechniqueSet>,
    pub lexicon: Vec<bool>,
    pub models: Vec<ModelKind>,
}

impl AblationGrid {
    /// Cells in report order: technique set, then model kind, then the
    /// lexicon-off/on pair.
    pub fn cells(&self) -> Vec<(TechniqueSet, bool, ModelKind)> {
        let mut out = Vec::new();
        for &t in &self.techniques {
            for &m in &self.models {
                for &l in &self.lexicon {
                    out.push((t, l, m));
                }
            }
        }
        out
    }

    /// Parses `techniques=1;1+2 lexicon=off,on models=logreg,textcnn`
    /// (fields separated by whitespace, list items by `;` for techniques
    /// and `,` otherwise). Missing fields default to the original text,
    /// lexicon off/on and both model kinds.
    pub fn parse(spec: &str) -> Result<Self> {
        Self::parse_with(
            spec,
            AblationGrid {
                techniques: vec![TechniqueSet::EMPTY],
                lexicon: vec![false, true],
                models: vec![ModelKind::Logreg, ModelKind::Textcnn],
            },
        )
    }

    /// Like [`AblationGrid::parse`], taking missing axes from `base`.
    pub fn parse_with(spec: &str, base: AblationGrid) -> Result<Self> {
        let mut grid = base;
        for field in spec.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::config(format!("grid field `{field}` is not key=value")))?;
            match key {
                "techniques" => {
                    grid.techniques = value.split(';').map(str::parse).collect::<Result<_>>()?;
                }
                "lexicon" => {
                    grid.lexicon = value
                        .split(',')
                        .map(|v| match v {
                            "on" | "true" | "1" => Ok(true),
                            "off" | "false" | "0" => Ok(false),
                            _ => Err(Error::config(format!("lexicon value `{v}` is not on/off"))),
                        })
                        .collect::<Result<_>>()?;
                }
                "models" => {
                    grid.models = value.split(',').map(str::parse).collect::<Result<_>>()?;
                }
                _ => return Err(Error::config(format!("unknown grid field `{key}`"))),
            }
        }
        if grid.techniques.is_empty() || grid.lexicon.is_empty() || grid.models.is_empty() {
            return Err(Error::config("ablation grid has an empty axis"));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellOutcome {
    Ok(EvalReport),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub techniques: TechniqueSet,
    pub lexicon: bool,
    pub model: ModelKind,
    pub outcome: CellOutcome,
}

impl AblationCell {
    pub fn report(&self) -> Option<&EvalReport> {
        match &self.outcome {
            CellOutcome::Ok(r) => Some(r),
            CellOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub cells: Vec<AblationCell>,
    /// Metric name to the index of its best cell (first on ties).
    pub best: BTreeMap<String, usize>,
}

pub const METRICS: [&str; 3] = ["accuracy", "macro_f1", "weighted_f1"];

fn metric(r: &EvalReport, name: &str) -> f64 {
    match name {
        "accuracy" => r.accuracy,
        "macro_f1" => r.macro_f1,
        _ => r.weighted_f1,
    }
}

/// Evaluates every grid cell with `run_cell`, which receives the shared
/// base seed. A failing cell is recorded and the grid continues.
pub fn run_ablation<F>(grid: &AblationGrid, seed: u64, mut run_cell: F) -> AblationReport
where
    F: FnMut(TechniqueSet, bool, ModelKind, u64) -> Result<EvalReport>,
{
    let cells: Vec<AblationCell> = grid
        .cells()
        .into_iter()
        .map(|(techniques, lexicon, model)| AblationCell {
            techniques,
            lexicon,
            model,
            outcome: match run_cell(techniques, lexicon, model, seed) {
                Ok(r) => CellOutcome::Ok(r),
                Err(e) => CellOutcome::Failed(e.to_string()),
            },
        })
        .collect();
    let mut best = BTreeMap::new();
    for name in METRICS {
        let mut top: Option<(usize, f64)> = None;
        for (i, c) in cells.iter().enumerate() {
            if let Some(r) = c.report() {
                let v = metric(r, name);
                if top.is_none_or(|(_, b)| v > b) {
                    top = Some((i, v));
                }
            }
        }
        if let Some((i, _)) = top {
            best.insert(name.to_string(), i);
        }
    }
    AblationReport { seed, cells, best }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

impl AblationReport {
    /// Aligned text table with percentages; `*` marks the best cell per
    /// metric.
    pub fn to_table(&self) -> String {
        let header = [
            "Techniques",
            "Model",
            "Lexicon",
            "Accuracy(%)",
            "Macro F1(%)",
            "Weighted F1(%)",
        ];
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            let mut row = vec![
                c.techniques.to_string(),
                c.model.to_string(),
                if c.lexicon { "on" } else { "off" }.to_string(),
            ];
            match &c.outcome {
                CellOutcome::Ok(r) => {
                    for name in METRICS {
                        let mark = if self.best.get(name) == Some(&i) {
                            "*"
                        } else {
                            ""
                        };
                        row.push(format!("{}{mark}", pct(metric(r, name))));
                    }
                }
                CellOutcome::Failed(reason) => {
                    row.push(format!("FAILED: {reason}"));
                    row.push(String::new());
                    row.push(String::new());
                }
            }
            rows.push(row);
        }
        let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                if !cell.starts_with("FAILED") {
                    *w = (*w).max(cell.chars().count());
                }
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&header.map(String::from), &mut out);
        line(
            &widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>(),
            &mut out,
        );
        for r in &rows {
            line(r, &mut out);
        }
        out
    }
}

/// Report as an aligned text summary plus the confusion matrix.
pub fn render_report(report: &EvalReport, cm: &ConfusionMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accuracy     {}", pct(report.accuracy));
    let _ = writeln!(out, "macro F1     {}", pct(report.macro_f1));
    let _ = writeln!(out, "weighted F1  {}", pct(report.weighted_f1));
    let lw = report
        .per_class
        .iter()
        .map(|m| m.label.chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "\n{:<lw$}  {:>9}  {:>9}  {:>9}  {:>7}",
        "label", "precision", "recall", "f1", "support"
    );
    for m in &report.per_class {
        let _ = writeln!(
            out,
            "{:<lw$}  {:>9}  {:>9}  {:>9}  {:>7}",
            m.label,
            pct(m.precision),
            pct(m.recall),
            pct(m.f1),
            m.support
        );
    }
    let _ = writeln!(out, "\nconfusion (rows gold, columns predicted)");
    for (label, row) in cm.labels.iter().zip(&cm.cells) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>6}")).collect();
        let _ = writeln!(out, "{label:<lw$}  {}", cells.join(""));
    }
    out
}
