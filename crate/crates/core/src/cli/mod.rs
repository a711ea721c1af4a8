//! Command-line interface: `stats`, `preprocess`, `train`, `eval`, `ablate`
//! and `predict`, all driven by one experiment config file.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 when
//! a computation fails (for example a diverging training run).

pub mod commands;
pub mod config;
pub mod experiment;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use commands::{
    cmd_ablate, cmd_eval, cmd_predict, cmd_preprocess, cmd_stats, cmd_train, default_grid,
    EvalFile, Prediction, StatsReport, TrainSummary,
};
pub use config::ExperimentConfig;
pub use experiment::{
    evaluate_dataset, train_run, EvalOutput, LexiconFeatures, Prepared, TrainedRun, Workspace,
};

use crate::error::{Error, Result};
use crate::eval::{render_report, AblationGrid};
use crate::normalize::TechniqueSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Root seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Technique set such as `1+2+3`; `original` for none.
    #[arg(long)]
    techniques: Option<TechniqueSet>,
    /// Emotion lexicon file, or `none` to disable fusion.
    #[arg(long)]
    lexicon: Option<String>,
    /// Label mapping: VSMEC6, VSFC3, VIHSD2 or a mapping file.
    #[arg(long)]
    mapping: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.techniques {
            c.techniques = t;
        }
        if let Some(l) = &self.lexicon {
            c.lexicon = match l.to_ascii_lowercase().as_str() {
                "none" | "off" => None,
                _ => Some(PathBuf::from(l)),
            };
        }
        if let Some(m) = &self.mapping {
            c.mapping = m.clone();
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus size, average length, label distribution and length histogram.
    Stats(Common),
    /// Normalize the text column of a corpus file.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train one model and write checkpoint, history and test evaluation.
    Train(Common),
    /// Evaluate a checkpoint on a split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Train and test a grid of technique sets, lexicon on/off and models.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// e.g. `techniques=original;1;1+2 lexicon=off,on models=logreg,textcnn`
        #[arg(long)]
        grid: Option<String>,
    },
    /// Classify one text with a checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Debug, Parser)]
#[command(
    name = "lexsent",
    version,
    about = "Lexicon-fused sentiment classification for Vietnamese text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn execute(cli: Cli) -> Result<String> {
    let mut out = String::new();
    match cli.command {
        Command::Stats(common) => {
            let r = cmd_stats(&common.load()?)?;
            if common.format == Format::Json {
                return json(&r);
            }
            let _ = writeln!(out, "size        {}", r.stats.size);
            let _ = writeln!(out, "avg length  {:.2}", r.stats.avg_length);
            for (label, share) in &r.stats.label_distribution {
                let _ = writeln!(out, "{label:<12}{share:.2}%");
            }
            let _ = writeln!(out, "\nlength  documents");
            for (len, n) in &r.length_histogram {
                let _ = writeln!(out, "{len:>6}  {n}");
            }
        }
        Command::Preprocess {
            common,
            input,
            output,
        } => {
            let c = common.load()?;
            let rows = cmd_preprocess(&c, &input, &output)?;
            let _ = writeln!(
                out,
                "wrote {rows} rows to {} ({})",
                output.display(),
                c.techniques
            );
        }
        Command::Train(common) => {
            let s = cmd_train(&common.load()?)?;
            if common.format == Format::Json {
                return json(&s);
            }
            for w in &s.lexicon_warnings {
                let _ = writeln!(out, "warning: {w}");
            }
            for e in &s.history.epochs {
                let _ = write!(
                    out,
                    "epoch {:>3}  loss {:.4}  train acc {}",
                    e.epoch,
                    e.train_loss,
                    pct(e.train_accuracy)
                );
                if let (Some(a), Some(f)) = (e.dev_accuracy, e.dev_macro_f1) {
                    let _ = write!(out, "  dev acc {}  dev macro F1 {}", pct(a), pct(f));
                }
                out.push('\n');
            }
            let _ = writeln!(out, "best epoch {}", s.history.best_epoch);
            if let Some(c) = s.embedding_coverage {
                let _ = writeln!(out, "embedding coverage {}%", pct(c));
            }
            let _ = writeln!(
                out,
                "checkpoint {} (sha256 {})",
                s.checkpoint.display(),
                s.checksum
            );
            if let Some(t) = &s.test {
                let _ = write!(
                    out,
                    "\ntest split\n{}",
                    render_report(&t.eval.report, &t.eval.confusion)
                );
            }
        }
        Command::Eval {
            common,
            checkpoint,
            split,
        } => {
            let f = cmd_eval(&common.load()?, &checkpoint, &split)?;
            if common.format == Format::Json {
                return json(&f);
            }
            let _ = write!(
                out,
                "{split} split\n{}",
                render_report(&f.eval.report, &f.eval.confusion)
            );
        }
        Command::Ablate { common, grid } => {
            let c = common.load()?;
            let grid = match grid {
                Some(spec) => AblationGrid::parse_with(&spec, default_grid(&c))?,
                None => default_grid(&c),
            };
            let r = cmd_ablate(&c, &grid)?;
            if common.format == Format::Json {
                return json(&r);
            }
            out = r.to_table();
        }
        Command::Predict {
            checkpoint,
            text,
            format,
        } => {
            let p = cmd_predict(&checkpoint, &text)?;
            if format == Format::Json {
                return json(&p);
            }
            let _ = writeln!(out, "{}", p.label);
            for (l, q) in &p.probabilities {
                let _ = writeln!(out, "  {l:<12}{q:.6}");
            }
        }
    }
    Ok(out)
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

/// Parses `args`, runs the command and prints its output.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
