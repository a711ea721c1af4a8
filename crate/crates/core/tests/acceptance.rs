//! Acceptance suite. Prints one PASS, FAIL or SKIP line per criterion and
//! exits non-zero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::fixtures::{resource, shipped_resources, TextPieces};
use lexsent::cli::{cmd_stats, cmd_train, ExperimentConfig};
use lexsent::eval::{metrics, ConfusionMatrix};
use lexsent::lexicon::{count_emotions, map_labels, EmotionLexicon, LabelMapping, LexiconMatcher};
use lexsent::models::{gradient_check, ModelKind};
use lexsent::normalize::{run_pipeline, Pipeline, TechniqueSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    match outcome {
        Pass(d) if elapsed > budget => Fail(format!("{d}; took {elapsed:.2?}, budget {budget:?}")),
        other => other,
    }
}

fn table_rows() -> Outcome {
    let lex = EmotionLexicon::load(resource("lexicon/emotions.tsv")).unwrap();
    let m = LexiconMatcher::new(&lex).unwrap();
    let mapping = LabelMapping::vsmec6();
    let row1 = map_labels(
        &count_emotions(
            &m,
            "cho đáng đời con quỷ . về nhà lôi con nhà mày ra mà đánh.",
        ),
        &mapping,
    );
    let row2 = map_labels(
        &count_emotions(&m, "chả mong gì nhiều chỉ mong về già được như hai ông bà!"),
        &mapping,
    );
    // Disgust, Fear, Enjoyment, Sadness, Surprise, Anger
    check(
        row1 == [2, 1, 0, 0, 0, 2] && row2 == [0, 0, 2, 0, 1, 1],
        format!("row 1 {row1:?}, row 2 {row2:?}"),
    )
}

fn planted_fusion() -> Outcome {
    let mut gaps = Vec::new();
    let mut detail = Vec::new();
    for seed in [1, 2, 3] {
        let dir = tempfile::tempdir().unwrap();
        let (on, off) = common::planted_pair(dir.path(), common::PLANTED_DOCS, seed);
        gaps.push(100.0 * (on - off));
        detail.push(format!(
            "seed {seed}: {:.1} vs {:.1}",
            100.0 * on,
            100.0 * off
        ));
    }
    gaps.sort_by(f64::total_cmp);
    let median = gaps[1];
    check(
        median >= 10.0,
        format!(
            "median gap {median:.1} macro-F1 points ({})",
            detail.join(", ")
        ),
    )
}

fn preprocessing() -> Outcome {
    let r = shipped_resources(false);
    let run = |t: &str, set: &str| run_pipeline(t, set.parse().unwrap(), &r).unwrap();
    let examples = [
        (run("ủaaa", "1"), "ủa".to_string()),
        (run("tuỳ", "1"), "tùy".to_string()),
        (run("qúy hóa quá", "1"), "quý hóa quá".to_string()),
        (run(":)))", "2"), "\u{1F642}".to_string()),
    ];
    if let Some((got, want)) = examples.iter().find(|(g, w)| g != w) {
        return Fail(format!("expected {want:?}, got {got:?}"));
    }
    let pieces = TextPieces::shipped();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let texts: Vec<String> = (0..10_000).map(|_| pieces.sample(&mut rng)).collect();
    for remove in [false, true] {
        let r = shipped_resources(remove);
        for set in TechniqueSet::every_subset() {
            let p = Pipeline::new(set, &r).unwrap();
            for t in &texts {
                let once = p.run(t);
                if p.run(&once) != once {
                    return Fail(format!("set {set} not idempotent on {t:?}"));
                }
            }
        }
    }
    Pass("4 examples exact; 10000 texts idempotent under all 32 subsets".into())
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = common::metric_oracle::random_matrix(&mut rng);
        let r = metrics(&m).unwrap();
        let (a, mf, wf) = common::metric_oracle::recompute(&m.cells);
        worst = worst
            .max((r.accuracy - a).abs())
            .max((r.macro_f1 - mf).abs())
            .max((r.weighted_f1 - wf).abs());
    }
    let hand = metrics(&ConfusionMatrix {
        labels: vec!["A".into(), "B".into()],
        cells: vec![vec![1, 1], vec![0, 2]],
    })
    .unwrap();
    check(
        worst < 1e-12 && (hand.accuracy - 0.75).abs() < 1e-12 && (hand.macro_f1 - 0.7333).abs() < 1e-4,
        format!(
            "max deviation {worst:.1e} over 1000 matrices; hand example accuracy {:.4}, macro F1 {:.4}",
            hand.accuracy, hand.macro_f1
        ),
    )
}

fn gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut tensors = 0;
    for kind in [ModelKind::Logreg, ModelKind::Textcnn] {
        for seed in 0..5 {
            let inst = common::gradcheck::instance(kind, seed);
            for t in gradient_check(&inst.params, &inst.batch, &inst.golds, 1e-5).unwrap() {
                tensors += 1;
                worst = worst.max(t.max_rel_error);
                if t.checked == 0 {
                    return Fail(format!("{kind} {} had nothing to check", t.name));
                }
            }
        }
    }
    check(
        worst < 1e-4,
        format!("{tensors} tensor checks over 10 instances, max relative error {worst:.2e}"),
    )
}

fn matcher() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for i in 0..500 {
        let (lex, text) = common::oracle::random_case(&mut rng);
        let m = LexiconMatcher::new(&lex).unwrap();
        if m.find(&text) != common::oracle::naive_find(&lex, &text) {
            return Fail(format!("pair {i} differs on {text:?}"));
        }
    }
    Pass("500 random (lexicon, text) pairs identical".into())
}

fn vsmec_stats() -> Outcome {
    let Some(paths) = std::env::var_os("LEXSENT_VSMEC") else {
        return Skip("set LEXSENT_VSMEC to the UIT-VSMEC file to run".into());
    };
    let text_col = std::env::var("LEXSENT_VSMEC_TEXT_COL").unwrap_or_else(|_| "Sentence".into());
    let label_col = std::env::var("LEXSENT_VSMEC_LABEL_COL").unwrap_or_else(|_| "Emotion".into());
    // Several files (train, dev, test) may be given as a path list.
    let mut size = 0;
    let mut tokens = 0.0;
    for path in std::env::split_paths(&paths) {
        let delimiter = match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => '\t',
            _ => ',',
        };
        let config = ExperimentConfig {
            dataset: Some(path),
            schema: "VSMEC".into(),
            text_column: text_col.clone(),
            label_column: label_col.clone(),
            delimiter,
            ..ExperimentConfig::default()
        };
        match cmd_stats(&config) {
            Ok(r) => {
                size += r.stats.size;
                tokens += r.stats.avg_length * r.stats.size as f64;
            }
            Err(e) => return Fail(e.to_string()),
        }
    }
    let avg = tokens / size.max(1) as f64;
    check(
        size == 6927 && (avg - 14.01).abs() <= 0.5,
        format!("size {size}, average length {avg:.2}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::planted_config(dir.path(), 400, 8);
    config.epochs = 3;
    let a = cmd_train(&config).unwrap().checksum;
    let b = cmd_train(&config).unwrap().checksum;
    check(a == b, format!("checksums {} and {}", &a[..16], &b[..16]))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 8] = [
        (
            "1 lexicon counts reproduce the worked table rows",
            table_rows,
            Duration::from_secs(1),
        ),
        (
            "2 lexicon fusion on the planted corpus",
            planted_fusion,
            Duration::from_secs(600),
        ),
        (
            "3 preprocessing examples and idempotence",
            preprocessing,
            Duration::MAX,
        ),
        ("4 metric oracle", metric_oracle, Duration::MAX),
        ("5 gradient check", gradients, Duration::from_secs(60)),
        ("6 matcher equivalence", matcher, Duration::from_secs(30)),
        ("7 UIT-VSMEC statistics", vsmec_stats, Duration::MAX),
        ("8 training determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let (tag, detail) = match within(outcome, elapsed, budget) {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} criterion {name}: {detail} [{elapsed:.2?}]");
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
