mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixtures::resource;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lexsent");

const CORPUS: &str = "text,label
vui quá :))) mình thích lắm,ENJOYMENT
hạnh phúc ghê =)),ENJOYMENT
tuyệt vời luôn ủaaa,ENJOYMENT
buồn ghê :( muốn khóc,SADNESS
thất vọng thật sự,SADNESS
khóc cả đêm bùn quá,SADNESS
tức giận ghê đáng đời,ANGER
ghét cay ghét đắng,ANGER
ngu thật sự ko chịu nổi,ANGER
";

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("corpus.csv"), CORPUS).unwrap();
        let res = |n: &str| resource(n).canonicalize().unwrap();
        let config = format!(
            r#"
train_file = "corpus.csv"
dev_file = "corpus.csv"
test_file = "corpus.csv"
schema = "custom"
labels = ["ENJOYMENT", "SADNESS", "ANGER"]
techniques = "1+2+3+4"
emoticons = {emo:?}
misspellings = {mis:?}
teencode = {tc:?}
lexicon = {lex:?}
mapping = "VSMEC6"
model = "textcnn"
embedding_dim = 8
filter_widths = [1, 2]
filters_per_width = 8
max_len = 12
batch_size = 3
learning_rate = 0.05
epochs = 30
patience = 30
out = "run"
"#,
            emo = res("emoticons.tsv"),
            mis = res("misspellings.tsv"),
            tc = res("teencode.tsv"),
            lex = res("lexicon/emotions.tsv"),
        );
        let key = |l: &str| l.split('=').next().unwrap_or("").trim().to_string();
        let overridden: Vec<String> = extra.lines().map(key).collect();
        let mut config: String = config
            .lines()
            .filter(|l| !overridden.contains(&key(l)))
            .map(|l| format!("{l}\n"))
            .collect();
        config.push_str(extra);
        std::fs::write(dir.path().join("exp.toml"), config).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn config(&self) -> String {
        self.path("exp.toml").display().to_string()
    }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn train_is_deterministic_and_eval_matches() {
    let f = Fixture::new("");
    let c = f.config();
    let a: Value =
        serde_json::from_str(&f.ok(&["train", "--config", &c, "--format", "json"])).unwrap();
    let first = std::fs::read(f.path("run/checkpoint.json")).unwrap();
    let b: Value =
        serde_json::from_str(&f.ok(&["train", "--config", &c, "--format", "json"])).unwrap();
    assert_eq!(a["checksum"], b["checksum"]);
    assert_eq!(first, std::fs::read(f.path("run/checkpoint.json")).unwrap());
    for name in [
        "checkpoint.json",
        "history.json",
        "config.json",
        "eval_test.json",
    ] {
        assert!(f.path("run").join(name).exists(), "{name}");
    }

    let train_eval = json(&f.path("run/eval_test.json"));
    assert_eq!(train_eval["eval"]["report"]["accuracy"], 1.0);
    assert_eq!(train_eval["config"]["seed"], 42);
    f.ok(&[
        "eval",
        "--config",
        &c,
        "--checkpoint",
        "run/checkpoint.json",
        "--out",
        "evalout",
    ]);
    let eval = json(&f.path("evalout/eval_test.json"));
    assert_eq!(eval, train_eval);

    let other = f.ok(&["train", "--config", &c, "--seed", "7", "--format", "json"]);
    let other: Value = serde_json::from_str(&other).unwrap();
    assert_ne!(other["checksum"], a["checksum"]);
}

#[test]
fn predict_uses_checkpoint_preprocessing() {
    let f = Fixture::new("");
    let c = f.config();
    f.ok(&["train", "--config", &c]);
    let p: Value = serde_json::from_str(&f.ok(&[
        "predict",
        "--checkpoint",
        "run/checkpoint.json",
        "--text",
        "hạnh phúc ghê =))",
        "--format",
        "json",
    ]))
    .unwrap();
    assert_eq!(p["label"], "ENJOYMENT");
    assert_eq!(p["normalized"], "hạnh phúc ghê \u{1F642}");
    let sum: f64 = p["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x[1].as_f64().unwrap())
        .sum();
    assert!((sum - 1.0).abs() < 1e-6);

    let empty = f.ok(&[
        "predict",
        "--checkpoint",
        "run/checkpoint.json",
        "--text",
        "",
    ]);
    assert!(!empty.trim().is_empty());
}

#[test]
fn preprocess_is_idempotent_and_keeps_labels() {
    let f = Fixture::new("");
    let c = f.config();
    f.ok(&[
        "preprocess",
        "--config",
        &c,
        "--input",
        "corpus.csv",
        "--output",
        "p1.csv",
    ]);
    f.ok(&[
        "preprocess",
        "--config",
        &c,
        "--input",
        "p1.csv",
        "--output",
        "p2.csv",
    ]);
    let p1 = std::fs::read_to_string(f.path("p1.csv")).unwrap();
    assert_eq!(p1, std::fs::read_to_string(f.path("p2.csv")).unwrap());
    assert!(p1.contains("tuyệt vời luôn ủa,ENJOYMENT"));
    assert!(p1.contains("vui quá \u{1F642} mình thích lắm"));
    assert!(p1.contains("ngu thật sự không chịu nổi,ANGER"));
    assert_eq!(p1.lines().count(), CORPUS.lines().count());

    f.ok(&[
        "preprocess",
        "--config",
        &c,
        "--techniques",
        "original",
        "--input",
        "corpus.csv",
        "--output",
        "p0.csv",
    ]);
    assert_eq!(std::fs::read_to_string(f.path("p0.csv")).unwrap(), CORPUS);
}

#[test]
fn validation_errors_exit_with_one() {
    let f = Fixture::new("");
    let out = f.run(&["train", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.toml"));

    let c = f.config();
    let out = f.run(&["train", "--config", &c, "--lexicon", "nowhere/lex.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/lex.tsv"));

    let g = Fixture::new("lexicon_dim = 3");
    let out = g.run(&["train", "--config", &g.config()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(
        err.contains('3') && err.contains('6') && err.contains("VSMEC6"),
        "{err}"
    );

    assert_eq!(f.run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(f.run(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_rejects_incompatible_checkpoint() {
    let f = Fixture::new("");
    f.ok(&["train", "--config", &f.config()]);
    let g = Fixture::new("max_len = 20");
    let ck = f.path("run/checkpoint.json").display().to_string();
    let out = g.run(&["eval", "--config", &g.config(), "--checkpoint", &ck]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_len"));
}

#[test]
fn stats_reports_counts() {
    let f = Fixture::new(&format!("dataset = {:?}", "corpus.csv"));
    let s: Value =
        serde_json::from_str(&f.ok(&["stats", "--config", &f.config(), "--format", "json"]))
            .unwrap();
    assert_eq!(s["stats"]["size"], 9);
}

#[test]
fn ablation_grid_is_deterministic() {
    let f = Fixture::new("epochs = 5");
    let c = f.config();
    let grid = "techniques=original;1+2;1+2+3 lexicon=on models=logreg";
    let table = f.ok(&["ablate", "--config", &c, "--grid", grid]);
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 3, "{table}");
    let first = std::fs::read(f.path("run/ablation.json")).unwrap();
    assert_eq!(f.ok(&["ablate", "--config", &c, "--grid", grid]), table);
    assert_eq!(std::fs::read(f.path("run/ablation.json")).unwrap(), first);

    let report = json(&f.path("run/ablation.json"));
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    let f1 = |c: &Value| c["outcome"]["ok"]["macro_f1"].as_f64();
    let best = report["best"]["macro_f1"].as_u64().unwrap() as usize;
    let max = cells
        .iter()
        .filter_map(f1)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(f1(&cells[best]), Some(max));
    assert!(rows[best].contains('*'));
}

#[test]
fn failed_cells_are_reported_inline() {
    let f = Fixture::new("epochs = 3");
    let table = f.ok(&[
        "ablate",
        "--config",
        &f.config(),
        "--lexicon",
        "none",
        "--grid",
        "lexicon=off,on models=logreg",
    ]);
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0].contains("FAILED"));
    assert!(
        rows[1].contains("FAILED") && rows[1].contains("lexicon"),
        "{table}"
    );
}
