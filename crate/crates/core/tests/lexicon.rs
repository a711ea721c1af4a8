mod common;

use common::fixtures::resource;
use common::oracle::{naive_find, random_case};
use lexsent::lexicon::{
    count_emotions, map_labels, Emotion, EmotionLexicon, LabelMapping, LexiconMatcher,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ROW1: &str = "cho đáng đời con quỷ . về nhà lôi con nhà mày ra mà đánh.";
const ROW2: &str = "chả mong gì nhiều chỉ mong về già được như hai ông bà!";
const ROW3: &str = "làm công nhân đã bị vắt kiệt sức khỏe cho đến khi bị thải.";

fn fixture() -> LexiconMatcher {
    LexiconMatcher::new(&EmotionLexicon::load(resource("lexicon/emotions.tsv")).unwrap())
        .unwrap()
}

/// Counts in the VSMEC6 order: Disgust, Fear, Enjoyment, Sadness, Surprise, Anger.
fn vsmec6(text: &str) -> Vec<u32> {
    map_labels(&count_emotions(&fixture(), text), &LabelMapping::vsmec6())
}

#[test]
fn worked_rows_reproduce() {
    assert_eq!(vsmec6(ROW1), [2, 1, 0, 0, 0, 2]);
    assert_eq!(vsmec6(ROW2), [0, 0, 2, 0, 1, 1]);
    assert_eq!(vsmec6(ROW3), [1, 2, 0, 2, 1, 2]);
}

#[test]
fn raw_counts_for_first_row() {
    let c = count_emotions(&fixture(), ROW1);
    assert_eq!(c.get(Emotion::Disgust), 2);
    assert_eq!(c.get(Emotion::Fear), 1);
    assert_eq!(c.get(Emotion::Anger), 2);
    assert_eq!(c.total(), 5);
}

#[test]
fn shipped_mapping_files_equal_builtins() {
    for (file, builtin) in [
        ("mappings/vsmec6.tsv", LabelMapping::vsmec6()),
        ("mappings/vsfc3.tsv", LabelMapping::vsfc3()),
        ("mappings/vihsd2.tsv", LabelMapping::vihsd2()),
    ] {
        let loaded = LabelMapping::load(resource(file)).unwrap();
        assert_eq!(loaded.targets, builtin.targets, "{file}");
        assert_eq!(loaded.rules, builtin.rules, "{file}");
    }
}

#[test]
fn preprocessed_text_matches_like_raw() {
    let m = fixture();
    assert_eq!(
        count_emotions(&m, "làm công_nhân bị vắt_kiệt sức_khỏe"),
        count_emotions(&m, "làm công nhân bị vắt kiệt sức khỏe")
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matcher_equals_naive_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lex, text) = random_case(&mut rng);
        let m = LexiconMatcher::new(&lex).unwrap();
        prop_assert_eq!(m.find(&text), naive_find(&lex, &text), "text {:?}", text);
    }
}

fn counts(pairs: &[(Emotion, u32)]) -> lexsent::lexicon::EmotionCountVector {
    let mut c = lexsent::lexicon::EmotionCountVector::default();
    for &(e, n) in pairs {
        c.counts[e.index()] = n;
    }
    c
}

#[test]
fn mapping_examples() {
    let c = counts(&[(Emotion::Anger, 2), (Emotion::Fear, 1), (Emotion::Disgust, 2)]);
    assert_eq!(map_labels(&c, &LabelMapping::vihsd2()), [5, 0]);
    let c = counts(&[(Emotion::Joy, 2), (Emotion::Trust, 1), (Emotion::Sadness, 3)]);
    assert_eq!(map_labels(&c, &LabelMapping::vsfc3()), [3, 3, 0]);
    for m in [LabelMapping::vsmec6(), LabelMapping::vsfc3(), LabelMapping::vihsd2()] {
        assert!(map_labels(&counts(&[]), &m).iter().all(|&x| x == 0));
    }
}

#[test]
fn leftmost_longest_examples() {
    use lexsent::lexicon::EmotionFlags;
    let mut lex = EmotionLexicon::new();
    lex.insert("a b", EmotionFlags::of([Emotion::Joy]));
    lex.insert("a", EmotionFlags::of([Emotion::Fear]));
    let m = LexiconMatcher::new(&lex).unwrap();
    let hits = m.find("a b c");
    assert_eq!((hits.len(), hits[0].len), (1, 2));
    assert_eq!(m.find("a a a").len(), 3);
    assert_eq!(count_emotions(&m, "").total(), 0);
    assert!(LexiconMatcher::new(&EmotionLexicon::new()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mapping_conserves_counts(raw in proptest::array::uniform8(0u32..50)) {
        let c = lexsent::lexicon::EmotionCountVector { counts: raw };
        for m in [LabelMapping::vsmec6(), LabelMapping::vsfc3(), LabelMapping::vihsd2()] {
            let kept: u32 = Emotion::ALL
                .iter()
                .filter(|e| m.rules[e.index()].is_some())
                .map(|e| raw[e.index()])
                .sum();
            prop_assert_eq!(map_labels(&c, &m).iter().sum::<u32>(), kept);
        }
    }

    #[test]
    fn appending_an_entry_never_lowers_its_counts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lex, text) = random_case(&mut rng);
        let m = LexiconMatcher::new(&lex).unwrap();
        let before = count_emotions(&m, &text);
        for (phrase, flags) in lex.entries() {
            let after = count_emotions(&m, &format!("{text} . {phrase}"));
            for e in flags.iter() {
                prop_assert!(after.get(e) >= before.get(e), "{:?} + {:?}", text, phrase);
            }
        }
    }

    #[test]
    fn counting_is_stable_under_renormalization(seed in any::<u64>()) {
        use lexsent::normalize::{run_pipeline, TechniqueSet};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pieces = common::fixtures::TextPieces::shipped();
        let r = common::fixtures::shipped_resources(false);
        let m = fixture();
        let text = pieces.sample(&mut rng);
        let once = run_pipeline(&text, TechniqueSet::all(), &r).unwrap();
        let twice = run_pipeline(&once, TechniqueSet::all(), &r).unwrap();
        prop_assert_eq!(count_emotions(&m, &once), count_emotions(&m, &twice));
    }
}
