//! Word standardization: NFC composition, elongation squeezing and
//! canonical tone-mark placement for Vietnamese syllables.
//!
//! Tone placement follows the traditional convention in which an open
//! two-vowel nucleus carries the tone on its first vowel (`hòa`, `tùy`),
//! a closed one on its second (`hoàn`, `huỳnh`), a vowel with a quality
//! diacritic (ă â ê ô ơ ư) always takes the tone, and `qu`/`gi` onsets
//! are not part of the nucleus (`quý`, `giá`).

use std::collections::HashSet;

use unicode_normalization::UnicodeNormalization;

const GRAVE: char = '\u{300}';
const ACUTE: char = '\u{301}';
const TILDE: char = '\u{303}';
const HOOK: char = '\u{309}';
const DOT: char = '\u{323}';

const TONE_MARKS: [char; 5] = [GRAVE, ACUTE, HOOK, TILDE, DOT];

const VOWELS: &str = "aăâeêioôơuưy";
const MARKED_VOWELS: &str = "ăâêôơư";

const INITIALS: &[&str] = &[
    "", "b", "c", "ch", "d", "đ", "g", "gh", "h", "k", "kh", "l", "m", "n", "ng", "ngh", "nh", "p",
    "ph", "q", "r", "s", "t", "th", "tr", "v", "x",
];
const FINALS: &[&str] = &["", "c", "ch", "m", "n", "ng", "nh", "p", "t"];

/// A letter split into its tone-free base and its tone mark (if any).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Letter {
    base: char,
    tone: Option<char>,
}

fn split_tone(c: char) -> Option<Letter> {
    let mut tone = None;
    let mut rest = String::new();
    for d in std::iter::once(c).nfd() {
        if TONE_MARKS.contains(&d) {
            if tone.is_some() {
                return None;
            }
            tone = Some(d);
        } else {
            rest.push(d);
        }
    }
    let mut composed = rest.nfc();
    let base = composed.next()?;
    if composed.next().is_some() {
        return None;
    }
    Some(Letter { base, tone })
}

fn join_tone(base: char, tone: Option<char>) -> char {
    match tone {
        None => base,
        Some(t) => {
            let mut s = String::new();
            s.push(base);
            s.push(t);
            s.nfc().next().unwrap_or(base)
        }
    }
}

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

fn is_vowel(base: char) -> bool {
    VOWELS.contains(lower(base))
}

/// Moves the tone mark of a single syllable to its canonical vowel. Words
/// that do not parse as a Vietnamese syllable are returned untouched.
pub fn place_tone(word: &str) -> String {
    match retone(word) {
        Some(s) => s,
        None => word.to_string(),
    }
}

fn retone(word: &str) -> Option<String> {
    let letters: Vec<Letter> = word.chars().map(split_tone).collect::<Option<_>>()?;
    let vowel_at: Vec<usize> = (0..letters.len())
        .filter(|&i| is_vowel(letters[i].base))
        .collect();
    let (&vs, &last) = (vowel_at.first()?, vowel_at.last()?);
    let ve = last + 1;
    if ve - vs != vowel_at.len() {
        return None;
    }
    let mut tone = None;
    for (i, l) in letters.iter().enumerate() {
        if let Some(t) = l.tone {
            if i < vs || i >= ve || tone.is_some() {
                return None;
            }
            tone = Some(t);
        }
    }
    let tone = tone?;
    let bases: Vec<char> = letters.iter().map(|l| lower(l.base)).collect();
    let initial: String = bases[..vs].iter().collect();
    let fin: String = bases[ve..].iter().collect();
    if !INITIALS.contains(&initial.as_str()) || !FINALS.contains(&fin.as_str()) {
        return None;
    }
    let mut ns = vs;
    if (initial == "q" && bases[vs] == 'u') || (initial == "g" && bases[vs] == 'i' && ve - vs >= 2)
    {
        ns += 1;
    }
    let n = ve - ns;
    if n == 0 {
        return None;
    }
    let target = match (ns..ve).rev().find(|&i| MARKED_VOWELS.contains(bases[i])) {
        Some(i) => i,
        None => match n {
            1 => ns,
            2 if fin.is_empty() => ns,
            2 => ns + 1,
            3 => ns + 1,
            _ => return None,
        },
    };
    Some(
        letters
            .iter()
            .enumerate()
            .map(|(i, l)| join_tone(l.base, (i == target).then_some(tone)))
            .collect(),
    )
}

/// Collapses runs of three or more identical letters to one, then resolves
/// a doubled trailing vowel: it is squeezed to one letter when the result
/// is a known standard word, otherwise it is capped at two.
pub fn squeeze_elongation(word: &str, vocabulary: &HashSet<String>) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out: Vec<char> = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let mut j = i + 1;
        if chars[i].is_alphabetic() {
            while j < chars.len() && lower(chars[j]) == lower(chars[i]) {
                j += 1;
            }
        }
        if j - i >= 3 {
            out.push(chars[i]);
        } else {
            out.extend_from_slice(&chars[i..j]);
        }
        i = j;
    }

    let letters: Option<Vec<Letter>> = out.iter().map(|&c| split_tone(c)).collect();
    let Some(letters) = letters else {
        return out.into_iter().collect();
    };
    let Some(tail) = letters.last() else {
        return String::new();
    };
    if !is_vowel(tail.base) {
        return out.into_iter().collect();
    }
    let tail_base = lower(tail.base);
    let mut start = letters.len() - 1;
    while start > 0 && lower(letters[start - 1].base) == tail_base {
        start -= 1;
    }
    let run = letters.len() - start;
    if run < 2 {
        return out.into_iter().collect();
    }
    let tone = letters[start..].iter().find_map(|l| l.tone);
    let mut single: Vec<char> = out[..start].to_vec();
    single.push(join_tone(letters[start].base, tone));
    let single: String = single.into_iter().collect();
    if vocabulary.contains(&place_tone(&single).to_lowercase()) {
        single
    } else {
        out.truncate(start + 2);
        out.into_iter().collect()
    }
}

/// Standardizes one letter run until it reaches a fixed point.
pub fn standardize_word(word: &str, vocabulary: &HashSet<String>) -> String {
    let mut current = word.to_string();
    for _ in 0..4 {
        let next = place_tone(&squeeze_elongation(&current, vocabulary));
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// T1: NFC-composes `text` and standardizes every maximal letter run.
/// Everything that is not a letter is copied through unchanged.
pub fn standardize_words(text: &str, vocabulary: &HashSet<String>) -> String {
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    let mut word = String::new();
    for c in composed.chars() {
        if c.is_alphabetic() {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push_str(&standardize_word(&word, vocabulary));
                word.clear();
            }
            out.push(c);
        }
    }
    if !word.is_empty() {
        out.push_str(&standardize_word(&word, vocabulary));
    }
    out
}

/// Lower-cased, NFC, tone-canonical form used as a lookup key.
pub fn canonical_key(word: &str) -> String {
    let composed: String = word.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    let mut run = String::new();
    for c in composed.chars() {
        if c.is_alphabetic() {
            run.push(c);
        } else {
            out.push_str(&place_tone(&run));
            run.clear();
            out.push(c);
        }
    }
    out.push_str(&place_tone(&run));
    out.to_lowercase()
}
