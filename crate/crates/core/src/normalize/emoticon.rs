use super::dict::ReplacementDictionary;

fn alnum_at(text: &str, idx: usize) -> bool {
    text[idx..]
        .chars()
        .next()
        .is_some_and(char::is_alphanumeric)
}

fn alnum_before(text: &str, idx: usize) -> bool {
    text[..idx]
        .chars()
        .next_back()
        .is_some_and(char::is_alphanumeric)
}

/// Length in bytes of the emoticon match at `pos`, including repetitions
/// of its final character (`:)))` matches `:)`), with the replacement.
fn match_at<'d>(
    text: &str,
    pos: usize,
    dict: &'d ReplacementDictionary,
) -> Option<(usize, &'d str)> {
    let first = text[pos..].chars().next()?;
    for (surface, emoji) in dict.emoticons_starting_with(first) {
        if !text[pos..].starts_with(surface.as_str()) {
            continue;
        }
        let last = surface.chars().next_back().expect("non-empty surface");
        let mut end = pos + surface.len();
        while text[end..].starts_with(last) {
            end += last.len_utf8();
        }
        if first.is_alphanumeric() && alnum_before(text, pos) {
            continue;
        }
        if last.is_alphanumeric() && alnum_at(text, end) {
            continue;
        }
        return Some((end - pos, emoji.as_str()));
    }
    None
}

/// T2: replaces every emoticon of `dict` by its emoji. Repeated closing
/// characters are folded into the emoticon, so `:)))` and `=))` behave like
/// `:)` and `=)`. Emoticons that start or end with a letter only match when
/// not glued to a neighbouring letter or digit.
pub fn emoticons_to_emoji(text: &str, dict: &ReplacementDictionary) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    while pos < text.len() {
        match match_at(text, pos, dict) {
            Some((len, emoji)) => {
                out.push_str(emoji);
                pos += len;
            }
            None => {
                let c = text[pos..].chars().next().expect("in bounds");
                out.push(c);
                pos += c.len_utf8();
            }
        }
    }
    out
}

/// Number of emoticons the scan would replace in `text`.
pub fn count_emoticons(text: &str, dict: &ReplacementDictionary) -> usize {
    let mut n = 0;
    let mut pos = 0;
    while pos < text.len() {
        match match_at(text, pos, dict) {
            Some((len, _)) => {
                n += 1;
                pos += len;
            }
            None => pos += text[pos..].chars().next().map_or(1, char::len_utf8),
        }
    }
    n
}
