//! Text normalization and sentence splitting.

/// Sentences longer than this many tokens are re-split.
pub const MAX_SENTENCE_TOKENS: usize = 150;
/// Piece length used when re-splitting an over-long sentence.
pub const RESPLIT_TOKENS: usize = 20;

fn is_sentence_delimiter(c: char) -> bool {
    c == '.' || c == '?'
}

/// Lowercases ASCII letters and keeps digits, `!`, quotation marks and the
/// sentence delimiters. Non-ASCII letters are dropped outright; every other
/// character becomes a space. Space runs are collapsed and the ends trimmed.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        let kept = match c {
            'A'..='Z' => Some(c.to_ascii_lowercase()),
            'a'..='z' | '0'..='9' | '!' | '"' | '\'' | '.' | '?' => Some(c),
            c if !c.is_ascii() && c.is_alphabetic() => continue,
            _ => None,
        };
        match kept {
            Some(k) => {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(k);
            }
            None => pending_space = true,
        }
    }
    out
}

/// Splits normalized text into token lists on `.` and `?`.
///
/// A sentence of more than [`MAX_SENTENCE_TOKENS`] tokens is cut into
/// consecutive [`RESPLIT_TOKENS`]-token pieces, the last one possibly shorter.
pub fn split_sentences(text: &str) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    for sentence in text.split(is_sentence_delimiter) {
        let tokens: Vec<String> = sentence.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() > MAX_SENTENCE_TOKENS {
            sentences.extend(tokens.chunks(RESPLIT_TOKENS).map(<[String]>::to_vec));
        } else {
            sentences.push(tokens);
        }
    }
    sentences
}

/// Normalized, sentence-split token stream of one raw text, concatenated.
pub fn tokenize(raw: &str) -> Vec<String> {
    split_sentences(&normalize_text(raw))
        .into_iter()
        .flatten()
        .collect()
}
