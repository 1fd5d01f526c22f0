/// Splits on whitespace, then splits every ASCII punctuation character off
/// as its own token. `_` counts as a word character so identifiers stay whole.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word_start: Option<usize> = None;
        for (i, c) in chunk.char_indices() {
            if is_punct(c) {
                if let Some(start) = word_start.take() {
                    tokens.push(&chunk[start..i]);
                }
                tokens.push(&chunk[i..i + c.len_utf8()]);
            } else if word_start.is_none() {
                word_start = Some(i);
            }
        }
        if let Some(start) = word_start {
            tokens.push(&chunk[start..]);
        }
    }
    tokens
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() && c != '_'
}
