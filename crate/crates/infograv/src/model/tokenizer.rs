//! Whitespace/punctuation tokenizer shared by training and query handling.

/// Punctuation characters that become standalone tokens.
const PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '\''];

/// Lowercases, splits on whitespace, and splits the punctuation set
/// `. , ! ? ; : " ( ) '` out as standalone tokens.
///
/// Total and deterministic: every input produces a (possibly empty) token list,
/// and tokenizing the space-joined output reproduces it.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.to_lowercase().split_whitespace() {
        let mut word = String::new();
        for ch in chunk.chars() {
            if PUNCT.contains(&ch) {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(ch.to_string());
            } else {
                word.push(ch);
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}
