//! Line tokenizer shared by score and vocabulary documents.

/// One whitespace-separated word. Quoted runs (`"..."`, with `\"` and `\\`
/// escapes) are unescaped into `text` and may contain spaces.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub text: String,
    /// 1-based character column of the token's first character.
    pub col: usize,
}

impl Token {
    /// Splits `key=value`; `None` if there is no `=`.
    pub fn key_value(&self) -> Option<(&str, &str)> {
        self.text.split_once('=')
    }
}

/// Splits one line into tokens, stopping at a `#` that begins a token.
///
/// Returns the column of an unterminated quote as the error.
pub(crate) fn tokenize(line: &str) -> Result<Vec<Token>, usize> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().enumerate().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '#' {
            break;
        }
        let col = i + 1;
        let mut text = String::new();
        while let Some(&(qi, c)) = chars.peek() {
            if c.is_whitespace() {
                break;
            }
            chars.next();
            if c != '"' {
                text.push(c);
                continue;
            }
            let mut closed = false;
            while let Some((_, c)) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, e)) => text.push(e),
                        None => return Err(qi + 1),
                    },
                    _ => text.push(c),
                }
            }
            if !closed {
                return Err(qi + 1);
            }
        }
        tokens.push(Token { text, col });
    }
    Ok(tokens)
}

/// Quotes `text` so that [`tokenize`] reads it back as a single token.
pub(crate) fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}
