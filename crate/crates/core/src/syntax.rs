//! Shared line tokenizer for the line-oriented file formats.
//!
//! Every format in this crate is a sequence of lines whose first word is a
//! keyword. Words are separated by whitespace or top-level commas; text inside
//! parentheses is kept together so that `on(b, a)` is a single word.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    /// 1-based column of the first character.
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Line<'a> {
    /// 1-based line number.
    pub number: usize,
    pub tokens: Vec<Token<'a>>,
}

impl<'a> Line<'a> {
    pub fn keyword(&self) -> &'a str {
        self.tokens[0].text
    }

    pub fn rest(&self) -> &[Token<'a>] {
        &self.tokens[1..]
    }

    pub fn error(&self, token: &Token<'_>, message: impl Into<String>) -> Error {
        Error::syntax(self.number, token.column, message)
    }

    pub fn error_at_end(&self, message: impl Into<String>) -> Error {
        let column = self
            .tokens
            .last()
            .map(|t| t.column + t.text.chars().count())
            .unwrap_or(1);
        Error::syntax(self.number, column, message)
    }
}

/// Splits `text` into non-empty, comment-stripped lines of tokens.
pub(crate) fn lines(text: &str) -> Result<Vec<Line<'_>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens = tokenize(content, number)?;
        if !tokens.is_empty() {
            out.push(Line { number, tokens });
        }
    }
    Ok(out)
}

fn tokenize(content: &str, line: usize) -> Result<Vec<Token<'_>>> {
    let mut tokens = Vec::new();
    let mut depth = 0usize;
    let mut start: Option<usize> = None;
    let mut open_col = 0;
    let chars: Vec<(usize, char)> = content.char_indices().collect();
    for (ci, &(bi, ch)) in chars.iter().enumerate() {
        let column = ci + 1;
        let separator = depth == 0 && (ch.is_whitespace() || ch == ',');
        if separator {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &content[s..bi],
                    column: char_column(content, s),
                });
            }
            continue;
        }
        if start.is_none() {
            start = Some(bi);
        }
        match ch {
            '(' => {
                if depth == 0 {
                    open_col = column;
                }
                depth += 1;
            }
            ')' => {
                if depth == 0 {
                    return Err(Error::syntax(line, column, "unmatched `)`"));
                }
                depth -= 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::syntax(line, open_col, "unclosed `(`"));
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &content[s..],
            column: char_column(content, s),
        });
    }
    Ok(tokens)
}

fn char_column(content: &str, byte: usize) -> usize {
    content[..byte].chars().count() + 1
}

/// Splits a `name(a, b, c)` word into its head and trimmed arguments.
/// A bare `name` yields no arguments.
pub(crate) fn split_call(text: &str) -> Option<(&str, Vec<&str>)> {
    match text.find('(') {
        None => Some((text, Vec::new())),
        Some(open) => {
            if !text.ends_with(')') {
                return None;
            }
            let head = &text[..open];
            let inner = text[open + 1..text.len() - 1].trim();
            if inner.is_empty() {
                return Some((head, Vec::new()));
            }
            let args = split_top_level(inner);
            Some((head, args))
        }
    }
}

/// Splits on commas that are not nested inside parentheses.
pub(crate) fn split_top_level(inner: &str) -> Vec<&str> {
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                args.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    args.push(inner[start..].trim());
    args
}

pub(crate) fn is_symbol(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parenthesised_words_stay_together() {
        let ls = lines("init on(b, a) clear(c)  armempty # trailing\n\n").unwrap();
        assert_eq!(ls.len(), 1);
        let words: Vec<_> = ls[0].tokens.iter().map(|t| t.text).collect();
        assert_eq!(words, vec!["init", "on(b, a)", "clear(c)", "armempty"]);
        assert_eq!(ls[0].tokens[1].column, 6);
    }

    #[test]
    fn unbalanced_parens_report_position() {
        let err = lines("objects a\ninit on(a,b").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                line: 2,
                column: 8,
                message: "unclosed `(`".into()
            }
        );
    }

    #[test]
    fn split_call_handles_nesting() {
        let (head, args) = split_call("manhattan(at(@,_), $gx)").unwrap();
        assert_eq!(head, "manhattan");
        assert_eq!(args, vec!["at(@,_)", "$gx"]);
        assert_eq!(split_call("armempty").unwrap(), ("armempty", vec![]));
        assert!(split_call("on(a").is_none());
    }
}
