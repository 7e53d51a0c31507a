//! Tokenizer shared by every text format the crate reads: programs,
//! property files, orderings files, history files and patterns.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Identifiers, integer literals and label tags (`[A-Za-z0-9_]+`).
    Word(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    ":=", "==", "!=", "<=", ">=", "&&", "||", "->", "..", ":", ";", ",", "{", "}", "[", "]", "(", ")", "+", "-", "*",
    "/", "<", ">", "=", "!", "@", ".", "?", "|", "&",
];

const UNICODE: &[(char, &str)] =
    &[('≠', "!="), ('¬', "!"), ('∧', "&&"), ('∨', "||"), ('≤', "<="), ('≥', ">="), ('≺', "<"), ('×', "*"), ('÷', "/")];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Word(word), line, col });
            col += i - start;
            continue;
        }
        if let Some((_, sym)) = UNICODE.iter().find(|(u, _)| *u == c) {
            out.push(Token { tok: Tok::Sym(sym), line, col });
            i += 1;
            col += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                out.push(Token { tok: Tok::Sym(sym), line, col });
                i += sym.len();
                col += sym.len();
            }
            None => return Err(SyntaxError { line, col, msg: format!("unexpected character `{c}`") }),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Cursor over a token vector with the usual peek/expect helpers.
#[derive(Clone, Debug)]
pub struct Tokens {
    toks: Vec<Token>,
    pos: usize,
}

impl Tokens {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Tokens { toks: tokenize(src)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn here(&self) -> &Token {
        &self.toks[self.pos]
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> SyntaxError {
        let t = self.here();
        SyntaxError { line: t.line, col: t.col, msg: msg.into() }
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        self.error(format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_word(&mut self, w: &str) -> Result<(), SyntaxError> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    /// Any word token.
    pub fn word(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.next();
                Ok(w)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// A word that is a valid identifier (does not start with a digit).
    pub fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Word(w) if !w.starts_with(|c: char| c.is_ascii_digit()) => {
                self.next();
                Ok(w)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn int(&mut self) -> Result<i64, SyntaxError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Word(w) if w.chars().all(|c| c.is_ascii_digit()) => {
                let n: i64 = w.parse().map_err(|_| self.error("integer literal too large"))?;
                self.next();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.unexpected("an integer")),
        }
    }
}

pub fn is_int_word(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_and_assignments_are_distinct() {
        let toks: Vec<Tok> = tokenize("3t: x := y # comment\n").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Word("3t".into()),
                Tok::Sym(":"),
                Tok::Word("x".into()),
                Tok::Sym(":="),
                Tok::Word("y".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_reported() {
        let err = tokenize("x := 1;\n  $").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
    }
}
