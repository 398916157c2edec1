//! Tokenizer shared by the sentence DSL and the structure format.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Slash,
    Bang,
    Eq,
    NotEq,
    Pipe,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eq => "`=`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '-' | '\'' | '~' | '.')
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '{' | '}' | '(' | ')' | ',' | '/' | '=' | '|' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '/' => Tok::Slash,
                    '=' => Tok::Eq,
                    _ => Tok::Pipe,
                };
                out.push(Spanned { tok, line: l0, col: c0 });
                advance(1, &mut i, &mut col);
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push(Spanned { tok: Tok::NotEq, line: l0, col: c0 });
                    advance(2, &mut i, &mut col);
                } else {
                    out.push(Spanned { tok: Tok::Bang, line: l0, col: c0 });
                    advance(1, &mut i, &mut col);
                }
            }
            '<' => {
                out.push(Spanned { tok: Tok::Ident("<".into()), line: l0, col: c0 });
                advance(1, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                let v = s.parse().map_err(|_| Error::parse(l0, c0, format!("integer `{s}` too large")))?;
                out.push(Spanned { tok: Tok::Int(v), line: l0, col: c0 });
            }
            c if ident_start(c) => {
                let start = i;
                while i < chars.len() && ident_continue(chars[i]) {
                    i += 1;
                }
                col += i - start;
                out.push(Spanned { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, col: c0 });
            }
            other => return Err(Error::parse(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Cursor over a token list with position-aware errors.
pub(crate) struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(text: &str) -> Result<Self> {
        Ok(Cursor { toks: tokenize(text)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub(crate) fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        Error::parse(l, c, msg)
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", want.describe(), self.peek().describe())))
        }
    }

    pub(crate) fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            t => Err(self.error(format!("expected `{kw}`, found {}", t.describe()))),
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => Err(self.error(format!("expected {what}, found {}", t.describe()))),
        }
    }

    pub(crate) fn int(&mut self, what: &str) -> Result<u64> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(v)
            }
            t => Err(self.error(format!("expected {what}, found {}", t.describe()))),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("a # note\n  !E(x) != <").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::Bang,
                Tok::Ident("E".into()),
                Tok::LParen,
                Tok::Ident("x".into()),
                Tok::RParen,
                Tok::NotEq,
                Tok::Ident("<".into()),
                Tok::Eof
            ]
        );
        assert_eq!((toks[1].line, toks[1].col), (2, 3));
    }

    #[test]
    fn primed_names_lex_as_identifiers() {
        let toks = tokenize("E+ E- X~").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("E+".into()));
        assert_eq!(toks[1].tok, Tok::Ident("E-".into()));
        assert_eq!(toks[2].tok, Tok::Ident("X~".into()));
    }

    #[test]
    fn bad_character_reports_position() {
        let err = tokenize("ab\n  $").unwrap_err();
        assert_eq!(err, Error::parse(2, 3, "unexpected character `$`"));
    }
}
