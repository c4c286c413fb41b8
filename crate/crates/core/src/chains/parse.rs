use crate::error::{Error, Result};

use super::Chain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Arrow,
    NestArrow,
    Open,
    Close,
    Name(&'a str),
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Arrow => "`->`".into(),
            Tok::NestArrow => "`~>`".into(),
            Tok::Open => "`{`".into(),
            Tok::Close => "`}`".into(),
            Tok::Name(n) => format!("name `{n}`"),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '$' | '#' | '.')
}

/// A dotted identifier: non-empty segments separated by single dots.
pub(crate) fn is_opname(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_name_char) && s.split('.').all(|seg| !seg.is_empty())
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::ChainSyntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok<'_>)>> {
    let mut toks = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some(&(i, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        match c {
            '{' => {
                toks.push((i, Tok::Open));
                iter.next();
            }
            '}' => {
                toks.push((i, Tok::Close));
                iter.next();
            }
            '-' | '~' => {
                iter.next();
                match iter.next() {
                    Some((_, '>')) => {
                        toks.push((i, if c == '-' { Tok::Arrow } else { Tok::NestArrow }))
                    }
                    _ => return Err(err(i, format!("expected `{c}>`"))),
                }
            }
            c if is_name_char(c) => {
                let mut end = i;
                while let Some(&(j, d)) = iter.peek() {
                    if !is_name_char(d) {
                        break;
                    }
                    end = j + d.len_utf8();
                    iter.next();
                }
                let name = &text[i..end];
                if !is_opname(name) {
                    return Err(err(i, format!("malformed operator name `{name}`")));
                }
                toks.push((i, Tok::Name(name)));
            }
            other => return Err(err(i, format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn expect(&mut self, want: Tok<'_>) -> Result<()> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(err(
                self.offset(),
                format!("expected {}, found {}", want.describe(), t.describe()),
            )),
            None => Err(err(
                self.offset(),
                format!("expected {}, found end of input", want.describe()),
            )),
        }
    }

    fn seq(&mut self) -> Result<Chain> {
        let mut parts = vec![self.node()?];
        while self.peek() == Some(Tok::Arrow) {
            self.pos += 1;
            parts.push(self.node()?);
        }
        Ok(Chain::seq(parts).expect("at least one part"))
    }

    fn node(&mut self) -> Result<Chain> {
        let at = self.offset();
        match self.peek() {
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.peek() == Some(Tok::NestArrow) {
                    self.pos += 1;
                    self.expect(Tok::Open)?;
                    let body = self.seq()?;
                    self.expect(Tok::Close)?;
                    Ok(Chain::nest(name, body))
                } else {
                    Ok(Chain::leaf(name))
                }
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let mut branches = Vec::new();
                // A branch ends where the next node is not preceded by `->`.
                while self.peek() != Some(Tok::Close) {
                    if self.peek().is_none() {
                        return Err(err(self.offset(), "unclosed `{`"));
                    }
                    branches.push(self.seq()?);
                }
                self.pos += 1;
                if branches.len() < 2 {
                    return Err(err(at, "a parallel group needs at least two branches"));
                }
                Ok(Chain::par(branches).expect("two or more branches"))
            }
            Some(t) => Err(err(at, format!("expected a node, found {}", t.describe()))),
            None => Err(err(at, "expected a node, found end of input")),
        }
    }
}

/// Parses the canonical text form of a chain.
pub fn parse_chain(text: &str) -> Result<Chain> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        len: text.len(),
    };
    let chain = p.seq()?;
    if let Some(t) = p.peek() {
        return Err(err(
            p.offset(),
            format!("unexpected {} after the chain", t.describe()),
        ));
    }
    Ok(chain)
}

/// Operator names of a chain text in order, ignoring structure symbols.
/// Works on both text styles and on text that does not parse.
pub fn chain_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || matches!(c, '{' | '}'))
        .filter(|t| !t.is_empty() && *t != "->" && *t != "~>")
        .map(str::to_string)
        .collect()
}
