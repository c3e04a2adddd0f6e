//! S-expression reader over the token stream.

use super::lexer::{tokenize, Pos, Token, TokenKind};
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Sym(String, Pos),
    Str(String, Pos),
    Int(u64, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::Str(_, p) | Sexp::Int(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }

    pub fn expect_sym(&self, what: &str) -> Result<&str, ParseError> {
        self.as_sym().ok_or_else(|| ParseError::at(self.pos(), format!("expected {what}")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp], ParseError> {
        self.as_list().ok_or_else(|| ParseError::at(self.pos(), format!("expected {what}")))
    }

    pub fn expect_int(&self, what: &str) -> Result<u64, ParseError> {
        match self {
            Sexp::Int(n, _) => Ok(*n),
            _ => Err(ParseError::at(self.pos(), format!("expected {what}"))),
        }
    }
}

/// Reads all top-level s-expressions in the text.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let tokens = tokenize(text).map_err(|e| ParseError::at(e.pos, e.msg))?;
    let mut reader = Reader { tokens: &tokens, pos: 0 };
    let mut out = Vec::new();
    while !reader.at_end() {
        out.push(reader.read()?);
    }
    Ok(out)
}

struct Reader<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl Reader<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn read(&mut self) -> Result<Sexp, ParseError> {
        let token = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| ParseError::at(Pos::default(), "unexpected end of input".into()))?;
        self.pos += 1;
        match &token.kind {
            TokenKind::Symbol(s) => Ok(Sexp::Sym(s.clone(), token.pos)),
            TokenKind::Str(s) => Ok(Sexp::Str(s.clone(), token.pos)),
            TokenKind::Int(n) => Ok(Sexp::Int(*n, token.pos)),
            TokenKind::RParen => Err(ParseError::at(token.pos, "unexpected `)`".into())),
            TokenKind::LParen => {
                let mut items = Vec::new();
                loop {
                    match self.tokens.get(self.pos) {
                        None => {
                            return Err(ParseError::at(token.pos, "unclosed `(`".into()));
                        }
                        Some(t) if t.kind == TokenKind::RParen => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, token.pos));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
        }
    }
}
