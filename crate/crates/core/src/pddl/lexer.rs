//! Tokenizer for the PDDL subset and goal-operator files. Tracks line and
//! column for diagnostics; `;` starts a comment running to end of line.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    LParen,
    RParen,
    Symbol(String),
    Str(String),
    Int(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct LexError {
    pub pos: Pos,
    pub msg: String,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        ($c:expr) => {{
            if $c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '(' => {
                chars.next();
                bump!(c);
                tokens.push(Token { kind: TokenKind::LParen, pos });
            }
            ')' => {
                chars.next();
                bump!(c);
                tokens.push(Token { kind: TokenKind::RParen, pos });
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    chars.next();
                    bump!(c);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                chars.next();
                bump!(c);
                let mut s = String::new();
                loop {
                    match chars.peek().copied() {
                        None => {
                            return Err(LexError { pos, msg: "unterminated string".into() })
                        }
                        Some('"') => {
                            chars.next();
                            bump!('"');
                            break;
                        }
                        Some(c) => {
                            chars.next();
                            bump!(c);
                            s.push(c);
                        }
                    }
                }
                tokens.push(Token { kind: TokenKind::Str(s), pos });
            }
            c if c.is_whitespace() => {
                chars.next();
                bump!(c);
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';' | '"') {
                        break;
                    }
                    chars.next();
                    bump!(c);
                    s.push(c);
                }
                let kind = match s.parse::<u64>() {
                    Ok(n) if s.chars().all(|c| c.is_ascii_digit()) => TokenKind::Int(n),
                    _ => TokenKind::Symbol(s),
                };
                tokens.push(Token { kind, pos });
            }
        }
    }
    Ok(tokens)
}
