//! Hand-rolled lexer with C-family identifiers, `//` comments, decimal
//! integers, and double-quoted strings.

use crate::span::Span;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    KwVar,
    KwFunction,
    KwNull,
    KwThis,
    KwProto,
    KwReturn,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Comma,
    Colon,
    Semi,
    Eq,
    Plus,
    Question,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Ident(x) => format!("identifier `{x}`"),
            Tok::KwVar => "`var`".into(),
            Tok::KwFunction => "`function`".into(),
            Tok::KwNull => "`null`".into(),
            Tok::KwThis => "`this`".into(),
            Tok::KwProto => "`proto`".into(),
            Tok::KwReturn => "`return`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Question => "`?`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! span_from {
        ($start:expr, $sl:expr, $sc:expr) => {
            Span::new($start as u32, i as u32, $sl, $sc)
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let (start, sl, sc) = (i, line, col);
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                    col += 1;
                }
            }
            '0'..='9' => {
                let mut n: i64 = 0;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add((bytes[i] - b'0') as i64))
                        .ok_or_else(|| {
                            ParseError::new("integer literal overflows", span_from!(start, sl, sc))
                        })?;
                    i += 1;
                    col += 1;
                }
                toks.push(Token { tok: Tok::Int(n), span: span_from!(start, sl, sc) });
            }
            '"' => {
                i += 1;
                col += 1;
                let mut s = String::new();
                loop {
                    if i >= bytes.len() {
                        return Err(ParseError::new(
                            "unterminated string literal",
                            span_from!(start, sl, sc),
                        ));
                    }
                    match bytes[i] as char {
                        '"' => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        '\\' => {
                            if i + 1 >= bytes.len() {
                                return Err(ParseError::new(
                                    "unterminated escape",
                                    span_from!(start, sl, sc),
                                ));
                            }
                            let esc = bytes[i + 1] as char;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                '"' => '"',
                                '\\' => '\\',
                                other => {
                                    return Err(ParseError::new(
                                        format!("unknown escape `\\{other}`"),
                                        span_from!(start, sl, sc),
                                    ))
                                }
                            });
                            i += 2;
                            col += 2;
                        }
                        '\n' => {
                            return Err(ParseError::new(
                                "unterminated string literal",
                                span_from!(start, sl, sc),
                            ))
                        }
                        ch => {
                            s.push(ch);
                            i += ch.len_utf8();
                            col += 1;
                        }
                    }
                }
                toks.push(Token { tok: Tok::Str(s), span: span_from!(start, sl, sc) });
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '$' => {
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                        i += 1;
                        col += 1;
                    } else {
                        break;
                    }
                }
                let word = &text[start..i];
                let tok = match word {
                    "var" => Tok::KwVar,
                    "function" => Tok::KwFunction,
                    "null" => Tok::KwNull,
                    "this" => Tok::KwThis,
                    "proto" => Tok::KwProto,
                    "return" => Tok::KwReturn,
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push(Token { tok, span: span_from!(start, sl, sc) });
            }
            _ => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '.' => Tok::Dot,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '?' => Tok::Question,
                    other => {
                        return Err(ParseError::new(
                            format!("unexpected character `{other}`"),
                            Span::new(start as u32, (start + 1) as u32, sl, sc),
                        ))
                    }
                };
                i += 1;
                col += 1;
                toks.push(Token { tok, span: span_from!(start, sl, sc) });
            }
        }
    }
    toks.push(Token {
        tok: Tok::Eof,
        span: Span::new(i as u32, i as u32, line, col),
    });
    Ok(toks)
}
