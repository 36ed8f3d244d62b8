//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := atom ("^" integer)?
//! atom   := number | ident | "(" expr ")" | func "(" expr ")"
//! ident  := "x1".."x9" | "u1".."u9" | "pi"
//! func   := sin | cos | exp | log | sqrt | tanh | atan
//! ```
//!
//! Whitespace is insignificant. A leading minus on an expression (and after
//! an opening parenthesis) is accepted as a convenience.

use crate::error::{Error, Result};
use crate::jets::expr::{Expr, UnaryFn, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn err_at(src: &str, offset: usize, message: impl Into<String>) -> Error {
    let upto = &src[..offset.min(src.len())];
    let line = upto.matches('\n').count() + 1;
    let col = offset - upto.rfind('\n').map(|p| p + 1).unwrap_or(0) + 1;
    Error::Parse {
        line,
        col,
        message: message.into(),
    }
}

impl Lexer {
    fn tokenize(src: &str) -> Result<Lexer> {
        let bytes = src.as_bytes();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => {
                    toks.push((Tok::Plus, i));
                    i += 1;
                }
                '-' => {
                    toks.push((Tok::Minus, i));
                    i += 1;
                }
                '*' => {
                    toks.push((Tok::Star, i));
                    i += 1;
                }
                '/' => {
                    toks.push((Tok::Slash, i));
                    i += 1;
                }
                '^' => {
                    toks.push((Tok::Caret, i));
                    i += 1;
                }
                '(' => {
                    toks.push((Tok::LParen, i));
                    i += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, i));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                        i += 1;
                    }
                    // optional exponent part
                    if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                            j += 1;
                        }
                        if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text = &src[start..i];
                    let value: f64 = text
                        .parse()
                        .map_err(|_| err_at(src, start, format!("invalid number '{text}'")))?;
                    toks.push((Tok::Num(value), start));
                }
                'a'..='z' | 'A'..='Z' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                        i += 1;
                    }
                    toks.push((Tok::Ident(src[start..i].to_string()), start));
                }
                _ => return Err(err_at(src, i, format!("unexpected character '{c}'"))),
            }
        }
        Ok(Lexer { toks })
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|&(_, o)| o)
            .unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        err_at(self.src, self.offset(), message)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let neg = if matches!(self.peek(), Some(Tok::Minus)) {
                self.bump();
                true
            } else {
                false
            };
            match self.bump() {
                Some(Tok::Num(x)) if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 => {
                    let e = x as i32;
                    Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }))
                }
                _ => {
                    self.pos -= 1;
                    Err(self.fail("exponent must be an integer literal"))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(Expr::Number(x)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.fail("expected ')'"))
                    }
                }
            }
            Some(Tok::Ident(name)) => self.ident(&name, offset),
            Some(t) => {
                self.pos -= 1;
                Err(self.fail(format!("unexpected token {t:?}")))
            }
            None => Err(self.fail("unexpected end of expression")),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr> {
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        let func = match name {
            "sin" => Some(UnaryFn::Sin),
            "cos" => Some(UnaryFn::Cos),
            "exp" => Some(UnaryFn::Exp),
            "log" => Some(UnaryFn::Log),
            "sqrt" => Some(UnaryFn::Sqrt),
            "tanh" => Some(UnaryFn::Tanh),
            "atan" => Some(UnaryFn::Atan),
            _ => None,
        };
        if let Some(f) = func {
            match self.bump() {
                Some(Tok::LParen) => {}
                _ => {
                    self.pos -= 1;
                    return Err(self.fail(format!("expected '(' after function '{name}'")));
                }
            }
            let arg = self.expr()?;
            match self.bump() {
                Some(Tok::RParen) => return Ok(Expr::Fun(f, Box::new(arg))),
                _ => {
                    self.pos -= 1;
                    return Err(self.fail("expected ')'"));
                }
            }
        }
        let bytes = name.as_bytes();
        if bytes.len() == 2 && matches!(bytes[0], b'x' | b'u') && bytes[1].is_ascii_digit() {
            let j = bytes[1] - b'0';
            if (1..=9).contains(&j) {
                return Ok(Expr::Var(if bytes[0] == b'x' {
                    Var::X(j)
                } else {
                    Var::U(j)
                }));
            }
        }
        Err(err_at(self.src, offset, format!("unknown identifier '{name}'")))
    }
}

/// Parse a full expression; trailing tokens are an error.
pub fn parse(src: &str) -> Result<Expr> {
    let lexer = Lexer::tokenize(src)?;
    let mut parser = Parser {
        src,
        toks: lexer.toks,
        pos: 0,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(parser.fail("trailing input after expression"));
    }
    Ok(expr)
}
