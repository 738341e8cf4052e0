//! Recursive-descent parser for the expression text syntax.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary | unary)*      -- juxtaposition multiplies
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' '-'? integer)?
//! primary := number | 'i' | 'z'digits | func '(' expr ')' | 'pow(' expr ',' int ')' | '(' expr ')'
//! ```

use num_complex::Complex64;
use std::sync::Arc;

use super::{add, conj, div, konst, mul, neg, pow, sub, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag,
    Var(usize),
    Func(&'static str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

const FUNCS: [&str; 7] = ["conj", "abs", "re", "im", "exp", "log", "pow"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: &str| Error::Parse {
        offset,
        message: message.to_string(),
    };
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((start, t));
            i += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only if followed by a digit (optionally signed)
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v: f64 = text[start..i]
                .parse()
                .map_err(|_| err(start, "malformed number"))?;
            out.push((start, Tok::Num(v)));
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let rest = &text[i..];
            if let Some(name) = FUNCS.iter().find(|f| {
                rest.starts_with(**f) && rest[f.len()..].trim_start().starts_with('(')
            }) {
                out.push((start, Tok::Func(name)));
                i += name.len();
                continue;
            }
            if ch == 'z' {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(err(start, "variable needs an index, e.g. z1"));
                }
                let k: usize = text[i + 1..j]
                    .parse()
                    .map_err(|_| err(start, "bad variable index"))?;
                if k == 0 {
                    return Err(err(start, "variables are numbered from z1"));
                }
                out.push((start, Tok::Var(k - 1)));
                i = j;
                continue;
            }
            if ch == 'i' {
                out.push((start, Tok::Imag));
                i += 1;
                continue;
            }
            return Err(err(start, "unknown identifier"));
        }
        return Err(err(start, "unexpected character"));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn fail<T>(&self, message: &str) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            message: message.to_string(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = add(lhs, self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = mul(lhs, self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = div(lhs, self.unary()?);
                }
                Some(Tok::Num(_) | Tok::Imag | Tok::Var(_) | Tok::Func(_) | Tok::LParen) => {
                    lhs = mul(lhs, self.power()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn int_literal(&mut self) -> Result<i32> {
        let sign = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            -1
        } else {
            1
        };
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= 1024.0 => {
                let k = *v as i32 * sign;
                self.pos += 1;
                Ok(k)
            }
            _ => self.fail("expected an integer exponent"),
        }
    }

    fn power(&mut self) -> Result<Arc<Node>> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let k = self.int_literal()?;
            return Ok(pow(base, k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Arc<Node>> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.fail("unexpected end of input"),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(konst(Complex64::new(v, 0.0))),
            Tok::Imag => Ok(konst(Complex64::new(0.0, 1.0))),
            Tok::Var(k) => Ok(Arc::new(Node::Var(k))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Func(name) => {
                self.expect(Tok::LParen, "`(`")?;
                let arg = self.expr()?;
                let node = if name == "pow" {
                    self.expect(Tok::Comma, "`,` in pow(e,k)")?;
                    let k = self.int_literal()?;
                    pow(arg, k)
                } else {
                    match name {
                        "conj" => conj(arg),
                        "abs" => Arc::new(Node::Abs(arg)),
                        "re" => Arc::new(Node::Re(arg)),
                        "im" => Arc::new(Node::Im(arg)),
                        "exp" => Arc::new(Node::Exp(arg)),
                        "log" => Arc::new(Node::Log(arg)),
                        _ => unreachable!(),
                    }
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(node)
            }
            _ => {
                self.pos -= 1;
                self.fail("unexpected token")
            }
        }
    }
}

pub(crate) fn parse(text: &str) -> Result<Arc<Node>> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        len: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(e)
}

/// Parses a constant such as `2`, `-1.5`, `3i`, `1-0.5i`.
pub fn parse_complex_literal(text: &str) -> Result<Complex64> {
    let node = parse(text)?;
    if super::max_var(&node).is_some() {
        return Err(Error::Parse {
            offset: 0,
            message: format!("`{text}` is not a constant"),
        });
    }
    super::eval_node(&node, &[])
}
