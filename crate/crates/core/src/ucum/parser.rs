//! Parser for the UCUM term grammar subset:
//!
//! ```text
//! term      := '/'? component (('.' | '/') component)*
//! component := '(' term ')' | annotation | factor annotation? | unit exponent? annotation?
//! exponent  := ('+' | '-')? digit+
//! ```
//!
//! Division is left-associative and binds only the next component, so
//! `kg.m/s2` is `kg¹ m¹ s⁻²` and `a/b.c` is `a¹ b⁻¹ c¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ucum::UnitRegistry;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTerm {
    pub prefix: Option<String>,
    pub atom: String,
    pub exponent: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Factor {
    /// Integer constant such as the `100` in `/100`.
    Number { value: u64, exponent: i32 },
    Unit(UnitTerm),
}

/// A parsed unit expression. `source` keeps the code exactly as written,
/// annotations included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitExpr {
    pub source: String,
    pub terms: Vec<Factor>,
    pub annotations: Vec<String>,
}

impl UnitExpr {
    pub fn units(&self) -> impl Iterator<Item = &UnitTerm> {
        self.terms.iter().filter_map(|f| match f {
            Factor::Unit(u) => Some(u),
            Factor::Number { .. } => None,
        })
    }
}

impl std::fmt::Display for UnitExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.source)
    }
}

pub(crate) fn parse(code: &str, registry: &UnitRegistry) -> Result<UnitExpr> {
    let mut p = Parser {
        src: code,
        pos: 0,
        registry,
        terms: Vec::new(),
        annotations: Vec::new(),
    };
    if code.is_empty() {
        return Err(p.syntax("empty unit expression"));
    }
    p.term(1)?;
    if p.pos < code.len() {
        let c = p.peek().unwrap_or_default();
        return Err(p.syntax(format!("unexpected {c:?}")));
    }
    Ok(UnitExpr {
        source: code.to_string(),
        terms: p.terms,
        annotations: p.annotations,
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    registry: &'a UnitRegistry,
    terms: Vec<Factor>,
    annotations: Vec<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn syntax(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            code: self.src.to_string(),
            position: self.pos,
            message: message.into(),
        }
    }

    fn term(&mut self, sign: i32) -> Result<()> {
        let mut next_sign = sign;
        if self.peek() == Some('/') {
            self.bump();
            next_sign = -sign;
        }
        self.component(next_sign)?;
        loop {
            match self.peek() {
                Some('.') => next_sign = sign,
                Some('/') => next_sign = -sign,
                _ => return Ok(()),
            }
            self.bump();
            self.component(next_sign)?;
        }
    }

    fn component(&mut self, sign: i32) -> Result<()> {
        match self.peek() {
            None => Err(self.syntax("expected a unit")),
            Some('(') => {
                self.bump();
                self.term(sign)?;
                if self.bump() != Some(')') {
                    self.pos = self.pos.min(self.src.len());
                    return Err(self.syntax("expected ')'"));
                }
                Ok(())
            }
            Some('{') => {
                // A bare annotation stands for the unity.
                self.annotation()?;
                self.terms.push(Factor::Number {
                    value: 1,
                    exponent: sign,
                });
                Ok(())
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
                let value: u64 = self.src[start..self.pos].parse().map_err(|_| Error::Syntax {
                    code: self.src.to_string(),
                    position: start,
                    message: "integer factor out of range".into(),
                })?;
                if value == 0 {
                    return Err(Error::Syntax {
                        code: self.src.to_string(),
                        position: start,
                        message: "integer factor must be at least 1".into(),
                    });
                }
                self.terms.push(Factor::Number {
                    value,
                    exponent: sign,
                });
                self.maybe_annotation()
            }
            Some(_) => {
                let start = self.pos;
                let symbol = self.symbol()?;
                let exponent = self.exponent()?;
                let (prefix, atom) = resolve(symbol, self.registry).map_err(|e| match e {
                    Error::Syntax { message, .. } => Error::Syntax {
                        code: self.src.to_string(),
                        position: start,
                        message,
                    },
                    other => other,
                })?;
                self.terms.push(Factor::Unit(UnitTerm {
                    prefix,
                    atom,
                    exponent: exponent.checked_mul(sign).ok_or_else(|| self.syntax("exponent out of range"))?,
                }));
                self.maybe_annotation()
            }
        }
    }

    fn symbol(&mut self) -> Result<&'a str> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            match c {
                '[' => {
                    self.bump();
                    loop {
                        match self.bump() {
                            Some(']') => break,
                            Some(c) if c.is_ascii_graphic() && c != '[' => {}
                            _ => return Err(self.syntax("unterminated '['")),
                        }
                    }
                }
                '.' | '/' | '(' | ')' | '{' | '}' | '+' | '-' => break,
                c if c.is_ascii_digit() => break,
                '^' => return Err(self.syntax("'^' is not UCUM exponent syntax; write m2, not m^2")),
                c if !c.is_ascii_graphic() => return Err(self.syntax(format!("invalid character {c:?}"))),
                _ => {
                    self.bump();
                }
            }
        }
        if self.pos == start {
            return Err(self.syntax("expected a unit"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn exponent(&mut self) -> Result<i32> {
        let start = self.pos;
        let negative = match self.peek() {
            Some('-') => {
                self.bump();
                true
            }
            Some('+') => {
                self.bump();
                false
            }
            _ => false,
        };
        let digits_start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.pos == digits_start {
            if self.pos > start {
                return Err(self.syntax("expected exponent digits"));
            }
            return Ok(1);
        }
        let magnitude: i32 = self.src[digits_start..self.pos]
            .parse()
            .map_err(|_| self.syntax("exponent out of range"))?;
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn maybe_annotation(&mut self) -> Result<()> {
        if self.peek() == Some('{') {
            self.annotation()?;
        }
        Ok(())
    }

    fn annotation(&mut self) -> Result<()> {
        self.bump();
        let start = self.pos;
        loop {
            match self.bump() {
                Some('}') => break,
                Some(c) if c.is_ascii_graphic() && c != '{' => {}
                _ => return Err(self.syntax("unterminated annotation")),
            }
        }
        self.annotations.push(self.src[start..self.pos - 1].to_string());
        Ok(())
    }
}

/// Exact atom match wins; otherwise try prefixes longest first, accepting
/// only metric atoms.
fn resolve(symbol: &str, registry: &UnitRegistry) -> Result<(Option<String>, String)> {
    if registry.atom(symbol).is_some() {
        return Ok((None, symbol.to_string()));
    }
    for prefix in registry.prefixes_longest_first() {
        if let Some(rest) = symbol.strip_prefix(prefix.code.as_str()) {
            if rest.is_empty() {
                continue;
            }
            if let Some(atom) = registry.atom(rest) {
                if atom.metric {
                    return Ok((Some(prefix.code.clone()), atom.code.clone()));
                }
            }
        }
    }
    // A metric atom preceded by something short that is not a prefix.
    for (i, _) in symbol.char_indices().skip(1).take(2) {
        let (head, rest) = symbol.split_at(i);
        if registry.prefix(head).is_none() && registry.atom(rest).is_some_and(|a| a.metric) {
            return Err(Error::UnknownPrefix {
                prefix: head.to_string(),
                token: symbol.to_string(),
            });
        }
    }
    Err(Error::UnknownUnit(symbol.to_string()))
}
