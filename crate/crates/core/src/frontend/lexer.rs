use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::ast::Span;
use super::FrontendError;
use crate::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Unsigned decimal or integer literal, already exact.
    Num(Rational),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

const KEYWORDS: &[&str] = &[
    "while", "do", "od", "if", "then", "else", "fi", "skip", "tick", "prob", "dist", "init",
    "finite", "uniform", "and", "or", "not", "true", "false",
];

const SYMBOLS: &[&str] = &[
    ":=", "<=", ">=", ";", ",", "(", ")", "{", "}", "[", "]", ":", "=", "+", "-", "*", "/", "^",
    "<", ">",
];

pub fn lex(text: &str) -> Result<Vec<(Tok, Span)>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let mut span = Span { line, col, start: i, end: i + 1 };
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
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            while i < chars.len() && chars[i] == '\'' {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            span.end = i;
            out.push((tok, span));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut frac = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac.push(chars[i]);
                    i += 1;
                }
            }
            let int: String = chars[start..i].iter().take_while(|d| **d != '.').collect();
            col += i - start;
            span.end = i;
            out.push((Tok::Num(decimal(&int, &frac)), span));
            continue;
        }
        let unicode = match c {
            '≤' => Some(Tok::Sym("<=")),
            '≥' => Some(Tok::Sym(">=")),
            '∧' => Some(Tok::Kw("and")),
            '∨' => Some(Tok::Kw("or")),
            '¬' => Some(Tok::Kw("not")),
            '⋆' => Some(Tok::Sym("*")),
            '−' => Some(Tok::Sym("-")),
            _ => None,
        };
        if let Some(t) = unicode {
            out.push((t, span));
            i += 1;
            col += 1;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                span.end = i + s.len();
                out.push((Tok::Sym(s), span));
                i += s.len();
                col += s.len();
            }
            None => {
                return Err(FrontendError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    out.push((Tok::Eof, Span { line, col, start: i, end: i }));
    Ok(out)
}

fn decimal(int: &str, frac: &str) -> Rational {
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().expect("digits only")
    };
    let mut d = BigInt::one();
    for _ in 0..frac.len() {
        d *= 10;
    }
    Rational::new(n, d)
}
