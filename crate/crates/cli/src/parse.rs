//! Line-based bivector files.
//!
//! ```text
//! # su(2) with a coupling
//! dim 3
//! param R
//! theta 1 2 R*x3
//! theta 1 3 -R*x2
//! theta 2 3 R*x1
//! ```
//!
//! Expressions follow the grammar below, except that a leading `-` negates the
//! whole power: `-x1^2` is `-(x1^2)`, matching how polynomials are printed.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := atom ('^' uint)?
//! atom     := rational | ident | '(' expr ')' | '-' atom
//! rational := int ('/' uint)?
//! ident    := x<k> | declared parameter
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use symreal_core::poly::{Naming, Poly, Rational, VarSet};
use symreal_core::Bivector;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: undeclared identifier `{name}`")]
    Undeclared {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}: diagonal entry theta {i} {i} is not allowed")]
    Diagonal { line: usize, i: usize },
    #[error("line {line}: pair ({i}, {j}) was already given on line {first}")]
    DuplicatePair {
        line: usize,
        first: usize,
        i: usize,
        j: usize,
    },
    #[error("line {line}: index {index} is out of range 1..={dim}")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        dim: usize,
    },
    #[error("missing `dim` declaration")]
    MissingDim,
}

impl ParseError {
    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

type PResult<T> = Result<T, ParseError>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Ident(String),
    Sym(char),
}

/// A token with its one-based column.
#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(line_no: usize, text: &str, offset: usize) -> PResult<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Int(chars[start..i].iter().collect()),
                col,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Spanned {
                tok: Tok::Sym(c),
                col,
            });
            i += 1;
        } else {
            return Err(ParseError::syntax(
                line_no,
                col,
                format!("unexpected character '{c}'"),
            ));
        }
    }
    Ok(out)
}

/// Index of a coordinate name `x<k>`, if it has that shape.
fn coordinate_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct ExprParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a Arc<VarSet>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |s| s.col)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn uint(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Int(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(ParseError::syntax(
                self.line,
                self.col(),
                format!("expected {what}"),
            )),
        }
    }

    fn expr(&mut self) -> PResult<Poly> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc += &self.term()?;
            } else if self.eat('-') {
                acc -= &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<Poly> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Poly> {
        let base = self.atom()?;
        if self.eat('^') {
            let col = self.col();
            let digits = self.uint("an exponent")?;
            let e: u16 = digits
                .parse()
                .map_err(|_| ParseError::syntax(self.line, col, "exponent is too large"))?;
            return Ok(base.pow(e as u32));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Poly> {
        let col = self.col();
        match self.peek().cloned() {
            // Negation applies after '^', so `-x1^2` is `-(x1^2)`.
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(ParseError::syntax(self.line, self.col(), "expected ')'"));
                }
                Ok(inner)
            }
            Some(Tok::Int(num)) => {
                self.pos += 1;
                let num: Rational = Rational::from_integer(num.parse().expect("digits"));
                if self.eat('/') {
                    let dcol = self.col();
                    let den = self.uint("a denominator")?;
                    let den: Rational = Rational::from_integer(den.parse().expect("digits"));
                    if den.is_zero() {
                        return Err(ParseError::syntax(self.line, dcol, "zero denominator"));
                    }
                    return Ok(Poly::constant(self.vars, num / den));
                }
                Ok(Poly::constant(self.vars, num))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(k) = coordinate_index(&name) {
                    if (1..=self.vars.dim()).contains(&k) {
                        return Ok(Poly::base(self.vars, k - 1));
                    }
                } else if self.vars.param_index(&name).is_some() {
                    return Ok(Poly::param(self.vars, &name).expect("declared"));
                }
                Err(ParseError::Undeclared {
                    line: self.line,
                    column: col,
                    name,
                })
            }
            Some(Tok::Sym(c)) => Err(ParseError::syntax(
                self.line,
                col,
                format!("unexpected '{c}'"),
            )),
            None => Err(ParseError::syntax(
                self.line,
                col,
                "unexpected end of expression",
            )),
        }
    }
}

fn parse_expr(line: usize, text: &str, offset: usize, vars: &Arc<VarSet>) -> PResult<Poly> {
    let toks = lex(line, text, offset)?;
    let end_col = offset + text.chars().count() + 1;
    let mut p = ExprParser {
        toks: &toks,
        pos: 0,
        line,
        end_col,
        vars,
    };
    let value = p.expr()?;
    if p.pos < toks.len() {
        return Err(ParseError::syntax(
            line,
            p.col(),
            "unexpected trailing input",
        ));
    }
    Ok(value)
}

/// Splits off the first whitespace-delimited word, returning it with its
/// zero-based character offset and the remainder with its offset.
fn split_word(text: &str, offset: usize) -> Option<(&str, usize, &str, usize)> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return None;
    }
    let start = offset + text[..text.len() - trimmed.len()].chars().count();
    let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
    let word = &trimmed[..end];
    Some((word, start, &trimmed[end..], start + word.chars().count()))
}

fn is_param_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && coordinate_index(name).is_none()
        && name != "alpha"
}

struct Pending {
    line: usize,
    i: usize,
    j: usize,
    text: String,
    offset: usize,
}

pub fn parse_bivector_file(text: &str) -> PResult<Bivector> {
    let mut dim: Option<usize> = None;
    let mut params: Vec<String> = Vec::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let Some((keyword, kcol, rest, rest_off)) = split_word(content, 0) else {
            continue;
        };
        match keyword {
            "dim" => {
                if dim.is_some() {
                    return Err(ParseError::syntax(line, kcol + 1, "`dim` declared twice"));
                }
                let Some((value, vcol, tail, toff)) = split_word(rest, rest_off) else {
                    return Err(ParseError::syntax(
                        line,
                        rest_off + 1,
                        "expected a dimension",
                    ));
                };
                if let Some((_, ecol, _, _)) = split_word(tail, toff) {
                    return Err(ParseError::syntax(
                        line,
                        ecol + 1,
                        "unexpected trailing input",
                    ));
                }
                let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                    ParseError::syntax(line, vcol + 1, "dimension must be a positive integer")
                })?;
                dim = Some(n);
            }
            "param" => {
                let mut rest = (rest, rest_off);
                let mut any = false;
                while let Some((name, ncol, tail, toff)) = split_word(rest.0, rest.1) {
                    if !is_param_name(name) {
                        return Err(ParseError::syntax(
                            line,
                            ncol + 1,
                            format!("invalid parameter name `{name}`"),
                        ));
                    }
                    if params.iter().any(|p| p == name) {
                        return Err(ParseError::syntax(
                            line,
                            ncol + 1,
                            format!("parameter `{name}` declared twice"),
                        ));
                    }
                    params.push(name.to_string());
                    any = true;
                    rest = (tail, toff);
                }
                if !any {
                    return Err(ParseError::syntax(
                        line,
                        rest_off + 1,
                        "expected a parameter name",
                    ));
                }
            }
            "theta" => {
                let n = dim.ok_or(ParseError::MissingDim)?;
                let mut indices = [0usize; 2];
                let mut cursor = (rest, rest_off);
                for slot in indices.iter_mut() {
                    let Some((word, wcol, tail, toff)) = split_word(cursor.0, cursor.1) else {
                        return Err(ParseError::syntax(line, cursor.1 + 1, "expected an index"));
                    };
                    let k: usize = word
                        .parse()
                        .map_err(|_| ParseError::syntax(line, wcol + 1, "expected an index"))?;
                    if !(1..=n).contains(&k) {
                        return Err(ParseError::IndexOutOfRange {
                            line,
                            index: k,
                            dim: n,
                        });
                    }
                    *slot = k;
                    cursor = (tail, toff);
                }
                let [i, j] = indices;
                if i == j {
                    return Err(ParseError::Diagonal { line, i });
                }
                let key = (i.min(j), i.max(j));
                if let Some(&first) = seen.get(&key) {
                    return Err(ParseError::DuplicatePair {
                        line,
                        first,
                        i: key.0,
                        j: key.1,
                    });
                }
                seen.insert(key, line);
                pending.push(Pending {
                    line,
                    i: i - 1,
                    j: j - 1,
                    text: cursor.0.to_string(),
                    offset: cursor.1,
                });
            }
            other => {
                return Err(ParseError::syntax(
                    line,
                    kcol + 1,
                    format!("unknown directive `{other}` (expected dim, param or theta)"),
                ))
            }
        }
    }

    let n = dim.ok_or(ParseError::MissingDim)?;
    let vars = VarSet::new(n, params).map_err(|e| ParseError::syntax(1, 1, e.to_string()))?;
    let mut entries = Vec::with_capacity(pending.len());
    for p in pending {
        if p.text.trim().is_empty() {
            return Err(ParseError::syntax(
                p.line,
                p.offset + 1,
                "expected an expression",
            ));
        }
        let value = parse_expr(p.line, &p.text, p.offset, &vars)?;
        entries.push((p.i, p.j, value));
    }
    Ok(Bivector::from_entries(&vars, entries).expect("entries were validated while parsing"))
}

/// Writes a bivector in the file format. Only nonzero upper-triangular
/// entries are listed, so `parse_bivector_file(render_bivector_file(t)) == t`.
pub fn render_bivector_file(theta: &Bivector) -> String {
    let vars = theta.vars();
    let mut out = format!("dim {}\n", theta.dim());
    if !vars.params().is_empty() {
        out.push_str(&format!("param {}\n", vars.params().join(" ")));
    }
    for i in 0..theta.dim() {
        for j in i + 1..theta.dim() {
            let p = theta.get(i, j);
            if !p.is_zero() {
                out.push_str(&format!(
                    "theta {} {} {}\n",
                    i + 1,
                    j + 1,
                    p.render_with(Naming::ORIGINAL)
                ));
            }
        }
    }
    out
}
