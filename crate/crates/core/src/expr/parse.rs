//! Line-oriented problem-file parser.
//!
//! Header lines `n = <int>`, `m = <int>`, optional `name = <ident>`,
//! `A = [[r,...],...]`, `xi = [r,...]`, `box = [lo,hi]x[lo,hi]...`;
//! component lines `F<k> = <expr>`. Comments start with `#`.
//!
//! Expressions use `+ - * / ^`, `abs(...)`, `min(a,b)`, `max(a,b)`,
//! parentheses and decimal literals. `min`/`max` are desugared through abs,
//! so the rest of the toolkit only ever sees one nonsmooth primitive.

use super::{Block, ExprNode, NodeId, ProblemDef};
use nalgebra::DMatrix;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownVariable(String),
    DimensionMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match &self.kind {
            ParseErrorKind::Syntax(m) => m,
            ParseErrorKind::UnknownVariable(m) => m,
            ParseErrorKind::DimensionMismatch(m) => m,
        };
        write!(f, "line {}, col {}: {}", self.line, self.col, msg)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, col: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { line, col, kind })
}

fn syntax<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    err(line, col, ParseErrorKind::Syntax(msg.into()))
}

/// Parse a problem file into a [`ProblemDef`].
pub fn parse_problem(text: &str) -> Result<ProblemDef, ParseError> {
    let mut n: Option<usize> = None;
    let mut m: Option<usize> = None;
    let mut name = String::from("unnamed");
    let mut matrix_rows: Option<(usize, Vec<Vec<f64>>)> = None;
    let mut xi: Option<(usize, Vec<f64>)> = None;
    let mut cert_box: Option<(usize, Vec<(f64, f64)>)> = None;
    let mut component_lines: Vec<(usize, usize, String)> = Vec::new();

    for (line_idx, raw) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let eq = match line.find('=') {
            Some(p) => p,
            None => return syntax(line_no, 1, "expected `key = value`"),
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        let vcol = eq + 2;
        match key {
            "n" => n = Some(parse_usize(value, line_no, vcol)?),
            "m" => m = Some(parse_usize(value, line_no, vcol)?),
            "name" => name = value.to_string(),
            "A" => matrix_rows = Some((line_no, parse_matrix(value, line_no, vcol)?)),
            "xi" => xi = Some((line_no, parse_vector(value, line_no, vcol)?)),
            "box" => cert_box = Some((line_no, parse_box(value, line_no, vcol)?)),
            _ if key.starts_with('F') => {
                let k = match key[1..].parse::<usize>() {
                    Ok(k) if k >= 1 => k,
                    _ => return syntax(line_no, 1, format!("bad component name `{key}`")),
                };
                component_lines.push((k, line_no, value.to_string()));
            }
            _ => return syntax(line_no, 1, format!("unknown header `{key}`")),
        }
    }

    let n = match n {
        Some(v) if v >= 1 => v,
        Some(_) => return err(1, 1, ParseErrorKind::DimensionMismatch("n must be >= 1".into())),
        None => return syntax(1, 1, "missing `n = <int>` header"),
    };
    let m = m.unwrap_or(0);

    let mut arena = Vec::new();
    let mut components: Vec<Option<NodeId>> = vec![None; n];
    for (k, line_no, text) in &component_lines {
        if *k > n {
            return err(
                *line_no,
                1,
                ParseErrorKind::DimensionMismatch(format!(
                    "component F{k} out of range for n = {n}"
                )),
            );
        }
        if components[*k - 1].is_some() {
            return syntax(*line_no, 1, format!("duplicate component F{k}"));
        }
        let root = ExprParser::new(text, *line_no, n, m, &mut arena).parse_full()?;
        components[*k - 1] = Some(root);
    }
    let components = components
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or(ParseError {
                line: 1,
                col: 1,
                kind: ParseErrorKind::DimensionMismatch(format!("missing component F{}", i + 1)),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let matrix_a = match matrix_rows {
        None => None,
        Some((line_no, rows)) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return err(
                    line_no,
                    1,
                    ParseErrorKind::DimensionMismatch(format!("A must be {n}x{n}")),
                );
            }
            if m != 0 {
                return err(
                    line_no,
                    1,
                    ParseErrorKind::DimensionMismatch(
                        "algebraic mode (A present) requires m = 0".into(),
                    ),
                );
            }
            Some(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
        }
    };
    let xi = match xi {
        None => None,
        Some((line_no, v)) => {
            if v.len() != n {
                return err(
                    line_no,
                    1,
                    ParseErrorKind::DimensionMismatch(format!("xi must have {n} entries")),
                );
            }
            Some(v)
        }
    };
    let cert_box = match cert_box {
        None => None,
        Some((line_no, b)) => {
            if b.len() != n + m {
                return err(
                    line_no,
                    1,
                    ParseErrorKind::DimensionMismatch(format!(
                        "box must have {} intervals (n + m), got {}",
                        n + m,
                        b.len()
                    )),
                );
            }
            if b.iter().any(|(lo, hi)| lo > hi) {
                return syntax(line_no, 1, "box interval with lo > hi");
            }
            Some(b)
        }
    };

    Ok(ProblemDef::from_parts(
        name, n, m, arena, components, matrix_a, xi, cert_box,
    ))
}

fn parse_usize(s: &str, line: usize, col: usize) -> Result<usize, ParseError> {
    s.trim()
        .parse()
        .map_err(|_| ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax(format!("expected integer, got `{s}`")),
        })
}

fn parse_f64(s: &str, line: usize, col: usize) -> Result<f64, ParseError> {
    s.trim()
        .parse()
        .map_err(|_| ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax(format!("expected number, got `{s}`")),
        })
}

fn parse_vector(s: &str, line: usize, col: usize) -> Result<Vec<f64>, ParseError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or(ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax("expected `[r, r, ...]`".into()),
        })?;
    inner
        .split(',')
        .map(|tok| parse_f64(tok, line, col))
        .collect()
}

fn parse_matrix(s: &str, line: usize, col: usize) -> Result<Vec<Vec<f64>>, ParseError> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact
        .strip_prefix("[[")
        .and_then(|t| t.strip_suffix("]]"))
        .ok_or(ParseError {
            line,
            col,
            kind: ParseErrorKind::Syntax("expected `[[r,...],[r,...]]`".into()),
        })?;
    inner
        .split("],[")
        .map(|row| {
            row.split(',')
                .map(|tok| parse_f64(tok, line, col))
                .collect()
        })
        .collect()
}

fn parse_box(s: &str, line: usize, col: usize) -> Result<Vec<(f64, f64)>, ParseError> {
    s.trim()
        .split('x')
        .map(|seg| {
            let inner = seg
                .trim()
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or(ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::Syntax("expected `[lo,hi]x[lo,hi]...`".into()),
                })?;
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != 2 {
                return syntax(line, col, "box interval needs exactly lo and hi");
            }
            Ok((
                parse_f64(parts[0], line, col)?,
                parse_f64(parts[1], line, col)?,
            ))
        })
        .collect()
}

// --- expression tokenizer + recursive-descent parser --------------------

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
    Comma,
}

struct ExprParser<'a> {
    toks: Vec<(Tok, usize)>, // token, column
    pos: usize,
    line: usize,
    n: usize,
    m: usize,
    arena: &'a mut Vec<ExprNode>,
}

impl<'a> ExprParser<'a> {
    fn new(
        text: &str,
        line: usize,
        n: usize,
        m: usize,
        arena: &'a mut Vec<ExprNode>,
    ) -> Self {
        let toks = tokenize(text);
        ExprParser {
            toks,
            pos: 0,
            line,
            n,
            m,
            arena,
        }
    }

    fn push(&mut self, node: ExprNode) -> NodeId {
        self.arena.push(node);
        NodeId(self.arena.len() - 1)
    }

    fn peek(&self) -> Option<&(Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, c)| *c)
            .unwrap_or(1)
    }

    fn parse_full(mut self) -> Result<NodeId, ParseError> {
        let root = self.expr()?;
        if let Some((tok, col)) = self.peek() {
            return syntax(self.line, *col, format!("unexpected trailing `{tok:?}`"));
        }
        Ok(root)
    }

    fn expr(&mut self) -> Result<NodeId, ParseError> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = self.push(ExprNode::Add(lhs, rhs));
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.term()?;
                    lhs = self.push(ExprNode::Sub(lhs, rhs));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<NodeId, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((tok, _)) = self.peek() {
            match tok {
                Tok::Star => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = self.push(ExprNode::Mul(lhs, rhs));
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.unary()?;
                    lhs = self.push(ExprNode::Div(lhs, rhs));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<NodeId, ParseError> {
        if let Some((Tok::Minus, _)) = self.peek() {
            self.next();
            let inner = self.unary()?;
            // Fold a negated literal into the constant so printing
            // round-trips structurally.
            if let ExprNode::Constant(c) = self.arena[inner.0] {
                if inner.0 == self.arena.len() - 1 {
                    self.arena[inner.0] = ExprNode::Constant(-c);
                    return Ok(inner);
                }
            }
            return Ok(self.push(ExprNode::Neg(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<NodeId, ParseError> {
        let mut base = self.atom()?;
        while let Some((Tok::Caret, _)) = self.peek() {
            self.next();
            let col = self.col();
            match self.next() {
                Some((Tok::Num(v), _)) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => {
                    base = self.push(ExprNode::Pow(base, v as u32));
                }
                _ => {
                    return syntax(
                        self.line,
                        col,
                        "exponent must be a nonnegative integer literal",
                    )
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<NodeId, ParseError> {
        let col = self.col();
        match self.next() {
            Some((Tok::Num(v), _)) => Ok(self.push(ExprNode::Constant(v))),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, ")")?;
                Ok(inner)
            }
            Some((Tok::Ident(name), icol)) => match name.as_str() {
                "abs" => {
                    self.expect(Tok::LParen, "(")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, ")")?;
                    Ok(self.push(ExprNode::Abs(arg)))
                }
                "min" | "max" => {
                    self.expect(Tok::LParen, "(")?;
                    let a = self.expr()?;
                    self.expect(Tok::Comma, ",")?;
                    let b = self.expr()?;
                    self.expect(Tok::RParen, ")")?;
                    // min(a,b) = 0.5*((a+b) - |a-b|), max flips the sign.
                    let sum = self.push(ExprNode::Add(a, b));
                    let diff = self.push(ExprNode::Sub(a, b));
                    let gap = self.push(ExprNode::Abs(diff));
                    let combined = if name == "min" {
                        self.push(ExprNode::Sub(sum, gap))
                    } else {
                        self.push(ExprNode::Add(sum, gap))
                    };
                    let half = self.push(ExprNode::Constant(0.5));
                    Ok(self.push(ExprNode::Mul(half, combined)))
                }
                _ => self.variable(&name, icol),
            },
            Some((tok, tcol)) => syntax(self.line, tcol, format!("unexpected `{tok:?}`")),
            None => syntax(self.line, col, "unexpected end of expression"),
        }
    }

    fn variable(&mut self, name: &str, col: usize) -> Result<NodeId, ParseError> {
        let (block, dim, tail) = if let Some(tail) = name.strip_prefix('x') {
            (Block::X, self.n, tail)
        } else if let Some(tail) = name.strip_prefix('y') {
            (Block::Y, self.m, tail)
        } else {
            return err(
                self.line,
                col,
                ParseErrorKind::UnknownVariable(format!("unknown variable `{name}`")),
            );
        };
        let idx: usize = match tail.parse::<usize>() {
            Ok(k) if k >= 1 => k,
            _ => {
                return err(
                    self.line,
                    col,
                    ParseErrorKind::UnknownVariable(format!("unknown variable `{name}`")),
                )
            }
        };
        if idx > dim {
            return err(
                self.line,
                col,
                ParseErrorKind::DimensionMismatch(format!(
                    "variable `{name}` out of range (block size {dim})"
                )),
            );
        }
        Ok(self.push(ExprNode::Var {
            block,
            index: idx - 1,
        }))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let col = self.col();
        match self.next() {
            Some((tok, _)) if tok == want => Ok(()),
            Some((tok, tcol)) => syntax(self.line, tcol, format!("expected `{what}`, got `{tok:?}`")),
            None => syntax(self.line, col, format!("expected `{what}`")),
        }
    }
}

fn tokenize(text: &str) -> Vec<(Tok, usize)> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
            }
            '+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, col));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, col));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, col));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) => toks.push((Tok::Num(v), col)),
                    Err(_) => {
                        // Surface as an ident so the parser reports it.
                        toks.push((Tok::Ident(text), col));
                    }
                }
            }
            c if c.is_alphabetic() || c == '_' || c == '$' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_alphanumeric() || bytes[i] == '_' || bytes[i] == '$')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(bytes[start..i].iter().collect()), col));
            }
            other => {
                toks.push((Tok::Ident(other.to_string()), col));
                i += 1;
            }
        }
    }
    toks
}
