//! Closed expression language for `calculate` and `filter` transforms.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! or      := and ( ("||" | "or") and )*
//! and     := not ( ("&&" | "and") not )*
//! not     := ("!" | "not") not | cmp
//! cmp     := sum ( ("<" | "<=" | ">" | ">=" | "==" | "!=" | "===" | "!==") sum )?
//! sum     := product ( ("+" | "-") product )*
//! product := unary ( ("*" | "/") unary )*
//! unary   := "-" unary | atom
//! atom    := number | string | true | false | null | column | "(" or ")"
//! column  := ident | datum.ident | datum["name"]
//! ```
//!
//! Strings compared against temporal values are parsed as temporal literals,
//! so `quarter >= '2020-Q2'` works on a temporal column.

use std::ops::Range;

use super::super::chart::table::Column;
use super::super::chart::value::{TimeValue, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at {}..{}", span.start, span.end)]
pub struct ExprError {
    pub message: String,
    pub span: Range<usize>,
}

impl ExprError {
    fn new(message: impl Into<String>, span: Range<usize>) -> Self {
        Self {
            message: message.into(),
            span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Str(String),
    Bool(bool),
    Null,
    Column(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Range<usize>,
}

impl Expr {
    /// Column names referenced anywhere in the expression.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::Column(c) => {
                if !out.contains(&c.as_str()) {
                    out.push(c)
                }
            }
            ExprKind::Neg(e) | ExprKind::Not(e) => e.collect_columns(out),
            ExprKind::Binary(_, a, b) => {
                a.collect_columns(out);
                b.collect_columns(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
}

fn lex(src: &str) -> Result<Vec<(Tok, Range<usize>)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => out.push((Tok::LParen, i..i + 1)),
            b')' => out.push((Tok::RParen, i..i + 1)),
            b'[' => out.push((Tok::LBracket, i..i + 1)),
            b']' => out.push((Tok::RBracket, i..i + 1)),
            b'+' | b'-' | b'*' | b'/' => {
                let op = match c {
                    b'+' => "+",
                    b'-' => "-",
                    b'*' => "*",
                    _ => "/",
                };
                out.push((Tok::Op(op), i..i + 1));
            }
            b'<' | b'>' | b'=' | b'!' | b'&' | b'|' => {
                let rest = &src[i..];
                let op = ["===", "!==", "<=", ">=", "==", "!=", "&&", "||", "<", ">", "!"]
                    .into_iter()
                    .find(|op| rest.starts_with(op))
                    .ok_or_else(|| ExprError::new(format!("unexpected character {:?}", c as char), i..i + 1))?;
                i += op.len();
                out.push((Tok::Op(op), start..i));
                continue;
            }
            b'\'' | b'"' => {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    match bytes.get(i) {
                        None => return Err(ExprError::new("unterminated string", start..src.len())),
                        Some(&b) if b == quote => break,
                        Some(b'\\') if i + 1 < bytes.len() => {
                            s.push(bytes[i + 1] as char);
                            i += 2;
                        }
                        Some(_) => {
                            let ch = src[i..].chars().next().unwrap();
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                i += 1;
                out.push((Tok::Str(s), start..i));
                continue;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
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
                let text = &src[start..i];
                let n: f64 = text
                    .parse()
                    .map_err(|_| ExprError::new(format!("bad number {text:?}"), start..i))?;
                out.push((Tok::Num(n), start..i));
                continue;
            }
            b'.' => out.push((Tok::Dot, i..i + 1)),
            c if c.is_ascii_alphabetic() || c == b'_' || c == b'$' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start..i));
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(ExprError::new(
                    format!("unexpected character {ch:?}"),
                    i..i + ch.len_utf8(),
                ));
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Range<usize>)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn span_here(&self) -> Range<usize> {
        self.toks.get(self.pos).map_or(self.end..self.end, |t| t.1.clone())
    }

    fn bump(&mut self) -> Option<(Tok, Range<usize>)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, ops: &[&str]) -> Option<(&'static str, Range<usize>)> {
        match self.toks.get(self.pos) {
            Some((Tok::Op(op), span)) if ops.contains(op) => {
                let r = (*op, span.clone());
                self.pos += 1;
                Some(r)
            }
            Some((Tok::Ident(word), span)) => {
                let mapped = match word.as_str() {
                    "and" => "&&",
                    "or" => "||",
                    "not" => "!",
                    _ => return None,
                };
                if ops.contains(&mapped) {
                    let span = span.clone();
                    self.pos += 1;
                    Some((mapped, span))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        let span = a.span.start..b.span.end;
        Expr {
            kind: ExprKind::Binary(op, Box::new(a), Box::new(b)),
            span,
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and()?;
        while self.eat_op(&["||"]).is_some() {
            let rhs = self.and()?;
            lhs = Self::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.not()?;
        while self.eat_op(&["&&"]).is_some() {
            let rhs = self.not()?;
            lhs = Self::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, ExprError> {
        if let Some((_, span)) = self.eat_op(&["!"]) {
            let inner = self.not()?;
            let span = span.start..inner.span.end;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(inner)),
                span,
            });
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let lhs = self.sum()?;
        if let Some((op, _)) = self.eat_op(&["<", "<=", ">", ">=", "==", "!=", "===", "!=="]) {
            let op = match op {
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                "==" | "===" => BinOp::Eq,
                _ => BinOp::Ne,
            };
            let rhs = self.sum()?;
            return Ok(Self::binary(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Some((op, _)) = self.eat_op(&["+", "-"]) {
            let rhs = self.product()?;
            lhs = Self::binary(if op == "+" { BinOp::Add } else { BinOp::Sub }, lhs, rhs);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some((op, _)) = self.eat_op(&["*", "/"]) {
            let rhs = self.unary()?;
            lhs = Self::binary(if op == "*" { BinOp::Mul } else { BinOp::Div }, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if let Some((_, span)) = self.eat_op(&["-"]) {
            let inner = self.unary()?;
            let span = span.start..inner.span.end;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let here = self.span_here();
        let (tok, span) = self
            .bump()
            .ok_or_else(|| ExprError::new("unexpected end of expression", here.clone()))?;
        let kind = match tok {
            Tok::Num(n) => ExprKind::Number(n),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::LParen => {
                let inner = self.or()?;
                match self.bump() {
                    Some((Tok::RParen, close)) => {
                        return Ok(Expr {
                            kind: inner.kind,
                            span: span.start..close.end,
                        })
                    }
                    _ => return Err(ExprError::new("expected ')'", span.start..self.end)),
                }
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => ExprKind::Bool(true),
                "false" => ExprKind::Bool(false),
                "null" => ExprKind::Null,
                "datum" => return self.datum_access(span),
                _ => ExprKind::Column(word),
            },
            _ => return Err(ExprError::new("unexpected token", span)),
        };
        Ok(Expr { kind, span })
    }

    fn datum_access(&mut self, start: Range<usize>) -> Result<Expr, ExprError> {
        match self.bump() {
            Some((Tok::Dot, _)) => match self.bump() {
                Some((Tok::Ident(name), span)) => Ok(Expr {
                    kind: ExprKind::Column(name),
                    span: start.start..span.end,
                }),
                _ => Err(ExprError::new("expected field name after 'datum.'", start)),
            },
            Some((Tok::LBracket, _)) => match (self.bump(), self.bump()) {
                (Some((Tok::Str(name), _)), Some((Tok::RBracket, close))) => Ok(Expr {
                    kind: ExprKind::Column(name),
                    span: start.start..close.end,
                }),
                _ => Err(ExprError::new("expected datum[\"field\"]", start)),
            },
            _ => Err(ExprError::new("expected '.' or '[' after 'datum'", start)),
        }
    }
}

/// Parse an expression.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(ExprError::new("empty expression", 0..0));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.or()?;
    if p.pos < p.toks.len() {
        return Err(ExprError::new("unexpected trailing input", p.span_here()));
    }
    Ok(e)
}

/// Name → value lookup for one row.
pub trait RowBinding {
    fn get(&self, name: &str) -> Option<&Value>;
}

/// A table row paired with its schema.
pub struct SchemaRow<'a> {
    pub columns: &'a [Column],
    pub values: &'a [Value],
}

impl RowBinding for SchemaRow<'_> {
    fn get(&self, name: &str) -> Option<&Value> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .map(|i| &self.values[i])
    }
}

impl RowBinding for std::collections::HashMap<String, Value> {
    fn get(&self, name: &str) -> Option<&Value> {
        std::collections::HashMap::get(self, name)
    }
}

impl RowBinding for [(&str, Value)] {
    fn get(&self, name: &str) -> Option<&Value> {
        self.iter().find(|(k, _)| *k == name).map(|(_, v)| v)
    }
}

/// Parse and evaluate in one step.
pub fn eval_expression(src: &str, row: &(impl RowBinding + ?Sized)) -> Result<Value, ExprError> {
    eval(&parse(src)?, row)
}

/// Evaluate a parsed expression against a row.
pub fn eval(expr: &Expr, row: &(impl RowBinding + ?Sized)) -> Result<Value, ExprError> {
    let err = |m: String| ExprError::new(m, expr.span.clone());
    match &expr.kind {
        ExprKind::Number(n) => Ok(Value::Number(*n)),
        ExprKind::Str(s) => Ok(Value::Text(s.clone())),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Null => Ok(Value::Null),
        ExprKind::Column(c) => row.get(c).cloned().ok_or_else(|| err(format!("unknown column {c:?}"))),
        ExprKind::Neg(inner) => match eval(inner, row)? {
            Value::Number(n) => Ok(Value::Number(-n)),
            Value::Null => Ok(Value::Null),
            other => Err(err(format!("cannot negate {other:?}"))),
        },
        ExprKind::Not(inner) => match eval(inner, row)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(err(format!("'not' needs a boolean, got {other:?}"))),
        },
        ExprKind::Binary(op, a, b) => {
            if matches!(op, BinOp::And | BinOp::Or) {
                let lhs = match eval(a, row)? {
                    Value::Bool(v) => v,
                    other => {
                        return Err(ExprError::new(
                            format!("expected boolean, got {other:?}"),
                            a.span.clone(),
                        ))
                    }
                };
                if (*op == BinOp::And && !lhs) || (*op == BinOp::Or && lhs) {
                    return Ok(Value::Bool(lhs));
                }
                return match eval(b, row)? {
                    Value::Bool(v) => Ok(Value::Bool(v)),
                    other => Err(ExprError::new(
                        format!("expected boolean, got {other:?}"),
                        b.span.clone(),
                    )),
                };
            }
            let lhs = eval(a, row)?;
            let rhs = eval(b, row)?;
            binary(*op, lhs, rhs).map_err(err)
        }
    }
}

fn binary(op: BinOp, lhs: Value, rhs: Value) -> Result<Value, String> {
    use std::cmp::Ordering;
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
            let (x, y) = match (&lhs, &rhs) {
                (Value::Null, _) | (_, Value::Null) => return Ok(Value::Null),
                (Value::Number(x), Value::Number(y)) => (*x, *y),
                _ => return Err(format!("arithmetic needs numbers, got {lhs:?} and {rhs:?}")),
            };
            let r = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                _ => {
                    if y == 0.0 {
                        return Err("division by zero".into());
                    }
                    x / y
                }
            };
            if !r.is_finite() {
                return Err("arithmetic overflow".into());
            }
            Ok(Value::Number(r))
        }
        BinOp::Eq | BinOp::Ne => {
            let eq = match compare(&lhs, &rhs) {
                Ok(Some(ord)) => ord == Ordering::Equal,
                Ok(None) => lhs.is_null() && rhs.is_null(),
                Err(_) => false,
            };
            Ok(Value::Bool(if op == BinOp::Eq { eq } else { !eq }))
        }
        _ => {
            let ord = match compare(&lhs, &rhs)? {
                Some(o) => o,
                None => return Ok(Value::Bool(false)),
            };
            Ok(Value::Bool(match op {
                BinOp::Lt => ord == Ordering::Less,
                BinOp::Le => ord != Ordering::Greater,
                BinOp::Gt => ord == Ordering::Greater,
                _ => ord != Ordering::Less,
            }))
        }
    }
}

/// `Ok(None)` when either side is null.
fn compare(lhs: &Value, rhs: &Value) -> Result<Option<std::cmp::Ordering>, String> {
    let as_time = |s: &str| TimeValue::parse(s).map_err(|e| e.to_string());
    Ok(Some(match (lhs, rhs) {
        (Value::Null, _) | (_, Value::Null) => return Ok(None),
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y).ok_or("NaN comparison")?,
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Time(x), Value::Time(y)) => x.day.cmp(&y.day),
        (Value::Time(x), Value::Text(s)) => x.day.cmp(&as_time(s)?.day),
        (Value::Text(s), Value::Time(y)) => as_time(s)?.day.cmp(&y.day),
        _ => return Err(format!("cannot compare {lhs:?} with {rhs:?}")),
    }))
}
