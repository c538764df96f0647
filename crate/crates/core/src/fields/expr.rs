//! A small expression language over x1..xn with forward-mode gradients.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Func {
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Log | Func::Sqrt | Func::Abs => 1,
            Func::Min | Func::Max => 2,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        [Func::Log, Func::Sqrt, Func::Abs, Func::Min, Func::Max].into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Variables are zero-based internally and written
/// one-based (`x1`, `x2`, …).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
    Arity,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at position {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source.
    pub position: usize,
    pub message: String,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, kind: ParseErrorKind, position: usize, message: impl Into<String>) -> ParseError {
        ParseError { kind, position, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            // right-associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            None => Err(self.err(ParseErrorKind::Syntax, start, "unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    let p = self.pos;
                    return Err(self.err(ParseErrorKind::Syntax, p, "expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(start),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let len = self.src[start..]
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(self.src.len() - start);
                let name = &self.src[start..start + len];
                self.pos = start + len;
                if let Some(f) = Func::lookup(name) {
                    if !self.eat('(') {
                        let p = self.pos;
                        return Err(self.err(ParseErrorKind::Syntax, p, format!("expected '(' after {name}")));
                    }
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(',') {
                                continue;
                            }
                            if self.eat(')') {
                                break;
                            }
                            let p = self.pos;
                            return Err(self.err(ParseErrorKind::Syntax, p, "expected ',' or ')'"));
                        }
                    }
                    if args.len() != f.arity() {
                        return Err(self.err(
                            ParseErrorKind::Arity,
                            start,
                            format!("{name} takes {} argument(s), got {}", f.arity(), args.len()),
                        ));
                    }
                    return Ok(Expr::Call(f, args));
                }
                if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    if idx >= 1 && idx <= self.n && !name[1..].starts_with('0') {
                        return Ok(Expr::Var(idx - 1));
                    }
                }
                Err(self.err(ParseErrorKind::UnknownIdentifier, start, format!("unknown identifier '{name}'")))
            }
            Some(c) => Err(self.err(ParseErrorKind::Syntax, start, format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self, start: usize) -> Result<Expr, ParseError> {
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(ParseErrorKind::Syntax, start, format!("malformed number '{text}'")))?;
        self.pos = end;
        Ok(Expr::Const(v))
    }
}

impl Expr {
    /// Parse `src` over the variables x1..xn.
    pub fn parse(src: &str, n: usize) -> Result<Expr, ParseError> {
        let mut p = Parser { src, pos: 0, n };
        let e = p.expr()?;
        if let Some(c) = p.peek() {
            let pos = p.pos;
            return Err(p.err(ParseErrorKind::Syntax, pos, format!("unexpected '{c}'")));
        }
        Ok(e)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
            Expr::Call(_, args) => args.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => pow(a.eval(x), b.eval(x)),
            Expr::Call(f, args) => {
                let u = args[0].eval(x);
                match f {
                    Func::Log => u.ln(),
                    Func::Sqrt => u.sqrt(),
                    Func::Abs => u.abs(),
                    Func::Min => {
                        let v = args[1].eval(x);
                        if u <= v { u } else { v }
                    }
                    Func::Max => {
                        let v = args[1].eval(x);
                        if u >= v { u } else { v }
                    }
                }
            }
        }
    }

    /// Value and gradient by forward-mode differentiation.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        match self {
            Expr::Const(c) => (*c, vec![0.0; n]),
            Expr::Var(i) => {
                let mut g = vec![0.0; n];
                g[*i] = 1.0;
                (x[*i], g)
            }
            Expr::Neg(a) => {
                let (u, du) = a.eval_grad(x);
                (-u, du.iter().map(|d| -d).collect())
            }
            Expr::Add(a, b) => combine(a, b, x, |u, v| (u + v, 1.0, 1.0)),
            Expr::Sub(a, b) => combine(a, b, x, |u, v| (u - v, 1.0, -1.0)),
            Expr::Mul(a, b) => combine(a, b, x, |u, v| (u * v, v, u)),
            Expr::Div(a, b) => combine(a, b, x, |u, v| (u / v, 1.0 / v, -u / (v * v))),
            Expr::Pow(a, b) => {
                if let Expr::Const(c) = **b {
                    let (u, du) = a.eval_grad(x);
                    let d = if c == 0.0 { 0.0 } else { c * pow(u, c - 1.0) };
                    return (pow(u, c), du.iter().map(|g| d * g).collect());
                }
                combine(a, b, x, |u, v| {
                    let p = u.powf(v);
                    (p, v * u.powf(v - 1.0), p * u.ln())
                })
            }
            Expr::Call(f, args) => {
                let (u, du) = args[0].eval_grad(x);
                let unary = |val: f64, d: f64| (val, du.iter().map(|g| d * g).collect::<Vec<_>>());
                match f {
                    Func::Log => unary(u.ln(), 1.0 / u),
                    Func::Sqrt => unary(u.sqrt(), 0.5 / u.sqrt()),
                    Func::Abs => unary(u.abs(), if u >= 0.0 { 1.0 } else { -1.0 }),
                    Func::Min | Func::Max => {
                        let (v, dv) = args[1].eval_grad(x);
                        let take_left = if *f == Func::Min { u <= v } else { u >= v };
                        if take_left { (u, du) } else { (v, dv) }
                    }
                }
            }
        }
    }

    /// Replace every variable xᵢ by `images[i]`.
    pub fn substitute(&self, images: &[Expr]) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(images));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => images[*i].clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.substitute(images)).collect()),
        }
    }

    /// The affine form Σⱼ coefs[j]·xⱼ + offset, skipping zero terms.
    pub fn affine(coefs: &[f64], offset: f64) -> Expr {
        let mut terms: Vec<Expr> = Vec::new();
        for (j, &c) in coefs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            terms.push(if c == 1.0 {
                Expr::Var(j)
            } else {
                Expr::Mul(Box::new(Expr::Const(c)), Box::new(Expr::Var(j)))
            });
        }
        if offset != 0.0 || terms.is_empty() {
            terms.push(Expr::Const(offset));
        }
        let mut it = terms.into_iter();
        let first = it.next().expect("at least one term");
        it.fold(first, |acc, t| Expr::Add(Box::new(acc), Box::new(t)))
    }
}

fn pow(u: f64, c: f64) -> f64 {
    if c == 2.0 {
        u * u
    } else if c.fract() == 0.0 && c.abs() <= 16.0 {
        u.powi(c as i32)
    } else {
        u.powf(c)
    }
}

fn combine(a: &Expr, b: &Expr, x: &[f64], rule: impl Fn(f64, f64) -> (f64, f64, f64)) -> (f64, Vec<f64>) {
    let (u, du) = a.eval_grad(x);
    let (v, dv) = b.eval_grad(x);
    let (val, da, db) = rule(u, v);
    let grad = du
        .iter()
        .zip(&dv)
        .map(|(gu, gv)| {
            // skip 0·∞ when a partial is structurally zero
            let l = if *gu == 0.0 { 0.0 } else { da * gu };
            let r = if *gv == 0.0 { 0.0 } else { db * gv };
            l + r
        })
        .collect();
    (val, grad)
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Debug formatting of f64 is the shortest round-tripping representation.
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "({c:?})")
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
