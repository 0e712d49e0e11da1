//! Minimal expression language for target fields on `R x R^d`.
//!
//! Grammar (whitespace-insensitive, byte offsets in errors):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := base ("^" integer)? | "-" factor
//! base   := number | ident | func "(" expr ")" | "(" expr ")"
//! ident  := "x" | "y" | "y1".."y9"      (for d = 1, "y" aliases "y1")
//! func   := "sin" | "cos" | "exp"
//! ```
//!
//! Variable indices: `x` is 0, `y_i` is `i`. Differentiation is closed over
//! the grammar and applies light simplification only; expressions are never
//! compared symbolically.

use std::fmt;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("variable `{name}` at byte {offset} is out of range for spatial dimension {dim}")]
    VariableOutOfRange {
        offset: usize,
        name: String,
        dim: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::VariableOutOfRange { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 0 is the time variable `x`; `1..=d` are the space variables `y_i`.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

// Smart constructors: constant folding plus the cheap identities
// 0*e -> 0, e+0 -> e, e^1 -> e, e^0 -> 1, --e -> e. Both the parser and the
// differentiator build through these so equal inputs produce equal trees.

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(z), b) if z == 0.0 => b,
        (a, Expr::Const(z)) if z == 0.0 => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, Expr::Const(z)) if z == 0.0 => a,
        (Expr::Const(z), b) if z == 0.0 => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(z), _) | (_, Expr::Const(z)) if z == 0.0 => Expr::Const(0.0),
        (Expr::Const(o), b) if o == 1.0 => b,
        (a, Expr::Const(o)) if o == 1.0 => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) if y != 0.0 => Expr::Const(x / y),
        (Expr::Const(z), Expr::Const(y)) if z == 0.0 && y == 0.0 => Expr::Const(f64::NAN),
        (a, Expr::Const(o)) if o == 1.0 => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

pub(crate) fn pow(a: Expr, k: u32) -> Expr {
    match (a, k) {
        (_, 0) => Expr::Const(1.0),
        (a, 1) => a,
        (Expr::Const(x), k) => Expr::Const(x.powi(k as i32)),
        (a, k) => Expr::Pow(Box::new(a), k),
    }
}

fn sin(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.sin()),
        a => Expr::Sin(Box::new(a)),
    }
}

fn cos(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.cos()),
        a => Expr::Cos(Box::new(a)),
    }
}

fn exp(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(x.exp()),
        a => Expr::Exp(Box::new(a)),
    }
}

impl Expr {
    /// Symbolic partial derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.differentiate(var), (**b).clone()),
                    mul((**a).clone(), b.differentiate(var)),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Pow(a, k) => mul(
                mul(Expr::Const(*k as f64), pow((**a).clone(), k - 1)),
                a.differentiate(var),
            ),
            Expr::Sin(a) => mul(cos((**a).clone()), a.differentiate(var)),
            Expr::Cos(a) => neg(mul(sin((**a).clone()), a.differentiate(var))),
            Expr::Exp(a) => mul(exp((**a).clone()), a.differentiate(var)),
        }
    }

    /// IEEE double evaluation; division by zero and domain errors surface as
    /// inf/NaN rather than a crash. `point` must have length `d + 1`.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => point[*i],
            Expr::Add(a, b) => a.evaluate(point) + b.evaluate(point),
            Expr::Sub(a, b) => a.evaluate(point) - b.evaluate(point),
            Expr::Mul(a, b) => a.evaluate(point) * b.evaluate(point),
            Expr::Div(a, b) => a.evaluate(point) / b.evaluate(point),
            Expr::Neg(a) => -a.evaluate(point),
            Expr::Pow(a, k) => a.evaluate(point).powi(*k as i32),
            Expr::Sin(a) => a.evaluate(point).sin(),
            Expr::Cos(a) => a.evaluate(point).cos(),
            Expr::Exp(a) => a.evaluate(point).exp(),
        }
    }

    /// Largest variable index used, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var_index(), b.max_var_index()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
                a.max_var_index()
            }
        }
    }
}

// Precedence levels for printing with minimal parentheses.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Const(c) if *c < 0.0 => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = precedence(e);
    if p < min {
        write!(f, "(")?;
    }
    match e {
        Expr::Const(c) => write!(f, "{c}")?,
        Expr::Var(0) => write!(f, "x")?,
        Expr::Var(i) => write!(f, "y{i}")?,
        Expr::Add(a, b) => {
            write_prec(a, 1, f)?;
            write!(f, "+")?;
            write_prec(b, 2, f)?;
        }
        Expr::Sub(a, b) => {
            write_prec(a, 1, f)?;
            write!(f, "-")?;
            write_prec(b, 2, f)?;
        }
        Expr::Mul(a, b) => {
            write_prec(a, 2, f)?;
            write!(f, "*")?;
            write_prec(b, 3, f)?;
        }
        Expr::Div(a, b) => {
            write_prec(a, 2, f)?;
            write!(f, "/")?;
            write_prec(b, 5, f)?;
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_prec(a, 3, f)?;
        }
        Expr::Pow(a, k) => {
            write_prec(a, 5, f)?;
            write!(f, "^{k}")?;
        }
        Expr::Sin(a) => {
            write!(f, "sin(")?;
            write_prec(a, 0, f)?;
            write!(f, ")")?;
        }
        Expr::Cos(a) => {
            write!(f, "cos(")?;
            write_prec(a, 0, f)?;
            write!(f, ")")?;
        }
        Expr::Exp(a) => {
            write!(f, "exp(")?;
            write_prec(a, 0, f)?;
            write!(f, ")")?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, 0, f)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

/// Parses an expression over `x, y_1..y_d`.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        dim,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.bytes.len() {
        return Err(ParseError::Syntax {
            offset: parser.pos,
            message: format!("unexpected `{}`", parser.bytes[parser.pos] as char),
        });
    }
    Ok(expr)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                b'+' => {
                    self.pos += 1;
                    acc = add(acc, self.term()?);
                }
                b'-' => {
                    self.pos += 1;
                    acc = sub(acc, self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        while let Some(op) = self.peek() {
            match op {
                b'*' => {
                    self.pos += 1;
                    acc = mul(acc, self.factor()?);
                }
                b'/' => {
                    self.pos += 1;
                    acc = div(acc, self.factor()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(neg(self.factor()?))
            }
            _ => {
                let base = self.base()?;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    let k = self.integer()?;
                    Ok(pow(base, k))
                } else {
                    Ok(base)
                }
            }
        }
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ParseError::Syntax {
                offset: start,
                message: "expected integer exponent".into(),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: "exponent too large".into(),
            })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(ParseError::Syntax {
                offset: self.bytes.len(),
                message: "unexpected end of input".into(),
            }),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(ParseError::Syntax {
                offset: self.pos,
                message: format!("unexpected `{}`", c as char),
            }),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.pos.min(self.bytes.len()),
                message: format!("expected `{}`", byte as char),
            })
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if !matches!(self.bytes.get(self.pos), Some(d) if d.is_ascii_digit()) {
                self.pos = mark; // `e` belonged to something else; not ours
            } else {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match name {
            "sin" | "cos" | "exp" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(match name {
                    "sin" => sin(arg),
                    "cos" => cos(arg),
                    _ => exp(arg),
                })
            }
            "x" => Ok(Expr::Var(0)),
            "y" => {
                if self.dim == 1 {
                    Ok(Expr::Var(1))
                } else {
                    Err(ParseError::UnknownIdentifier {
                        offset: start,
                        name: name.into(),
                    })
                }
            }
            _ => {
                if let Some(rest) = name.strip_prefix('y') {
                    if let Ok(i) = rest.parse::<usize>() {
                        if (1..=9).contains(&i) {
                            if i <= self.dim {
                                return Ok(Expr::Var(i));
                            }
                            return Err(ParseError::VariableOutOfRange {
                                offset: start,
                                name: name.into(),
                                dim: self.dim,
                            });
                        }
                    }
                }
                Err(ParseError::UnknownIdentifier {
                    offset: start,
                    name: name.into(),
                })
            }
        }
    }
}
