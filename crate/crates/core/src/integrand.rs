//! Bounded integrands selectable by name from configuration files.
//!
//! Custom expressions use a small grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := NUMBER | 'x' INDEX | FUNC '(' expr ')' | '(' expr ')'
//! FUNC    := 'tanh' | 'expclip'
//! ```
//!
//! Coordinates are 1-based (`x1 … xd`). `expclip(e)` is `exp(min(e, 0))`,
//! which keeps exponentials inside `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Tanh(Box<Expr>),
    ExpClip(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Tanh(a) => a.eval(x).tanh(),
            Expr::ExpClip(a) => a.eval(x).min(0.0).exp(),
        }
    }

    /// Largest coordinate index used, 0-based.
    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Tanh(a) | Expr::ExpClip(a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }
}

struct Parser<'s> {
    src: &'s [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse { offset: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == b'*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match word {
                    "tanh" | "expclip" | "exp_clip" => {
                        self.expect(b'(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect(b')')?;
                        Ok(if word == "tanh" { Expr::Tanh(arg) } else { Expr::ExpClip(arg) })
                    }
                    _ => {
                        let idx = word
                            .strip_prefix('x')
                            .and_then(|n| n.parse::<usize>().ok())
                            .filter(|&i| i >= 1);
                        match idx {
                            Some(i) => Ok(Expr::Var(i - 1)),
                            None => {
                                self.pos = start;
                                Err(self.error(&format!("unknown identifier '{word}'")))
                            }
                        }
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Parse {
            offset: start,
            message: format!("bad number '{text}'"),
        })
    }
}

/// A function f to integrate against π_ρ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntegrandDescriptor", into = "IntegrandDescriptor")]
pub enum Integrand {
    Constant(f64),
    /// `x_i`, 0-based.
    Coordinate(usize),
    /// `1{a·x > b}`.
    Halfspace { a: Vec<f64>, b: f64 },
    /// `tanh(a·x + b)`.
    TanhLinear { a: Vec<f64>, b: f64 },
    Expression { source: String, expr: Expr },
}

/// JSON form of an [`Integrand`]; coordinate indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandDescriptor {
    Constant { value: f64 },
    Coordinate { index: usize },
    Halfspace { a: Vec<f64>, b: f64 },
    TanhLinear { a: Vec<f64>, b: f64 },
    Expression { expr: String },
}

impl TryFrom<IntegrandDescriptor> for Integrand {
    type Error = Error;

    fn try_from(d: IntegrandDescriptor) -> Result<Self> {
        Ok(match d {
            IntegrandDescriptor::Constant { value } => Integrand::Constant(value),
            IntegrandDescriptor::Coordinate { index } => {
                if index == 0 {
                    return Err(Error::InvalidArgument("coordinate index is 1-based".into()));
                }
                Integrand::Coordinate(index - 1)
            }
            IntegrandDescriptor::Halfspace { a, b } => Integrand::Halfspace { a, b },
            IntegrandDescriptor::TanhLinear { a, b } => Integrand::TanhLinear { a, b },
            IntegrandDescriptor::Expression { expr } => Integrand::expression(&expr)?,
        })
    }
}

impl From<Integrand> for IntegrandDescriptor {
    fn from(f: Integrand) -> Self {
        match f {
            Integrand::Constant(value) => IntegrandDescriptor::Constant { value },
            Integrand::Coordinate(i) => IntegrandDescriptor::Coordinate { index: i + 1 },
            Integrand::Halfspace { a, b } => IntegrandDescriptor::Halfspace { a, b },
            Integrand::TanhLinear { a, b } => IntegrandDescriptor::TanhLinear { a, b },
            Integrand::Expression { source, .. } => IntegrandDescriptor::Expression { expr: source },
        }
    }
}

impl Integrand {
    pub fn expression(src: &str) -> Result<Self> {
        Ok(Integrand::Expression { source: src.to_string(), expr: Expr::parse(src)? })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Integrand::Constant(c) => *c,
            Integrand::Coordinate(i) => x[*i],
            Integrand::Halfspace { a, b } => {
                if dot(a, x) > *b {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::TanhLinear { a, b } => (dot(a, x) + b).tanh(),
            Integrand::Expression { expr, .. } => expr.eval(x),
        }
    }

    /// Checks that the integrand can be evaluated on ℝ^d.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let need = match self {
            Integrand::Constant(_) => return Ok(()),
            Integrand::Coordinate(i) => i + 1,
            Integrand::Halfspace { a, .. } | Integrand::TanhLinear { a, .. } => {
                if a.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: a.len() });
                }
                return Ok(());
            }
            Integrand::Expression { expr, .. } => match expr.max_var() {
                Some(i) => i + 1,
                None => return Ok(()),
            },
        };
        if need > d {
            return Err(Error::InvalidArgument(format!(
                "integrand uses coordinate x{need} but the dimension is {d}"
            )));
        }
        Ok(())
    }
}
