//! Expression language for scalar fields on ℝⁿ.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?
//! atom    := number | xK | func '(' expr ')' | '(' expr ')'
//! func    := exp | log | sqrt | sin | cos
//! ```
//!
//! Variables `x1, x2, …` are 1-based. `^` is right-associative and binds
//! tighter than unary minus, so `-x1^2` is `-(x1^2)`. Both `-` and `−` are
//! accepted for subtraction.

use std::fmt;

use crate::error::{Error, Result};
use crate::fields::jet::Jet2;
use crate::linalg::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        match s {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree. Variables are stored 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
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
    End,
}

fn syntax(column: usize, message: impl Into<String>) -> Error {
    Error::Parse { column, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' | '−' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| syntax(col, format!("malformed number `{s}`")))?;
                out.push((Tok::Num(v), col));
                continue;
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            other => return Err(syntax(col, format!("unexpected character `{other}`"))),
        };
        out.push((tok, col));
        i += 1;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> Error {
        match self.peek() {
            Tok::End => syntax(self.col(), "unexpected end of input"),
            t => syntax(self.col(), format!("unexpected token {}", describe(t))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(match self.peek() {
                        Tok::End => syntax(self.col(), "expected `)` before end of input"),
                        _ => self.unexpected(),
                    });
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(syntax(self.col(), format!("expected `(` after `{name}`")));
                    }
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.expr()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    if *self.peek() != Tok::RParen {
                        return Err(match self.peek() {
                            Tok::End => syntax(self.col(), "expected `)` before end of input"),
                            _ => self.unexpected(),
                        });
                    }
                    self.bump();
                    if args.len() != 1 {
                        return Err(syntax(col, format!("`{name}` takes 1 argument, got {}", args.len())));
                    }
                    return Ok(Expr::Func(f, Box::new(args.pop().unwrap())));
                }
                if let Some(k) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    if k >= 1 && name[1..].chars().all(|c| c.is_ascii_digit()) {
                        return Ok(Expr::Var(k - 1));
                    }
                }
                Err(syntax(col, format!("unknown identifier `{name}`")))
            }
            _ => Err(self.unexpected()),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

impl Expr {
    /// Parses an expression; errors carry a 1-based character column.
    pub fn parse(text: &str) -> Result<Expr> {
        if text.trim().is_empty() {
            return Err(syntax(1, "empty expression"));
        }
        let mut p = Parser { toks: lex(text)?, pos: 0 };
        let e = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(p.unexpected());
        }
        Ok(e)
    }

    /// Number of variables referenced (largest index + 1).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Func(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(&Vector::from_column_slice(x))?.value)
    }

    /// Second-order forward evaluation.
    pub fn jet(&self, x: &Vector) -> Result<Jet2> {
        if self.arity() > x.len() {
            return Err(Error::DimensionMismatch { expected: self.arity(), found: x.len() });
        }
        self.jet_inner(x)
    }

    fn jet_inner(&self, x: &Vector) -> Result<Jet2> {
        let n = x.len();
        Ok(match self {
            Expr::Const(c) => Jet2::constant(n, *c),
            Expr::Var(i) => Jet2::variable(x, *i),
            Expr::Neg(a) => a.jet_inner(x)?.neg(),
            Expr::Func(f, a) => {
                let u = a.jet_inner(x)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Log => u.ln()?,
                    Func::Sqrt => u.sqrt()?,
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                }
            }
            Expr::Bin(op, a, b) => {
                let u = a.jet_inner(x)?;
                let v = b.jet_inner(x)?;
                match op {
                    BinOp::Add => u.add(&v),
                    BinOp::Sub => u.sub(&v),
                    BinOp::Mul => u.mul(&v),
                    BinOp::Div => u.div(&v)?,
                    BinOp::Pow => {
                        if v.is_constant() && v.value.fract() == 0.0 && v.value.abs() < 1e6 {
                            u.powi(v.value as i32)?
                        } else {
                            if u.value <= 0.0 {
                                return Err(Error::Domain(format!(
                                    "non-integer power of non-positive base {}",
                                    u.value
                                )));
                            }
                            v.mul(&u.ln()?).exp()
                        }
                    }
                }
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Func(fun, a) => write!(f, "{}({a})", fun.name()),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}
