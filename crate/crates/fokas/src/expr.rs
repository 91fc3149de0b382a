//! Small expression language for problem data.
//!
//! Expressions are parsed into an AST and evaluated in complex arithmetic, so
//! the same data can be continued off the real axis when a transform needs it.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "tanh" => Some(Func::Tanh),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Tanh => tanh(z),
            Func::Sqrt => z.sqrt(),
        }
    }
}

/// `tanh` through `e^{-2|Re z|}`, which stays finite where `sinh/cosh` overflow.
fn tanh(z: Complex64) -> Complex64 {
    if z.re.abs() < 1.0 {
        return z.tanh();
    }
    let s = z.re.signum();
    let e = (z * (-2.0 * s)).exp();
    (Complex64::new(1.0, 0.0) - e) / (Complex64::new(1.0, 0.0) + e) * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Variables an expression may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: Complex64, t: Complex64) -> Complex64 {
        match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::T) => t,
            Expr::Neg(a) => -a.eval(x, t),
            Expr::Call(f, a) => f.apply(a.eval(x, t)),
            Expr::Bin(op, a, b) => {
                let l = a.eval(x, t);
                match op {
                    BinOp::Add => l + b.eval(x, t),
                    BinOp::Sub => l - b.eval(x, t),
                    BinOp::Mul => l * b.eval(x, t),
                    BinOp::Div => l / b.eval(x, t),
                    BinOp::Pow => {
                        let r = b.eval(x, t);
                        if r.im == 0.0 && r.re.fract() == 0.0 && r.re.abs() <= 64.0 {
                            l.powi(r.re as i32)
                        } else if l == Complex64::new(0.0, 0.0) {
                            if r.re > 0.0 {
                                Complex64::new(0.0, 0.0)
                            } else {
                                Complex64::new(f64::NAN, f64::NAN)
                            }
                        } else {
                            l.powc(r)
                        }
                    }
                }
            }
        }
    }

    /// Does the expression mention `v` anywhere?
    pub fn uses(&self, v: Var) -> bool {
        match self {
            Expr::Var(w) => *w == v,
            Expr::Num(_) | Expr::Pi => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses(v),
            Expr::Bin(_, a, b) => a.uses(v) || b.uses(v),
        }
    }

    /// True when the expression is a literal zero (possibly negated).
    pub fn is_literal_zero(&self) -> bool {
        match self {
            Expr::Num(v) => *v == 0.0,
            Expr::Neg(a) => a.is_literal_zero(),
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent, only when followed by digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((tok, start));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(Error::Syntax {
                pos: self.here(),
                msg: "expected `)`".into(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.here();
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::Pi),
                    _ => match Func::from_name(&name) {
                        Some(func) => {
                            if self.peek() != Some(&Tok::LParen) {
                                return Err(Error::Syntax {
                                    pos: self.here(),
                                    msg: format!("expected `(` after `{name}`"),
                                });
                            }
                            self.pos += 1;
                            let arg = self.expr()?;
                            self.expect_rparen()?;
                            Ok(Expr::Call(func, Box::new(arg)))
                        }
                        None => Err(Error::UnknownIdentifier { name, pos }),
                    },
                }
            }
            Some(_) => Err(Error::Syntax {
                pos,
                msg: "expected a number, variable, function or `(`".into(),
            }),
            None => Err(Error::Syntax {
                pos,
                msg: "unexpected end of expression".into(),
            }),
        }
    }
}

/// Parse an expression over `x`, `t` and `pi`.
pub fn parse(src: &str) -> Result<Expr> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.here(),
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64, t: f64) -> f64 {
        parse(src)
            .unwrap()
            .eval(Complex64::new(x, 0.0), Complex64::new(t, 0.0))
            .re
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1+2*3", 0.0, 0.0), 7.0);
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("8/2/2", 0.0, 0.0), 2.0);
        assert_eq!(ev("1.5e2 + .5", 0.0, 0.0), 150.5);
    }

    #[test]
    fn errors_carry_positions() {
        match parse("sin(x) + foo") {
            Err(Error::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "foo");
                assert_eq!(pos, 9);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("2 * (x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("2 $ 3"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(parse(""), Err(Error::Syntax { .. })));
    }

    #[test]
    fn exponent_letter_is_not_swallowed() {
        assert!((ev("2*exp(0)", 0.0, 0.0) - 2.0).abs() < 1e-15);
    }
}
