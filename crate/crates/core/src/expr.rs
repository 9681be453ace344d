//! Minimal arithmetic expression grammar for problem configs.
//!
//! Supported syntax: `+ - * / ^`, `exp`, `log`, `abs`, numeric literals,
//! the constants `e` and `pi`, and the variable `x`. `^` is right
//! associative and binds tighter than unary minus, so `-x^2` is `-(x^2)`.
//!
//! Expressions are parsed once into an AST that can be evaluated and
//! differentiated symbolically. The derivative of `abs` is `signum`,
//! which is the correct weak derivative away from the origin.

use std::fmt;
use std::sync::Arc;

use crate::error::{EngineError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Exp(Arc<Expr>),
    Log(Arc<Expr>),
    Abs(Arc<Expr>),
    Signum(Arc<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(parse_err(format!(
                "unexpected trailing input near `{}`",
                parser.describe_current()
            )));
        }
        Ok(expr)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Neg(a) => -a.eval(x),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
            Expr::Abs(a) => a.eval(x).abs(),
            Expr::Signum(a) => {
                let v = a.eval(x);
                if v == 0.0 {
                    0.0
                } else {
                    v.signum()
                }
            }
        }
    }

    /// Symbolic derivative with respect to `x`.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var => Num(1.0),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Pow(a, b) => match **b {
                // d/dx a^c = c a^(c-1) a'
                Num(c) => mul(
                    mul(Num(c), pow((**a).clone(), Num(c - 1.0))),
                    a.derivative(),
                ),
                // general case: a^b (b' ln a + b a'/a)
                _ => mul(
                    pow((**a).clone(), (**b).clone()),
                    add(
                        mul(b.derivative(), Log(Arc::new((**a).clone()))),
                        div(mul((**b).clone(), a.derivative()), (**a).clone()),
                    ),
                ),
            },
            Neg(a) => Neg(Arc::new(a.derivative())),
            Exp(a) => mul(Exp(Arc::new((**a).clone())), a.derivative()),
            Log(a) => div(a.derivative(), (**a).clone()),
            Abs(a) => mul(Signum(Arc::new((**a).clone())), a.derivative()),
            Signum(_) => Num(0.0),
        }
    }

    /// Returns `Some(c)` when the expression contains no variable.
    pub fn constant_value(&self) -> Option<f64> {
        if self.contains_var() {
            None
        } else {
            Some(self.eval(0.0))
        }
    }

    fn contains_var(&self) -> bool {
        use Expr::*;
        match self {
            Num(_) => false,
            Var => true,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.contains_var() || b.contains_var()
            }
            Neg(a) | Exp(a) | Log(a) | Abs(a) | Signum(a) => a.contains_var(),
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::Add(Arc::new(a), Arc::new(b))
}
fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Sub(Arc::new(a), Arc::new(b))
}
fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Mul(Arc::new(a), Arc::new(b))
}
fn div(a: Expr, b: Expr) -> Expr {
    Expr::Div(Arc::new(a), Arc::new(b))
}
fn pow(a: Expr, b: Expr) -> Expr {
    Expr::Pow(Arc::new(a), Arc::new(b))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{}", v),
            Expr::Var => write!(f, "x"),
            Expr::Add(a, b) => write!(f, "({} + {})", a, b),
            Expr::Sub(a, b) => write!(f, "({} - {})", a, b),
            Expr::Mul(a, b) => write!(f, "({} * {})", a, b),
            Expr::Div(a, b) => write!(f, "({} / {})", a, b),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", a, b),
            Expr::Neg(a) => write!(f, "(-{})", a),
            Expr::Exp(a) => write!(f, "exp({})", a),
            Expr::Log(a) => write!(f, "log({})", a),
            Expr::Abs(a) => write!(f, "abs({})", a),
            Expr::Signum(a) => write!(f, "signum({})", a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn parse_err(message: String) -> EngineError {
    EngineError::Parse {
        line: 0,
        field: "expression".to_string(),
        message,
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                // scientific notation: 1e-3, 2.5E+10
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = bytes[start..i].iter().collect();
                let v: f64 = s
                    .parse()
                    .map_err(|_| parse_err(format!("bad number `{}`", s)))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                out.push(Token::Ident(s));
            }
            other => return Err(parse_err(format!("unexpected character `{}`", other))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn describe_current(&self) -> String {
        match self.peek() {
            Some(t) => format!("{:?}", t),
            None => "end of input".to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = add(lhs, self.term()?);
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = mul(lhs, self.unary()?);
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                Ok(Expr::Neg(Arc::new(self.unary()?)))
            }
            Some(Token::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.bump();
            // right associative; exponent may carry a sign: x^-2
            let exponent = self.unary_exponent()?;
            return Ok(pow(base, exponent));
        }
        Ok(base)
    }

    fn unary_exponent(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                Ok(Expr::Neg(Arc::new(self.unary_exponent()?)))
            }
            Some(Token::Plus) => {
                self.bump();
                self.unary_exponent()
            }
            _ => self.power(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "e" => Ok(Expr::Num(std::f64::consts::E)),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "exp" | "log" | "abs" | "signum" => {
                    match self.bump() {
                        Some(Token::LParen) => {}
                        _ => return Err(parse_err(format!("expected `(` after `{}`", name))),
                    }
                    let inner = self.expr()?;
                    match self.bump() {
                        Some(Token::RParen) => {}
                        _ => return Err(parse_err(format!("unclosed `{}(...)`", name))),
                    }
                    let inner = Arc::new(inner);
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(inner),
                        "log" => Expr::Log(inner),
                        "abs" => Expr::Abs(inner),
                        _ => Expr::Signum(inner),
                    })
                }
                other => Err(parse_err(format!("unknown identifier `{}`", other))),
            },
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(parse_err("unbalanced parentheses".to_string())),
                }
            }
            other => Err(parse_err(format!("unexpected token {:?}", other))),
        }
    }
}
