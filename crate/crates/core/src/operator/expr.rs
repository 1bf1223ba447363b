//! Coefficient expressions in one variable `x`.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right associative
//! atom   := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | abs
//! ```
//!
//! so `-x^2` is `-(x^2)` and `2^-1` is `0.5`.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at column {column} near '{token}': {message}")]
pub struct ParseError {
    /// 1-based character column of the offending token.
    pub column: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
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
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

const UNARY_MINUS_PRECEDENCE: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expression(0)?;
        match parser.peek() {
            Some(tok) => Err(tok.error("unexpected trailing input")),
            None => Ok(expr),
        }
    }

    pub fn eval<T: Real>(&self, x: T) -> T {
        match self {
            Expr::Num(v) => T::lit(*v),
            Expr::X => x,
            Expr::Neg(e) => -e.eval(x),
            Expr::Binary(op, l, r) => {
                let a = l.eval(x);
                match op {
                    BinOp::Add => a + r.eval(x),
                    BinOp::Sub => a - r.eval(x),
                    BinOp::Mul => a * r.eval(x),
                    BinOp::Div => a / r.eval(x),
                    BinOp::Pow => match r.integer_literal() {
                        Some(k) => a.powi(k),
                        None => a.powf(r.eval(x)),
                    },
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                    Func::Abs => v.abs(),
                }
            }
        }
    }

    /// Value and exact first derivative by forward-mode differentiation.
    pub fn eval_with_derivative<T: Real>(&self, x: T) -> (T, T) {
        match self {
            Expr::Num(v) => (T::lit(*v), T::zero()),
            Expr::X => (x, T::one()),
            Expr::Neg(e) => {
                let (v, d) = e.eval_with_derivative(x);
                (-v, -d)
            }
            Expr::Binary(op, l, r) => {
                let (a, da) = l.eval_with_derivative(x);
                match op {
                    BinOp::Add => {
                        let (b, db) = r.eval_with_derivative(x);
                        (a + b, da + db)
                    }
                    BinOp::Sub => {
                        let (b, db) = r.eval_with_derivative(x);
                        (a - b, da - db)
                    }
                    BinOp::Mul => {
                        let (b, db) = r.eval_with_derivative(x);
                        (a * b, da * b + a * db)
                    }
                    BinOp::Div => {
                        let (b, db) = r.eval_with_derivative(x);
                        (a / b, (da * b - a * db) / (b * b))
                    }
                    BinOp::Pow => {
                        if let Some(k) = r.integer_literal() {
                            let kt = T::lit(f64::from(k));
                            let d = if k == 0 { T::zero() } else { kt * a.powi(k - 1) * da };
                            return (a.powi(k), d);
                        }
                        let (b, db) = r.eval_with_derivative(x);
                        let v = a.powf(b);
                        let d = if db == T::zero() {
                            b * a.powf(b - T::one()) * da
                        } else {
                            v * (db * a.ln() + b * da / a)
                        };
                        (v, d)
                    }
                }
            }
            Expr::Call(f, e) => {
                let (v, d) = e.eval_with_derivative(x);
                match f {
                    Func::Sin => (v.sin(), v.cos() * d),
                    Func::Cos => (v.cos(), -v.sin() * d),
                    Func::Exp => {
                        let ev = v.exp();
                        (ev, ev * d)
                    }
                    Func::Log => (v.ln(), d / v),
                    Func::Sqrt => {
                        let s = v.sqrt();
                        (s, d / (T::lit(2.0) * s))
                    }
                    Func::Abs => {
                        let sign = if v > T::zero() {
                            T::one()
                        } else if v < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        };
                        (v.abs(), sign * d)
                    }
                }
            }
        }
    }

    /// Whether the expression depends on `x` at all.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::X => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    fn integer_literal(&self) -> Option<i32> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Neg(e) => match **e {
                Expr::Num(v) => -v,
                _ => return None,
            },
            _ => return None,
        };
        (v.fract() == 0.0 && v.abs() < 1024.0).then_some(v as i32)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X => write!(f, "x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(BinOp),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    text: String,
    column: usize,
}

impl Token {
    fn error(&self, message: &str) -> ParseError {
        ParseError {
            column: self.column,
            token: self.text.clone(),
            message: message.to_string(),
        }
    }
}

fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
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
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| ParseError {
                column,
                token: text.clone(),
                message: "malformed number".into(),
            })?;
            tokens.push(Token {
                kind: TokenKind::Num(value),
                text,
                column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            tokens.push(Token {
                kind: TokenKind::Ident(text.clone()),
                text,
                column,
            });
            continue;
        }
        let kind = match c {
            '+' => TokenKind::Op(BinOp::Add),
            '-' => TokenKind::Op(BinOp::Sub),
            '*' => TokenKind::Op(BinOp::Mul),
            '/' => TokenKind::Op(BinOp::Div),
            '^' => TokenKind::Op(BinOp::Pow),
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            _ => {
                return Err(ParseError {
                    column,
                    token: c.to_string(),
                    message: "unexpected character".into(),
                })
            }
        };
        tokens.push(Token {
            kind,
            text: c.to_string(),
            column,
        });
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn end_error(&self, message: &str) -> ParseError {
        let column = self
            .tokens
            .last()
            .map_or(1, |t| t.column + t.text.chars().count());
        ParseError {
            column,
            token: "<end>".into(),
            message: message.into(),
        }
    }

    fn expression(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token {
            kind: TokenKind::Op(op),
            ..
        }) = self.peek()
        {
            let op = *op;
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = if op == BinOp::Pow {
                // right associative, and the exponent may carry its own sign
                self.unary()?
            } else {
                self.expression(prec + 1)?
            };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Token {
            kind: TokenKind::Op(BinOp::Sub),
            ..
        }) = self.peek()
        {
            self.pos += 1;
            let operand = self.expression(UNARY_MINUS_PRECEDENCE + 1)?;
            return Ok(Expr::Neg(Box::new(operand)));
        }
        let base = self.atom()?;
        if let Some(Token {
            kind: TokenKind::Op(BinOp::Pow),
            ..
        }) = self.peek()
        {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next().ok_or_else(|| self.end_error("expected operand"))?;
        match &tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(*v)),
            TokenKind::Ident(name) if name == "x" => Ok(Expr::X),
            TokenKind::Ident(name) if name == "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            TokenKind::Ident(name) => {
                let func = Func::from_name(name).ok_or_else(|| tok.error("unknown identifier"))?;
                match self.next() {
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    }) => {}
                    Some(t) => return Err(t.error("expected '(' after function name")),
                    None => return Err(self.end_error("expected '(' after function name")),
                }
                let arg = self.expression(0)?;
                self.close_paren()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            TokenKind::LParen => {
                let inner = self.expression(0)?;
                self.close_paren()?;
                Ok(inner)
            }
            TokenKind::RParen | TokenKind::Op(_) => Err(tok.error("expected operand")),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => Ok(()),
            Some(t) => Err(t.error("expected ')'")),
            None => Err(self.end_error("missing ')'")),
        }
    }
}
