//! Expression language for coefficient functions and nonlinear terms.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := primary ('^' number)?
//! primary := number | variable | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x, p, dp, d2p, q, dq, d2q`; functions are
//! `exp, sin, cos, ln, sqrt`. Exponents must be numeric literals, and unary
//! minus applies to the whole power, so `-x^2` is `-(x^2)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Integer exponents up to this value are expanded into repeated products.
const MAX_EXPANDED_POWER: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} must be a numeric literal")]
    NonLiteralExponent { offset: usize },
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("{func} of {arg} is undefined (at x = {x})")]
    Domain { func: Func, arg: f64, x: f64 },
}

impl EvalError {
    pub fn x(&self) -> f64 {
        match *self {
            EvalError::DivisionByZero { x } | EvalError::Domain { x, .. } => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X,
    P,
    Dp,
    D2p,
    Q,
    Dq,
    D2q,
}

impl Var {
    pub const ALL: [Var; 7] = [Var::X, Var::P, Var::Dp, Var::D2p, Var::Q, Var::Dq, Var::D2q];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::P => "p",
            Var::Dp => "dp",
            Var::D2p => "d2p",
            Var::Q => "q",
            Var::Dq => "dq",
            Var::D2q => "d2q",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    /// True for the variables that refer to the second unknown `q`.
    pub fn is_q(self) -> bool {
        matches!(self, Var::Q | Var::Dq | Var::D2q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Ln,
    Sqrt,
}

impl Func {
    const ALL: [Func; 5] = [Func::Exp, Func::Sin, Func::Cos, Func::Ln, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// Point at which an expression is evaluated: the abscissa and the current
/// values of both unknowns with their first two derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointState {
    pub x: f64,
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
    pub q: f64,
    pub dq: f64,
    pub d2q: f64,
}

impl PointState {
    pub fn at(x: f64) -> Self {
        Self {
            x,
            ..Self::default()
        }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::P => self.p,
            Var::Dp => self.dp,
            Var::D2p => self.d2p,
            Var::Q => self.q,
            Var::Dq => self.dq,
            Var::D2q => self.d2q,
        }
    }
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            end: source.len(),
        };
        let e = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(e)
    }

    pub fn evaluate(&self, s: &PointState) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => s.get(*v),
            Expr::Neg(e) => -e.evaluate(s)?,
            Expr::Binary(op, l, r) => {
                let l = l.evaluate(s)?;
                let r = r.evaluate(s)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(EvalError::DivisionByZero { x: s.x });
                        }
                        l / r
                    }
                }
            }
            Expr::Pow(base, exp) => {
                let b = base.evaluate(s)?;
                power(b, *exp)
            }
            Expr::Call(func, arg) => {
                let v = arg.evaluate(s)?;
                match func {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(EvalError::Domain {
                                func: *func,
                                arg: v,
                                x: s.x,
                            });
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::Domain {
                                func: *func,
                                arg: v,
                                x: s.x,
                            });
                        }
                        v.sqrt()
                    }
                }
            }
        })
    }

    /// Evaluate an expression that depends on `x` only.
    pub fn eval_x(&self, x: f64) -> Result<f64, EvalError> {
        self.evaluate(&PointState::at(x))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

fn power(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp >= 0.0 && exp <= MAX_EXPANDED_POWER as f64 {
        let mut acc = 1.0;
        for _ in 0..exp as u32 {
            acc *= base;
        }
        acc
    } else {
        base.powf(exp)
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "-{}", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                write_child(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, r.precedence() <= p)
            }
            Expr::Pow(base, exp) => {
                write_child(f, base, base.precedence() < 5)?;
                write!(f, "^{exp}")
            }
            Expr::Call(func, arg) => write!(f, "{func}({arg})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
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

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // optional exponent: e, E followed by optional sign and digits
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
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: TokenKind::Num(v),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat(&TokenKind::Caret) {
            return Ok(base);
        }
        let offset = self.offset();
        match self.next() {
            Some(Token {
                kind: TokenKind::Num(v),
                ..
            }) => {
                if self.peek().map(|t| &t.kind) == Some(&TokenKind::Caret) {
                    return Err(ParseError::Syntax {
                        offset: self.offset(),
                        message: "chained exponents need parentheses".into(),
                    });
                }
                Ok(Expr::Pow(Box::new(base), v))
            }
            Some(_) => Err(ParseError::NonLiteralExponent { offset }),
            None => Err(ParseError::Syntax {
                offset,
                message: "expected exponent after `^`".into(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let tok = self.next().ok_or_else(|| ParseError::Syntax {
            offset,
            message: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Expr::Var(v));
                }
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat(&TokenKind::LParen) {
                        return Err(ParseError::Syntax {
                            offset: self.offset(),
                            message: format!("expected `(` after `{name}`"),
                        });
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Err(ParseError::UnknownIdentifier {
                    name,
                    offset: tok.offset,
                })
            }
            other => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.eat(&TokenKind::RParen) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: "expected `)`".into(),
            })
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_at(src: &str, x: f64) -> f64 {
        Expr::parse(src).unwrap().eval_x(x).unwrap()
    }

    fn vars(src: &str) -> Vec<Var> {
        Expr::parse(src).unwrap().free_vars().into_iter().collect()
    }

    #[test]
    fn forcing_polynomial() {
        assert_eq!(eval_at("x^5 - x^3 - 18*x^2 + 12*x - 18", 1.0), -24.0);
    }

    #[test]
    fn nonlinear_terms_parse() {
        assert_eq!(vars("(1/6) * d2p * d2q"), vec![Var::D2p, Var::D2q]);
        assert_eq!(vars("exp(-x) * p^2"), vec![Var::X, Var::P]);
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval_at("2", 0.3), 2.0);
        let e = Expr::parse("d2p * dq").unwrap();
        let s = PointState {
            d2p: 2.0,
            dq: 3.0,
            ..PointState::default()
        };
        assert_eq!(e.evaluate(&s).unwrap(), 6.0);
        assert_eq!(eval_at("-6*exp(x)", 0.0), -6.0);
    }

    #[test]
    fn free_variable_sets() {
        assert_eq!(vars("x^2"), vec![Var::X]);
        assert_eq!(vars("24*x^4 + 6"), vec![Var::X]);
        assert!(vars("3.5e-2 * 4").is_empty());
    }

    #[test]
    fn precedence_rules() {
        assert_eq!(eval_at("2+3*4^2", 0.0), 50.0);
        assert_eq!(eval_at("-x^2", 3.0), -9.0);
        assert_eq!(eval_at("(-x)^2", 3.0), 9.0);
        assert_eq!(eval_at("8/4/2", 0.0), 1.0);
        assert_eq!(eval_at("1-2-3", 0.0), -4.0);
        assert_eq!(eval_at("2*-x", 1.5), -3.0);
        assert_eq!(eval_at("x^0.5", 4.0), 2.0);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            Expr::parse("d3p * 2"),
            Err(ParseError::UnknownIdentifier {
                name: "d3p".into(),
                offset: 0
            })
        );
        assert_eq!(
            Expr::parse("x^p"),
            Err(ParseError::NonLiteralExponent { offset: 2 })
        );
        assert_eq!(
            Expr::parse("x^(2)"),
            Err(ParseError::NonLiteralExponent { offset: 2 })
        );
        assert!(matches!(
            Expr::parse("2 * (x + 1"),
            Err(ParseError::Syntax { offset: 10, .. })
        ));
        assert!(matches!(
            Expr::parse("x $ 2"),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(Expr::parse(""), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expr::parse("x^2^3"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expr::parse("exp x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(Expr::parse("x y"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn evaluation_errors_carry_x() {
        let e = Expr::parse("1/(x - 0.5)").unwrap();
        assert_eq!(e.eval_x(0.5), Err(EvalError::DivisionByZero { x: 0.5 }));
        let e = Expr::parse("ln(x)").unwrap();
        assert_eq!(e.eval_x(-1.0).unwrap_err().x(), -1.0);
        let e = Expr::parse("sqrt(x - 1)").unwrap();
        assert!(matches!(
            e.eval_x(0.0),
            Err(EvalError::Domain { func: Func::Sqrt, .. })
        ));
    }

    #[test]
    fn display_is_readable() {
        let e = Expr::parse("x^5 - x^3 - 18*x^2 + 12*x - 18").unwrap();
        assert_eq!(e.to_string(), "x^5 - x^3 - 18 * x^2 + 12 * x - 18");
        let e = Expr::parse("-(x*y_)").err();
        assert!(e.is_some());
        let e = Expr::parse("-(x*p) - (1 - q)").unwrap();
        assert_eq!(e.to_string(), "-(x * p) - (1 - q)");
        assert_eq!(Expr::Num(-1.0).to_string(), "-1");
    }
}
