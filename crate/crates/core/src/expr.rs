//! Scalar expression trees with exact symbolic differentiation.
//!
//! Grammar (infix): `+ - * /`, `^` for powers with a constant exponent,
//! unary minus, parentheses, numeric literals, variable names and the
//! functions `sin`, `cos`, `exp`, `sqrt`. Exponentiation binds tighter than
//! unary minus, so `-x^2` parses as `-(x^2)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Neg(ScalarExpr),
    Pow(ScalarExpr, f64),
    Sin(ScalarExpr),
    Cos(ScalarExpr),
    Exp(ScalarExpr),
}

/// Immutable, cheaply clonable expression over variables `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr(Arc<Node>);

impl ScalarExpr {
    fn node(n: Node) -> Self {
        ScalarExpr(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::node(Node::Const(c))
    }

    pub fn var(index: usize) -> Self {
        Self::node(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Self::constant(a + b),
            (Some(a), _) if a == 0.0 => other.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::node(Node::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Self::constant(a - b),
            (Some(a), _) if a == 0.0 => other.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::node(Node::Sub(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Self::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Self::constant(0.0),
            (Some(a), _) if a == 1.0 => other.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => other.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Self::node(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Self::constant(a / b),
            (Some(a), _) if a == 0.0 => Self::constant(0.0),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Self::node(Node::Div(self.clone(), other.clone())),
        }
    }

    pub fn neg(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Self::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::node(Node::Neg(self.clone())),
        }
    }

    pub fn powf(&self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Self::constant(1.0);
        }
        if exponent == 1.0 {
            return self.clone();
        }
        match self.as_const() {
            Some(c) => Self::constant(c.powf(exponent)),
            None => Self::node(Node::Pow(self.clone(), exponent)),
        }
    }

    pub fn sin(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.sin()),
            None => Self::node(Node::Sin(self.clone())),
        }
    }

    pub fn cos(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.cos()),
            None => Self::node(Node::Cos(self.clone())),
        }
    }

    pub fn exp(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.exp()),
            None => Self::node(Node::Exp(self.clone())),
        }
    }

    /// Evaluates at `point`; variables beyond `point.len()` read as NaN.
    pub fn eval(&self, point: &[f64]) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(i) => point.get(*i).copied().unwrap_or(f64::NAN),
            Node::Add(a, b) => a.eval(point) + b.eval(point),
            Node::Sub(a, b) => a.eval(point) - b.eval(point),
            Node::Mul(a, b) => a.eval(point) * b.eval(point),
            Node::Div(a, b) => a.eval(point) / b.eval(point),
            Node::Neg(a) => -a.eval(point),
            Node::Pow(a, e) => {
                let base = a.eval(point);
                if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
                    base.powi(*e as i32)
                } else {
                    base.powf(*e)
                }
            }
            Node::Sin(a) => a.eval(point).sin(),
            Node::Cos(a) => a.eval(point).cos(),
            Node::Exp(a) => a.eval(point).exp(),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        match &*self.0 {
            Node::Const(_) => Self::constant(0.0),
            Node::Var(i) => Self::constant(if *i == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.derivative(var).add(&b.derivative(var)),
            Node::Sub(a, b) => a.derivative(var).sub(&b.derivative(var)),
            Node::Mul(a, b) => a.derivative(var).mul(b).add(&a.mul(&b.derivative(var))),
            Node::Div(a, b) => {
                let num = a.derivative(var).mul(b).sub(&a.mul(&b.derivative(var)));
                num.div(&b.powf(2.0))
            }
            Node::Neg(a) => a.derivative(var).neg(),
            Node::Pow(a, e) => Self::constant(*e)
                .mul(&a.powf(e - 1.0))
                .mul(&a.derivative(var)),
            Node::Sin(a) => a.cos().mul(&a.derivative(var)),
            Node::Cos(a) => a.sin().neg().mul(&a.derivative(var)),
            Node::Exp(a) => self.mul(&a.derivative(var)),
        }
    }

    pub fn gradient(&self, dim: usize) -> Vec<ScalarExpr> {
        (0..dim).map(|i| self.derivative(i)).collect()
    }

    /// Directional derivative `field · ∇self`.
    pub fn along(&self, field: &[ScalarExpr]) -> Self {
        field
            .iter()
            .enumerate()
            .fold(Self::constant(0.0), |acc, (i, vi)| {
                acc.add(&vi.mul(&self.derivative(i)))
            })
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match &*self.0 {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                a.max_var()
            }
        }
    }

    pub fn parse(src: &str, vars: &[&str]) -> Result<Self> {
        let mut parser = Parser {
            tokens: tokenize(src)?,
            pos: 0,
            vars,
        };
        let expr = parser.expr()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(Error::Parse {
                column: tok.column,
                message: format!("unexpected token {:?}", tok.kind),
            });
        }
        Ok(expr)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "v{i}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, e) => write!(f, "({a}^{e})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| Error::Parse {
                column,
                message: format!("bad number {text:?}"),
            })?;
            out.push(Token {
                kind: TokenKind::Num(value),
                column,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^".contains(c) {
            out.push(Token {
                kind: TokenKind::Op(c),
                column,
            });
            i += 1;
        } else if c == '(' {
            out.push(Token {
                kind: TokenKind::LParen,
                column,
            });
            i += 1;
        } else if c == ')' {
            out.push(Token {
                kind: TokenKind::RParen,
                column,
            });
            i += 1;
        } else {
            return Err(Error::Parse {
                column,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .or_else(|| self.tokens.last().map(|t| t.column + 1))
            .unwrap_or(1)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.term()?;
        while let Some(TokenKind::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { lhs.add(&rhs) } else { lhs.sub(&rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.unary()?;
        while let Some(TokenKind::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { lhs.mul(&rhs) } else { lhs.div(&rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ScalarExpr> {
        match self.peek() {
            Some(TokenKind::Op('-')) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(TokenKind::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<ScalarExpr> {
        let base = self.atom()?;
        if let Some(TokenKind::Op('^')) = self.peek() {
            self.pos += 1;
            let column = self.column();
            let exponent = self.unary()?;
            let Some(e) = exponent.as_const() else {
                return Err(Error::Unsupported(format!(
                    "non-constant exponent at column {column}"
                )));
            };
            return Ok(base.powf(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ScalarExpr> {
        let Some(kind) = self.peek().cloned() else {
            return self.fail("unexpected end of input");
        };
        match kind {
            TokenKind::Num(v) => {
                self.pos += 1;
                Ok(ScalarExpr::constant(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                if let Some(TokenKind::LParen) = self.peek() {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return match name.as_str() {
                        "sin" => Ok(arg.sin()),
                        "cos" => Ok(arg.cos()),
                        "exp" => Ok(arg.exp()),
                        "sqrt" => Ok(arg.powf(0.5)),
                        _ => Err(Error::Unsupported(format!("function {name:?}"))),
                    };
                }
                if name == "pi" {
                    return Ok(ScalarExpr::constant(std::f64::consts::PI));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(ScalarExpr::var(i)),
                    None => {
                        self.pos -= 1;
                        self.fail(format!("unknown variable {name:?}"))
                    }
                }
            }
            other => self.fail(format!("unexpected token {other:?}")),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(TokenKind::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail("expected ')'"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: &[&str] = &["x", "y"];

    #[test]
    fn parses_precedence() {
        let e = ScalarExpr::parse("1 - x^2 - y^2", XY).unwrap();
        assert_eq!(e.eval(&[0.5, 0.5]), 0.5);
        let e = ScalarExpr::parse("-x^2", XY).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]), -9.0);
        let e = ScalarExpr::parse("2*x*y/4 + exp(0)", XY).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0]), 4.0);
        let e = ScalarExpr::parse("(x^2+y^2-1)*(4-x^2-y^2)", XY).unwrap();
        assert_eq!(e.eval(&[1.5, 0.0]), 1.25 * 1.75);
        let e = ScalarExpr::parse("1.5e-1 * x", XY).unwrap();
        assert!((e.eval(&[2.0, 0.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ScalarExpr::parse("x + q", XY),
            Err(Error::Parse { column: 5, .. })
        ));
        assert!(matches!(ScalarExpr::parse("x ^ y", XY), Err(Error::Unsupported(_))));
        assert!(matches!(ScalarExpr::parse("tan(x)", XY), Err(Error::Unsupported(_))));
        assert!(ScalarExpr::parse("(x + 1", XY).is_err());
        assert!(ScalarExpr::parse("x $ 1", XY).is_err());
    }

    #[test]
    fn derivative_of_disk() {
        let f = ScalarExpr::parse("1 - x^2 - y^2", XY).unwrap();
        let fy = f.derivative(1);
        assert_eq!(fy.eval(&[0.3, 0.7]), -1.4);
        assert_eq!(fy.derivative(1).as_const(), Some(-2.0));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let f = ScalarExpr::parse("sin(x*y) + exp(x)/(1 + y^2) - cos(y)^3", XY).unwrap();
        for &(x, y) in &[(0.3, -0.2), (1.1, 0.4), (-0.7, 2.0)] {
            for var in 0..2 {
                let d = f.derivative(var).eval(&[x, y]);
                let h = 1e-5;
                let mut p = [x, y];
                let mut m = [x, y];
                p[var] += h;
                m[var] -= h;
                let fd = (f.eval(&p) - f.eval(&m)) / (2.0 * h);
                assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "{d} vs {fd}");
            }
        }
    }
}
