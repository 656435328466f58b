//! Coefficient expressions such as `5/64 + 1/128 + 1/256` or
//! `3*sqrt(2)/8 * exp(i*pi/8)`.
//!
//! Decimal literals and rational arithmetic stay exact (complex rationals
//! over `i64`); anything else, or an overflow, falls back to ball
//! arithmetic.

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};

use crate::ball::{round, BallError, BallScalar};

type Q = Ratio<i64>;

#[derive(Debug, thiserror::Error)]
pub enum ExprError {
    #[error("unexpected character {0:?} at offset {1}")]
    Char(char, usize),
    #[error("unexpected end of expression")]
    End,
    #[error("unexpected token {0} at offset {1}")]
    Token(String, usize),
    #[error("unknown name {0:?}")]
    Name(String),
    #[error("exponent must be an exact integer")]
    Exponent,
    #[error("division by zero")]
    DivZero,
    #[error(transparent)]
    Ball(#[from] BallError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact { re: Q, im: Q },
    Ball(BallScalar),
}

impl Value {
    fn real(q: Q) -> Self {
        Value::Exact { re: q, im: Q::zero() }
    }

    pub fn to_ball(&self) -> BallScalar {
        match self {
            Value::Exact { re, im } => {
                let r = BallScalar::ratio(*re.numer(), *re.denom());
                let i = BallScalar::ratio(*im.numer(), *im.denom());
                let rad = if r.rad == 0.0 || i.rad == 0.0 { r.rad.max(i.rad) } else { round::add_up(r.rad, i.rad) };
                BallScalar { mid: Complex64::new(r.mid.re, i.mid.re), rad }
            }
            Value::Ball(b) => *b,
        }
    }

    /// The value as an exact real rational, if it is one.
    pub fn as_rational(&self) -> Option<Q> {
        match self {
            Value::Exact { re, im } if im.is_zero() => Some(*re),
            _ => None,
        }
    }

    pub fn center(&self) -> Complex64 {
        self.to_ball().mid
    }
}

pub fn parse(text: &str) -> Result<Value, ExprError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let v = p.expr()?;
    match p.tokens.get(p.pos) {
        None => Ok(v),
        Some((t, at)) => Err(ExprError::Token(format!("{t:?}"), *at)),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Value),
    Name(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            out.push((Tok::Num(literal(&lit).ok_or(ExprError::Char(c, at))?), at));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((Tok::Name(chars[start..i].iter().map(|(_, c)| *c).collect()), at));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), at));
            i += 1;
        } else {
            return Err(ExprError::Char(c, at));
        }
    }
    Ok(out)
}

/// Exact rational for a decimal literal when it fits, otherwise the
/// correctly rounded double with a half-ulp radius.
fn literal(lit: &str) -> Option<Value> {
    let (mantissa, exp) = match lit.find(['e', 'E']) {
        Some(p) => (&lit[..p], lit[p + 1..].parse::<i32>().ok()?),
        None => (lit, 0),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let exact = (|| {
        let digits = format!("{int}{frac}");
        let m: i64 = digits.parse().ok()?;
        let scale = exp - frac.len() as i32;
        let p = 10i64.checked_pow(scale.unsigned_abs())?;
        if scale >= 0 {
            Some(Q::from_integer(m.checked_mul(p)?))
        } else {
            Some(Q::new(m, p))
        }
    })();
    match exact {
        Some(q) => Some(Value::real(q)),
        None => {
            let x: f64 = lit.parse().ok()?;
            Some(Value::Ball(BallScalar::real_with_radius(x, round::mul_up(x.abs(), round::UNIT_ROUNDOFF))))
        }
    }
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) if *c == op => {
                self.pos += 1;
                Ok(())
            }
            Some((t, at)) => Err(ExprError::Token(format!("{t:?}"), *at)),
            None => Err(ExprError::End),
        }
    }

    fn expr(&mut self) -> Result<Value, ExprError> {
        let mut v = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            v = if op == '+' { add(v, rhs) } else { add(v, neg(rhs)) };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<Value, ExprError> {
        let mut v = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            v = if op == '*' { mul(v, rhs) } else { div(v, rhs)? };
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<Value, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(neg(self.unary()?))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Value, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let e = self.unary()?;
            let n = e.as_rational().filter(|q| q.is_integer()).ok_or(ExprError::Exponent)?;
            return pow(base, n.to_integer());
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Value, ExprError> {
        let (tok, at) = self.tokens.get(self.pos).cloned().ok_or(ExprError::End)?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(v),
            Tok::Op('(') => {
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Tok::Name(name) => match name.as_str() {
                "pi" => Ok(Value::Ball(BallScalar::pi())),
                "i" => Ok(Value::Exact { re: Q::zero(), im: Q::from_integer(1) }),
                "sqrt" | "exp" => {
                    self.expect('(')?;
                    let arg = self.expr()?.to_ball();
                    self.expect(')')?;
                    let out = if name == "sqrt" { arg.sqrt_real()? } else { arg.exp()? };
                    Ok(Value::Ball(out))
                }
                _ => Err(ExprError::Name(name)),
            },
            Tok::Op(c) => Err(ExprError::Token(c.to_string(), at)),
        }
    }
}

fn neg(v: Value) -> Value {
    match v {
        Value::Exact { re, im } => Value::Exact { re: -re, im: -im },
        Value::Ball(b) => Value::Ball(-b),
    }
}

fn add(a: Value, b: Value) -> Value {
    if let (Value::Exact { re: ar, im: ai }, Value::Exact { re: br, im: bi }) = (&a, &b) {
        if let (Some(re), Some(im)) = (ar.checked_add(br), ai.checked_add(bi)) {
            return Value::Exact { re, im };
        }
    }
    Value::Ball(a.to_ball() + b.to_ball())
}

fn exact_mul(ar: &Q, ai: &Q, br: &Q, bi: &Q) -> Option<(Q, Q)> {
    let re = ar.checked_mul(br)?.checked_sub(&ai.checked_mul(bi)?)?;
    let im = ar.checked_mul(bi)?.checked_add(&ai.checked_mul(br)?)?;
    Some((re, im))
}

fn mul(a: Value, b: Value) -> Value {
    if let (Value::Exact { re: ar, im: ai }, Value::Exact { re: br, im: bi }) = (&a, &b) {
        if let Some((re, im)) = exact_mul(ar, ai, br, bi) {
            return Value::Exact { re, im };
        }
    }
    Value::Ball(a.to_ball() * b.to_ball())
}

fn div(a: Value, b: Value) -> Result<Value, ExprError> {
    if let (Value::Exact { re: ar, im: ai }, Value::Exact { re: br, im: bi }) = (&a, &b) {
        if br.is_zero() && bi.is_zero() {
            return Err(ExprError::DivZero);
        }
        let exact = (|| {
            let norm = br.checked_mul(br)?.checked_add(&bi.checked_mul(bi)?)?;
            let (re, im) = exact_mul(ar, ai, br, &-bi)?;
            Some((re.checked_div(&norm)?, im.checked_div(&norm)?))
        })();
        if let Some((re, im)) = exact {
            return Ok(Value::Exact { re, im });
        }
    }
    Ok(Value::Ball(a.to_ball().div(b.to_ball())?))
}

fn pow(base: Value, n: i64) -> Result<Value, ExprError> {
    if let Value::Exact { .. } = base {
        let mut acc = Value::real(Q::from_integer(1));
        for _ in 0..n.unsigned_abs().min(64) {
            acc = mul(acc, base.clone());
        }
        if n.unsigned_abs() <= 64 {
            return if n < 0 { div(Value::real(Q::from_integer(1)), acc) } else { Ok(acc) };
        }
    }
    Ok(Value::Ball(base.to_ball().powi(n)?))
}
