//! Exact arithmetic over decimal literals: `+ - * /`, unary signs and
//! parentheses with the usual precedence.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected {found} at position {pos}")]
    Unexpected { found: String, pos: usize },
    #[error("division by zero")]
    DivisionByZero,
}

/// Evaluates `expr` exactly. A single trailing `=` is allowed, so
/// `"75*34+12="` reads the way people type it.
pub fn evaluate(expr: &str) -> Result<BigRational, CalcError> {
    let expr = expr.trim();
    let expr = expr.strip_suffix('=').unwrap_or(expr);
    let tokens = tokenize(expr)?;
    if tokens.is_empty() {
        return Err(CalcError::Empty);
    }
    let mut parser = Parser { tokens, pos: 0 };
    let value = parser.expr()?;
    match parser.tokens.get(parser.pos) {
        None => Ok(value),
        Some((tok, pos)) => Err(CalcError::Unexpected {
            found: tok.describe(),
            pos: *pos,
        }),
    }
}

/// Renders a rational as an integer, a terminating decimal, or `p/q`.
pub fn format_rational(value: &BigRational) -> String {
    if value.is_integer() {
        return value.to_integer().to_string();
    }
    let denom = value.denom().clone();
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    let (mut rest, mut twos, mut fives) = (denom.clone(), 0u32, 0u32);
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), denom);
    }
    let scale = twos.max(fives);
    let scaled = value.numer() * num_traits::pow(BigInt::from(10u8), scale as usize) / &denom;
    let digits = scaled.abs().to_string();
    let width = scale as usize + 1;
    let digits = format!("{digits:0>width$}");
    let (int_part, frac_part) = digits.split_at(digits.len() - scale as usize);
    let sign = if scaled.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

/// Lossy conversion for callers that want a float.
pub fn to_f64(value: &BigRational) -> Option<f64> {
    value.numer().to_f64().zip(value.denom().to_f64()).map(|(n, d)| n / d)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(BigRational),
    Op(char),
    Open,
    Close,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(n) => format!("number {n}"),
            Token::Op(c) => format!("'{c}'"),
            Token::Open => "'('".into(),
            Token::Close => "')'".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, CalcError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' | '-' | '*' | '/' => {
                out.push((Token::Op(c), i));
                i += 1;
            }
            '×' | 'x' => {
                out.push((Token::Op('*'), i));
                i += 1;
            }
            '÷' => {
                out.push((Token::Op('/'), i));
                i += 1;
            }
            '(' => {
                out.push((Token::Open, i));
                i += 1;
            }
            ')' => {
                out.push((Token::Close, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut int_digits = String::new();
                let mut frac_digits = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    int_digits.push(chars[i]);
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        frac_digits.push(chars[i]);
                        i += 1;
                    }
                }
                if int_digits.is_empty() && frac_digits.is_empty() {
                    return Err(CalcError::Unexpected {
                        found: "'.'".into(),
                        pos: start,
                    });
                }
                out.push((Token::Num(decimal(&int_digits, &frac_digits)), start));
            }
            other => {
                return Err(CalcError::Unexpected {
                    found: format!("'{other}'"),
                    pos: i,
                })
            }
        }
    }
    Ok(out)
}

fn decimal(int_digits: &str, frac_digits: &str) -> BigRational {
    let all = format!("{int_digits}{frac_digits}");
    let numer: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().expect("ascii digits")
    };
    let denom = num_traits::pow(BigInt::from(10u8), frac_digits.len());
    BigRational::new(numer, denom)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn unexpected(&self) -> CalcError {
        match self.tokens.get(self.pos) {
            Some((tok, pos)) => CalcError::Unexpected {
                found: tok.describe(),
                pos: *pos,
            },
            None => CalcError::Unexpected {
                found: "end of input".into(),
                pos: self.tokens.last().map(|(_, p)| p + 1).unwrap_or(0),
            },
        }
    }

    fn expr(&mut self) -> Result<BigRational, CalcError> {
        let mut acc = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<BigRational, CalcError> {
        let mut acc = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == '*' {
                acc * rhs
            } else {
                if rhs.is_zero() {
                    return Err(CalcError::DivisionByZero);
                }
                acc / rhs
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<BigRational, CalcError> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<BigRational, CalcError> {
        match self.peek().cloned() {
            Some(Token::Num(n)) => {
                self.pos += 1;
                Ok(n)
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }
}
