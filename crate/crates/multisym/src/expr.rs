//! A small arithmetic expression language for Hamiltonians, form
//! components, and section formulas: numbers, variables, + − * / ^ with the
//! usual precedence (^ right-associative, binding tighter than unary −),
//! and the functions sin, cos, exp, log, sqrt.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
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
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Evaluate against a variable environment. Domain violations (log of a
    /// nonpositive value, sqrt of a negative, fractional power of a
    /// negative, division by zero) are reported as errors, not NaNs.
    pub fn eval(&self, env: &HashMap<String, f64>) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(name) => env
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownIdentifier {
                    name: name.clone(),
                    offset: 0,
                }),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Bin(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::InvalidArgument("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let v = a.powf(b);
                        if v.is_nan() {
                            return Err(Error::InvalidArgument(format!(
                                "{a}^{b} is undefined over the reals"
                            )));
                        }
                        v
                    }
                };
                Ok(v)
            }
            Expr::Call(f, e) => {
                let a = e.eval(env)?;
                Ok(match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(Error::InvalidArgument(format!("log({a}) is undefined")));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::InvalidArgument(format!("sqrt({a}) is undefined")));
                        }
                        a.sqrt()
                    }
                })
            }
        }
    }

    /// All variable names referenced by the expression.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) => out.push(name),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v}")?,
            Expr::Var(name) => write!(f, "{name}")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Bin(op, l, r) => {
                // left-associative operators parenthesize a right-nested
                // peer; the right-associative power does the reverse
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 4),
                };
                l.fmt_prec(f, lp)?;
                write!(f, "{sym}")?;
                r.fmt_prec(f, rp)?;
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parse an expression; errors carry the byte offset of the offending text.
pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parse and reject identifiers outside the allowed variable set (function
/// names stay usable). Errors point at the identifier.
pub fn parse_checked(text: &str, allowed: &dyn Fn(&str) -> bool) -> Result<Expr> {
    let e = parse_expression(text)?;
    for name in e.variables() {
        if !allowed(name) {
            let offset = text.find(name).unwrap_or(0);
            return Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset,
            });
        }
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            self.skip_ws();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            self.skip_ws();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            // right-associative; the exponent may carry a unary minus
            let exp = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("expected a number, variable, function, or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // not an exponent after all (e.g. `2*exp(x)` seen as `2e`)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Parse {
                offset: start,
                msg: format!("invalid number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii identifier");
        if let Some(func) = Func::from_name(name) {
            self.skip_ws();
            if !self.eat(b'(') {
                return Err(Error::Parse {
                    offset: start,
                    msg: format!("function `{name}` needs a parenthesized argument"),
                });
            }
            let arg = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(self.error("expected `)` closing the function argument"));
            }
            Ok(Expr::Call(func, Box::new(arg)))
        } else {
            Ok(Expr::Var(name.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval1(text: &str, vars: &[(&str, f64)]) -> Result<f64> {
        let env: HashMap<String, f64> = vars.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        parse_expression(text)?.eval(&env)
    }

    #[test]
    fn laplace_hamiltonian_expression() {
        let e = parse_expression("0.5*(p1_1^2 + p1_2^2)").unwrap();
        assert_eq!(e.variables(), vec!["p1_1", "p1_2"]);
        let v = eval1("0.5*(p1_1^2 + p1_2^2)", &[("p1_1", 3.0), ("p1_2", 4.0)]).unwrap();
        assert_eq!(v, 12.5);
    }

    #[test]
    fn single_variable() {
        assert_eq!(parse_expression("x1").unwrap(), Expr::Var("x1".into()));
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval1("2^3^2", &[]).unwrap(), 512.0);
        assert_eq!(eval1("(2^3)^2", &[]).unwrap(), 64.0);
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(eval1("-2^2", &[]).unwrap(), -4.0);
        assert_eq!(eval1("(-2)^2", &[]).unwrap(), 4.0);
        assert_eq!(eval1("2 - 3 - 4", &[]).unwrap(), -5.0);
        assert_eq!(eval1("12/3/2", &[]).unwrap(), 2.0);
        assert_eq!(eval1("1 + 2*3", &[]).unwrap(), 7.0);
        assert_eq!(eval1("2^-1", &[]).unwrap(), 0.5);
    }

    #[test]
    fn functions_and_numbers() {
        assert!((eval1("sin(0) + cos(0)", &[]).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval1("exp(log(2.5))", &[]).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(eval1("sqrt(2.25e2)", &[]).unwrap(), 15.0);
        // `2*exp(x)` must not lex `2e` as a truncated exponent
        assert!((eval1("2*exp(0)", &[]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_are_reported() {
        assert!(eval1("log(0)", &[]).is_err());
        assert!(eval1("sqrt(-1)", &[]).is_err());
        assert!(eval1("1/0", &[]).is_err());
        assert!(eval1("(-1)^0.5", &[]).is_err());
    }

    #[test]
    fn syntax_errors_carry_byte_offsets() {
        match parse_expression("1 + @") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_expression("sin 3") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_expression("(1 + 2").is_err());
        assert!(parse_expression("1 2").is_err());
    }

    #[test]
    fn unknown_identifiers_are_rejected_when_checked() {
        let allowed = |name: &str| name == "x1";
        assert!(parse_checked("x1 + 1", &allowed).is_ok());
        match parse_checked("x1 + y", &allowed) {
            Err(Error::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "y");
                assert_eq!(offset, 5);
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(Expr::Num),
            prop_oneof![Just("x1"), Just("q1"), Just("p1_1"), Just("p")]
                .prop_map(|s| Expr::Var(s.to_string())),
        ];
        leaf.prop_recursive(5, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Bin(op, Box::new(l), Box::new(r))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Log),
                        Just(Func::Sqrt)
                    ],
                    inner
                )
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_expression(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e, "printed as {}", printed);
            // and printing is a fixed point of parse∘print
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
