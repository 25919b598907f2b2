//! Expression grammar for radial profiles and boundary data.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | var | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | sinh | cosh | tanh | exp | log | sqrt | abs
//! ```
//!
//! Note that `unary` binds tighter than `^`, so `-x^2` is `(-x)^2`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
    /// Not part of the surface grammar; appears as the derivative of `abs`.
    Sign,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
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
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn apply(self, u: f64) -> f64 {
        match self {
            Func::Sin => u.sin(),
            Func::Cos => u.cos(),
            Func::Tan => u.tan(),
            Func::Sinh => u.sinh(),
            Func::Cosh => u.cosh(),
            Func::Tanh => u.tanh(),
            Func::Exp => u.exp(),
            Func::Log => u.ln(),
            Func::Sqrt => u.sqrt(),
            Func::Abs => u.abs(),
            Func::Sign => {
                if u > 0.0 {
                    1.0
                } else if u < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Free variables. Profiles use `x`; boundary data on the torus use `y` and `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parse an expression in the single free variable `x`.
pub fn parse_expression(src: &str) -> Result<Expr, ExprError> {
    parse_with_vars(src, &[Var::X])
}

/// Parse an expression allowing the given free variables.
pub fn parse_with_vars(src: &str, vars: &[Var]) -> Result<Expr, ExprError> {
    let mut p = Parser { src: src.as_bytes(), text: src, pos: 0, vars };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    vars: &'a [Var],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> ExprError {
        ExprError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                b'-' => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                b'/' => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("expected a number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        // exponent only when followed by digits, so that `2e` stays ambiguous-free
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let lit = &self.text[start..i];
        match lit.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(Expr::Num(v))
            }
            Err(_) => Err(ExprError::Syntax { offset: start, message: format!("malformed number `{lit}`") }),
        }
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_alphanumeric() || s[i] == b'_') {
            i += 1;
        }
        let name = &self.text[start..i];
        self.pos = i;
        match name {
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            _ => {}
        }
        for &v in self.vars {
            if v.name() == name {
                return Ok(Expr::Var(v));
            }
        }
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.syntax(&format!("expected `(` after `{name}`")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.syntax("expected `)`"));
            }
            self.pos += 1;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        Err(ExprError::UnknownIdentifier { name: name.to_string(), offset: start })
    }
}

// Smart constructors with light constant folding.

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => num(x + y),
        (Expr::Num(x), _) if *x == 0.0 => b,
        (_, Expr::Num(y)) if *y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => num(x - y),
        (_, Expr::Num(y)) if *y == 0.0 => a,
        (Expr::Num(x), _) if *x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => num(x * y),
        (Expr::Num(x), _) | (_, Expr::Num(x)) if *x == 0.0 => num(0.0),
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) if *y != 0.0 => num(x / y),
        (Expr::Num(x), _) if *x == 0.0 => num(0.0),
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(y)) if *y == 0.0 => num(1.0),
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (Expr::Num(x), Expr::Num(y)) => num(x.powf(*y)),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(f.apply(v)),
        other => Expr::Call(f, Box::new(other)),
    }
}

/// Values bound to the free variables during evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Expr {
    /// Evaluate with `x` bound and `y = z = 0`.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_env(&Env { x, y: 0.0, z: 0.0 })
    }

    pub fn eval_env(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => env.x,
            Expr::Var(Var::Y) => env.y,
            Expr::Var(Var::Z) => env.z,
            Expr::Neg(a) => -a.eval_env(env),
            Expr::Add(a, b) => a.eval_env(env) + b.eval_env(env),
            Expr::Sub(a, b) => a.eval_env(env) - b.eval_env(env),
            Expr::Mul(a, b) => a.eval_env(env) * b.eval_env(env),
            Expr::Div(a, b) => a.eval_env(env) / b.eval_env(env),
            Expr::Pow(a, b) => {
                let base = a.eval_env(env);
                match **b {
                    Expr::Num(p) if p == p.trunc() && p.abs() <= 64.0 => base.powi(p as i32),
                    _ => base.powf(b.eval_env(env)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval_env(env)),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        !(self.depends_on(Var::X) || self.depends_on(Var::Y) || self.depends_on(Var::Z))
    }

    /// Symbolic derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Expr::Div(a, b) => {
                let num_ = sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)));
                div(num_, pow((**b).clone(), num(2.0)))
            }
            Expr::Pow(a, b) => {
                let da = a.diff(v);
                if !b.depends_on(v) {
                    // c * u^(c-1) * u'
                    let exp_m1 = sub((**b).clone(), num(1.0));
                    mul(mul((**b).clone(), pow((**a).clone(), exp_m1)), da)
                } else {
                    // u^w * (w' log u + w u'/u)
                    let db = b.diff(v);
                    let inner =
                        add(mul(db, call(Func::Log, (**a).clone())), div(mul((**b).clone(), da), (**a).clone()));
                    mul(self.clone(), inner)
                }
            }
            Expr::Call(f, a) => {
                let u = (**a).clone();
                let du = a.diff(v);
                let outer = match f {
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => add(num(1.0), pow(call(Func::Tan, u), num(2.0))),
                    Func::Sinh => call(Func::Cosh, u),
                    Func::Cosh => call(Func::Sinh, u),
                    Func::Tanh => sub(num(1.0), pow(call(Func::Tanh, u), num(2.0))),
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(num(1.0), u),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, u)),
                    Func::Abs => call(Func::Sign, u),
                    Func::Sign => num(0.0),
                };
                mul(outer, du)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 5)
            }
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "*")?;
                wrap(f, b, 3)
            }
            Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "/")?;
                wrap(f, b, 3)
            }
            Expr::Pow(a, b) => {
                wrap(f, a, 5)?;
                write!(f, "^")?;
                wrap(f, b, 4)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_and_evaluates() {
        let e = parse_expression("1 + 0.5*sin(pi*x)").unwrap();
        assert_eq!(e.eval(0.0), 1.0);
        assert!((e.eval(0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn second_derivative_of_exp() {
        let e = parse_expression("exp(2*x)").unwrap();
        let d2 = e.diff(Var::X).diff(Var::X);
        assert!((d2.eval(0.0) - 4.0).abs() < 1e-14);
        assert!((d2.eval(0.3) - 4.0 * (0.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn second_derivative_of_sine() {
        let e = parse_expression("sin(pi*x)").unwrap();
        let d2 = e.diff(Var::X).diff(Var::X);
        assert!((d2.eval(0.5) + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse_expression("1 + * x").unwrap_err();
        assert_eq!(err.offset(), 4);
        assert!(matches!(err, ExprError::Syntax { .. }));
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_expression("1 + foo").unwrap_err();
        assert_eq!(err, ExprError::UnknownIdentifier { name: "foo".into(), offset: 4 });
        // y is not a profile variable
        assert!(matches!(parse_expression("y").unwrap_err(), ExprError::UnknownIdentifier { .. }));
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse_expression("2^3^2").unwrap();
        assert_eq!(e.eval(0.0), 512.0);
        // unary minus binds tighter than ^
        let e = parse_expression("-x^2").unwrap();
        assert_eq!(e.eval(3.0), 9.0);
        let e = parse_expression("x^-1").unwrap();
        assert_eq!(e.eval(4.0), 0.25);
    }

    #[test]
    fn rational_and_variable_exponents() {
        let e = parse_expression("(1+x)^(1/2)").unwrap();
        let d = e.diff(Var::X);
        assert!((d.eval(3.0) - 0.25).abs() < 1e-15);
        let e = parse_expression("x^x").unwrap();
        let d = e.diff(Var::X);
        // d/dx x^x = x^x (log x + 1)
        assert!((d.eval(2.0) - 4.0 * (2f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn scientific_literals_and_constants() {
        assert_eq!(parse_expression("1e-3").unwrap().eval(0.0), 1e-3);
        assert_eq!(parse_expression("2.5E2").unwrap().eval(0.0), 250.0);
        assert!((parse_expression("e").unwrap().eval(0.0) - std::f64::consts::E).abs() < 1e-16);
        assert!(parse_expression("2e").is_err());
    }

    #[test]
    fn display_round_trips_semantically() {
        for src in ["1 + 0.5*sin(pi*x)", "-(x-1)^2/3", "exp(-x)*cosh(2*x)", "x - (x - 1)", "2^-x"] {
            let e = parse_expression(src).unwrap();
            let again = parse_expression(&e.to_string()).unwrap();
            for &x in &[0.1, 0.37, 0.9] {
                assert!((e.eval(x) - again.eval(x)).abs() < 1e-12, "{src} -> {e}");
            }
        }
    }

    #[test]
    fn every_function_differentiates() {
        let h = 1e-5;
        for name in ["sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs"] {
            let src = format!("{name}(0.5 + x)");
            let e = parse_expression(&src).unwrap();
            let d = e.diff(Var::X);
            let x = 0.3;
            let fd = (e.eval(x + h) - e.eval(x - h)) / (2.0 * h);
            assert!((d.eval(x) - fd).abs() < 1e-8, "{name}");
        }
    }

    #[test]
    fn boundary_variables() {
        let e = parse_with_vars("cos(y)*sin(2*z)", &[Var::Y, Var::Z]).unwrap();
        let v = e.eval_env(&Env { x: 0.0, y: 0.0, z: PI / 4.0 });
        assert!((v - 1.0).abs() < 1e-15);
    }
}
