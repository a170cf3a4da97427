//! Expression language for `F(x, u, v)`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u^2`
//! is `-(u^2)`. Identifiers `u`, `v`, `pi` and `e` are reserved; any other
//! identifier names a per-vertex attribute.

use std::collections::BTreeSet;

use thiserror::Error;

use super::dual::Dual;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
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

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    U,
    V,
    Attr(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
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
            let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                column: col,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(value), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    return Err(ExprError::Syntax {
                        column: col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((tok, col));
            i += 1;
        }
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

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let col = self.column();
        match self.bump() {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ExprError::Syntax {
                            column: col,
                            message: format!("unknown function `{name}`"),
                        });
                    };
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    if args.len() != f.arity() {
                        return Err(ExprError::Syntax {
                            column: col,
                            message: format!(
                                "`{name}` takes {} argument(s), got {}",
                                f.arity(),
                                args.len()
                            ),
                        });
                    }
                    return Ok(Expr::Call(f, args));
                }
                Ok(match name.as_str() {
                    "u" => Expr::U,
                    "v" => Expr::V,
                    "pi" => Expr::Num(std::f64::consts::PI),
                    "e" => Expr::Num(std::f64::consts::E),
                    _ if Func::from_name(&name).is_some() => {
                        return Err(ExprError::Syntax {
                            column: col,
                            message: format!("function `{name}` needs arguments"),
                        })
                    }
                    _ => Expr::Attr(name),
                })
            }
            Tok::End => Err(ExprError::Syntax {
                column: col,
                message: "unexpected end of input".into(),
            }),
            t => Err(ExprError::Syntax {
                column: col,
                message: format!("unexpected {}", describe(&t)),
            }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            toks: lex(src)?,
            pos: 0,
        };
        let e = p.expr()?;
        if *p.peek() != Tok::End {
            return p.error(format!("unexpected {}", describe(p.peek())));
        }
        Ok(e)
    }

    /// Names of the per-vertex attributes referenced by the expression.
    pub fn attributes(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Attr(a) => {
                out.insert(a.clone());
            }
            Expr::Neg(e) => e.collect(out),
            Expr::Bin(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect(out)),
            Expr::Num(_) | Expr::U | Expr::V => {}
        }
    }

    /// Evaluates the expression and its partials in `u` and `v`.
    pub fn eval(
        &self,
        u: f64,
        v: f64,
        attr: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<Dual, ExprError> {
        let d = self.eval_dual(u, v, attr)?;
        if !d.is_finite() && u.is_finite() && v.is_finite() {
            return Err(ExprError::Domain(format!(
                "non-finite result at u = {u}, v = {v}"
            )));
        }
        Ok(d)
    }

    fn eval_dual(
        &self,
        u: f64,
        v: f64,
        attr: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<Dual, ExprError> {
        let rec = |e: &Expr| e.eval_dual(u, v, attr);
        Ok(match self {
            Expr::Num(x) => Dual::constant(*x),
            Expr::U => Dual::var_u(u),
            Expr::V => Dual::var_v(v),
            Expr::Attr(name) => Dual::constant(
                attr(name).ok_or_else(|| ExprError::UnknownIdentifier(name.clone()))?,
            ),
            Expr::Neg(e) => -rec(e)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (rec(a)?, rec(b)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.re == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
            Expr::Call(f, args) => {
                let x = rec(&args[0])?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x.re <= 0.0 {
                            return Err(ExprError::Domain(format!("ln of {}", x.re)));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x.re < 0.0 {
                            return Err(ExprError::Domain(format!("sqrt of {}", x.re)));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Pow => power(x, rec(&args[1])?)?,
                }
            }
        })
    }
}

fn power(a: Dual, b: Dual) -> Result<Dual, ExprError> {
    if b.is_constant() {
        if a.re < 0.0 && b.re.fract() != 0.0 {
            return Err(ExprError::Domain(format!(
                "non-integer power {} of negative base {}",
                b.re, a.re
            )));
        }
        if a.re == 0.0 && b.re < 0.0 {
            return Err(ExprError::Domain(format!("zero raised to {}", b.re)));
        }
        return Ok(a.powf(b.re));
    }
    if a.re <= 0.0 {
        return Err(ExprError::Domain(format!(
            "variable exponent with nonpositive base {}",
            a.re
        )));
    }
    Ok(a.pow(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, u: f64, v: f64) -> Dual {
        Expr::parse(src).unwrap().eval(u, v, &|_| None).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1+2*3", 0.0, 0.0).re, 7.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0).re, 512.0);
        assert_eq!(ev("-2^2", 0.0, 0.0).re, -4.0);
        assert_eq!(ev("2^-1", 0.0, 0.0).re, 0.5);
        assert_eq!(ev("(1+2)*3", 0.0, 0.0).re, 9.0);
        assert_eq!(ev("8/2/2", 0.0, 0.0).re, 2.0);
        assert_eq!(ev("1e2 + 2.5E-1", 0.0, 0.0).re, 100.25);
    }

    #[test]
    fn constants_and_functions() {
        assert!((ev("sin(pi/2)", 0.0, 0.0).re - 1.0).abs() < 1e-15);
        assert!((ev("ln(e)", 0.0, 0.0).re - 1.0).abs() < 1e-15);
        assert_eq!(ev("pow(2, 10)", 0.0, 0.0).re, 1024.0);
        assert_eq!(ev("sqrt(abs(-16))", 0.0, 0.0).re, 4.0);
    }

    #[test]
    fn derivatives() {
        let d = ev("u^2*v + exp(v)", 3.0, 0.0);
        assert_eq!(d, Dual { re: 1.0, du: 0.0, dv: 10.0 });
        let d = ev("abs(v)^3", 0.0, -2.0);
        assert_eq!(d.dv, -12.0);
    }

    #[test]
    fn syntax_errors_carry_columns() {
        let err = Expr::parse("u + * v").unwrap_err();
        assert_eq!(
            err,
            ExprError::Syntax {
                column: 5,
                message: "unexpected `*`".into()
            }
        );
        assert!(matches!(Expr::parse("(u"), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(Expr::parse("foo(u)"), Err(ExprError::Syntax { column: 1, .. })));
        assert!(matches!(Expr::parse("pow(u)"), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expr::parse("u $ v"), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(Expr::parse("u v"), Err(ExprError::Syntax { column: 3, .. })));
    }

    #[test]
    fn attributes_resolve_through_callback() {
        let e = Expr::parse("k*u + c").unwrap();
        assert_eq!(
            e.attributes().into_iter().collect::<Vec<_>>(),
            vec!["c".to_string(), "k".to_string()]
        );
        let look = |n: &str| match n {
            "k" => Some(2.0),
            "c" => Some(1.0),
            _ => None,
        };
        assert_eq!(e.eval(3.0, 0.0, &look).unwrap(), Dual { re: 7.0, du: 2.0, dv: 0.0 });
        assert_eq!(
            Expr::parse("w").unwrap().eval(0.0, 0.0, &look),
            Err(ExprError::UnknownIdentifier("w".into()))
        );
    }

    #[test]
    fn domain_errors() {
        let check = |s: &str, u: f64| {
            let r = Expr::parse(s).unwrap().eval(u, 0.0, &|_| None);
            assert!(matches!(r, Err(ExprError::Domain(_))), "{s}: {r:?}");
        };
        check("ln(u)", -1.0);
        check("ln(u)", 0.0);
        check("sqrt(u)", -1.0);
        check("1/u", 0.0);
        check("u^0.5", -1.0);
        check("sqrt(u)", 0.0);
    }
}
