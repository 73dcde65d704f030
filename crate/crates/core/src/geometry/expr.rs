//! Closed-form scalar expressions over a small whitelisted grammar:
//! numeric constants, `x`, `y`, `+`, `-`, `*`, parentheses, `sin`, `cos`, `exp`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    X,
    Y,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

fn err<T>(src: &str, msg: impl fmt::Display) -> Result<T> {
    Err(Error::Expression(format!("{msg} in `{src}`")))
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            '0'..='9' | '.' => {
                let st = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let save = i;
                    i += 1;
                    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                        i += 1;
                    }
                    if i < b.len() && b[i].is_ascii_digit() {
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        i = save;
                    }
                }
                match src[st..i].parse::<f64>() {
                    Ok(v) => out.push(Tok::Num(v)),
                    Err(_) => return err(src, format!("bad number `{}`", &src[st..i])),
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let st = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Ident(src[st..i].to_string()));
            }
            other => return err(src, format!("character `{other}` is not allowed")),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => err(self.src, "missing `)`"),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                "sin" | "cos" | "exp" => {
                    if self.next() != Some(Tok::LParen) {
                        return err(self.src, format!("`{name}` must be followed by `(`"));
                    }
                    let a = Box::new(self.expr()?);
                    if self.next() != Some(Tok::RParen) {
                        return err(self.src, "missing `)`");
                    }
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(a),
                        "cos" => Expr::Cos(a),
                        _ => Expr::Exp(a),
                    })
                }
                other => err(self.src, format!("identifier `{other}` is not in the grammar")),
            },
            Some(t) => err(self.src, format!("unexpected token {t:?}")),
            None => err(self.src, "unexpected end of input"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = tokenize(src)?;
        let mut p = Parser { toks, pos: 0, src };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return err(src, "trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Sin(a) => a.eval(x, y).sin(),
            Expr::Cos(a) => a.eval(x, y).cos(),
            Expr::Exp(a) => a.eval(x, y).exp(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::X | Expr::Y => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_constant() && b.is_constant(),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.is_constant(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("1 + 2*x*y - -y").unwrap();
        assert_eq!(e.eval(2.0, 3.0), 1.0 + 12.0 + 3.0);
        let e = Expr::parse("exp(0.5*(x+y))*cos(y)").unwrap();
        assert!((e.eval(1.0, 0.0) - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(Expr::parse("1e-3*x").unwrap().eval(2.0, 0.0), 2e-3);
    }

    #[test]
    fn rejects_outside_grammar() {
        for bad in ["x/y", "sqrt(x)", "x^2", "(x", "x y", "", "pi"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }
}
