//! A small arithmetic expression language in one variable `y`, evaluated on
//! jets so that user-supplied profiles come with exact derivatives.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'y' | 'pi' | 'e' | ident '(' expr ')' | '(' expr ')'
//! ```

use super::series::Jet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Atan,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tan" => Self::Tan,
            "exp" => Self::Exp,
            "ln" | "log" => Self::Ln,
            "sqrt" => Self::Sqrt,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "tanh" => Self::Tanh,
            "atan" | "arctan" => Self::Atan,
            _ => return None,
        })
    }
}

/// A parsed expression in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser {
            src: source.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.jet(y, 0).value()
    }

    /// Taylor expansion at `y` to the given order.
    pub fn jet(&self, y: f64, order: usize) -> Jet {
        eval(&self.root, &Jet::variable(y, order))
    }
}

fn eval(node: &Node, x: &Jet) -> Jet {
    let order = x.order();
    match node {
        Node::Num(v) => Jet::constant(*v, order),
        Node::Var => x.clone(),
        Node::Neg(a) => -&eval(a, x),
        Node::Bin(op, a, b) => {
            let l = eval(a, x);
            match op {
                Op::Pow => {
                    if let Some(p) = constant_value(b) {
                        l.powf(p)
                    } else {
                        let r = eval(b, x);
                        (&r * &l.ln()).exp()
                    }
                }
                _ => {
                    let r = eval(b, x);
                    match op {
                        Op::Add => &l + &r,
                        Op::Sub => &l - &r,
                        Op::Mul => &l * &r,
                        Op::Div => &l / &r,
                        Op::Pow => unreachable!(),
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, x);
            match f {
                Func::Sin => v.sin_cos().0,
                Func::Cos => v.sin_cos().1,
                Func::Tan => {
                    let (s, c) = v.sin_cos();
                    &s / &c
                }
                Func::Exp => v.exp(),
                Func::Ln => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Sinh => v.sinh_cosh().0,
                Func::Cosh => v.sinh_cosh().1,
                Func::Tanh => v.tanh(),
                Func::Atan => v.atan(),
            }
        }
    }
}

fn constant_value(node: &Node) -> Option<f64> {
    match node {
        Node::Num(v) => Some(*v),
        Node::Neg(a) => constant_value(a).map(|v| -v),
        _ => None,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Expression {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match name {
                    "y" => Ok(Node::Var),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => {
                        let func = Func::lookup(name).ok_or_else(|| Error::Expression {
                            pos: start,
                            msg: format!("unknown identifier `{name}`"),
                        })?;
                        if self.peek() != Some(b'(') {
                            return Err(self.error("expected `(` after function name"));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        if self.peek() != Some(b')') {
                            return Err(self.error("expected `)`"));
                        }
                        self.pos += 1;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // exponent part
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| Error::Expression {
                pos: start,
                msg: format!("bad number `{text}`"),
            })
    }
}
