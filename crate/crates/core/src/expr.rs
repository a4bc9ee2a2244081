//! A small expression language for user supplied maps and potentials.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'k' | 'pi' | 'e' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := log | ln | exp | sqrt | abs | floor | pow | mod | min | max
//! ```
//!
//! `x` is the spatial variable and `k` the edge index.

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    K,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
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
    Log,
    Exp,
    Sqrt,
    Abs,
    Floor,
    Pow,
    Mod,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "log" | "ln" => (Func::Log, 1),
            "exp" => (Func::Exp, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "floor" => (Func::Floor, 1),
            "pow" => (Func::Pow, 2),
            "mod" => (Func::Mod, 2),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

/// A parsed expression in the variables `x` and `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!("unexpected {:?} in '{source}'", p.tokens[p.pos])));
        }
        Ok(Expr { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True if the expression mentions `x`.
    pub fn uses_x(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::X => true,
                Node::Num(_) | Node::K => false,
                Node::Neg(a) => walk(a),
                Node::Bin(_, a, b) => walk(a) || walk(b),
                Node::Call(_, args) => args.iter().any(walk),
            }
        }
        walk(&self.root)
    }

    pub fn eval(&self, x: f64, k: f64) -> f64 {
        eval(&self.root, x, k)
    }

    /// Interval extension in `x` for a fixed edge index.
    pub fn eval_interval(&self, x: Interval, k: f64) -> Interval {
        eval_iv(&self.root, x, k)
    }
}

fn eval(n: &Node, x: f64, k: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::X => x,
        Node::K => k,
        Node::Neg(a) => -eval(a, x, k),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, k), eval(b, x, k));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => a.powf(b),
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], x, k);
            let b = args.get(1).map(|n| eval(n, x, k)).unwrap_or(f64::NAN);
            match f {
                Func::Log => a.ln(),
                Func::Exp => a.exp(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Floor => a.floor(),
                Func::Pow => a.powf(b),
                Func::Mod => a.rem_euclid(b),
                Func::Min => a.min(b),
                Func::Max => a.max(b),
            }
        }
    }
}

fn eval_iv(n: &Node, x: Interval, k: f64) -> Interval {
    match n {
        Node::Num(v) => Interval::point(*v),
        Node::X => x,
        Node::K => Interval::point(k),
        Node::Neg(a) => -eval_iv(a, x, k),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval_iv(a, x, k), eval_iv(b, x, k));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => pow_iv(a, b),
            }
        }
        Node::Call(f, args) => {
            let a = eval_iv(&args[0], x, k);
            let b = args.get(1).map(|n| eval_iv(n, x, k)).unwrap_or(Interval::point(f64::NAN));
            match f {
                Func::Log => a.ln(),
                Func::Exp => a.exp(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Floor => Interval::new(a.lo.floor(), a.hi.floor()),
                Func::Pow => pow_iv(a, b),
                Func::Mod => {
                    if a.width() == 0.0 && b.width() == 0.0 {
                        Interval::point(a.lo.rem_euclid(b.lo))
                    } else {
                        let m = b.lo.abs().max(b.hi.abs());
                        Interval::new(0.0, m)
                    }
                }
                Func::Min => Interval::new(a.lo.min(b.lo), a.hi.min(b.hi)),
                Func::Max => Interval::new(a.lo.max(b.lo), a.hi.max(b.hi)),
            }
        }
    }
}

fn pow_iv(a: Interval, b: Interval) -> Interval {
    if b.width() == 0.0 {
        return a.powf(b.lo);
    }
    if a.lo > 0.0 {
        // a^b = exp(b ln a)
        return (b * a.ln()).exp();
    }
    Interval { lo: f64::NAN, hi: f64::NAN }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
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
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Expression(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Expression("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::X),
                "k" => Ok(Node::K),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "e" => Ok(Node::Num(std::f64::consts::E)),
                _ => {
                    let (f, arity) = Func::lookup(&name)
                        .ok_or_else(|| Error::Expression(format!("unknown identifier '{name}'")))?;
                    self.expect('(')?;
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != arity {
                        return Err(Error::Expression(format!(
                            "{name} takes {arity} argument(s), got {}",
                            args.len()
                        )));
                    }
                    Ok(Node::Call(f, args))
                }
            },
            Tok::Sym(c) => Err(Error::Expression(format!("unexpected '{c}'"))),
        }
    }
}
