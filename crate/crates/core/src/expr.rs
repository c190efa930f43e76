//! Small arithmetic expression language for coefficients and loads.
//!
//! Supports numbers, `+ - * / ^`, parentheses, the constants `pi` and `e`,
//! the variables `x`, `y` (coordinates), `s` (boundary arc length) and `q`
//! (the Laplace–Beltrami weight), and the functions
//! `sin cos tan atan arctan exp sqrt ln abs`.

use std::fmt;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vars {
    pub x: f64,
    pub y: f64,
    pub s: f64,
    pub q: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Sqrt,
    Ln,
    Abs,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" | "arctan" => Func::Atan,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "ln" | "log" => Func::Ln,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Atan => v.atan(),
            Func::Exp => v.exp(),
            Func::Sqrt => v.sqrt(),
            Func::Ln => v.ln(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    X,
    Y,
    S,
    Q,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, v: &Vars) -> f64 {
        match self {
            Node::Num(c) => *c,
            Node::Var(Var::X) => v.x,
            Node::Var(Var::Y) => v.y,
            Node::Var(Var::S) => v.s,
            Node::Var(Var::Q) => v.q,
            Node::Neg(a) => -a.eval(v),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(v)),
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            Node::Num(_) => true,
            Node::Var(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.is_constant(),
            Node::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

/// A parsed expression; keeps its source text for display and
/// serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser {
            src: source,
            chars: source.char_indices().collect(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error(format!("unexpected `{}`", p.chars[p.pos].1)));
        }
        Ok(Self {
            source: source.to_string(),
            root,
        })
    }

    pub fn eval(&self, vars: &Vars) -> f64 {
        self.root.eval(vars)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Whether the expression involves no variables.
    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: String) -> Error {
        let col = self.pos + 1;
        Error::Expr {
            source_text: self.src.to_string(),
            message: format!("{message} at column {col}"),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression".into())),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].1.is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
                match name.as_str() {
                    "x" => Ok(Node::Var(Var::X)),
                    "y" => Ok(Node::Var(Var::Y)),
                    "s" => Ok(Node::Var(Var::S)),
                    "q" => Ok(Node::Var(Var::Q)),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => {
                        let Some(func) = Func::lookup(&name) else {
                            self.pos = start;
                            return Err(self.error(format!("unknown name `{name}`")));
                        };
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let at = |p: &Self, i: usize| p.chars.get(i).map(|c| c.1);
        while matches!(at(self, self.pos), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(at(self, self.pos), Some('e' | 'E'))
            && matches!(at(self, self.pos + 1), Some(c) if c.is_ascii_digit() || c == '-' || c == '+')
        {
            self.pos += 2;
            while matches!(at(self, self.pos), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
        text.parse::<f64>().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error(format!("bad number `{text}`"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> f64 {
        Expr::parse(s).unwrap().eval(&Vars {
            x: 0.5,
            y: 2.0,
            s: 3.0,
            q: 0.25,
        })
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2 * 3"), 7.0);
        assert_eq!(ev("(1 + 2) * 3"), 9.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("8 / 4 / 2"), 1.0);
        assert_eq!(ev("1.5e2 + 2E-1"), 150.2);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("x + y + s + q"), 5.75);
        assert!((ev("1 + tan(1/2)") - (1.0 + 0.5f64.tan())).abs() < 1e-15);
        assert!((ev("cos(x - 1/2)") - 1.0).abs() < 1e-15);
        assert!((ev("arctan(1) * 4 - pi")).abs() < 1e-15);
        assert!((ev("ln(e)") - 1.0).abs() < 1e-15);
        assert_eq!(ev("sqrt(abs(-16))"), 4.0);
    }

    #[test]
    fn errors_point_at_column() {
        let err = Expr::parse("1 + foo(2)").unwrap_err().to_string();
        assert!(err.contains("unknown name `foo`") && err.contains("column 5"), "{err}");
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn constant_detection() {
        assert!(Expr::parse("2*cos(1/2) - tan(1/2)").unwrap().is_constant());
        assert!(!Expr::parse("x^2").unwrap().is_constant());
    }
}
