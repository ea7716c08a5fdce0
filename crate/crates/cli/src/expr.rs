//! Boundary-function expressions over `x ∈ [0, 1)`.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '·' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'x' | 'pi' | 'π' | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at position {position} in {source_text:?}")]
pub struct ExprError {
    /// 1-based character position.
    pub position: usize,
    pub message: String,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
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
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
}

/// A parsed expression; keeps its source text for display and serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    text: String,
    root: Node,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let mut p = Parser {
            chars: text.chars().collect(),
            pos: 0,
            text,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.error(format!("unexpected {:?}", p.chars[p.pos])));
        }
        Ok(Self {
            text: text.to_string(),
            root,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval(&self.root, x)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn eval(node: &Node, x: f64) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::X => x,
        Node::Neg(a) => -eval(a, x),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
            }
        }
        Node::Call(Func::Sin, a) => eval(a, x).sin(),
        Node::Call(Func::Cos, a) => eval(a, x).cos(),
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn error(&self, message: String) -> ExprError {
        ExprError {
            position: self.pos + 1,
            message,
            source_text: self.text.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '·' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '/' { Op::Div } else { Op::Mul };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression".into())),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some('π') => {
                self.pos += 1;
                Ok(Node::Num(std::f64::consts::PI))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() => {
                let start = self.pos;
                while self.chars.get(self.pos).is_some_and(|c| c.is_alphanumeric()) {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "x" => Ok(Node::X),
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "sin" | "cos" => {
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        let f = if word == "sin" { Func::Sin } else { Func::Cos };
                        Ok(Node::Call(f, Box::new(arg)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(format!("unknown identifier {word:?}")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected {c:?}"))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.chars.get(p.pos).is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = mark;
            }
        }
        let lexeme: String = self.chars[start..self.pos].iter().collect();
        lexeme.parse().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error(format!("malformed number {lexeme:?}"))
        })
    }

    fn expect(&mut self, want: char) -> Result<(), ExprError> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected {want:?}, found {c:?}"))),
            None => Err(self.error(format!("expected {want:?}, found end of expression"))),
        }
    }
}
