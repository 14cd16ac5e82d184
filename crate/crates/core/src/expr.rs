//! Arithmetic expressions over window variables `x1..xk`, used by
//! `custom-expression` block codes.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numeric literals,
//! variables `x1..xk` and the functions `abs sqrt exp ln sin cos tanh sign
//! floor min max`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    arity: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tanh,
    Sign,
    Floor,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "abs" => (Func::Abs, 1),
            "sqrt" => (Func::Sqrt, 1),
            "exp" => (Func::Exp, 1),
            "ln" => (Func::Ln, 1),
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tanh" => (Func::Tanh, 1),
            "sign" => (Func::Sign, 1),
            "floor" => (Func::Floor, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' | '\t' | '\n' => i += 1,
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(ch));
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| Error::Expression(format!("bad number literal `{text}`")))?;
                out.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(Error::Expression(format!("unexpected character `{other}` at offset {i}")))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    arity: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Expression(format!("expected {want:?}, found {other:?}"))),
        }
    }

    // sum := product (('+' | '-') product)*
    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // product := unary (('*' | '/') unary)*
    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Node> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if let Some(Token::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    // power := atom ('^' unary)?   (right associative)
    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Num(v)),
            Some(Token::LParen) => {
                let inner = self.sum()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some((func, nargs)) = Func::lookup(&name) {
                    self.expect(Token::LParen)?;
                    let mut args = vec![self.sum()?];
                    while let Some(Token::Comma) = self.peek() {
                        self.pos += 1;
                        args.push(self.sum()?);
                    }
                    self.expect(Token::RParen)?;
                    if args.len() != nargs {
                        return Err(Error::Expression(format!(
                            "`{name}` takes {nargs} argument(s), got {}",
                            args.len()
                        )));
                    }
                    return Ok(Node::Call(func, args));
                }
                if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                    if idx == 0 || idx > self.arity {
                        return Err(Error::Expression(format!(
                            "variable `{name}` out of range x1..x{}",
                            self.arity
                        )));
                    }
                    return Ok(Node::Var(idx - 1));
                }
                Err(Error::Expression(format!("unknown identifier `{name}`")))
            }
            other => Err(Error::Expression(format!("unexpected token {other:?}"))),
        }
    }
}

impl Expr {
    /// Parses `src` as a function of `arity` window variables.
    pub fn parse(src: &str, arity: usize) -> Result<Self> {
        let tokens = tokenize(src)?;
        if tokens.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let mut parser = Parser { tokens, pos: 0, arity };
        let root = parser.sum()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Expression(format!(
                "trailing input after token {}",
                parser.pos
            )));
        }
        Ok(Expr { root, arity })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        eval_node(&self.root, x)
    }
}

fn eval_node(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Neg(inner) => -eval_node(inner, x),
        Node::Bin(op, l, r) => {
            let (l, r) = (eval_node(l, x), eval_node(r, x));
            match op {
                Op::Add => l + r,
                Op::Sub => l - r,
                Op::Mul => l * r,
                Op::Div => l / r,
                Op::Pow => l.powf(r),
            }
        }
        Node::Call(func, args) => {
            let a = eval_node(&args[0], x);
            match func {
                Func::Abs => a.abs(),
                Func::Sqrt => a.sqrt(),
                Func::Exp => a.exp(),
                Func::Ln => a.ln(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tanh => a.tanh(),
                Func::Sign => {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Func::Floor => a.floor(),
                Func::Min => a.min(eval_node(&args[1], x)),
                Func::Max => a.max(eval_node(&args[1], x)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("x1 - x2 * 2 ^ 2 ^ 1 + -x3", 3).unwrap();
        assert_eq!(e.eval(&[10.0, 1.0, 3.0]), 10.0 - 4.0 - 3.0);
        let e = Expr::parse("(x1 - x2) / 2", 2).unwrap();
        assert_eq!(e.eval(&[3.0, 1.0]), 1.0);
        let e = Expr::parse("-2^2", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), -4.0);
    }

    #[test]
    fn functions() {
        let e = Expr::parse("max(abs(x1), 1.5e0) + min(x2, sqrt(4))", 2).unwrap();
        assert_eq!(e.eval(&[-3.0, 5.0]), 5.0);
        let e = Expr::parse("sign(x1) * floor(x2)", 2).unwrap();
        assert_eq!(e.eval(&[-0.5, 2.7]), -2.0);
    }

    #[test]
    fn errors() {
        assert!(Expr::parse("x3", 2).is_err());
        assert!(Expr::parse("x0", 2).is_err());
        assert!(Expr::parse("foo(x1)", 1).is_err());
        assert!(Expr::parse("x1 +", 1).is_err());
        assert!(Expr::parse("(x1", 1).is_err());
        assert!(Expr::parse("max(x1)", 1).is_err());
        assert!(Expr::parse("x1 x2", 2).is_err());
        assert!(Expr::parse("", 2).is_err());
        assert!(Expr::parse("x1 $ 2", 1).is_err());
    }
}
