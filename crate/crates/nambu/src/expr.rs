//! Scalar expression language over a phase space.
//!
//! Grammar (EBNF; whitespace is insignificant between tokens):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = factor { ("*" | "/") factor } ;
//! factor  = "-" factor | power ;
//! power   = atom [ "^" factor ] ;
//! atom    = number | name | name "(" expr { "," expr } ")" | "(" expr ")" ;
//! number  = digits [ "." digits ] [ ("e" | "E") ["+" | "-"] digits ] ;
//! name    = (letter | "_") { letter | digit | "_" } ;
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-x^2`
//! is `-(x^2)` and `x^2^3` is `x^(2^3)`; a signed exponent like `x^-2`
//! parses because the exponent position recurses through `factor`.
//!
//! Names resolve against the owning space's coordinates first, then against
//! the parameter map supplied to [`Expression::parse`]. Parameters are bound
//! at parse time — the resulting AST contains only literals and coordinate
//! references, so an `Expression` is a pure function of the state. A name
//! directly followed by `(` must be one of the built-in functions:
//! `sin cos tan sqrt abs atan2 exp log pow`.
//!
//! Parse errors carry a byte offset into the source text.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::space::PhaseSpace;

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
    Tan,
    Sqrt,
    Abs,
    Atan2,
    Exp,
    Log,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan2" => Func::Atan2,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan2 => "atan2",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Pow => "pow",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Func::Atan2 | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Literal(f64),
    Coord(usize),
    Neg(Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Vec<Ast>),
}

/// A parsed expression bound to a phase space. Parameters were inlined at
/// parse time; evaluation depends only on the state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    space: PhaseSpace,
    ast: Ast,
}

impl Expression {
    pub fn parse(
        source: &str,
        space: &PhaseSpace,
        params: &BTreeMap<String, f64>,
    ) -> Result<Expression> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            space,
            params,
            src_len: source.len(),
        };
        let ast = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(Error::Parse {
                message: format!("unexpected {}", tok.kind.describe()),
                position: tok.offset,
            });
        }
        Ok(Expression {
            space: space.clone(),
            ast,
        })
    }

    pub fn space(&self) -> &PhaseSpace {
        &self.space
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    /// Evaluates at `x`. Non-finite results (division by zero, `log` of a
    /// non-positive value, overflow, ...) are reported as
    /// [`Error::Singular`], never returned as NaN or infinity.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.space.check_state(x)?;
        let v = eval_ast(&self.ast, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Singular(format!(
                "expression `{}` evaluated to {v} at {x:?}",
                self
            )))
        }
    }

    /// Renders the expression as text that re-parses to an AST with identical
    /// evaluation order (so re-parsing evaluates bit-for-bit identically).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        print_ast(&self.ast, &self.space, 0, &mut out);
        out
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn eval_ast(ast: &Ast, x: &[f64]) -> f64 {
    match ast {
        Ast::Literal(v) => *v,
        Ast::Coord(i) => x[*i],
        Ast::Neg(a) => -eval_ast(a, x),
        Ast::Binary(op, a, b) => {
            let a = eval_ast(a, x);
            let b = eval_ast(b, x);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => pow(a, b),
            }
        }
        Ast::Call(f, args) => {
            let a = eval_ast(&args[0], x);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Atan2 => a.atan2(eval_ast(&args[1], x)),
                Func::Pow => pow(a, eval_ast(&args[1], x)),
            }
        }
    }
}

/// Integer exponents use `powi` so that e.g. `x^2` of a negative `x` is exact;
/// everything else goes through `powf`.
fn pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

// ── printer ─────────────────────────────────────────────────────────────────

// Precedence levels used when deciding parentheses: Add/Sub = 1, Mul/Div = 2,
// Neg = 3, Pow = 4, atoms = 5. A child is parenthesized when its level is
// below what its position requires, which is exactly the condition for the
// printed text to re-parse into the same tree shape (left-associative chains
// stay left-associative, `a+(b+c)` keeps its parentheses, and so on).
fn level(ast: &Ast) -> u8 {
    match ast {
        // A negative literal prints with a leading minus, so treat it like Neg.
        Ast::Literal(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
        Ast::Literal(_) | Ast::Coord(_) | Ast::Call(..) => 5,
        Ast::Neg(_) => 3,
        Ast::Binary(BinOp::Pow, ..) => 4,
        Ast::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Ast::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
    }
}

fn print_ast(ast: &Ast, space: &PhaseSpace, min_level: u8, out: &mut String) {
    let needs_parens = level(ast) < min_level;
    if needs_parens {
        out.push('(');
    }
    match ast {
        Ast::Literal(v) => {
            // `{:?}` is the shortest representation that re-parses to the
            // same f64.
            out.push_str(&format!("{v:?}"));
        }
        Ast::Coord(i) => out.push_str(space.name(*i)),
        Ast::Neg(a) => {
            out.push('-');
            print_ast(a, space, 3, out);
        }
        Ast::Binary(op, a, b) => {
            let (sym, la, lb) = match op {
                BinOp::Add => ("+", 1, 2),
                BinOp::Sub => ("-", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                // The base of `^` must be an atom; the exponent re-parses at
                // factor level, so unary minus there stays unparenthesized.
                BinOp::Pow => ("^", 5, 3),
            };
            print_ast(a, space, la, out);
            out.push_str(sym);
            print_ast(b, space, lb, out);
        }
        Ast::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                print_ast(arg, space, 0, out);
            }
            out.push(')');
        }
    }
    if needs_parens {
        out.push(')');
    }
}

// ── tokenizer ───────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number `{v}`"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let offset = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                let kind = match c {
                    b'+' => TokenKind::Plus,
                    b'-' => TokenKind::Minus,
                    b'*' => TokenKind::Star,
                    b'/' => TokenKind::Slash,
                    b'^' => TokenKind::Caret,
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                out.push(Token { kind, offset });
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(Error::Parse {
                            message: "expected digits after decimal point".into(),
                            position: i.min(bytes.len()),
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Parse {
                    message: format!("invalid number `{text}`"),
                    position: start,
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        message: format!("number `{text}` overflows f64"),
                        position: start,
                    });
                }
                out.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
            }
            b'_' | b'a'..=b'z' | b'A'..=b'Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(Error::Parse {
                    message: format!(
                        "unexpected character `{}`",
                        src[i..].chars().next().unwrap()
                    ),
                    position: i,
                });
            }
        }
    }
    Ok(out)
}

// ── parser ──────────────────────────────────────────────────────────────────

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    space: &'a PhaseSpace,
    params: &'a BTreeMap<String, f64>,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn end_offset(&self) -> usize {
        self.src_len
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                let rhs = self.term()?;
                lhs = Ast::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(&TokenKind::Minus) {
                let rhs = self.term()?;
                lhs = Ast::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(&TokenKind::Star) {
                let rhs = self.factor()?;
                lhs = Ast::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(&TokenKind::Slash) {
                let rhs = self.factor()?;
                lhs = Ast::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Ast> {
        if self.eat(&TokenKind::Minus) {
            let inner = self.factor()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exp = self.factor()?;
            return Ok(Ast::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast> {
        let Some(tok) = self.next().cloned() else {
            return Err(Error::Parse {
                message: "expected expression, found end of input".into(),
                position: self.end_offset(),
            });
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Ast::Literal(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(self.expected("`)`"));
                }
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if self.peek().map(|t| &t.kind) == Some(&TokenKind::LParen) {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(Error::Parse {
                            message: format!("unknown function `{name}`"),
                            position: tok.offset,
                        });
                    };
                    self.pos += 1; // consume `(`
                    let mut args = vec![self.expr()?];
                    while self.eat(&TokenKind::Comma) {
                        args.push(self.expr()?);
                    }
                    if !self.eat(&TokenKind::RParen) {
                        return Err(self.expected("`)`"));
                    }
                    if args.len() != func.arity() {
                        return Err(Error::Parse {
                            message: format!(
                                "`{name}` takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                            position: tok.offset,
                        });
                    }
                    Ok(Ast::Call(func, args))
                } else if let Some(i) = self.space.index_of(&name) {
                    Ok(Ast::Coord(i))
                } else if let Some(v) = self.params.get(&name) {
                    Ok(Ast::Literal(*v))
                } else {
                    Err(Error::Parse {
                        message: format!(
                            "unknown identifier `{name}` (not a coordinate or parameter)"
                        ),
                        position: tok.offset,
                    })
                }
            }
            other => Err(Error::Parse {
                message: format!("expected expression, found {}", other.describe()),
                position: tok.offset,
            }),
        }
    }

    fn expected(&self, what: &str) -> Error {
        match self.peek() {
            Some(t) => Error::Parse {
                message: format!("expected {what}, found {}", t.kind.describe()),
                position: t.offset,
            },
            None => Error::Parse {
                message: format!("expected {what}, found end of input"),
                position: self.end_offset(),
            },
        }
    }
}
