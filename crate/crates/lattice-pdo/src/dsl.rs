//! Small expression language for entering symbols, amplitudes and torus
//! functions from the command line and config files.
//!
//! Grammar (standard precedence, `^` > unary `-` > `*` `/` > `+` `-`, binary
//! operators left associative, `^` takes an integer literal exponent):
//!
//! ```text
//! expr   := term  (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] integer)*
//! atom   := number | identifier | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers: `i`, `pi`, `hbar`, the variable families `k1..kn`,
//! `l1..ln`, `theta1..thetan`, the scaled norms `absk`, `absl`, the
//! functions `sin`, `cos`, `exp`, `sqrt`, `sqnorm(k)`/`sqnorm(l)`; any other
//! name is a parameter to be bound at evaluation time.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{LatticeModel, TorusFunction};
use crate::symbol::{Amplitude, Symbol, SymbolStructure};

pub const DIVISION_GUARD: f64 = 1e-14;

/// Variable families addressable in expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    K,
    L,
    Theta,
}

impl Family {
    fn prefix(self) -> &'static str {
        match self {
            Family::K => "k",
            Family::L => "l",
            Family::Theta => "theta",
        }
    }
}

/// Single-argument built-in functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Abstract syntax tree of a symbol expression.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolExpr {
    Number(f64),
    ImaginaryUnit,
    Pi,
    Hbar,
    /// Variable `family{axis+1}`, axis stored 0-based.
    Var(Family, usize),
    AbsK,
    AbsL,
    /// Free named parameter, bound at evaluation time.
    Param(String),
    Neg(Box<SymbolExpr>),
    Add(Box<SymbolExpr>, Box<SymbolExpr>),
    Sub(Box<SymbolExpr>, Box<SymbolExpr>),
    Mul(Box<SymbolExpr>, Box<SymbolExpr>),
    Div(Box<SymbolExpr>, Box<SymbolExpr>),
    /// Integer power; the restriction keeps evaluation single-valued.
    Pow(Box<SymbolExpr>, i32),
    Call(Func, Box<SymbolExpr>),
    /// `sqnorm(k)` or `sqnorm(l)`: squared scaled Euclidean norm.
    SqNorm(Family),
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ParseError {
    #[error("parse error at byte {offset}: {message} (expected {}) in `{line}`", expected.join(", "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<&'static str>,
        line: String,
    },
    #[error("arity error at byte {offset}: `{name}` takes exactly one argument in `{line}`")]
    Arity {
        offset: usize,
        name: String,
        line: String,
    },
    #[error("unknown identifier `{name}` at byte {offset} in `{line}`")]
    UnknownIdentifier {
        offset: usize,
        name: String,
        line: String,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error("division by a value with modulus < {DIVISION_GUARD:.0e}{location}")]
    DivisionNearZero { location: String },
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable `{var}` exceeds the model dimension {dim}")]
    AxisOutOfRange { var: String, dim: usize },
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> std::result::Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = self.bytes[self.pos];
        let tok = match c {
            b'+' => { self.pos += 1; Tok::Plus }
            b'-' => { self.pos += 1; Tok::Minus }
            b'*' => { self.pos += 1; Tok::Star }
            b'/' => { self.pos += 1; Tok::Slash }
            b'^' => { self.pos += 1; Tok::Caret }
            b'(' => { self.pos += 1; Tok::LParen }
            b')' => { self.pos += 1; Tok::RParen }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.bytes.len()
                    && (self.bytes[end].is_ascii_digit() || self.bytes[end] == b'.')
                {
                    end += 1;
                }
                // optional exponent part
                if end < self.bytes.len() && (self.bytes[end] == b'e' || self.bytes[end] == b'E') {
                    let mut probe = end + 1;
                    if probe < self.bytes.len()
                        && (self.bytes[probe] == b'+' || self.bytes[probe] == b'-')
                    {
                        probe += 1;
                    }
                    if probe < self.bytes.len() && self.bytes[probe].is_ascii_digit() {
                        end = probe;
                        while end < self.bytes.len() && self.bytes[end].is_ascii_digit() {
                            end += 1;
                        }
                    }
                }
                let text = &self.src[self.pos..end];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: self.pos,
                    message: format!("malformed number `{text}`"),
                    expected: vec!["number"],
                    line: self.src.to_string(),
                })?;
                self.pos = end;
                Tok::Num(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.bytes.len()
                    && (self.bytes[end].is_ascii_alphanumeric() || self.bytes[end] == b'_')
                {
                    end += 1;
                }
                let text = self.src[self.pos..end].to_string();
                self.pos = end;
                Tok::Ident(text)
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    message: format!("unexpected character `{}`", c as char),
                    expected: vec!["number", "identifier", "operator", "(", ")"],
                    line: self.src.to_string(),
                })
            }
        };
        Ok((tok, start))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a str,
    lexer: Lexer<'a>,
    current: Tok,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> std::result::Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let (current, offset) = lexer.next_token()?;
        Ok(Self { src, lexer, current, offset })
    }

    fn bump(&mut self) -> std::result::Result<(), ParseError> {
        let (tok, offset) = self.lexer.next_token()?;
        self.current = tok;
        self.offset = offset;
        Ok(())
    }

    fn syntax(&self, message: impl Into<String>, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset,
            message: message.into(),
            expected,
            line: self.src.to_string(),
        }
    }

    fn parse_expr(&mut self) -> std::result::Result<SymbolExpr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.current {
                Tok::Plus => {
                    self.bump()?;
                    let rhs = self.parse_term()?;
                    lhs = SymbolExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump()?;
                    let rhs = self.parse_term()?;
                    lhs = SymbolExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> std::result::Result<SymbolExpr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.current {
                Tok::Star => {
                    self.bump()?;
                    let rhs = self.parse_unary()?;
                    lhs = SymbolExpr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump()?;
                    let rhs = self.parse_unary()?;
                    lhs = SymbolExpr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> std::result::Result<SymbolExpr, ParseError> {
        if self.current == Tok::Minus {
            self.bump()?;
            let inner = self.parse_unary()?;
            Ok(SymbolExpr::Neg(Box::new(inner)))
        } else {
            self.parse_power()
        }
    }

    fn parse_power(&mut self) -> std::result::Result<SymbolExpr, ParseError> {
        let mut base = self.parse_atom()?;
        while self.current == Tok::Caret {
            self.bump()?;
            let mut sign = 1i32;
            if self.current == Tok::Minus {
                sign = -1;
                self.bump()?;
            }
            let exponent = match self.current {
                Tok::Num(v) => {
                    if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                        return Err(self.syntax(
                            format!("exponent must be an integer literal, got `{v}`"),
                            vec!["integer"],
                        ));
                    }
                    v as i32
                }
                _ => {
                    return Err(
                        self.syntax("exponent must be an integer literal", vec!["integer"])
                    )
                }
            };
            self.bump()?;
            base = SymbolExpr::Pow(Box::new(base), sign * exponent);
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> std::result::Result<SymbolExpr, ParseError> {
        match self.current.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(SymbolExpr::Number(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.parse_expr()?;
                if self.current != Tok::RParen {
                    return Err(self.syntax("unbalanced parenthesis", vec![")"]));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let ident_offset = self.offset;
                self.bump()?;
                if self.current == Tok::LParen {
                    self.parse_call(&name, ident_offset)
                } else {
                    self.resolve_ident(&name, ident_offset)
                }
            }
            Tok::End => Err(self.syntax(
                "unexpected end of input",
                vec!["number", "identifier", "(", "-"],
            )),
            _ => Err(self.syntax(
                "expected a value",
                vec!["number", "identifier", "(", "-"],
            )),
        }
    }

    fn parse_call(
        &mut self,
        name: &str,
        ident_offset: usize,
    ) -> std::result::Result<SymbolExpr, ParseError> {
        // current token is '('
        self.bump()?;
        if name == "sqnorm" {
            let family = match &self.current {
                Tok::Ident(arg) if arg == "k" => Family::K,
                Tok::Ident(arg) if arg == "l" => Family::L,
                _ => {
                    return Err(ParseError::Arity {
                        offset: ident_offset,
                        name: "sqnorm (argument must be `k` or `l`)".into(),
                        line: self.src.to_string(),
                    })
                }
            };
            self.bump()?;
            if self.current != Tok::RParen {
                return Err(self.syntax("unbalanced parenthesis", vec![")"]));
            }
            self.bump()?;
            return Ok(SymbolExpr::SqNorm(family));
        }
        let func = match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    offset: ident_offset,
                    name: name.to_string(),
                    line: self.src.to_string(),
                })
            }
        };
        let arg = self.parse_expr()?;
        if self.current != Tok::RParen {
            return Err(self.syntax("unbalanced parenthesis", vec![")"]));
        }
        self.bump()?;
        Ok(SymbolExpr::Call(func, Box::new(arg)))
    }

    fn resolve_ident(
        &self,
        name: &str,
        offset: usize,
    ) -> std::result::Result<SymbolExpr, ParseError> {
        match name {
            "i" => return Ok(SymbolExpr::ImaginaryUnit),
            "pi" => return Ok(SymbolExpr::Pi),
            "hbar" => return Ok(SymbolExpr::Hbar),
            "absk" => return Ok(SymbolExpr::AbsK),
            "absl" => return Ok(SymbolExpr::AbsL),
            "k" | "l" | "theta" => {
                return Err(ParseError::Syntax {
                    offset,
                    message: format!(
                        "bare `{name}` is only valid inside sqnorm(...); use {name}1..{name}n"
                    ),
                    expected: vec!["indexed variable"],
                    line: self.src.to_string(),
                })
            }
            _ => {}
        }
        for family in [Family::Theta, Family::K, Family::L] {
            let prefix = family.prefix();
            if let Some(digits) = name.strip_prefix(prefix) {
                if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                    let axis: usize = digits.parse().map_err(|_| ParseError::Syntax {
                        offset,
                        message: format!("bad axis index in `{name}`"),
                        expected: vec!["indexed variable"],
                        line: self.src.to_string(),
                    })?;
                    if axis == 0 {
                        return Err(ParseError::Syntax {
                            offset,
                            message: format!("axis indices are 1-based, got `{name}`"),
                            expected: vec!["indexed variable"],
                            line: self.src.to_string(),
                        });
                    }
                    return Ok(SymbolExpr::Var(family, axis - 1));
                }
            }
        }
        Ok(SymbolExpr::Param(name.to_string()))
    }
}

/// Parse an expression from source text.
pub fn parse(src: &str) -> std::result::Result<SymbolExpr, ParseError> {
    let mut parser = Parser::new(src)?;
    let expr = parser.parse_expr()?;
    if parser.current != Tok::End {
        return Err(parser.syntax("trailing input after expression", vec!["end of input"]));
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn precedence(e: &SymbolExpr) -> u8 {
    match e {
        SymbolExpr::Add(..) | SymbolExpr::Sub(..) => 1,
        SymbolExpr::Mul(..) | SymbolExpr::Div(..) => 2,
        SymbolExpr::Neg(..) => 3,
        SymbolExpr::Pow(..) => 4,
        _ => 5,
    }
}

fn print_child(parent: u8, child: &SymbolExpr, right_side: bool, out: &mut String) {
    let cp = precedence(child);
    // Left-associative operators need parentheses on an equal-precedence
    // right child; `^` and unary minus always parenthesize weaker children.
    let need = cp < parent || (right_side && cp == parent);
    if need {
        out.push('(');
    }
    print_into(child, out);
    if need {
        out.push(')');
    }
}

fn print_into(e: &SymbolExpr, out: &mut String) {
    match e {
        SymbolExpr::Number(v) => out.push_str(&format!("{v}")),
        SymbolExpr::ImaginaryUnit => out.push('i'),
        SymbolExpr::Pi => out.push_str("pi"),
        SymbolExpr::Hbar => out.push_str("hbar"),
        SymbolExpr::Var(f, axis) => out.push_str(&format!("{}{}", f.prefix(), axis + 1)),
        SymbolExpr::AbsK => out.push_str("absk"),
        SymbolExpr::AbsL => out.push_str("absl"),
        SymbolExpr::Param(name) => out.push_str(name),
        SymbolExpr::Neg(a) => {
            out.push('-');
            print_child(3, a, false, out);
        }
        SymbolExpr::Add(a, b) => {
            print_child(1, a, false, out);
            out.push_str(" + ");
            print_child(1, b, true, out);
        }
        SymbolExpr::Sub(a, b) => {
            print_child(1, a, false, out);
            out.push_str(" - ");
            print_child(1, b, true, out);
        }
        SymbolExpr::Mul(a, b) => {
            print_child(2, a, false, out);
            out.push('*');
            print_child(2, b, true, out);
        }
        SymbolExpr::Div(a, b) => {
            print_child(2, a, false, out);
            out.push('/');
            print_child(2, b, true, out);
        }
        SymbolExpr::Pow(a, n) => {
            print_child(4, a, false, out);
            out.push('^');
            out.push_str(&format!("{n}"));
        }
        SymbolExpr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            print_into(a, out);
            out.push(')');
        }
        SymbolExpr::SqNorm(f) => {
            out.push_str("sqnorm(");
            out.push_str(f.prefix());
            out.push(')');
        }
    }
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        print_into(self, &mut out);
        f.write_str(&out)
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Values bound to the free identifiers of an expression.
#[derive(Debug, Clone, Default)]
pub struct Bindings<'a> {
    pub hbar: Option<f64>,
    pub k: Option<&'a [f64]>,
    pub l: Option<&'a [f64]>,
    pub theta: Option<&'a [f64]>,
    pub params: Option<&'a HashMap<String, Complex64>>,
}

impl<'a> Bindings<'a> {
    fn family(&self, family: Family) -> Option<&'a [f64]> {
        match family {
            Family::K => self.k,
            Family::L => self.l,
            Family::Theta => self.theta,
        }
    }
}

fn norm_of(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Evaluate an expression under the given bindings. Deterministic standard
/// complex arithmetic; division guards against near-zero denominators.
pub fn evaluate(
    e: &SymbolExpr,
    bindings: &Bindings<'_>,
) -> std::result::Result<Complex64, EvalError> {
    match e {
        SymbolExpr::Number(v) => Ok(Complex64::new(*v, 0.0)),
        SymbolExpr::ImaginaryUnit => Ok(Complex64::I),
        SymbolExpr::Pi => Ok(Complex64::new(std::f64::consts::PI, 0.0)),
        SymbolExpr::Hbar => bindings
            .hbar
            .map(|h| Complex64::new(h, 0.0))
            .ok_or_else(|| EvalError::UnboundIdentifier("hbar".into())),
        SymbolExpr::Var(family, axis) => {
            let slice = bindings
                .family(*family)
                .ok_or_else(|| EvalError::UnboundIdentifier(format!("{}{}", family.prefix(), axis + 1)))?;
            slice.get(*axis).map(|&v| Complex64::new(v, 0.0)).ok_or_else(|| {
                EvalError::AxisOutOfRange {
                    var: format!("{}{}", family.prefix(), axis + 1),
                    dim: slice.len(),
                }
            })
        }
        SymbolExpr::AbsK => bindings
            .k
            .map(|k| Complex64::new(norm_of(k), 0.0))
            .ok_or_else(|| EvalError::UnboundIdentifier("absk".into())),
        SymbolExpr::AbsL => bindings
            .l
            .map(|l| Complex64::new(norm_of(l), 0.0))
            .ok_or_else(|| EvalError::UnboundIdentifier("absl".into())),
        SymbolExpr::SqNorm(family) => {
            let slice = bindings.family(*family).ok_or_else(|| {
                EvalError::UnboundIdentifier(format!("sqnorm({})", family.prefix()))
            })?;
            Ok(Complex64::new(slice.iter().map(|v| v * v).sum(), 0.0))
        }
        SymbolExpr::Param(name) => bindings
            .params
            .and_then(|p| p.get(name))
            .copied()
            .ok_or_else(|| EvalError::UnboundIdentifier(name.clone())),
        SymbolExpr::Neg(a) => Ok(-evaluate(a, bindings)?),
        SymbolExpr::Add(a, b) => Ok(evaluate(a, bindings)? + evaluate(b, bindings)?),
        SymbolExpr::Sub(a, b) => Ok(evaluate(a, bindings)? - evaluate(b, bindings)?),
        SymbolExpr::Mul(a, b) => Ok(evaluate(a, bindings)? * evaluate(b, bindings)?),
        SymbolExpr::Div(a, b) => {
            let num = evaluate(a, bindings)?;
            let den = evaluate(b, bindings)?;
            if den.norm() < DIVISION_GUARD {
                return Err(EvalError::DivisionNearZero { location: String::new() });
            }
            Ok(num / den)
        }
        SymbolExpr::Pow(a, n) => {
            let base = evaluate(a, bindings)?;
            if *n < 0 && base.norm() < DIVISION_GUARD {
                return Err(EvalError::DivisionNearZero { location: String::new() });
            }
            Ok(base.powi(*n))
        }
        SymbolExpr::Call(func, a) => {
            let arg = evaluate(a, bindings)?;
            match func {
                Func::Sin => Ok(arg.sin()),
                Func::Cos => Ok(arg.cos()),
                Func::Exp => Ok(arg.exp()),
                Func::Sqrt => {
                    // Fractional powers are single-valued only on the
                    // nonnegative reals here.
                    if arg.im.abs() > 1e-12 * (1.0 + arg.re.abs()) || arg.re < -1e-12 {
                        return Err(EvalError::Domain(format!(
                            "sqrt is restricted to nonnegative reals, got {arg}"
                        )));
                    }
                    Ok(Complex64::new(arg.re.max(0.0).sqrt(), 0.0))
                }
            }
        }
    }
}

/// Which variable families an expression references.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsedVariables {
    pub uses_k: bool,
    pub uses_l: bool,
    pub uses_theta: bool,
    /// Largest 1-based axis index referenced per family (k, l, theta).
    pub max_axis: [usize; 3],
    pub params: Vec<String>,
}

pub fn used_variables(e: &SymbolExpr) -> UsedVariables {
    let mut used = UsedVariables::default();
    collect_used(e, &mut used);
    used.params.sort();
    used.params.dedup();
    used
}

fn collect_used(e: &SymbolExpr, used: &mut UsedVariables) {
    match e {
        SymbolExpr::Var(family, axis) => {
            let slot = match family {
                Family::K => { used.uses_k = true; 0 }
                Family::L => { used.uses_l = true; 1 }
                Family::Theta => { used.uses_theta = true; 2 }
            };
            used.max_axis[slot] = used.max_axis[slot].max(axis + 1);
        }
        SymbolExpr::AbsK | SymbolExpr::SqNorm(Family::K) => used.uses_k = true,
        SymbolExpr::AbsL | SymbolExpr::SqNorm(Family::L) => used.uses_l = true,
        SymbolExpr::SqNorm(Family::Theta) => used.uses_theta = true,
        SymbolExpr::Param(name) => used.params.push(name.clone()),
        SymbolExpr::Neg(a) | SymbolExpr::Call(_, a) | SymbolExpr::Pow(a, _) => {
            collect_used(a, used)
        }
        SymbolExpr::Add(a, b)
        | SymbolExpr::Sub(a, b)
        | SymbolExpr::Mul(a, b)
        | SymbolExpr::Div(a, b) => {
            collect_used(a, used);
            collect_used(b, used);
        }
        _ => {}
    }
}

/// What a tabulation produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabulateKind {
    Symbol,
    Amplitude,
    Torus,
}

/// Dense tabulation result.
#[derive(Debug)]
pub enum Tabulated {
    Symbol(Symbol),
    Amplitude(Amplitude),
    Torus(TorusFunction),
}

fn check_axes(used: &UsedVariables, model: &LatticeModel) -> Result<()> {
    let n = model.dim();
    for (slot, family) in ["k", "l", "theta"].iter().enumerate() {
        if used.max_axis[slot] > n {
            return Err(Error::Eval(EvalError::AxisOutOfRange {
                var: format!("{family}{}", used.max_axis[slot]),
                dim: n,
            }));
        }
    }
    Ok(())
}

fn located(err: EvalError, k: Option<&[f64]>, l: Option<&[f64]>, theta: &[f64]) -> EvalError {
    if let EvalError::DivisionNearZero { .. } = err {
        let mut loc = String::new();
        if let Some(k) = k {
            loc.push_str(&format!(" at k = {k:?}"));
        }
        if let Some(l) = l {
            loc.push_str(&format!(", l = {l:?}"));
        }
        loc.push_str(&format!(", theta = {theta:?}"));
        EvalError::DivisionNearZero { location: loc }
    } else {
        err
    }
}

/// Dense evaluation over box x grid (symbol), box x box x grid (amplitude)
/// or grid (torus function). Evaluation errors carry the offending
/// coordinates.
pub fn tabulate(
    e: &SymbolExpr,
    model: &LatticeModel,
    kind: TabulateKind,
    params: &HashMap<String, Complex64>,
) -> Result<Tabulated> {
    let used = used_variables(e);
    check_axes(&used, model)?;
    let allowed = match kind {
        TabulateKind::Symbol => !used.uses_l,
        TabulateKind::Amplitude => true,
        TabulateKind::Torus => !used.uses_l && !used.uses_k,
    };
    if !allowed {
        return Err(Error::BadParameter(format!(
            "expression `{e}` uses variables not available for {kind:?} tabulation"
        )));
    }
    let size = model.size();
    let hbar = Some(model.hbar());
    let thetas: Vec<Vec<f64>> = (0..size).map(|t| model.theta(t)).collect();
    match kind {
        TabulateKind::Torus => {
            let mut values = Vec::with_capacity(size);
            for theta in &thetas {
                let b = Bindings {
                    hbar,
                    theta: Some(theta),
                    params: Some(params),
                    ..Default::default()
                };
                values.push(
                    evaluate(e, &b).map_err(|err| located(err, None, None, theta))?,
                );
            }
            Ok(Tabulated::Torus(TorusFunction::from_values(model, values)?))
        }
        TabulateKind::Symbol => {
            let mut table = Vec::with_capacity(size * size);
            for kk in 0..size {
                let kp = model.point(kk);
                for theta in &thetas {
                    let b = Bindings {
                        hbar,
                        k: Some(&kp),
                        theta: Some(theta),
                        params: Some(params),
                        ..Default::default()
                    };
                    table.push(
                        evaluate(e, &b).map_err(|err| located(err, Some(&kp), None, theta))?,
                    );
                }
            }
            let structure = match (used.uses_k, used.uses_theta) {
                (false, _) => SymbolStructure::ThetaOnly,
                (true, false) => SymbolStructure::KOnly,
                (true, true) => SymbolStructure::General,
            };
            Ok(Tabulated::Symbol(Symbol::from_table_with_structure(
                model, table, structure,
            )?))
        }
        TabulateKind::Amplitude => {
            let mut table = Vec::with_capacity(size * size * size);
            for kk in 0..size {
                let kp = model.point(kk);
                for ll in 0..size {
                    let lp = model.point(ll);
                    for theta in &thetas {
                        let b = Bindings {
                            hbar,
                            k: Some(&kp),
                            l: Some(&lp),
                            theta: Some(theta),
                            params: Some(params),
                        };
                        table.push(
                            evaluate(e, &b)
                                .map_err(|err| located(err, Some(&kp), Some(&lp), theta))?,
                        );
                    }
                }
            }
            Ok(Tabulated::Amplitude(Amplitude::from_table(model, table)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::assert_close;

    fn params() -> HashMap<String, Complex64> {
        HashMap::new()
    }

    #[test]
    fn parses_example_symbols() {
        let e = parse("exp(2*pi*i*theta1) - 1").unwrap();
        assert!(matches!(e, SymbolExpr::Sub(..)));
        let e = parse("2*i*(sin(2*pi*theta1)+sin(2*pi*theta2)) + c").unwrap();
        let used = used_variables(&e);
        assert!(used.uses_theta && !used.uses_k);
        assert_eq!(used.params, vec!["c".to_string()]);
    }

    #[test]
    fn reports_offset_of_unbalanced_paren() {
        let err = parse("(1 + ").unwrap_err();
        match err {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_function_and_bad_arity() {
        assert!(matches!(
            parse("foo(theta1)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse("sqnorm(theta1)"), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn rejects_fractional_exponent() {
        assert!(parse("absk^0.5").is_err());
        assert!(parse("absk^2").is_ok());
        assert!(parse("absk^-2").is_ok());
    }

    #[test]
    fn evaluates_basic_arithmetic() {
        let b = Bindings { hbar: Some(0.5), ..Default::default() };
        let v = evaluate(&parse("i*i").unwrap(), &b).unwrap();
        assert_close(v.re, -1.0, 1e-15);
        assert_close(v.im, 0.0, 1e-15);
        let v = evaluate(&parse("hbar^2").unwrap(), &b).unwrap();
        assert_close(v.re, 0.25, 1e-15);
    }

    #[test]
    fn example3_at_origin_gives_constant() {
        let mut p = params();
        p.insert("c".into(), Complex64::new(3.0, 0.0));
        let theta = [0.0, 0.0];
        let b = Bindings {
            hbar: Some(1.0),
            theta: Some(&theta),
            params: Some(&p),
            ..Default::default()
        };
        let e = parse("2*i*(sin(2*pi*theta1)+sin(2*pi*theta2)) + c").unwrap();
        let v = evaluate(&e, &b).unwrap();
        assert_close(v.re, 3.0, 1e-14);
        assert_close(v.im, 0.0, 1e-14);
    }

    #[test]
    fn division_guard_reports() {
        let b = Bindings::default();
        let err = evaluate(&parse("1/(2-2)").unwrap(), &b).unwrap_err();
        assert!(matches!(err, EvalError::DivisionNearZero { .. }));
    }

    #[test]
    fn sqrt_domain_is_nonnegative_reals() {
        let b = Bindings::default();
        assert!(matches!(
            evaluate(&parse("sqrt(0-4)").unwrap(), &b),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            evaluate(&parse("sqrt(i)").unwrap(), &b),
            Err(EvalError::Domain(_))
        ));
        let v = evaluate(&parse("sqrt(9)").unwrap(), &b).unwrap();
        assert_close(v.re, 3.0, 1e-15);
    }

    #[test]
    fn negative_power_of_near_zero_is_guarded() {
        let b = Bindings::default();
        assert!(matches!(
            evaluate(&parse("(1-1)^-2").unwrap(), &b),
            Err(EvalError::DivisionNearZero { .. })
        ));
    }

    #[test]
    fn unbound_parameter_reports() {
        let b = Bindings { hbar: Some(1.0), ..Default::default() };
        let err = evaluate(&parse("2*c").unwrap(), &b).unwrap_err();
        assert!(matches!(err, EvalError::UnboundIdentifier(name) if name == "c"));
    }

    #[test]
    fn evaluation_is_referentially_transparent() {
        let e = parse("sin(2*pi*theta1)/(2 + cos(2*pi*theta1))").unwrap();
        let theta = [0.371];
        let b = Bindings { hbar: Some(0.5), theta: Some(&theta), ..Default::default() };
        let a = evaluate(&e, &b).unwrap();
        let c = evaluate(&e, &b).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn print_parse_roundtrip_is_structural_identity() {
        let sources = [
            "exp(2*pi*i*theta1) - 1",
            "2*i*(sin(2*pi*theta1)+sin(2*pi*theta2)) + c",
            "-(absk^2 + 1)/(2 - theta1)",
            "a - b - c",
            "a - (b - c)",
            "a/(b*c)/d",
            "(1 + absk)^-2 * exp(-2*pi*i*(k1*theta1)/hbar)",
            "sqnorm(k) + sqnorm(l) - absl",
            "1.5e-3 + 2e2*hbar",
        ];
        for src in sources {
            let ast = parse(src).unwrap();
            let printed = ast.to_string();
            let reparsed = parse(&printed).unwrap_or_else(|e| {
                panic!("printed form `{printed}` of `{src}` failed to reparse: {e}")
            });
            assert_eq!(ast, reparsed, "src `{src}` printed `{printed}`");
        }
    }

    #[test]
    fn tabulate_respects_kind_restrictions() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let e = parse("absk*exp(2*pi*i*theta1)").unwrap();
        assert!(tabulate(&e, &model, TabulateKind::Torus, &params()).is_err());
        assert!(tabulate(&e, &model, TabulateKind::Symbol, &params()).is_ok());
        let amp = parse("exp(2*pi*i*theta1)*absl").unwrap();
        assert!(matches!(
            tabulate(&amp, &model, TabulateKind::Amplitude, &params()).unwrap(),
            Tabulated::Amplitude(_)
        ));
    }

    #[test]
    fn tabulate_rejects_axis_beyond_dimension() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let e = parse("theta2").unwrap();
        assert!(tabulate(&e, &model, TabulateKind::Torus, &params()).is_err());
    }

    #[test]
    fn constant_symbol_tabulates_to_ones() {
        let model = LatticeModel::new(1, 0.5, 8).unwrap();
        let e = parse("1").unwrap();
        match tabulate(&e, &model, TabulateKind::Symbol, &params()).unwrap() {
            Tabulated::Symbol(s) => {
                assert!(s.table().iter().all(|v| (v - Complex64::ONE).norm() < 1e-15));
            }
            _ => panic!("expected symbol"),
        }
    }

    #[test]
    fn division_error_carries_grid_location() {
        let model = LatticeModel::new(1, 1.0, 8).unwrap();
        // vanishes at theta = 0
        let e = parse("1/sin(2*pi*theta1)").unwrap();
        let err = tabulate(&e, &model, TabulateKind::Torus, &params()).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("theta"), "message should locate the grid point: {msg}");
    }
}
