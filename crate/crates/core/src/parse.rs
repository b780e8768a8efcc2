//! Text syntax for expressions, vector fields, and catalog templates.
//!
//! Parsing produces a small syntax tree; lowering resolves identifiers
//! against an [`Env`] and builds canonical [`Expr`] values. Templates may use
//! meta variables (`n`, loop indices), building blocks and a few builtins:
//! `fact(k)`, `Dx(e)`, `H(..)`, `E(z)`, `sol(i)` and
//! `sum(e for k in a..b)` / `prod(..)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{factorial, Atom, Expr, Func, Q};
use crate::jet::{self, VectorField, DEFAULT_MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{0}` expects {1} argument(s)")]
    Arity(String, usize),
    #[error("jet order {0} exceeds the maximum {1}")]
    JetOrderExceeded(u32, u32),
    #[error("{0} must evaluate to a constant")]
    NotConstant(&'static str),
    #[error("{0} must be a non-negative integer")]
    NotInteger(&'static str),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0}")]
    Template(String),
    #[error("not a vector field: {0}")]
    NotAField(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} (at byte {offset})")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ErrorKind,
}

fn err<T>(offset: usize, kind: ErrorKind) -> Result<T, ParseError> {
    Err(ParseError { offset, kind })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Primes(u32),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    DotDot,
    End,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((start, Tok::Int(text[start..i].parse().expect("digits"))));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            if word == "y" && i < bytes.len() && bytes[i] == b'\'' {
                let mut k = 0;
                while i < bytes.len() && bytes[i] == b'\'' {
                    k += 1;
                    i += 1;
                }
                out.push((start, Tok::Primes(k)));
            } else {
                out.push((start, Tok::Ident(word.to_string())));
            }
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' if bytes.get(i + 1) == Some(&b'.') => {
                i += 1;
                Tok::DotDot
            }
            _ => return err(start, ErrorKind::Syntax(format!("unexpected character `{c}`"))),
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Syntax tree node with its byte offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Syn {
    pub pos: usize,
    pub kind: SynKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynKind {
    Int(BigInt),
    Ident(String),
    /// `y'`, `y''`, ...
    Jet(u32),
    /// `y^(e)`: a derivative when `e` is a positive integer, else a power.
    YParen(Box<Syn>),
    Neg(Box<Syn>),
    Bin(BinOp, Box<Syn>, Box<Syn>),
    Call(String, Vec<Syn>),
    /// `name(body for var in lo..hi)`.
    Comp { name: String, body: Box<Syn>, range: Range },
    /// `body for var in lo..hi` as one argument among several; expands in place.
    Spread { body: Box<Syn>, range: Range },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub var: String,
    pub lo: Box<Syn>,
    pub hi: Box<Syn>,
}

/// A parsed template: a body with an optional trailing `for k in a..b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub body: Syn,
    pub range: Option<Range>,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn pos(&self) -> usize {
        self.toks[self.i].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            err(self.pos(), ErrorKind::Syntax(format!("expected {what}")))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn sum(&mut self) -> Result<Syn, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.bump().0;
            let rhs = self.product()?;
            lhs = Syn { pos, kind: SynKind::Bin(op, Box::new(lhs), Box::new(rhs)) };
        }
    }

    fn product(&mut self) -> Result<Syn, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let pos = self.bump().0;
            let rhs = self.unary()?;
            lhs = Syn { pos, kind: SynKind::Bin(op, Box::new(lhs), Box::new(rhs)) };
        }
    }

    fn unary(&mut self) -> Result<Syn, ParseError> {
        if *self.peek() == Tok::Minus {
            let pos = self.bump().0;
            let inner = self.unary()?;
            return Ok(Syn { pos, kind: SynKind::Neg(Box::new(inner)) });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Syn, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            let pos = self.bump().0;
            let exp = self.unary()?;
            return Ok(Syn { pos, kind: SynKind::Bin(BinOp::Pow, Box::new(base), Box::new(exp)) });
        }
        Ok(base)
    }

    fn range(&mut self) -> Result<Range, ParseError> {
        // after `for`
        let var = match self.bump() {
            (_, Tok::Ident(v)) => v,
            (p, _) => return err(p, ErrorKind::Syntax("expected loop variable".into())),
        };
        if !self.is_keyword("in") {
            return err(self.pos(), ErrorKind::Syntax("expected `in`".into()));
        }
        self.bump();
        let lo = self.sum()?;
        self.expect(Tok::DotDot, "`..`")?;
        let hi = self.sum()?;
        Ok(Range { var, lo: Box::new(lo), hi: Box::new(hi) })
    }

    fn primary(&mut self) -> Result<Syn, ParseError> {
        let (pos, tok) = self.bump();
        let kind = match tok {
            Tok::Int(v) => SynKind::Int(v),
            Tok::Primes(k) => SynKind::Jet(k),
            Tok::LParen => {
                let inner = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            Tok::Ident(name) => {
                if name == "y" && *self.peek() == Tok::Caret && self.toks[self.i + 1].1 == Tok::LParen {
                    self.bump();
                    self.bump();
                    let inner = self.sum()?;
                    self.expect(Tok::RParen, "`)`")?;
                    SynKind::YParen(Box::new(inner))
                } else if *self.peek() == Tok::LParen {
                    self.bump();
                    let first = self.sum()?;
                    if self.is_keyword("for") {
                        self.bump();
                        let range = self.range()?;
                        self.expect(Tok::RParen, "`)`")?;
                        SynKind::Comp { name, body: Box::new(first), range }
                    } else {
                        let mut args = vec![first];
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            let arg = self.sum()?;
                            if self.is_keyword("for") {
                                let p = self.bump().0;
                                let range = self.range()?;
                                args.push(Syn { pos: p, kind: SynKind::Spread { body: Box::new(arg), range } });
                            } else {
                                args.push(arg);
                            }
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        SynKind::Call(name, args)
                    }
                } else {
                    SynKind::Ident(name)
                }
            }
            Tok::End => return err(pos, ErrorKind::Syntax("unexpected end of input".into())),
            t => return err(pos, ErrorKind::Syntax(format!("unexpected token {t:?}"))),
        };
        Ok(Syn { pos, kind })
    }
}

pub fn parse_template(text: &str) -> Result<Template, ParseError> {
    let mut p = Parser { toks: lex(text)?, i: 0 };
    let body = p.sum()?;
    let range = if p.is_keyword("for") {
        p.bump();
        Some(p.range()?)
    } else {
        None
    };
    if *p.peek() != Tok::End {
        return err(p.pos(), ErrorKind::Syntax("trailing input".into()));
    }
    Ok(Template { body, range })
}

/// Test choices for an arbitrary function `H(a_1, ..., a_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HChoice {
    /// `sum i*a_i`
    Identity,
    /// `(sum i*a_i)^2`
    Square,
    /// `1`
    One,
}

impl HChoice {
    pub const ALL: [HChoice; 3] = [HChoice::Identity, HChoice::Square, HChoice::One];

    pub fn apply(self, args: &[Expr]) -> Expr {
        let lin = || Expr::add_all(args.iter().enumerate().map(|(i, a)| Expr::int(i as i64 + 1) * a));
        match self {
            HChoice::Identity => lin(),
            HChoice::Square => lin().powi(2),
            HChoice::One => Expr::one(),
        }
    }
}

impl fmt::Display for HChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HChoice::Identity => "identity",
            HChoice::Square => "square",
            HChoice::One => "one",
        })
    }
}

/// Identifier bindings used while lowering syntax to expressions.
#[derive(Debug, Clone)]
pub struct Env {
    /// Declared parameters; `None` keeps them symbolic.
    pub params: BTreeMap<String, Option<Q>>,
    /// Meta variables such as `n`, always numeric.
    pub vars: BTreeMap<String, Q>,
    pub blocks: BTreeMap<String, Expr>,
    pub h: HChoice,
    /// Monic characteristic polynomial, highest degree first, for `E(z)`.
    pub operator: Option<Vec<Q>>,
    /// Fundamental solutions for `sol(i)` (1-based).
    pub solutions: Vec<Expr>,
    /// Accept `Dx`, `Dy` as the basis of vector fields.
    pub field_syntax: bool,
    pub max_order: u32,
}

impl Default for Env {
    fn default() -> Self {
        Env {
            params: BTreeMap::new(),
            vars: BTreeMap::new(),
            blocks: BTreeMap::new(),
            h: HChoice::Identity,
            operator: None,
            solutions: Vec::new(),
            field_syntax: false,
            max_order: DEFAULT_MAX_ORDER,
        }
    }
}

const DX: &str = "Dx";
const DY: &str = "Dy";

impl Env {
    /// Environment with symbolic parameters.
    pub fn with_params(names: &[&str]) -> Env {
        Env { params: names.iter().map(|n| (n.to_string(), None)).collect(), ..Env::default() }
    }

    pub fn lower(&self, syn: &Syn) -> Result<Expr, ParseError> {
        let mut scope = Vec::new();
        self.lower_in(syn, &mut scope)
    }

    fn lookup(&self, name: &str, scope: &[(String, Q)]) -> Option<Expr> {
        if let Some((_, v)) = scope.iter().rev().find(|(n, _)| n == name) {
            return Some(Expr::num(v.clone()));
        }
        if let Some(v) = self.vars.get(name) {
            return Some(Expr::num(v.clone()));
        }
        if let Some(p) = self.params.get(name) {
            return Some(match p {
                Some(v) => Expr::num(v.clone()),
                None => Expr::param(name),
            });
        }
        if let Some(b) = self.blocks.get(name) {
            return Some(b.clone());
        }
        match name {
            "x" => Some(Expr::x()),
            "y" => Some(Expr::y()),
            DX | DY if self.field_syntax => Some(Expr::param(name)),
            _ => None,
        }
    }

    fn jet(&self, k: u32, pos: usize) -> Result<Expr, ParseError> {
        if k > self.max_order {
            return err(pos, ErrorKind::JetOrderExceeded(k, self.max_order));
        }
        Ok(Expr::jet(k))
    }

    fn constant(&self, syn: &Syn, scope: &mut Vec<(String, Q)>, what: &'static str) -> Result<Q, ParseError> {
        let v = self.lower_in(syn, scope)?;
        match v.as_num() {
            Some(c) => Ok(c.clone()),
            None => err(syn.pos, ErrorKind::NotConstant(what)),
        }
    }

    fn integer(&self, syn: &Syn, scope: &mut Vec<(String, Q)>, what: &'static str) -> Result<i64, ParseError> {
        let c = self.constant(syn, scope, what)?;
        if !c.is_integer() {
            return err(syn.pos, ErrorKind::NotInteger(what));
        }
        c.to_integer().to_i64().ok_or(ParseError { offset: syn.pos, kind: ErrorKind::NotInteger(what) })
    }

    fn lower_in(&self, syn: &Syn, scope: &mut Vec<(String, Q)>) -> Result<Expr, ParseError> {
        let pos = syn.pos;
        match &syn.kind {
            SynKind::Int(v) => Ok(Expr::num(Q::from_integer(v.clone()))),
            SynKind::Jet(k) => self.jet(*k, pos),
            SynKind::Ident(name) => match self.lookup(name, scope) {
                Some(e) => Ok(e),
                None => err(pos, ErrorKind::UnknownIdentifier(name.clone())),
            },
            SynKind::YParen(inner) => {
                let c = self.constant(inner, scope, "exponent")?;
                if c.is_integer() && c.is_positive() {
                    let k = c.to_integer().to_u32().unwrap_or(u32::MAX);
                    self.jet(k, pos)
                } else {
                    Ok(Expr::y().pow(c))
                }
            }
            SynKind::Neg(inner) => Ok(-self.lower_in(inner, scope)?),
            SynKind::Bin(op, a, b) => {
                let l = self.lower_in(a, scope)?;
                match op {
                    BinOp::Pow => {
                        let c = self.constant(b, scope, "exponent")?;
                        if l.is_zero() && c.is_negative() {
                            return err(pos, ErrorKind::DivisionByZero);
                        }
                        Ok(l.pow(c))
                    }
                    _ => {
                        let r = self.lower_in(b, scope)?;
                        Ok(match op {
                            BinOp::Add => l + r,
                            BinOp::Sub => l - r,
                            BinOp::Mul => l * r,
                            BinOp::Div => {
                                if r.is_zero() {
                                    return err(pos, ErrorKind::DivisionByZero);
                                }
                                l / r
                            }
                            BinOp::Pow => unreachable!(),
                        })
                    }
                }
            }
            SynKind::Call(name, args) => self.call(name, args, pos, scope),
            SynKind::Comp { name, body, range } => {
                let items = self.expand(body, range, scope)?;
                match name.as_str() {
                    "sum" => Ok(Expr::add_all(items)),
                    "prod" => Ok(Expr::mul_all(items)),
                    "H" => Ok(self.h.apply(&items)),
                    _ => err(pos, ErrorKind::UnknownFunction(name.clone())),
                }
            }
            SynKind::Spread { .. } => err(pos, ErrorKind::Syntax("`for` is only allowed inside a call".into())),
        }
    }

    fn expand(&self, body: &Syn, range: &Range, scope: &mut Vec<(String, Q)>) -> Result<Vec<Expr>, ParseError> {
        let lo = self.integer(&range.lo, scope, "range bound")?;
        let hi = self.integer(&range.hi, scope, "range bound")?;
        let mut items = Vec::new();
        for k in lo..=hi {
            scope.push((range.var.clone(), Q::from_integer(k.into())));
            let v = self.lower_in(body, scope);
            scope.pop();
            items.push(v?);
        }
        Ok(items)
    }

    fn call(&self, name: &str, args: &[Syn], pos: usize, scope: &mut Vec<(String, Q)>) -> Result<Expr, ParseError> {
        let arity = |k: usize| -> Result<(), ParseError> {
            if args.len() == k {
                Ok(())
            } else {
                err(pos, ErrorKind::Arity(name.to_string(), k))
            }
        };
        if let Some(f) = Func::from_name(name) {
            arity(1)?;
            return Ok(Expr::func(f, self.lower_in(&args[0], scope)?));
        }
        match name {
            "sqrt" => {
                arity(1)?;
                Ok(Expr::sqrt(self.lower_in(&args[0], scope)?))
            }
            "fact" => {
                arity(1)?;
                let k = self.integer(&args[0], scope, "factorial argument")?;
                if !(0..=1000).contains(&k) {
                    return err(args[0].pos, ErrorKind::NotInteger("factorial argument"));
                }
                Ok(Expr::num(Q::from_integer(factorial(k as u64))))
            }
            "Dx" => {
                arity(1)?;
                let e = self.lower_in(&args[0], scope)?;
                jet::total_derivative(&e, self.max_order)
                    .map_err(|e| ParseError { offset: pos, kind: ErrorKind::Template(e.to_string()) })
            }
            "H" => {
                let mut vals = Vec::new();
                for a in args {
                    match &a.kind {
                        SynKind::Spread { body, range } => vals.extend(self.expand(body, range, scope)?),
                        _ => vals.push(self.lower_in(a, scope)?),
                    }
                }
                Ok(self.h.apply(&vals))
            }
            "E" => {
                arity(1)?;
                let z = self.lower_in(&args[0], scope)?;
                let ops = match &self.operator {
                    Some(c) => c,
                    None => return err(pos, ErrorKind::Template("no characteristic operator bound for E".into())),
                };
                let mut terms = Vec::new();
                let mut d = z;
                for (i, c) in ops.iter().rev().enumerate() {
                    if i > 0 {
                        d = jet::total_derivative(&d, self.max_order)
                            .map_err(|e| ParseError { offset: pos, kind: ErrorKind::Template(e.to_string()) })?;
                    }
                    if !c.is_zero() {
                        terms.push(Expr::num(c.clone()) * &d);
                    }
                }
                Ok(Expr::add_all(terms))
            }
            "sol" => {
                arity(1)?;
                let i = self.integer(&args[0], scope, "solution index")?;
                match usize::try_from(i).ok().and_then(|i| i.checked_sub(1)).and_then(|i| self.solutions.get(i)) {
                    Some(s) => Ok(s.clone()),
                    None => err(pos, ErrorKind::Template(format!("no fundamental solution {i}"))),
                }
            }
            _ => err(pos, ErrorKind::UnknownFunction(name.to_string())),
        }
    }

    /// Lower a template into one expression per value of its range.
    pub fn lower_template(&self, t: &Template) -> Result<Vec<Expr>, ParseError> {
        match &t.range {
            None => Ok(vec![self.lower(&t.body)?]),
            Some(r) => {
                let mut scope = Vec::new();
                let lo = self.integer(&r.lo, &mut scope, "range bound")?;
                let hi = self.integer(&r.hi, &mut scope, "range bound")?;
                let mut out = Vec::new();
                for k in lo..=hi {
                    scope.push((r.var.clone(), Q::from_integer(k.into())));
                    let v = self.lower_in(&t.body, &mut scope);
                    scope.pop();
                    out.push(v?);
                }
                Ok(out)
            }
        }
    }

    /// Parse a single expression (no trailing range).
    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        let t = parse_template(text)?;
        if t.range.is_some() {
            return err(0, ErrorKind::Syntax("unexpected `for`".into()));
        }
        self.lower(&t.body)
    }

    /// Parse vector fields written as `xi*Dx + eta*Dy`, with an optional
    /// trailing `for k in a..b`.
    pub fn parse_fields(&self, text: &str) -> Result<Vec<VectorField>, ParseError> {
        let t = parse_template(text)?;
        let env = Env { field_syntax: true, ..self.clone() };
        env.lower_template(&t)?.into_iter().map(|e| to_field(&e)).collect()
    }

    pub fn parse_field(&self, text: &str) -> Result<VectorField, ParseError> {
        let mut v = self.parse_fields(text)?;
        if v.len() != 1 {
            return err(0, ErrorKind::NotAField(text.to_string()));
        }
        Ok(v.pop().unwrap())
    }
}

fn to_field(e: &Expr) -> Result<VectorField, ParseError> {
    let dx = Atom::param(DX);
    let dy = Atom::param(DY);
    let xi = e.diff(&dx);
    let eta = e.diff(&dy);
    let rest = (e - &(&xi * &Expr::atom(dx.clone())) - &eta * &Expr::atom(dy.clone())).expand();
    let clean = |c: &Expr| !c.contains_atom(&dx) && !c.contains_atom(&dy);
    if !rest.is_zero() || !clean(&xi) || !clean(&eta) {
        return err(0, ErrorKind::NotAField(e.to_string()));
    }
    VectorField::new(xi, eta).map_err(|j| ParseError { offset: 0, kind: ErrorKind::NotAField(j.to_string()) })
}

/// Parse with the given parameter names kept symbolic.
pub fn parse(text: &str, params: &[&str]) -> Result<Expr, ParseError> {
    Env::with_params(params).parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::q;

    #[test]
    fn jets_in_both_spellings() {
        assert_eq!(parse("y'''", &[]).unwrap(), Expr::jet(3));
        assert_eq!(parse("y^(2)", &[]).unwrap(), Expr::jet(2));
        assert_eq!(parse("y^2", &[]).unwrap(), Expr::y().powi(2));
        assert_eq!(parse("y^(1/2)", &[]).unwrap(), Expr::sqrt(Expr::y()));
        assert_eq!(parse("y^(4)^2", &[]).unwrap(), Expr::jet(4).powi(2));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-y^2", &[]).unwrap(), -Expr::y().powi(2));
        assert_eq!(parse("2^3^2", &[]).unwrap(), Expr::int(512));
        assert_eq!(parse("1 - 2 - 3", &[]).unwrap(), Expr::int(-4));
        assert_eq!(parse("12/4/3", &[]).unwrap(), Expr::one());
        assert_eq!(parse("y'^-1", &[]).unwrap(), Expr::jet(1).recip());
    }

    #[test]
    fn rational_rhs() {
        let e = parse("3*y''^2/(2*y')", &[]).unwrap();
        assert_eq!(e, Expr::frac(3, 2) * Expr::jet(2).powi(2) * Expr::jet(1).powi(-1));
    }

    #[test]
    fn identifiers_must_be_declared() {
        let e = parse("x*Dx + a*y", &["a"]).unwrap_err();
        assert_eq!(e.kind, ErrorKind::UnknownIdentifier("Dx".into()));
        assert_eq!(e.offset, 2);
        assert!(matches!(parse("b*y", &["a"]).unwrap_err().kind, ErrorKind::UnknownIdentifier(_)));
        assert_eq!(parse("y^(13)", &[]).unwrap_err().kind, ErrorKind::JetOrderExceeded(13, 12));
        assert_eq!(parse("1/(y - y)", &[]).unwrap_err().kind, ErrorKind::DivisionByZero);
        assert!(matches!(parse("y +", &[]).unwrap_err().kind, ErrorKind::Syntax(_)));
    }

    #[test]
    fn templates_with_meta_variables() {
        let mut env = Env::default();
        env.vars.insert("n".into(), q(5));
        env.params.insert("a".into(), Some(q(7)));
        let e = env.parse("(y^(n-1))^(a-n+2)*(y^(n-2))^(-(a-n+1))").unwrap();
        assert_eq!(e, Expr::jet(4).powi(4) * Expr::jet(3).powi(-3));
        let f = env.parse("fact(n-1)*sum(k*y^(k) for k in 1..3)").unwrap();
        assert_eq!(f, Expr::int(24) * (Expr::jet(1) + Expr::int(2) * Expr::jet(2) + Expr::int(3) * Expr::jet(3)));
        assert_eq!(env.parse("prod(fact(k) for k in 1..n-1)").unwrap(), Expr::int(288));
        assert_eq!(env.parse("Dx(y'^2)").unwrap(), Expr::int(2) * Expr::jet(1) * Expr::jet(2));
    }

    #[test]
    fn operator_and_solutions() {
        let env = Env {
            operator: Some(vec![q(1), q(-3), q(2)]),
            solutions: vec![Expr::exp(Expr::x()), Expr::exp(Expr::int(2) * Expr::x())],
            ..Env::default()
        };
        assert_eq!(env.parse("E(y)").unwrap(), Expr::jet(2) - Expr::int(3) * Expr::jet(1) + Expr::int(2) * Expr::y());
        assert!(env.parse("E(sol(2))").unwrap().is_zero());
        assert!(env.parse("sol(3)").is_err());
    }

    #[test]
    fn spread_arguments() {
        let mut env = Env::default();
        env.vars.insert("n".into(), q(4));
        let want = Expr::y() + Expr::int(2) * Expr::jet(1) + Expr::int(3) * Expr::jet(2) + Expr::int(4) * Expr::jet(3);
        assert_eq!(env.parse("H(y, y^(k) for k in 1..n-1)").unwrap(), want);
        assert_eq!(env.parse("H(y^(k) for k in 0..0)").unwrap(), Expr::one());
        assert!(env.parse("sum(y, y^(k) for k in 1..2)").is_err());
    }

    #[test]
    fn vector_fields() {
        let env = Env::with_params(&["a"]);
        let f = env.parse_field("x*Dx + a*y*Dy").unwrap();
        assert_eq!(f.xi, Expr::x());
        assert_eq!(f.eta, Expr::param("a") * Expr::y());
        let mut env = Env::default();
        env.vars.insert("n".into(), q(5));
        let fs = env.parse_fields("x^k*Dy for k in 0..n-3").unwrap();
        assert_eq!(fs.len(), 3);
        assert_eq!(fs[2].eta, Expr::x().powi(2));
        assert!(env.parse_field("Dx*Dy").is_err());
        assert!(env.parse_field("y'*Dy").is_err());
        assert_eq!(env.parse_field("(x + 1)*Dx").unwrap().xi, Expr::x() + Expr::one());
    }

    #[test]
    fn round_trip() {
        for s in [
            "y^(4)*y''^(-5/3) - 5/3*y'''^2*y''^(-8/3)",
            "arctan(y') + exp(-x)*sin(2*x) - ln(1 + y^2)",
            "(9*y''^2*y^(5) - 45*y''*y'''*y^(4) + 40*y'''^3)/(3*y''*y^(4) - 5*y'''^2)^(3/2)",
        ] {
            let e = parse(s, &[]).unwrap();
            let again = parse(&e.to_string(), &[]).unwrap();
            assert_eq!(e, again, "{s} -> {e}");
        }
    }
}
