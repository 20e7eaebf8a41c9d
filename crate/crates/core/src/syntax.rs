//! Tokenizer and recursive-descent helpers shared by the process, formula
//! and equation-system parsers, including the data term grammar.
//!
//! Term grammar, loosest binding first:
//!
//! ```text
//! term    ::= or ( "=>" term )?
//! or      ::= and ( "||" and )*
//! and     ::= not ( "&&" not )*
//! not     ::= "!" not | cmp
//! cmp     ::= arith ( ("==" | "!=" | "<" | "<=" | ">" | ">=") arith )*
//! arith   ::= atom ( ("+" | "-") atom )*
//! atom    ::= NUMBER | "true" | "false" | IDENT | "(" term ")"
//! ```
//!
//! Chained comparisons such as `0 < n < s < 3` denote the conjunction of the
//! adjacent comparisons.

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::kernel::{Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("sort error: {0}")]
    Sort(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("free fixpoint variable `{0}`")]
    OpenFormula(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Num(BigUint),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Semi,
    Dot,
    Plus,
    Minus,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Neq,
    AndAnd,
    OrOr,
    Bang,
    FatArrow,
    Arrow,
    Assign,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Num(n) => return write!(f, "`{n}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Neq => "!=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::FatArrow => "=>",
            Tok::Arrow => "->",
            Tok::Assign => "=",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i);
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits.parse::<BigUint>().expect("digits form a natural");
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                advance(1, &mut i);
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('=', Some('>')) => (Tok::FatArrow, 2),
            ('!', Some('=')) => (Tok::Neq, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBrack, 1),
            (']', _) => (Tok::RBrack, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            (';', _) => (Tok::Semi, 1),
            ('.', _) => (Tok::Dot, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('!', _) => (Tok::Bang, 1),
            ('=', _) => (Tok::Assign, 1),
            _ => {
                return Err(ParseError {
                    line,
                    column: col,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                })
            }
        };
        out.push((tok, pos));
        advance(len, &mut i);
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

/// Variables visible while parsing a term, innermost last.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scope {
    vars: Vec<(String, Sort)>,
}

impl Scope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, sort: Sort) {
        self.vars.push((name.to_string(), sort));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn lookup(&self, name: &str) -> Option<Sort> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }
}

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Self {
            toks: tokenize(text)?,
            idx: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    pub fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn error(&self, kind: ParseErrorKind) -> ParseError {
        let pos = self.toks[self.idx].1;
        ParseError {
            line: pos.line,
            column: pos.column,
            kind,
        }
    }

    pub fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(self.error(ParseErrorKind::Syntax(msg.into())))
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.syntax(format!("expected {tok}, found {}", self.peek()))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.syntax(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            t => self.syntax(format!("expected an identifier, found {t}")),
        }
    }

    pub fn expect_eof(&mut self) -> Result<(), ParseError> {
        if self.at(&Tok::Eof) {
            Ok(())
        } else {
            self.syntax(format!("unexpected {} after end of input", self.peek()))
        }
    }

    pub fn parse_sort(&mut self) -> Result<Sort, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == "Nat" => {
                self.next();
                Ok(Sort::Nat)
            }
            Tok::Ident(s) if s == "Bool" => {
                self.next();
                Ok(Sort::Bool)
            }
            t => self.syntax(format!("expected a sort (`Nat` or `Bool`), found {t}")),
        }
    }

    /// Parses a term and checks that it is well sorted.
    pub fn parse_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        let start = self.idx;
        let t = self.term(scope)?;
        if let Err(e) = t.sort() {
            let pos = self.toks[start].1;
            return Err(ParseError {
                line: pos.line,
                column: pos.column,
                kind: ParseErrorKind::Sort(e.to_string()),
            });
        }
        Ok(t)
    }

    /// Parses a term of the given sort.
    pub fn parse_term_of(&mut self, scope: &Scope, sort: Sort) -> Result<Term, ParseError> {
        let start = self.idx;
        let t = self.parse_term(scope)?;
        let found = t.sort().expect("checked by parse_term");
        if found != sort {
            let pos = self.toks[start].1;
            return Err(ParseError {
                line: pos.line,
                column: pos.column,
                kind: ParseErrorKind::Sort(format!("`{t}` has sort {found}, expected {sort}")),
            });
        }
        Ok(t)
    }

    fn term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        let lhs = self.or_term(scope)?;
        if self.eat(&Tok::FatArrow) {
            let rhs = self.term(scope)?;
            return Ok(Term::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        let mut t = self.and_term(scope)?;
        while self.eat(&Tok::OrOr) {
            t = Term::or(t, self.and_term(scope)?);
        }
        Ok(t)
    }

    fn and_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        let mut t = self.not_term(scope)?;
        while self.eat(&Tok::AndAnd) {
            t = Term::and(t, self.not_term(scope)?);
        }
        Ok(t)
    }

    fn not_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(Term::not(self.not_term(scope)?));
        }
        self.cmp_term(scope)
    }

    fn cmp_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        let mut left = self.arith_term(scope)?;
        let mut chain: Vec<Term> = Vec::new();
        loop {
            let op = self.peek().clone();
            let build: fn(Term, Term) -> Term = match op {
                Tok::EqEq => Term::eq,
                Tok::Neq => |a, b| Term::not(Term::eq(a, b)),
                Tok::Lt => Term::less,
                Tok::Le => |a, b| Term::not(Term::less(b, a)),
                Tok::Gt => |a, b| Term::less(b, a),
                Tok::Ge => |a, b| Term::not(Term::less(a, b)),
                _ => break,
            };
            self.next();
            let right = self.arith_term(scope)?;
            chain.push(build(left, right.clone()));
            left = right;
        }
        if chain.is_empty() {
            Ok(left)
        } else {
            Ok(Term::conjunction(chain))
        }
    }

    fn arith_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        let mut t = self.atom_term(scope)?;
        loop {
            if self.eat(&Tok::Plus) {
                t = Term::plus(t, self.atom_term(scope)?);
            } else if self.at(&Tok::Minus) {
                self.next();
                t = Term::minus(t, self.atom_term(scope)?);
            } else {
                return Ok(t);
            }
        }
    }

    fn atom_term(&mut self, scope: &Scope) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.next();
                Ok(Term::Const(crate::kernel::Value::Nat(n)))
            }
            Tok::Ident(s) if s == "true" => {
                self.next();
                Ok(Term::tt())
            }
            Tok::Ident(s) if s == "false" => {
                self.next();
                Ok(Term::ff())
            }
            Tok::Ident(s) => match scope.lookup(&s) {
                Some(sort) => {
                    self.next();
                    Ok(Term::var(s, sort))
                }
                None => Err(self.error(ParseErrorKind::UnknownVariable(s))),
            },
            Tok::LParen => {
                self.next();
                let t = self.term(scope)?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            t => self.syntax(format!("expected a term, found {t}")),
        }
    }
}

/// Parses a standalone term over the given variables.
pub fn parse_term(text: &str, vars: &[(&str, Sort)]) -> Result<Term, ParseError> {
    let mut scope = Scope::new();
    for (n, s) in vars {
        scope.push(n, *s);
    }
    let mut p = Parser::new(text)?;
    let t = p.parse_term(&scope)?;
    p.expect_eof()?;
    Ok(t)
}
