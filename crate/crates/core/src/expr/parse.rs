//! Recursive-descent parser for the identity description language.
//!
//! ```text
//! identity geometric_sum {
//!     var t;
//!     param n = 4 range 1..;
//!     lhs: 1 + sum(k, 1, n - 1, t^k);
//!     rhs: (1 - t^n) / (1 - t);
//!     mode: coincidence;
//!     ivp {
//!         order: 1;
//!         coeff[1..1]: 1/(t - 1);
//!         force: n*t^(n-1)/(t - 1);
//!         at: 0;
//!         values: 1;
//!         interval: (-inf, 1);
//!     }
//!     depends: [];
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::{ConstSymbol, Expr, ExprError, Func, LinearCombo, Name, Side, VarSymbol};
use crate::ivp::{Bound, IdentityDecl, IntParam, Interval, IvpSpec, LinOp, Mode, Origin, Part, Point};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}{}", fmt_expected(.expected))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

fn fmt_expected(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(" or "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCTS: [&str; 17] = ["..", "{", "}", "(", ")", "[", "]", ",", ";", ":", "=", "+", "-", "*", "/", "^", "!"];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, message: String| ParseError { line, col, message, expected: vec![] };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                return Err(err(line, col, "decimal literals are not supported; write p/q".into()));
            }
            out.push(Token { tok: Tok::Int(s.parse().unwrap()), line: start_line, col: start_col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start_line, col: start_col });
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(start_line, start_col, "unterminated string literal".into())),
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Str(s), line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token { tok: Tok::Punct(p), line: start_line, col: start_col });
            }
            None => return Err(err(line, col, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    OdeVar,
    ParamVar,
    Const,
    IntParam,
    Index,
}

/// Symbols visible to an expression.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    symbols: BTreeMap<String, SymbolKind>,
}

const RESERVED: [&str; 11] = ["i", "pi", "sin", "cos", "exp", "expi", "binom", "fact", "sum", "lemma", "inf"];

impl Scope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, kind: SymbolKind) -> Self {
        self.symbols.insert(name.to_string(), kind);
        self
    }

    pub fn get(&self, name: &str) -> Option<SymbolKind> {
        self.symbols.get(name).copied()
    }

    /// Scope of a declaration: its variables, constants and parameters.
    pub fn of_decl(decl: &IdentityDecl) -> Self {
        let mut s = Scope::new().with(&decl.var.name, SymbolKind::OdeVar);
        for v in &decl.pvars {
            s = s.with(&v.name, SymbolKind::ParamVar);
        }
        for c in &decl.consts {
            s = s.with(&c.name, SymbolKind::Const);
        }
        for p in &decl.params {
            s = s.with(&p.name, SymbolKind::IntParam);
        }
        s
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    source: &'a str,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> PResult<Self> {
        Ok(Parser { toks: lex(source)?, pos: 0, source })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        self.error_at(t, format!("unexpected {}", t.tok), expected)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(q) if q == s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        if self.is_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&format!("`{p}`")]))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Token)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Token> {
        if self.is_ident(kw) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&format!("`{kw}`")]))
        }
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(n) => {
                self.bump();
                let v = n.to_i64().ok_or_else(|| self.error_at(&t, "integer out of range", &[]))?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    // ---- expressions ----

    fn expr(&mut self, scope: &Scope) -> PResult<Expr> {
        let mut acc = self.term(scope)?;
        loop {
            if self.eat_punct("+") {
                acc = Expr::add(acc, self.term(scope)?);
            } else if self.eat_punct("-") {
                acc = Expr::sub(acc, self.term(scope)?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self, scope: &Scope) -> PResult<Expr> {
        let mut acc = self.unary(scope)?;
        loop {
            if self.eat_punct("*") {
                acc = Expr::mul(acc, self.unary(scope)?);
            } else if self.is_punct("/") {
                let t = self.bump();
                let d = self.unary(scope)?;
                if d.is_zero() {
                    return Err(self.error_at(&t, "division by the constant zero", &[]));
                }
                acc = Expr::div(acc, d);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self, scope: &Scope) -> PResult<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::neg(self.unary(scope)?));
        }
        if self.eat_punct("+") {
            return self.unary(scope);
        }
        self.power(scope)
    }

    fn power(&mut self, scope: &Scope) -> PResult<Expr> {
        let base = self.postfix(scope)?;
        if self.is_punct("^") {
            let t = self.bump();
            let exponent = self.unary(scope)?;
            return Expr::pow_expr(base, exponent).map_err(|e| self.expr_error(&t, e));
        }
        Ok(base)
    }

    fn postfix(&mut self, scope: &Scope) -> PResult<Expr> {
        let mut e = self.primary(scope)?;
        while self.is_punct("!") {
            let t = self.bump();
            e = Expr::apply(Func::Fact, vec![e]).map_err(|err| self.expr_error(&t, err))?;
        }
        Ok(e)
    }

    fn expr_error(&self, t: &Token, e: ExprError) -> ParseError {
        self.error_at(t, e.to_string(), &[])
    }

    fn primary(&mut self, scope: &Scope) -> PResult<Expr> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::rational(n.clone().into()))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr(scope)?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let name = name.clone();
                self.bump();
                if self.is_punct("(") {
                    return self.call(&name, &t, scope);
                }
                match name.as_str() {
                    "i" => return Ok(Expr::i()),
                    "pi" => return Ok(Expr::pi()),
                    _ => {}
                }
                match scope.get(&name) {
                    Some(SymbolKind::OdeVar) => Ok(Expr::var(VarSymbol::ode(&name))),
                    Some(SymbolKind::ParamVar) => Ok(Expr::var(VarSymbol::parameter(&name))),
                    Some(SymbolKind::Const) => Ok(Expr::cnst(ConstSymbol::new(&name))),
                    Some(SymbolKind::IntParam) | Some(SymbolKind::Index) => Ok(Expr::int_sym(&name)),
                    None => Err(self.error_at(&t, format!("unbound symbol `{name}`"), &[])),
                }
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }

    fn args(&mut self, scope: &Scope) -> PResult<Vec<Expr>> {
        let mut out = vec![self.expr(scope)?];
        while self.eat_punct(",") {
            out.push(self.expr(scope)?);
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn call(&mut self, name: &str, t: &Token, scope: &Scope) -> PResult<Expr> {
        self.expect_punct("(")?;
        let func = match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "expi" => Func::ExpI,
            "binom" => Func::Binom,
            "fact" => Func::Fact,
            "exp" => {
                let args = self.args(scope)?;
                self.check_arity(t, name, &args, 1)?;
                return Expr::exp(args[0].clone()).map_err(|e| self.expr_error(t, e));
            }
            "sum" => return self.finite_sum(t, scope),
            "lemma" => return self.lemma(scope),
            _ => return Err(self.error_at(t, format!("unknown function `{name}`"), &[])),
        };
        let args = self.args(scope)?;
        self.check_arity(t, name, &args, func.arity())?;
        Expr::apply(func, args).map_err(|e| self.expr_error(t, e))
    }

    fn check_arity(&self, t: &Token, name: &str, args: &[Expr], n: usize) -> PResult<()> {
        if args.len() != n {
            return Err(self.error_at(t, format!("`{name}` takes {n} argument(s), got {}", args.len()), &[]));
        }
        Ok(())
    }

    fn finite_sum(&mut self, t: &Token, scope: &Scope) -> PResult<Expr> {
        let (index, it) = self.expect_ident()?;
        if scope.get(&index).is_some() || RESERVED.contains(&index.as_str()) {
            return Err(self.error_at(&it, format!("summation index `{index}` shadows a declared name"), &[]));
        }
        self.expect_punct(",")?;
        let lower = self.expr(scope)?;
        self.expect_punct(",")?;
        let upper = self.expr(scope)?;
        self.expect_punct(",")?;
        let inner = scope.clone().with(&index, SymbolKind::Index);
        let body = self.expr(&inner)?;
        self.expect_punct(")")?;
        for bound in [&lower, &upper] {
            if bound.is_closed() && super::expr_to_i64(bound).is_none() {
                return Err(self.error_at(t, format!("summation bound `{bound}` is not an integer"), &[]));
            }
        }
        Ok(Expr::finite_sum(&index, lower, upper, body))
    }

    fn lemma(&mut self, scope: &Scope) -> PResult<Expr> {
        let (lemma, _) = self.expect_ident()?;
        self.expect_punct(",")?;
        let side = match self.expect_ident()? {
            (s, _) if s == "lhs" => Side::Lhs,
            (s, _) if s == "rhs" => Side::Rhs,
            (_, st) => return Err(self.error_at(&st, "lemma side must be `lhs` or `rhs`", &["lhs", "rhs"])),
        };
        let var = if self.eat_punct(",") {
            let (v, vt) = self.expect_ident()?;
            match scope.get(&v) {
                Some(SymbolKind::OdeVar) => Some(VarSymbol::ode(&v)),
                Some(SymbolKind::ParamVar) => Some(VarSymbol::parameter(&v)),
                _ => return Err(self.error_at(&vt, format!("`{v}` is not a declared variable"), &[])),
            }
        } else {
            None
        };
        self.expect_punct(")")?;
        Ok(Expr::lemma_ref(&lemma, side, var))
    }

    fn closed_expr(&mut self, scope: &Scope) -> PResult<Expr> {
        let t = self.peek().clone();
        let e = self.expr(scope)?;
        if e.has_bare_pi() {
            return Err(self.error_at(&t, "`pi` may only appear inside a function argument or an initial point", &[]));
        }
        Ok(e)
    }

    fn expr_list(&mut self, scope: &Scope) -> PResult<Vec<Expr>> {
        let mut out = vec![self.closed_expr(scope)?];
        while self.eat_punct(",") {
            out.push(self.closed_expr(scope)?);
        }
        Ok(out)
    }

    fn point(&mut self) -> PResult<Point> {
        let t = self.peek().clone();
        let e = self.expr(&Scope::new())?;
        point_of_expr(&e).ok_or_else(|| self.error_at(&t, format!("`{e}` is not a rational or rational multiple of pi"), &[]))
    }

    fn bound(&mut self) -> PResult<Bound> {
        if self.is_ident("inf") {
            self.bump();
            return Ok(Bound::PosInf);
        }
        if self.is_punct("-") && matches!(self.peek_at(1), Tok::Ident(s) if s == "inf") {
            self.bump();
            self.bump();
            return Ok(Bound::NegInf);
        }
        if self.is_punct("+") && matches!(self.peek_at(1), Tok::Ident(s) if s == "inf") {
            self.bump();
            self.bump();
            return Ok(Bound::PosInf);
        }
        Ok(Bound::Finite(self.point()?))
    }

    // ---- declarations ----

    fn document(&mut self) -> PResult<Vec<IdentityDecl>> {
        let mut out: Vec<IdentityDecl> = Vec::new();
        let mut names = BTreeSet::new();
        while !matches!(self.peek().tok, Tok::Eof) {
            let t = self.peek().clone();
            let decl = self.identity()?;
            if !names.insert(decl.name.clone()) {
                return Err(self.error_at(&t, format!("duplicate identity `{}`", decl.name), &[]));
            }
            out.push(decl);
        }
        Ok(out)
    }

    fn identity(&mut self) -> PResult<IdentityDecl> {
        self.expect_keyword("identity")?;
        let (name, _) = self.expect_ident()?;
        let open = self.expect_punct("{")?;
        let mut b = DeclBuilder::default();
        while !self.is_punct("}") {
            self.item(&mut b)?;
        }
        self.bump();
        self.eat_punct(";");
        b.finish(name, self, &open)
    }

    fn declare(&mut self, b: &mut DeclBuilder, t: &Token, name: &str, kind: SymbolKind) -> PResult<()> {
        if RESERVED.contains(&name) {
            return Err(self.error_at(t, format!("`{name}` is reserved"), &[]));
        }
        if b.scope.get(name).is_some() {
            return Err(self.error_at(t, format!("duplicate declaration of `{name}`"), &[]));
        }
        b.scope = std::mem::take(&mut b.scope).with(name, kind);
        Ok(())
    }

    fn once<T>(&self, slot: &mut Option<T>, value: T, t: &Token, what: &str) -> PResult<()> {
        if slot.is_some() {
            return Err(self.error_at(t, format!("duplicate `{what}` entry"), &[]));
        }
        *slot = Some(value);
        Ok(())
    }

    fn item(&mut self, b: &mut DeclBuilder) -> PResult<()> {
        let (kw, t) = self.expect_ident()?;
        match kw.as_str() {
            "var" => {
                let (v, vt) = self.expect_ident()?;
                if b.var.is_some() {
                    return Err(self.error_at(&vt, "an identity has exactly one ODE variable", &[]));
                }
                self.declare(b, &vt, &v, SymbolKind::OdeVar)?;
                b.var = Some(VarSymbol::ode(&v));
            }
            "pvar" => loop {
                let (v, vt) = self.expect_ident()?;
                self.declare(b, &vt, &v, SymbolKind::ParamVar)?;
                b.pvars.push(VarSymbol::parameter(&v));
                if !self.eat_punct(",") {
                    break;
                }
            },
            "const" => loop {
                let (c, ct) = self.expect_ident()?;
                self.declare(b, &ct, &c, SymbolKind::Const)?;
                b.consts.push(ConstSymbol::new(&c));
                if !self.eat_punct(",") {
                    break;
                }
            },
            "param" => {
                let (p, pt) = self.expect_ident()?;
                self.declare(b, &pt, &p, SymbolKind::IntParam)?;
                self.expect_punct("=")?;
                let value = self.signed_int()?;
                let (mut min, mut max) = (None, None);
                if self.is_ident("range") {
                    self.bump();
                    if !self.is_punct("..") {
                        min = Some(self.signed_int()?);
                    }
                    self.expect_punct("..")?;
                    if !self.is_punct(";") {
                        max = Some(self.signed_int()?);
                    }
                }
                let param = IntParam { name: p.as_str().into(), value, min, max };
                if !param.admits(value) {
                    return Err(self.error_at(&pt, format!("default {value} of `{p}` is outside its range"), &[]));
                }
                b.params.push(param);
            }
            "lhs" | "rhs" | "multiplier" | "clear" => {
                self.expect_punct(":")?;
                let e = self.closed_expr(&b.scope)?;
                let slot = match kw.as_str() {
                    "lhs" => &mut b.lhs,
                    "rhs" => &mut b.rhs,
                    "multiplier" => &mut b.multiplier,
                    _ => &mut b.clear,
                };
                if slot.is_some() {
                    return Err(self.error_at(&t, format!("duplicate `{kw}` entry"), &[]));
                }
                *slot = Some(e);
            }
            "mode" => {
                self.expect_punct(":")?;
                let (m, mt) = self.expect_ident()?;
                let mode = Mode::parse(&m)
                    .filter(|m| *m != Mode::Split)
                    .ok_or_else(|| self.error_at(&mt, format!("unknown mode `{m}`"), &["residual", "coincidence"]))?;
                self.once(&mut b.mode, mode, &t, "mode")?;
            }
            "derive" | "split" => {
                self.expect_punct(":")?;
                let (base, _) = self.expect_ident()?;
                if b.derive.is_some() || b.split.is_some() {
                    return Err(self.error_at(&t, "an identity derives from at most one base", &[]));
                }
                if kw == "derive" {
                    b.derive = Some(base);
                } else {
                    b.split = Some(base);
                }
            }
            "part" => {
                self.expect_punct(":")?;
                let (p, pt) = self.expect_ident()?;
                let part = match p.as_str() {
                    "re" => Part::Re,
                    "im" => Part::Im,
                    _ => return Err(self.error_at(&pt, format!("unknown part `{p}`"), &["re", "im"])),
                };
                self.once(&mut b.part, part, &t, "part")?;
            }
            "note" => {
                self.expect_punct(":")?;
                let st = self.peek().clone();
                match st.tok {
                    Tok::Str(s) => {
                        self.bump();
                        self.once(&mut b.note, s, &t, "note")?;
                    }
                    _ => return Err(self.unexpected(&["string literal"])),
                }
            }
            "depends" => {
                self.expect_punct(":")?;
                self.expect_punct("[")?;
                let mut deps = Vec::new();
                if !self.is_punct("]") {
                    loop {
                        let (d, _) = self.expect_ident()?;
                        deps.push(d);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("]")?;
                self.once(&mut b.depends, deps, &t, "depends")?;
            }
            "ivp" => {
                if b.ivp_seen {
                    return Err(self.error_at(&t, "duplicate `ivp` block", &[]));
                }
                b.ivp_seen = true;
                self.expect_punct("{")?;
                while !self.is_punct("}") {
                    self.ivp_item(b)?;
                }
                self.bump();
                self.eat_punct(";");
                return Ok(());
            }
            _ => {
                return Err(self.error_at(
                    &t,
                    format!("unknown entry `{kw}`"),
                    &["var", "pvar", "param", "const", "lhs", "rhs", "mode", "ivp", "depends", "derive", "split", "note"],
                ))
            }
        }
        self.expect_punct(";")?;
        Ok(())
    }

    fn ivp_item(&mut self, b: &mut DeclBuilder) -> PResult<()> {
        let (kw, t) = self.expect_ident()?;
        match kw.as_str() {
            "order" => {
                self.expect_punct(":")?;
                let m = self.signed_int()?;
                if m < 1 {
                    return Err(self.error_at(&t, "order must be at least 1", &[]));
                }
                self.once(&mut b.order, (m as usize, t.clone()), &t, "order")?;
            }
            "coeff" => {
                let mut range = None;
                if self.eat_punct("[") {
                    let lo = self.signed_int()?;
                    self.expect_punct("..")?;
                    let hi = self.signed_int()?;
                    self.expect_punct("]")?;
                    range = Some((lo, hi));
                }
                self.expect_punct(":")?;
                let scope = b.scope.clone();
                let coeffs = self.expr_list(&scope)?;
                if let Some((lo, hi)) = range {
                    if lo != 1 || hi < 1 || hi as usize != coeffs.len() {
                        return Err(self.error_at(
                            &t,
                            format!("coefficient range [{lo}..{hi}] does not match {} listed coefficient(s)", coeffs.len()),
                            &[],
                        ));
                    }
                }
                self.once(&mut b.coeffs, (coeffs, t.clone()), &t, "coeff")?;
            }
            "force" => {
                self.expect_punct(":")?;
                let scope = b.scope.clone();
                let f = self.closed_expr(&scope)?;
                self.once(&mut b.force, f, &t, "force")?;
            }
            "at" => {
                self.expect_punct(":")?;
                let p = self.point()?;
                self.once(&mut b.at, p, &t, "at")?;
            }
            "values" => {
                self.expect_punct(":")?;
                let scope = b.scope.clone();
                let vs = self.expr_list(&scope)?;
                self.once(&mut b.values, (vs, t.clone()), &t, "values")?;
            }
            "interval" => {
                self.expect_punct(":")?;
                self.expect_punct("(")?;
                let lo = self.bound()?;
                self.expect_punct(",")?;
                let hi = self.bound()?;
                self.expect_punct(")")?;
                let iv = Interval { lo, hi };
                if !iv.is_nonempty() {
                    return Err(self.error_at(&t, format!("interval {iv} is empty"), &[]));
                }
                self.once(&mut b.interval, iv, &t, "interval")?;
            }
            _ => {
                return Err(self.error_at(
                    &t,
                    format!("unknown ivp entry `{kw}`"),
                    &["order", "coeff", "force", "at", "values", "interval"],
                ))
            }
        }
        self.expect_punct(";")?;
        Ok(())
    }
}

#[derive(Default)]
struct DeclBuilder {
    scope: Scope,
    var: Option<VarSymbol>,
    pvars: Vec<VarSymbol>,
    consts: Vec<ConstSymbol>,
    params: Vec<IntParam>,
    lhs: Option<Expr>,
    rhs: Option<Expr>,
    mode: Option<Mode>,
    derive: Option<String>,
    multiplier: Option<Expr>,
    split: Option<String>,
    part: Option<Part>,
    clear: Option<Expr>,
    note: Option<String>,
    depends: Option<Vec<String>>,
    ivp_seen: bool,
    order: Option<(usize, Token)>,
    coeffs: Option<(Vec<Expr>, Token)>,
    force: Option<Expr>,
    at: Option<Point>,
    values: Option<(Vec<Expr>, Token)>,
    interval: Option<Interval>,
}

impl DeclBuilder {
    fn finish(self, name: String, p: &Parser<'_>, open: &Token) -> PResult<IdentityDecl> {
        let err = |msg: String| p.error_at(open, msg, &[]);
        let var = self.var.ok_or_else(|| err(format!("identity `{name}` declares no ODE variable")))?;
        let derived = self.derive.is_some() || self.split.is_some();
        let order = match (&self.order, &self.coeffs) {
            (Some((m, _)), _) => *m,
            (None, Some((cs, _))) => cs.len(),
            (None, None) => 1,
        };
        let coeffs = match self.coeffs {
            Some((cs, t)) => {
                if cs.len() != order {
                    return Err(p.error_at(&t, format!("order {order} needs {order} coefficient(s), got {}", cs.len()), &[]));
                }
                cs
            }
            None => vec![Expr::zero(); order],
        };
        let values = match self.values {
            Some((vs, t)) => {
                if vs.len() != order {
                    return Err(p.error_at(&t, format!("order {order} needs {order} initial value(s), got {}", vs.len()), &[]));
                }
                vs
            }
            None => vec![Expr::zero(); order],
        };
        let t0 = self.at.unwrap_or_else(Point::zero);
        let interval = self.interval.unwrap_or_else(Interval::real_line);
        let ivp = IvpSpec {
            op: LinOp::new(var.clone(), coeffs, self.force.unwrap_or_else(Expr::zero)),
            t0,
            initial_values: values,
            interval,
        };
        let mut depends: Vec<Name> = self.depends.unwrap_or_default().into_iter().map(|d| d.as_str().into()).collect();
        let (origin, mode, lhs, rhs) = if let Some(base) = self.derive {
            if self.lhs.is_some() || self.rhs.is_some() {
                return Err(err(format!("derived identity `{name}` must not list its own sides")));
            }
            let multiplier = self.multiplier.unwrap_or_else(Expr::one);
            let base: Name = base.as_str().into();
            if !depends.contains(&base) {
                depends.push(base.clone());
            }
            (Origin::Derived { base, multiplier }, Mode::Residual, Expr::zero(), Expr::zero())
        } else if let Some(base) = self.split {
            let lhs = self.lhs.ok_or_else(|| err(format!("split identity `{name}` needs `lhs`")))?;
            let rhs = self.rhs.ok_or_else(|| err(format!("split identity `{name}` needs `rhs`")))?;
            let part = self.part.ok_or_else(|| err(format!("split identity `{name}` needs `part`")))?;
            let base: Name = base.as_str().into();
            if !depends.contains(&base) {
                depends.push(base.clone());
            }
            let clear = self.clear.unwrap_or_else(Expr::one);
            (Origin::Split { base, part, clear }, Mode::Split, lhs, rhs)
        } else {
            if self.multiplier.is_some() || self.clear.is_some() || self.part.is_some() {
                return Err(err("`multiplier`, `part` and `clear` need `derive` or `split`".into()));
            }
            let lhs = self.lhs.ok_or_else(|| err(format!("identity `{name}` needs `lhs`")))?;
            let rhs = self.rhs.ok_or_else(|| err(format!("identity `{name}` needs `rhs`")))?;
            (Origin::Direct, self.mode.unwrap_or(Mode::Residual), lhs, rhs)
        };
        if derived && self.mode.is_some() {
            return Err(err("derived identities have a fixed mode".into()));
        }
        for e in [&lhs, &rhs].into_iter().chain(ivp.op.coeffs.iter()).chain([&ivp.op.force]) {
            if e.has_lemma_ref() {
                return Err(err("lemma references are only allowed in initial values".into()));
            }
        }
        for v in &ivp.initial_values {
            if let Some(l) = v.lemma_names().into_iter().find(|l| !depends.contains(l)) {
                return Err(err(format!("lemma `{l}` is used but not listed in `depends`")));
            }
        }
        if depends.iter().any(|d| **d == *name) {
            return Err(err(format!("identity `{name}` depends on itself")));
        }
        Ok(IdentityDecl {
            name: name.as_str().into(),
            var,
            pvars: self.pvars,
            consts: self.consts,
            params: self.params,
            lhs,
            rhs,
            ivp,
            depends,
            mode,
            origin,
            note: self.note,
            source: Arc::from(p.source),
        })
    }
}

/// Reads a rational or rational multiple of pi from a constant expression.
pub fn point_of_expr(e: &Expr) -> Option<Point> {
    let lin = LinearCombo::of(e)?;
    if lin.var.is_some() || !lin.consts.is_empty() || !lin.pi.is_real() || !lin.constant.is_real() {
        return None;
    }
    match (lin.constant.re.is_zero(), lin.pi.re.is_zero()) {
        (_, true) => Some(Point::Rational(lin.constant.re)),
        (true, false) => Some(Point::PiMultiple(lin.pi.re)),
        _ => None,
    }
}

/// Parses every identity block of a document.
pub fn parse_document(source: &str) -> Result<Vec<IdentityDecl>, ParseError> {
    let mut p = Parser::new(source)?;
    let decls = p.document()?;
    crate::corpus::check_acyclic(&decls).map_err(|name| ParseError {
        line: 1,
        col: 1,
        message: format!("cyclic dependency through `{name}`"),
        expected: vec![],
    })?;
    Ok(decls)
}

/// Parses a document holding exactly one identity.
pub fn parse_identity(source: &str) -> Result<IdentityDecl, ParseError> {
    let mut decls = parse_document(source)?;
    match decls.len() {
        1 => Ok(decls.pop().unwrap()),
        n => Err(ParseError {
            line: 1,
            col: 1,
            message: format!("expected exactly one identity, found {n}"),
            expected: vec![],
        }),
    }
}

/// Parses a standalone expression against `scope`.
pub fn parse_expr(source: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let mut p = Parser::new(source)?;
    let e = p.expr(scope)?;
    if !matches!(p.peek().tok, Tok::Eof) {
        return Err(p.unexpected(&["end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    fn scope_t() -> Scope {
        Scope::new().with("t", SymbolKind::OdeVar).with("c", SymbolKind::Const).with("n", SymbolKind::IntParam)
    }

    #[test]
    fn pythagoras_sides() {
        let d = parse_identity(
            "identity pythagoras { var t; lhs: sin(t)^2 + cos(t)^2; rhs: 1; ivp { order: 1; coeff[1..1]: 0; force: 0; at: 0; values: 0; interval: (-inf, inf); } depends: []; }",
        )
        .unwrap();
        assert_eq!(d.lhs.to_string(), "sin(t)^2 + cos(t)^2");
        assert!(d.rhs.is_one());
        assert_eq!(d.ivp.interval, Interval::real_line());
    }

    #[test]
    fn unbound_symbol_has_position() {
        let e = parse_expr("t +\n  u", &scope_t()).unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(e.message.contains("unbound"));
    }

    #[test]
    fn syntax_error_lists_expected() {
        let e = parse_identity("identity x { var t; lhs t; }").unwrap_err();
        assert!(e.expected.iter().any(|x| x.contains(':')), "{e}");
    }

    #[test]
    fn duplicate_declarations_rejected() {
        assert!(parse_identity("identity x { var t; const t; lhs: t; rhs: t; }").is_err());
        assert!(parse_document("identity x { var t; lhs: t; rhs: t; } identity x { var t; lhs: t; rhs: t; }").is_err());
    }

    #[test]
    fn cycles_rejected() {
        let src = "identity a { var t; lhs: t; rhs: t; depends: [b]; } identity b { var t; lhs: t; rhs: t; depends: [a]; }";
        assert!(parse_document(src).unwrap_err().message.contains("cyclic"));
    }

    #[test]
    fn points_and_bounds() {
        let d = parse_identity(
            "identity h { var t; lhs: t; rhs: t; ivp { order: 1; at: pi; interval: (0, 2*pi); } }",
        )
        .unwrap();
        assert_eq!(d.ivp.t0, Point::PiMultiple(crate::scalar::rat_int(1)));
        assert!(d.ivp.interval.contains(&d.ivp.t0));
    }

    #[test]
    fn bare_pi_rejected() {
        assert!(parse_identity("identity x { var t; lhs: pi*t; rhs: t; }").is_err());
        let ok = parse_identity("identity x { var t; lhs: sin(t + pi); rhs: -sin(t); }").unwrap();
        assert!(matches!(ok.lhs.node(), Node::Atom(_)));
    }

    #[test]
    fn sums_stay_open_until_expansion() {
        let e = parse_expr("1 + sum(k, 1, n - 1, t^k)", &scope_t()).unwrap();
        assert!(!e.is_closed());
        let e = parse_expr("sum(k, 0, n - 1, cos(c + k*t))", &scope_t()).unwrap();
        assert!(!e.is_closed());
    }

    #[test]
    fn factorial_postfix() {
        let e = parse_expr("5!/(2!*3!)", &Scope::new()).unwrap();
        assert_eq!(e, Expr::int(10));
    }
}
