//! Expression trees, symbols and transcendental atoms.
//!
//! Trees are immutable and shared through `Arc`. All constructors normalize
//! structurally: nested sums and products are flattened, constant terms of a
//! sum are merged at the position of the first constant, constant factors of a
//! product are folded into one leading coefficient. [`Expr::normalize`]
//! re-applies the same rules to a tree built with [`Expr::from_node`].
//!
//! Before expansion a tree may still mention integer symbols (parameters and
//! summation indices), `sum(...)` binders and function applications whose
//! arguments depend on them. Such trees are *open*; [`expand`] turns them into
//! *closed* trees that only contain the node kinds the algebra understands.

mod expand;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::scalar::{GaussianRational, Rational};

pub use expand::{expand_finite_sums, Bindings, ExpandError};
pub use parse::{parse_document, parse_expr, parse_identity, point_of_expr, ParseError, Scope, SymbolKind};

pub type Name = Arc<str>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRole {
    /// The independent variable of the initial value problem.
    Ode,
    /// A real variable that is constant for the ODE but may be the active
    /// variable of a lemma (such as `r` in an arithmetic-geometric sum).
    Parameter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarSymbol {
    pub name: Name,
    pub role: VarRole,
}

impl VarSymbol {
    pub fn ode(name: &str) -> Self {
        VarSymbol { name: name.into(), role: VarRole::Ode }
    }

    pub fn parameter(name: &str) -> Self {
        VarSymbol { name: name.into(), role: VarRole::Parameter }
    }
}

/// A symbolic real constant. Its derivative with respect to every variable is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstSymbol {
    pub name: Name,
}

impl ConstSymbol {
    pub fn new(name: &str) -> Self {
        ConstSymbol { name: name.into() }
    }
}

/// `coeff * var + sum(weight * const) + pi_coeff * pi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearArg {
    pub var: Option<Name>,
    pub coeff: Rational,
    pub consts: BTreeMap<Name, Rational>,
    pub pi: Rational,
}

impl LinearArg {
    pub fn zero() -> Self {
        LinearArg { var: None, coeff: Rational::zero(), consts: BTreeMap::new(), pi: Rational::zero() }
    }

    pub fn of_var(var: &str, coeff: Rational) -> Self {
        LinearArg { var: Some(var.into()), coeff, ..Self::zero() }.normalized()
    }

    pub fn normalized(mut self) -> Self {
        if self.coeff.is_zero() {
            self.var = None;
        }
        if self.var.is_none() {
            self.coeff = Rational::zero();
        }
        self.consts.retain(|_, w| !w.is_zero());
        self
    }

    pub fn is_zero(&self) -> bool {
        self.var.is_none() && self.consts.is_empty() && self.pi.is_zero()
    }

    /// True when the argument does not depend on any variable.
    pub fn is_constant(&self) -> bool {
        self.var.is_none()
    }

    pub fn neg(&self) -> Self {
        LinearArg {
            var: self.var.clone(),
            coeff: -&self.coeff,
            consts: self.consts.iter().map(|(k, w)| (k.clone(), -w)).collect(),
            pi: -&self.pi,
        }
    }

    /// The constant shift (everything but the variable term).
    pub fn shift(&self) -> LinearArg {
        LinearArg { var: None, coeff: Rational::zero(), ..self.clone() }
    }

    pub fn coeff_of(&self, var: &str) -> Rational {
        match &self.var {
            Some(v) if &**v == var => self.coeff.clone(),
            _ => Rational::zero(),
        }
    }

    pub fn rename_var(&self, from: &str, to: &str) -> Self {
        let mut a = self.clone();
        if a.var.as_deref() == Some(from) {
            a.var = Some(to.into());
        }
        a
    }

    /// Every rational that scales a symbol (variable and constants).
    pub fn frequencies(&self) -> impl Iterator<Item = &Rational> {
        self.var.iter().map(|_| &self.coeff).chain(self.consts.values())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Sin,
    Cos,
    /// `exp(i * arg)`.
    ExpI,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub kind: AtomKind,
    pub arg: LinearArg,
}

impl Atom {
    pub fn new(kind: AtomKind, arg: LinearArg) -> Self {
        Atom { kind, arg: arg.normalized() }
    }
    pub fn sin(arg: LinearArg) -> Self {
        Self::new(AtomKind::Sin, arg)
    }
    pub fn cos(arg: LinearArg) -> Self {
        Self::new(AtomKind::Cos, arg)
    }
    pub fn expi(arg: LinearArg) -> Self {
        Self::new(AtomKind::ExpI, arg)
    }
}

/// Functions whose application is deferred until summation indices and
/// parameters are known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    ExpI,
    Binom,
    Fact,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::ExpI => "expi",
            Func::Binom => "binom",
            Func::Fact => "fact",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Binom => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lhs,
    Rhs,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lhs => "lhs",
            Side::Rhs => "rhs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Constant(GaussianRational),
    Var(VarSymbol),
    Const(ConstSymbol),
    Atom(Atom),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    IntPow(Expr, i64),
    FiniteSum { index: Name, lower: Expr, upper: Expr, body: Expr },
    /// Integer parameter or summation index (open trees only).
    IntSym(Name),
    /// Deferred function application (open trees only).
    Apply(Func, Vec<Expr>),
    /// Power whose integer exponent is not yet known (open trees only).
    Pow(Expr, Expr),
    /// `pi`; only meaningful inside a function argument.
    Pi,
    /// One side of a certified lemma, with the lemma's ODE variable renamed.
    LemmaRef { lemma: Name, side: Side, var: Option<VarSymbol> },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("function argument is not linear in a single variable: {0}")]
    NonLinearArgument(String),
    #[error("{0} argument must have real coefficients: {1}")]
    ComplexArgument(&'static str, String),
    #[error("exp argument must be i times a real linear expression: {0}")]
    NonImaginaryExponent(String),
    #[error("rational shift {0} in a function argument has no exact representation")]
    RationalShift(String),
    #[error("{0} expects a non-negative integer argument, got {1}")]
    BadIntegerArgument(&'static str, String),
    #[error("exponent must be an integer: {0}")]
    NonIntegerExponent(String),
}

impl Expr {
    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::from_node(Node::Constant(c))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(GaussianRational::from_int(n))
    }

    pub fn rational(q: Rational) -> Self {
        Self::constant(GaussianRational::real(q))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn i() -> Self {
        Self::constant(GaussianRational::i())
    }

    pub fn var(v: VarSymbol) -> Self {
        Self::from_node(Node::Var(v))
    }

    pub fn cnst(c: ConstSymbol) -> Self {
        Self::from_node(Node::Const(c))
    }

    pub fn atom(a: Atom) -> Self {
        Self::from_node(Node::Atom(a))
    }

    pub fn int_sym(name: &str) -> Self {
        Self::from_node(Node::IntSym(name.into()))
    }

    pub fn pi() -> Self {
        Self::from_node(Node::Pi)
    }

    pub fn lemma_ref(lemma: &str, side: Side, var: Option<VarSymbol>) -> Self {
        Self::from_node(Node::LemmaRef { lemma: lemma.into(), side, var })
    }

    pub fn finite_sum(index: &str, lower: Expr, upper: Expr, body: Expr) -> Self {
        Self::from_node(Node::FiniteSum { index: index.into(), lower, upper, body })
    }

    pub fn as_constant(&self) -> Option<&GaussianRational> {
        match self.node() {
            Node::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        let mut out: Vec<Expr> = Vec::new();
        let mut constant: Option<(usize, GaussianRational)> = None;
        let mut push = |e: Expr, out: &mut Vec<Expr>| match e.node() {
            Node::Constant(c) => match &mut constant {
                Some((_, acc)) => *acc += c,
                None => {
                    constant = Some((out.len(), c.clone()));
                    out.push(e.clone());
                }
            },
            _ => out.push(e),
        };
        for t in terms {
            match t.node() {
                Node::Sum(inner) => {
                    for x in inner {
                        push(x.clone(), &mut out);
                    }
                }
                _ => push(t, &mut out),
            }
        }
        if let Some((pos, c)) = constant {
            if c.is_zero() {
                out.remove(pos);
            } else {
                out[pos] = Expr::constant(c);
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Self::from_node(Node::Sum(out)),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        let mut coeff = GaussianRational::one();
        let mut out: Vec<Expr> = Vec::new();
        let push = |e: &Expr, out: &mut Vec<Expr>, coeff: &mut GaussianRational| match e.node() {
            Node::Constant(c) => *coeff *= c,
            _ => out.push(e.clone()),
        };
        for f in factors {
            match f.node() {
                Node::Product(inner) => {
                    for x in inner {
                        push(x, &mut out, &mut coeff);
                    }
                }
                _ => push(&f, &mut out, &mut coeff),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if !coeff.is_one() {
            out.insert(0, Expr::constant(coeff));
        }
        match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Self::from_node(Node::Product(out)),
        }
    }

    pub fn pow(base: Expr, k: i64) -> Self {
        if k == 1 {
            return base;
        }
        if k == 0 {
            return Expr::one();
        }
        if let Some(c) = base.as_constant() {
            if let Some(v) = c.pow(k) {
                return Expr::constant(v);
            }
        }
        Self::from_node(Node::IntPow(base, k))
    }

    /// Power with an expression exponent; deferred while the exponent is open.
    pub fn pow_expr(base: Expr, exponent: Expr) -> Result<Self, ExprError> {
        if let Some(c) = exponent.as_constant() {
            return match (c.is_real(), crate::scalar::to_i64(&c.re)) {
                (true, Some(k)) => Ok(Expr::pow(base, k)),
                _ => Err(ExprError::NonIntegerExponent(exponent.to_string())),
            };
        }
        if exponent.is_ground() {
            return Err(ExprError::NonIntegerExponent(exponent.to_string()));
        }
        Ok(Self::from_node(Node::Pow(base, exponent)))
    }

    pub fn neg(e: Expr) -> Self {
        Expr::product([Expr::int(-1), e])
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::sum([a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::product([a, Expr::pow(b, -1)])
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::product([a, b])
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::sum([a, b])
    }

    /// Applies `func`, or defers it while an argument is still open.
    pub fn apply(func: Func, args: Vec<Expr>) -> Result<Self, ExprError> {
        if !args.iter().all(Expr::is_ground) {
            return Ok(Self::from_node(Node::Apply(func, args)));
        }
        match func {
            Func::Sin | Func::Cos | Func::ExpI => {
                let lin = LinearCombo::of(&args[0])
                    .ok_or_else(|| ExprError::NonLinearArgument(args[0].to_string()))?;
                let kind = match func {
                    Func::Sin => AtomKind::Sin,
                    Func::Cos => AtomKind::Cos,
                    _ => AtomKind::ExpI,
                };
                let arg = lin.into_real_arg(func.name(), &args[0])?;
                Ok(Expr::atom(Atom::new(kind, arg)))
            }
            Func::Fact => {
                let n = nonneg_int(&args[0], "fact")?;
                Ok(Expr::constant(GaussianRational::real(Rational::from_integer(factorial(n)))))
            }
            Func::Binom => {
                let n = nonneg_int(&args[0], "binom")?;
                let k = nonneg_int(&args[1], "binom")?;
                let v = if k > n { BigInt::zero() } else { binomial(n, k) };
                Ok(Expr::constant(GaussianRational::real(Rational::from_integer(v))))
            }
        }
    }

    /// `exp(arg)` where `arg` must be `i` times a real linear expression.
    pub fn exp(arg: Expr) -> Result<Self, ExprError> {
        if !arg.is_ground() {
            let inner = Expr::product([Expr::constant(-GaussianRational::i()), arg]);
            return Ok(Self::from_node(Node::Apply(Func::ExpI, vec![inner])));
        }
        let lin = LinearCombo::of(&arg).ok_or_else(|| ExprError::NonLinearArgument(arg.to_string()))?;
        let real = lin.div_i().ok_or_else(|| ExprError::NonImaginaryExponent(arg.to_string()))?;
        let a = real.into_real_arg("exp", &arg)?;
        Ok(Expr::atom(Atom::expi(a)))
    }

    /// Rebuilds the tree through the normalizing constructors.
    pub fn normalize(&self) -> Expr {
        self.rebuild(&|e| e.clone())
    }

    fn rebuild(&self, leaf: &dyn Fn(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.rebuild(leaf))),
            Node::Product(xs) => Expr::product(xs.iter().map(|x| x.rebuild(leaf))),
            Node::IntPow(b, k) => Expr::pow(b.rebuild(leaf), *k),
            Node::FiniteSum { index, lower, upper, body } => Expr::finite_sum(
                index,
                lower.rebuild(leaf),
                upper.rebuild(leaf),
                body.rebuild(leaf),
            ),
            Node::Apply(f, args) => {
                let args: Vec<Expr> = args.iter().map(|a| a.rebuild(leaf)).collect();
                Expr::apply(*f, args.clone()).unwrap_or_else(|_| Self::from_node(Node::Apply(*f, args)))
            }
            Node::Pow(b, e) => {
                let (b, e) = (b.rebuild(leaf), e.rebuild(leaf));
                Expr::pow_expr(b.clone(), e.clone()).unwrap_or_else(|_| Self::from_node(Node::Pow(b, e)))
            }
            _ => leaf(self),
        }
    }

    fn any(&self, pred: &dyn Fn(&Node) -> bool) -> bool {
        if pred(self.node()) {
            return true;
        }
        self.children().iter().any(|c| c.any(pred))
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Sum(xs) | Node::Product(xs) | Node::Apply(_, xs) => xs.iter().collect(),
            Node::IntPow(b, _) => vec![b],
            Node::Pow(b, e) => vec![b, e],
            Node::FiniteSum { lower, upper, body, .. } => vec![lower, upper, body],
            _ => vec![],
        }
    }

    /// Closed trees contain no binders, integer symbols, deferred applications
    /// or bare `pi`.
    pub fn is_closed(&self) -> bool {
        !self.any(&|n| {
            matches!(n, Node::FiniteSum { .. } | Node::IntSym(_) | Node::Apply(..) | Node::Pow(..) | Node::Pi)
        })
    }

    /// No parameters, binders, deferred applications or lemma references;
    /// `pi` may still occur.
    pub fn is_ground(&self) -> bool {
        !self.any(&|n| {
            matches!(n, Node::FiniteSum { .. } | Node::IntSym(_) | Node::Apply(..) | Node::Pow(..) | Node::LemmaRef { .. })
        })
    }

    pub fn has_lemma_ref(&self) -> bool {
        self.any(&|n| matches!(n, Node::LemmaRef { .. }))
    }

    /// Every atom appearing in the tree.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        if let Node::Atom(a) = self.node() {
            out.insert(a.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// Names of constants, variables and integer symbols used by the tree.
    pub fn symbol_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<Name>) {
        match self.node() {
            Node::Var(v) => {
                out.insert(v.name.clone());
            }
            Node::Const(c) => {
                out.insert(c.name.clone());
            }
            Node::IntSym(n) => {
                out.insert(n.clone());
            }
            Node::Atom(a) => {
                out.extend(a.arg.var.iter().cloned());
                out.extend(a.arg.consts.keys().cloned());
            }
            _ => {}
        }
        for c in self.children() {
            c.collect_names(out);
        }
    }

    /// Renames variable `from` to `to` everywhere, including atom arguments.
    pub fn rename_var(&self, from: &str, to: &VarSymbol) -> Expr {
        self.rebuild(&|e| match e.node() {
            Node::Var(v) if &*v.name == from => Expr::var(to.clone()),
            Node::Atom(a) => Expr::atom(Atom::new(a.kind, a.arg.rename_var(from, &to.name))),
            _ => e.clone(),
        })
    }

    /// Replaces lemma references through `resolve`.
    pub fn resolve_lemma_refs<E>(
        &self,
        resolve: &dyn Fn(&str, Side, Option<&VarSymbol>) -> Result<Expr, E>,
    ) -> Result<Expr, E> {
        if !self.has_lemma_ref() {
            return Ok(self.clone());
        }
        Ok(match self.node() {
            Node::LemmaRef { lemma, side, var } => resolve(lemma, *side, var.as_ref())?,
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.resolve_lemma_refs(resolve)).collect::<Result<Vec<_>, E>>()?),
            Node::Product(xs) => {
                Expr::product(xs.iter().map(|x| x.resolve_lemma_refs(resolve)).collect::<Result<Vec<_>, E>>()?)
            }
            Node::IntPow(b, k) => Expr::pow(b.resolve_lemma_refs(resolve)?, *k),
            _ => self.clone(),
        })
    }

    /// Names of lemmas referenced by the tree.
    pub fn lemma_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_lemmas(&mut out);
        out
    }

    fn collect_lemmas(&self, out: &mut BTreeSet<Name>) {
        if let Node::LemmaRef { lemma, .. } = self.node() {
            out.insert(lemma.clone());
        }
        for c in self.children() {
            c.collect_lemmas(out);
        }
    }

    /// Bare `pi` outside a (deferred) function argument.
    pub fn has_bare_pi(&self) -> bool {
        match self.node() {
            Node::Pi => true,
            Node::Apply(..) => false,
            _ => self.children().iter().any(|c| c.has_bare_pi()),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

fn nonneg_int(e: &Expr, what: &'static str) -> Result<u64, ExprError> {
    e.as_constant()
        .filter(|c| c.is_real() && c.re.is_integer() && !c.re.is_negative())
        .and_then(|c| c.re.numer().to_u64())
        .ok_or_else(|| ExprError::BadIntegerArgument(what, e.to_string()))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// Linear combination with Gaussian-rational coefficients, used to turn a
/// function argument into a [`LinearArg`].
#[derive(Clone, Debug, Default)]
pub struct LinearCombo {
    pub var: Option<(Name, GaussianRational)>,
    pub consts: BTreeMap<Name, GaussianRational>,
    pub pi: GaussianRational,
    pub constant: GaussianRational,
}

impl LinearCombo {
    pub fn of(e: &Expr) -> Option<LinearCombo> {
        let mut out = LinearCombo::default();
        out.accumulate(e, &GaussianRational::one())?;
        Some(out)
    }

    fn accumulate(&mut self, e: &Expr, scale: &GaussianRational) -> Option<()> {
        match e.node() {
            Node::Constant(c) => self.constant += &(c * scale),
            Node::Pi => self.pi += scale,
            Node::Const(c) => {
                *self.consts.entry(c.name.clone()).or_default() += scale;
            }
            Node::Var(v) => match &mut self.var {
                Some((name, w)) if *name == v.name => *w += scale,
                Some((_, w)) if w.is_zero() => self.var = Some((v.name.clone(), scale.clone())),
                Some(_) => return None,
                None => self.var = Some((v.name.clone(), scale.clone())),
            },
            Node::Sum(xs) => {
                for x in xs {
                    self.accumulate(x, scale)?;
                }
            }
            Node::Product(xs) => {
                let mut c = scale.clone();
                let mut rest = None;
                for x in xs {
                    match x.node() {
                        Node::Constant(k) => c = &c * k,
                        _ if rest.is_none() => rest = Some(x),
                        _ => return None,
                    }
                }
                match rest {
                    Some(r) => self.accumulate(r, &c)?,
                    None => self.constant += &c,
                }
            }
            _ => return None,
        }
        Some(())
    }

    fn coefficients(&self) -> impl Iterator<Item = &GaussianRational> {
        self.var.iter().map(|(_, w)| w).chain(self.consts.values()).chain([&self.pi, &self.constant])
    }

    /// Divides every coefficient by `i`; `None` unless all are purely imaginary.
    pub fn div_i(self) -> Option<LinearCombo> {
        if !self.coefficients().all(|c| c.is_imaginary()) {
            return None;
        }
        let f = |c: GaussianRational| GaussianRational::real(c.im);
        Some(LinearCombo {
            var: self.var.map(|(n, w)| (n, f(w))),
            consts: self.consts.into_iter().map(|(k, w)| (k, f(w))).collect(),
            pi: f(self.pi),
            constant: f(self.constant),
        })
    }

    pub fn into_real_arg(self, what: &'static str, src: &Expr) -> Result<LinearArg, ExprError> {
        if !self.coefficients().all(|c| c.is_real()) {
            return Err(ExprError::ComplexArgument(what, src.to_string()));
        }
        if !self.constant.is_zero() {
            return Err(ExprError::RationalShift(self.constant.to_string()));
        }
        let (var, coeff) = match self.var {
            Some((n, w)) => (Some(n), w.re),
            None => (None, Rational::zero()),
        };
        Ok(LinearArg {
            var,
            coeff,
            consts: self.consts.into_iter().map(|(k, w)| (k, w.re)).collect(),
            pi: self.pi.re,
        }
        .normalized())
    }
}

/// Integer value of a closed constant expression.
pub fn expr_to_i64(e: &Expr) -> Option<i64> {
    let c = e.as_constant()?;
    if !c.is_real() {
        return None;
    }
    crate::scalar::to_i64(&c.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn t() -> Expr {
        Expr::var(VarSymbol::ode("t"))
    }

    #[test]
    fn sum_flattens_and_merges_constants() {
        let e = Expr::sum([Expr::int(1), Expr::sum([t(), Expr::int(2)])]);
        assert_eq!(e, Expr::from_node(Node::Sum(vec![Expr::int(3), t()])));
        assert!(Expr::sum([Expr::int(1), Expr::int(-1)]).is_zero());
    }

    #[test]
    fn product_folds_leading_constant() {
        let e = Expr::product([t(), Expr::rational(rat(1, 2)), Expr::product([Expr::int(4), t()])]);
        assert_eq!(e, Expr::from_node(Node::Product(vec![Expr::int(2), t(), t()])));
        assert!(Expr::product([t(), Expr::zero()]).is_zero());
    }

    #[test]
    fn apply_builds_atoms() {
        let arg = Expr::sum([t(), Expr::cnst(ConstSymbol::new("c"))]);
        let e = Expr::apply(Func::Sin, vec![arg]).unwrap();
        match e.node() {
            Node::Atom(a) => {
                assert_eq!(a.kind, AtomKind::Sin);
                assert_eq!(a.arg.coeff, rat_int(1));
                assert_eq!(a.arg.consts.len(), 1);
            }
            other => panic!("expected atom, got {other:?}"),
        }
        assert!(matches!(
            Expr::apply(Func::Sin, vec![Expr::sum([t(), Expr::int(1)])]),
            Err(ExprError::RationalShift(_))
        ));
        assert!(Expr::apply(Func::Cos, vec![Expr::pow(t(), 2)]).is_err());
    }

    #[test]
    fn exp_requires_imaginary_argument() {
        let e = Expr::exp(Expr::product([Expr::i(), t()])).unwrap();
        assert!(matches!(e.node(), Node::Atom(a) if a.kind == AtomKind::ExpI));
        assert!(matches!(Expr::exp(t()), Err(ExprError::NonImaginaryExponent(_))));
    }

    #[test]
    fn binomials_and_factorials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(64, 32).to_string(), "1832624140942590534");
        assert_eq!(factorial(5), BigInt::from(120));
        let b = Expr::apply(Func::Binom, vec![Expr::int(3), Expr::int(5)]).unwrap();
        assert!(b.is_zero());
    }
}
