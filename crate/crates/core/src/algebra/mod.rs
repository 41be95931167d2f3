//! Exact rational-function normal forms.
//!
//! Expressions map to quotients of polynomials whose generators are the
//! variables, the symbolic constants and the transcendental atoms. Sine and
//! cosine atoms are independent generators; no trigonometric relation is
//! built in. Complex exponentials are decomposed multiplicatively over a base
//! denominator `D`: `exp(i*(q*t + w*c + p*pi))` becomes
//! `E^(q*D) * C^(w*D) * i^(2p)` with `E = exp(i*t/D)` and `C = exp(i*c/D)`,
//! so `exp(i*t)^n` and `exp(i*n*t)` share a normal form.
//!
//! Arguments with a half-integer multiple of pi are folded (`sin(x + pi/2)`
//! becomes `cos(x)`); the same folding is used by [`eval_at`].

mod euler;
mod eval;
mod gcd;
mod poly;
mod rf;
mod split;

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{Atom, AtomKind, ConstSymbol, Expr, LinearArg, Node, VarSymbol};
use crate::scalar::{rat, GaussianRational, Rational};

pub use euler::{euler_rewrite, Direction, Rewritten};
pub use eval::{eval_at, EvalError};
pub use gcd::gcd;
pub use poly::{Gen, GenRef, Monomial, MultiPoly};
pub use rf::{poly_derive, CanonicalRF};
pub use split::split_real_imag;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("exponent {0} is too large")]
    ExponentTooLarge(i64),
    #[error("frequency {0} is not a multiple of 1/{1}")]
    IndivisibleFrequency(String, u64),
    #[error("expression is not closed: {0}")]
    Open(String),
}

/// Per-obligation canonicalization settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraCtx {
    /// Common denominator of every atom frequency.
    pub base_den: u64,
}

impl Default for AlgebraCtx {
    fn default() -> Self {
        AlgebraCtx { base_den: 1 }
    }
}

impl AlgebraCtx {
    pub fn new(base_den: u64) -> Self {
        AlgebraCtx { base_den: base_den.max(1) }
    }

    /// The least `D` making every atom frequency in `exprs` a multiple of `1/D`.
    pub fn for_exprs<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> Self {
        let mut d = BigInt::one();
        for e in exprs {
            for a in e.atoms() {
                for w in a.arg.frequencies() {
                    d = d.lcm(w.denom());
                }
            }
        }
        AlgebraCtx::new(d.to_u64().expect("base denominator fits in 64 bits"))
    }
}

pub(crate) fn var_gen(v: &VarSymbol) -> GenRef {
    Arc::new(Gen::Var { role: v.role, name: v.name.clone() })
}

pub(crate) fn const_gen(c: &ConstSymbol) -> GenRef {
    Arc::new(Gen::Const(c.name.clone()))
}

fn scaled_exponent(w: &Rational, den: u64, what: &str) -> Result<i64, AlgebraError> {
    let s = w * Rational::from_integer(BigInt::from(den));
    if !s.is_integer() {
        return Err(AlgebraError::IndivisibleFrequency(format!("{what}: {w}"), den));
    }
    s.to_integer().to_i64().ok_or(AlgebraError::ExponentTooLarge(i64::MAX))
}

fn gen_power(g: GenRef, k: i64) -> Result<CanonicalRF, AlgebraError> {
    CanonicalRF::gen(g).pow(k)
}

/// Splits a pi multiple into quarter turns when it is a multiple of pi/2.
pub(crate) fn quarter_turns(p: &Rational) -> Option<i64> {
    let twice = p * rat(2, 1);
    twice.is_integer().then(|| twice.to_integer().mod_floor(&BigInt::from(4)).to_i64().unwrap())
}

/// `sin` or `cos` of `arg` with any half-integer pi shift folded away.
pub(crate) fn trig_rf(kind: AtomKind, arg: &LinearArg) -> CanonicalRF {
    let (mut kind, mut sign) = (kind, 1i64);
    let mut arg = arg.clone();
    if let Some(q) = quarter_turns(&arg.pi) {
        arg.pi = Rational::zero();
        for _ in 0..q {
            // sin(x + pi/2) = cos(x), cos(x + pi/2) = -sin(x)
            match kind {
                AtomKind::Sin => kind = AtomKind::Cos,
                _ => {
                    kind = AtomKind::Sin;
                    sign = -sign;
                }
            }
        }
    }
    let mut arg = arg.normalized();
    // sin(-x) = -sin(x), cos(-x) = cos(x): keep the leading weight positive.
    let lead = if !arg.coeff.is_zero() { &arg.coeff } else { arg.consts.values().next().unwrap_or(&arg.pi) };
    if lead.is_negative() {
        arg = arg.neg().normalized();
        if kind == AtomKind::Sin {
            sign = -sign;
        }
    }
    if arg.is_zero() {
        return match kind {
            AtomKind::Sin => CanonicalRF::zero(),
            _ => CanonicalRF::constant(GaussianRational::from_int(sign)),
        };
    }
    let g = match kind {
        AtomKind::Sin => Gen::Sin(arg),
        _ => Gen::Cos(arg),
    };
    CanonicalRF::gen(Arc::new(g)).scale(&GaussianRational::from_int(sign))
}

/// `exp(i * arg)` decomposed over the base denominator.
pub(crate) fn expi_rf(arg: &LinearArg, ctx: AlgebraCtx) -> Result<CanonicalRF, AlgebraError> {
    let d = ctx.base_den;
    let mut out = match quarter_turns(&arg.pi) {
        Some(q) => CanonicalRF::constant(GaussianRational::i_pow(q)),
        None => {
            let den = arg.pi.denom().to_u64().ok_or(AlgebraError::ExponentTooLarge(i64::MAX))?;
            let k = arg.pi.numer().mod_floor(&BigInt::from(2 * den)).to_i64().unwrap();
            gen_power(Arc::new(Gen::ExpPi { den }), k)?
        }
    };
    if let Some(v) = &arg.var {
        let k = scaled_exponent(&arg.coeff, d, v)?;
        out = out.mul(&gen_power(Arc::new(Gen::ExpBase { var: v.clone(), den: d }), k)?);
    }
    for (c, w) in &arg.consts {
        let k = scaled_exponent(w, d, c)?;
        out = out.mul(&gen_power(Arc::new(Gen::ExpConst { name: c.clone(), den: d }), k)?);
    }
    Ok(out)
}

pub(crate) fn atom_rf(a: &Atom, ctx: AlgebraCtx) -> Result<CanonicalRF, AlgebraError> {
    match a.kind {
        AtomKind::ExpI => expi_rf(&a.arg, ctx),
        kind => Ok(trig_rf(kind, &a.arg)),
    }
}

/// Normal form of a closed expression.
pub fn canonicalize(e: &Expr, ctx: AlgebraCtx) -> Result<CanonicalRF, AlgebraError> {
    Canonicalizer::new(ctx).run(e)
}

/// Canonicalization with a per-instance cache over shared subtrees.
pub struct Canonicalizer {
    ctx: AlgebraCtx,
    cache: HashMap<*const Node, CanonicalRF>,
    // Keeps cached subtrees alive so their addresses stay unique.
    pinned: Vec<Expr>,
}

impl Canonicalizer {
    pub fn new(ctx: AlgebraCtx) -> Self {
        Canonicalizer { ctx, cache: HashMap::new(), pinned: Vec::new() }
    }

    pub fn ctx(&self) -> AlgebraCtx {
        self.ctx
    }

    pub fn run(&mut self, e: &Expr) -> Result<CanonicalRF, AlgebraError> {
        let key = e.node() as *const Node;
        if let Some(r) = self.cache.get(&key) {
            return Ok(r.clone());
        }
        let r = self.compute(e)?;
        if !matches!(e.node(), Node::Constant(_) | Node::Var(_) | Node::Const(_)) {
            self.cache.insert(key, r.clone());
            self.pinned.push(e.clone());
        }
        Ok(r)
    }

    fn compute(&mut self, e: &Expr) -> Result<CanonicalRF, AlgebraError> {
        Ok(match e.node() {
            Node::Constant(c) => CanonicalRF::constant(c.clone()),
            Node::Var(v) => CanonicalRF::gen(var_gen(v)),
            Node::Const(c) => CanonicalRF::gen(const_gen(c)),
            Node::Atom(a) => atom_rf(a, self.ctx)?,
            Node::Sum(terms) => {
                // Terms sharing a denominator are added before any gcd work.
                let mut groups: Vec<(MultiPoly, MultiPoly)> = Vec::new();
                for t in terms {
                    let (n, d) = self.run(t)?.into_parts();
                    match groups.iter_mut().find(|(_, gd)| *gd == d) {
                        Some((gn, _)) => *gn = gn.add(&n),
                        None => groups.push((n, d)),
                    }
                }
                let mut acc = CanonicalRF::zero();
                for (n, d) in groups {
                    acc = acc.add(&CanonicalRF::new(n, d)?);
                }
                acc
            }
            Node::Product(factors) => {
                let mut poly = MultiPoly::one();
                let mut acc = CanonicalRF::one();
                for f in factors {
                    let r = self.run(f)?;
                    if r.is_zero() {
                        return Ok(CanonicalRF::zero());
                    }
                    if r.is_polynomial() {
                        poly = poly.mul(r.num());
                    } else {
                        acc = acc.mul(&r);
                    }
                }
                acc.mul(&CanonicalRF::from_poly(poly))
            }
            Node::IntPow(b, k) => self.run(b)?.pow(*k)?,
            _ => return Err(AlgebraError::Open(e.to_string())),
        })
    }
}

/// Derivative of a generator with respect to the variable named `var`.
pub fn gen_derivative(g: &Gen, var: &str) -> MultiPoly {
    match g {
        Gen::Var { name, .. } if &**name == var => MultiPoly::one(),
        Gen::ExpBase { var: v, den } if &**v == var => {
            let k = GaussianRational::new(Rational::zero(), rat(1, *den as i64));
            MultiPoly::gen(Arc::new(g.clone())).scale(&k)
        }
        Gen::Sin(arg) => {
            let q = arg.coeff_of(var);
            if q.is_zero() {
                return MultiPoly::zero();
            }
            MultiPoly::gen(Arc::new(Gen::Cos(arg.clone()))).scale(&GaussianRational::real(q))
        }
        Gen::Cos(arg) => {
            let q = arg.coeff_of(var);
            if q.is_zero() {
                return MultiPoly::zero();
            }
            MultiPoly::gen(Arc::new(Gen::Sin(arg.clone()))).scale(&GaussianRational::real(-q))
        }
        _ => MultiPoly::zero(),
    }
}

/// Derivative computed directly on the normal form.
pub fn derivative_rf(r: &CanonicalRF, var: &str) -> CanonicalRF {
    r.derive(&|g| gen_derivative(g, var))
}

/// Expression whose canonical form is `r` (under the same base denominator).
pub fn rf_to_expr(r: &CanonicalRF) -> Expr {
    let n = poly_to_expr(r.num());
    if r.den().is_one() {
        n
    } else {
        Expr::div(n, poly_to_expr(r.den()))
    }
}

pub fn poly_to_expr(p: &MultiPoly) -> Expr {
    Expr::sum(p.terms().rev().map(|(m, c)| {
        let mut fs = vec![Expr::constant(c.clone())];
        for (g, e) in m.factors() {
            fs.push(gen_to_expr(g, *e));
        }
        Expr::product(fs)
    }))
}

fn gen_to_expr(g: &Gen, e: u32) -> Expr {
    let k = Rational::from_integer(BigInt::from(e));
    let scaled = |name: &crate::expr::Name, den: u64, is_var: bool| {
        let w = &k / Rational::from_integer(BigInt::from(den));
        let mut arg = LinearArg::zero();
        if is_var {
            arg.var = Some(name.clone());
            arg.coeff = w;
        } else {
            arg.consts.insert(name.clone(), w);
        }
        Expr::atom(Atom::expi(arg))
    };
    match g {
        Gen::Var { role, name } => Expr::pow(Expr::var(VarSymbol { name: name.clone(), role: *role }), e as i64),
        Gen::Const(name) => Expr::pow(Expr::cnst(ConstSymbol { name: name.clone() }), e as i64),
        Gen::ExpBase { var, den } => scaled(var, *den, true),
        Gen::ExpConst { name, den } => scaled(name, *den, false),
        Gen::ExpPi { den } => {
            let mut arg = LinearArg::zero();
            arg.pi = &k / Rational::from_integer(BigInt::from(*den));
            Expr::atom(Atom::expi(arg))
        }
        Gen::Sin(a) => Expr::pow(Expr::atom(Atom::sin(a.clone())), e as i64),
        Gen::Cos(a) => Expr::pow(Expr::atom(Atom::cos(a.clone())), e as i64),
    }
}

/// True when `r` does not depend on `var` (used for regular-point checks).
pub fn is_free_of(r: &CanonicalRF, var: &str) -> bool {
    !r.mentions(|g| match g {
        Gen::Var { name, .. } => &**name == var,
        Gen::ExpBase { var: v, .. } => &**v == var,
        Gen::Sin(a) | Gen::Cos(a) => a.var.as_deref() == Some(var),
        _ => false,
    })
}

#[cfg(test)]
mod tests;
