//! Exponential normal form: an independent zero test for the corpus fragment.
//!
//! Sines and cosines are rewritten through `exp`, and every exponential is a
//! Laurent monomial in `E_x = exp(i*x/D)` for each variable or constant `x`.
//! Variables and constants also occur polynomially. Quotients are kept
//! unreduced; a quotient is zero iff its numerator has no terms. Because the
//! symbols `x` and `E_x` are algebraically independent as functions, this
//! decides identical vanishing, unlike the independent-atom model. It shares
//! no code with the canonicalizer.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{AtomKind, Expr, LinearArg, Name, Node};
use crate::scalar::{GaussianRational, Rational};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExpNfError {
    #[error("frequency {0} is not a multiple of 1/{1}")]
    IndivisibleFrequency(String, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression is not closed: {0}")]
    Open(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Sym {
    /// `x` itself; exponent never negative.
    Plain(Name),
    /// `exp(i*x/D)`.
    Exp(Name),
    /// `exp(i*pi/d)` for pi shifts that are not multiples of pi/2.
    ExpPi(u64),
}

type Mono = BTreeMap<Sym, i64>;

/// Sparse Laurent polynomial.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Laurent(BTreeMap<Mono, GaussianRational>);

impl Laurent {
    fn constant(c: GaussianRational) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Mono::new(), c);
        }
        Laurent(m)
    }

    fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    fn sym(s: Sym, k: i64) -> Self {
        let mut mono = Mono::new();
        if k != 0 {
            mono.insert(s, k);
        }
        Laurent(BTreeMap::from([(mono, GaussianRational::one())]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn add(&self, o: &Self) -> Self {
        let mut out = self.0.clone();
        for (m, c) in &o.0 {
            let v = out.entry(m.clone()).or_insert_with(GaussianRational::zero);
            *v = &*v + c;
            if v.is_zero() {
                out.remove(m);
            }
        }
        Laurent(out)
    }

    fn neg(&self) -> Self {
        Laurent(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        let mut out: BTreeMap<Mono, GaussianRational> = BTreeMap::new();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &o.0 {
                let mut m = m1.clone();
                for (s, e) in m2 {
                    let v = m.entry(s.clone()).or_insert(0);
                    *v += e;
                    if *v == 0 {
                        m.remove(s);
                    }
                }
                let v = out.entry(m).or_insert_with(GaussianRational::zero);
                *v = &*v + &(c1 * c2);
            }
        }
        out.retain(|_, c| !c.is_zero());
        Laurent(out)
    }

    fn pow(&self, k: u64) -> Self {
        let mut acc = Laurent::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
}

/// `num / den` with nothing cancelled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpNormalForm {
    pub num: Laurent,
    pub den: Laurent,
    pub base_den: u64,
}

impl ExpNormalForm {
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

#[derive(Clone, Debug)]
struct Frac {
    num: Laurent,
    den: Laurent,
}

impl Frac {
    fn poly(p: Laurent) -> Self {
        Frac { num: p, den: Laurent::one() }
    }

    fn add(&self, o: &Frac) -> Frac {
        if self.den == o.den {
            return Frac { num: self.num.add(&o.num), den: self.den.clone() };
        }
        Frac { num: self.num.mul(&o.den).add(&o.num.mul(&self.den)), den: self.den.mul(&o.den) }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }
    }

    fn pow(&self, k: i64) -> Result<Frac, ExpNfError> {
        let e = k.unsigned_abs();
        if k < 0 {
            if self.num.is_zero() {
                return Err(ExpNfError::DivisionByZero);
            }
            Ok(Frac { num: self.den.pow(e), den: self.num.pow(e) })
        } else {
            Ok(Frac { num: self.num.pow(e), den: self.den.pow(e) })
        }
    }
}

fn lcm_of_frequencies(e: &Expr) -> u64 {
    let mut d = BigInt::one();
    for a in e.atoms() {
        let arg = &a.arg;
        if arg.var.is_some() {
            d = d.lcm(arg.coeff.denom());
        }
        for w in arg.consts.values() {
            d = d.lcm(w.denom());
        }
    }
    d.to_u64().unwrap_or(1)
}

fn scaled(w: &Rational, d: u64, what: &str) -> Result<i64, ExpNfError> {
    let s = w * Rational::from_integer(BigInt::from(d));
    if !s.is_integer() {
        return Err(ExpNfError::IndivisibleFrequency(format!("{what}: {w}"), d));
    }
    Ok(s.to_integer().to_i64().unwrap())
}

/// `exp(i*sign*arg)` as a Laurent monomial.
fn exp_of(arg: &LinearArg, sign: i64, d: u64) -> Result<Laurent, ExpNfError> {
    let mut out = Laurent::one();
    if let Some(v) = &arg.var {
        out = out.mul(&Laurent::sym(Sym::Exp(v.clone()), sign * scaled(&arg.coeff, d, v)?));
    }
    for (c, w) in &arg.consts {
        out = out.mul(&Laurent::sym(Sym::Exp(c.clone()), sign * scaled(w, d, c)?));
    }
    let p = &arg.pi * Rational::from_integer(BigInt::from(sign));
    let twice = &p * Rational::from_integer(BigInt::from(2));
    if twice.is_integer() {
        // exp(i*pi*k/2) = i^k
        let k = twice.to_integer().mod_floor(&BigInt::from(4)).to_i64().unwrap();
        out = out.mul(&Laurent::constant(GaussianRational::i_pow(k)));
    } else {
        let den = p.denom().to_u64().unwrap();
        let k = p.numer().mod_floor(&BigInt::from(2 * den)).to_i64().unwrap();
        out = out.mul(&Laurent::sym(Sym::ExpPi(den), k));
    }
    Ok(out)
}

fn convert(e: &Expr, d: u64) -> Result<Frac, ExpNfError> {
    Ok(match e.node() {
        Node::Constant(c) => Frac::poly(Laurent::constant(c.clone())),
        Node::Var(v) => Frac::poly(Laurent::sym(Sym::Plain(v.name.clone()), 1)),
        Node::Const(c) => Frac::poly(Laurent::sym(Sym::Plain(c.name.clone()), 1)),
        Node::Atom(a) => {
            let plus = exp_of(&a.arg, 1, d)?;
            let minus = exp_of(&a.arg, -1, d)?;
            let half = GaussianRational::real(Rational::new(1.into(), 2.into()));
            match a.kind {
                AtomKind::ExpI => Frac::poly(plus),
                // cos x = (e^{ix} + e^{-ix}) / 2
                AtomKind::Cos => Frac::poly(plus.add(&minus).mul(&Laurent::constant(half))),
                // sin x = -i/2 (e^{ix} - e^{-ix})
                AtomKind::Sin => {
                    let k = &half * &GaussianRational::new(Rational::zero(), -Rational::one());
                    Frac::poly(plus.add(&minus.neg()).mul(&Laurent::constant(k)))
                }
            }
        }
        Node::Sum(xs) => {
            let mut acc = Frac::poly(Laurent::default());
            for x in xs {
                acc = acc.add(&convert(x, d)?);
            }
            acc
        }
        Node::Product(xs) => {
            let mut acc = Frac::poly(Laurent::one());
            for x in xs {
                acc = acc.mul(&convert(x, d)?);
            }
            acc
        }
        Node::IntPow(b, k) => convert(b, d)?.pow(*k)?,
        _ => return Err(ExpNfError::Open(e.to_string())),
    })
}

/// Normal form with the least base denominator covering `e`.
pub fn exp_normalize(e: &Expr) -> Result<ExpNormalForm, ExpNfError> {
    exp_normalize_with(e, lcm_of_frequencies(e))
}

/// Normal form over a given base denominator `d`.
pub fn exp_normalize_with(e: &Expr, d: u64) -> Result<ExpNormalForm, ExpNfError> {
    let f = convert(e, d)?;
    if f.den.is_zero() {
        return Err(ExpNfError::DivisionByZero);
    }
    Ok(ExpNormalForm { num: f.num, den: f.den, base_den: d })
}

/// True iff `lhs - rhs` vanishes identically.
pub fn agrees(lhs: &Expr, rhs: &Expr) -> Result<bool, ExpNfError> {
    Ok(exp_normalize(&Expr::sub(lhs.clone(), rhs.clone()))?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope, SymbolKind};

    fn ex(s: &str) -> Expr {
        let sc = Scope::new().with("t", SymbolKind::OdeVar).with("a", SymbolKind::Const);
        parse_expr(s, &sc).unwrap()
    }

    #[test]
    fn pythagoras_vanishes_here() {
        assert!(exp_normalize(&ex("cos(t)^2 + sin(t)^2 - 1")).unwrap().is_zero());
    }

    #[test]
    fn de_moivre_square() {
        assert!(exp_normalize(&ex("(cos(t) + i*sin(t))^2 - cos(2*t) - i*sin(2*t)")).unwrap().is_zero());
    }

    #[test]
    fn distinct_functions_differ() {
        assert!(!exp_normalize(&ex("sin(t) - cos(t)")).unwrap().is_zero());
        assert!(!exp_normalize(&ex("t*exp(i*t) - exp(i*t)")).unwrap().is_zero());
    }

    #[test]
    fn half_angles_and_shifts() {
        assert!(agrees(&ex("sin(t)"), &ex("2*sin(t/2)*cos(t/2)")).unwrap());
        assert!(agrees(&ex("cos(t + a + pi/2)"), &ex("-sin(t + a)")).unwrap());
        assert!(agrees(&ex("exp(i*(t + pi))"), &ex("-exp(i*t)")).unwrap());
    }

    #[test]
    fn rational_functions() {
        assert!(agrees(&ex("(1 - t^3)/(1 - t)"), &ex("1 + t + t^2")).unwrap());
        assert!(!agrees(&ex("(1 - t^3)/(1 - t)"), &ex("1 + t")).unwrap());
        assert_eq!(exp_normalize(&ex("1/(t - t)")).unwrap_err(), ExpNfError::DivisionByZero);
    }
}
