//! Multiple-precision complex evaluation of closed expressions.
//!
//! Each operation rounds to the working precision; the relative error per
//! operation is documented as at most `2^(10 - precision)` (not proven).

use std::collections::{BTreeMap, HashMap};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use thiserror::Error;

use crate::algebra::{CanonicalRF, Gen, MultiPoly};
use crate::expr::{AtomKind, Expr, LinearArg, Name, Node};
use crate::ivp::Point;
use crate::scalar::{GaussianRational, Rational};

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum NumError {
    #[error("pole: denominator modulus below 2^-{0}")]
    Pole(usize),
    #[error("no value bound for `{0}`")]
    Unbound(String),
    #[error("expression is not closed: {0}")]
    Open(String),
}

#[derive(Debug)]
pub struct Complex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl Clone for Complex {
    fn clone(&self) -> Self {
        Complex { re: self.re.clone(), im: self.im.clone() }
    }
}

/// Values for every variable and constant symbol in an expression.
pub type Env = BTreeMap<Name, BigFloat>;

/// Working precision and the shared constant cache.
pub struct Numeric {
    prec: usize,
    cc: Consts,
    pole_bits: usize,
    pole_floor: BigFloat,
}

impl Numeric {
    pub fn new(prec: usize) -> Self {
        let prec = prec.max(64);
        let pole_bits = prec / 2;
        let pole_floor = BigFloat::from_i64(1, prec).div(&BigFloat::from_i64(2, prec).powi(pole_bits, prec, RM), prec, RM);
        Numeric { prec, cc: Consts::new().expect("constant cache"), pole_bits, pole_floor }
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn int(&self, k: i64) -> BigFloat {
        BigFloat::from_i64(k, self.prec)
    }

    pub fn bigint(&mut self, k: &BigInt) -> BigFloat {
        BigFloat::parse(&k.to_string(), Radix::Dec, self.prec, RM, &mut self.cc)
    }

    pub fn rational(&mut self, q: &Rational) -> BigFloat {
        let n = self.bigint(q.numer());
        if q.denom() == &BigInt::from(1) {
            return n;
        }
        let d = self.bigint(q.denom());
        n.div(&d, self.prec, RM)
    }

    /// Parses a decimal literal such as `-0.25` or `1e-3`.
    pub fn decimal(&mut self, s: &str) -> BigFloat {
        BigFloat::parse(s, Radix::Dec, self.prec, RM, &mut self.cc)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.prec, RM)
    }

    pub fn point(&mut self, p: &Point) -> BigFloat {
        match p {
            Point::Rational(q) => self.rational(q),
            Point::PiMultiple(q) => {
                let q = self.rational(q);
                q.mul(&self.pi(), self.prec, RM)
            }
        }
    }

    pub fn gaussian(&mut self, g: &GaussianRational) -> Complex {
        Complex { re: self.rational(&g.re), im: self.rational(&g.im) }
    }

    pub fn real(&self, x: BigFloat) -> Complex {
        Complex { re: x, im: self.int(0) }
    }

    pub fn zero(&self) -> Complex {
        self.real(self.int(0))
    }

    pub fn one(&self) -> Complex {
        self.real(self.int(1))
    }

    pub fn add(&self, a: &Complex, b: &Complex) -> Complex {
        Complex { re: a.re.add(&b.re, self.prec, RM), im: a.im.add(&b.im, self.prec, RM) }
    }

    pub fn sub(&self, a: &Complex, b: &Complex) -> Complex {
        Complex { re: a.re.sub(&b.re, self.prec, RM), im: a.im.sub(&b.im, self.prec, RM) }
    }

    pub fn mul(&self, a: &Complex, b: &Complex) -> Complex {
        let p = self.prec;
        let re = a.re.mul(&b.re, p, RM).sub(&a.im.mul(&b.im, p, RM), p, RM);
        let im = a.re.mul(&b.im, p, RM).add(&a.im.mul(&b.re, p, RM), p, RM);
        Complex { re, im }
    }

    pub fn scale(&self, a: &Complex, k: &BigFloat) -> Complex {
        Complex { re: a.re.mul(k, self.prec, RM), im: a.im.mul(k, self.prec, RM) }
    }

    pub fn norm_sqr(&self, a: &Complex) -> BigFloat {
        let p = self.prec;
        a.re.mul(&a.re, p, RM).add(&a.im.mul(&a.im, p, RM), p, RM)
    }

    pub fn modulus(&self, a: &Complex) -> BigFloat {
        self.norm_sqr(a).sqrt(self.prec, RM)
    }

    /// `a / b`, refusing denominators of modulus below `2^(-precision/2)`.
    pub fn div(&self, a: &Complex, b: &Complex) -> Result<Complex, NumError> {
        let p = self.prec;
        if self.is_pole(b) {
            return Err(NumError::Pole(self.pole_bits));
        }
        let n = self.norm_sqr(b);
        let conj = Complex { re: b.re.clone(), im: b.im.neg() };
        let num = self.mul(a, &conj);
        Ok(Complex { re: num.re.div(&n, p, RM), im: num.im.div(&n, p, RM) })
    }

    pub fn is_pole(&self, b: &Complex) -> bool {
        less(&self.modulus(b), &self.pole_floor)
    }

    pub fn powi(&self, a: &Complex, k: i64) -> Result<Complex, NumError> {
        let mut base = if k < 0 { self.div(&self.one(), a)? } else { a.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        Ok(acc)
    }

    pub fn sin(&mut self, x: &BigFloat) -> BigFloat {
        x.sin(self.prec, RM, &mut self.cc)
    }

    pub fn cos(&mut self, x: &BigFloat) -> BigFloat {
        x.cos(self.prec, RM, &mut self.cc)
    }

    /// `e^(i x)` for real `x`.
    pub fn expi(&mut self, x: &BigFloat) -> Complex {
        Complex { re: self.cos(x), im: self.sin(x) }
    }

    /// Value of a linear argument `q*v + sum w*c + p*pi`.
    pub fn linear_arg(&mut self, arg: &LinearArg, env: &Env) -> Result<BigFloat, NumError> {
        let p = self.prec;
        let mut acc = self.int(0);
        if let Some(v) = &arg.var {
            let x = lookup(env, v)?;
            acc = acc.add(&self.rational(&arg.coeff).mul(x, p, RM), p, RM);
        }
        for (c, w) in &arg.consts {
            let x = lookup(env, c)?;
            acc = acc.add(&self.rational(w).mul(x, p, RM), p, RM);
        }
        if !num_traits::Zero::is_zero(&arg.pi) {
            let pi = self.pi();
            acc = acc.add(&self.rational(&arg.pi).mul(&pi, p, RM), p, RM);
        }
        Ok(acc)
    }

    /// Evaluates a closed expression directly from its tree.
    pub fn eval(&mut self, e: &Expr, env: &Env) -> Result<Complex, NumError> {
        let mut memo = HashMap::new();
        self.eval_memo(e, env, &mut memo)
    }

    fn eval_memo(
        &mut self,
        e: &Expr,
        env: &Env,
        memo: &mut HashMap<*const Node, Complex>,
    ) -> Result<Complex, NumError> {
        let key = e.node() as *const Node;
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let v = match e.node() {
            Node::Constant(c) => self.gaussian(c),
            Node::Var(v) => self.real(lookup(env, &v.name)?.clone()),
            Node::Const(c) => self.real(lookup(env, &c.name)?.clone()),
            Node::Atom(a) => {
                let x = self.linear_arg(&a.arg, env)?;
                match a.kind {
                    AtomKind::Sin => {
                        let s = self.sin(&x);
                        self.real(s)
                    }
                    AtomKind::Cos => {
                        let c = self.cos(&x);
                        self.real(c)
                    }
                    AtomKind::ExpI => self.expi(&x),
                }
            }
            Node::Sum(xs) => {
                let mut acc = self.zero();
                for x in xs {
                    let v = self.eval_memo(x, env, memo)?;
                    acc = self.add(&acc, &v);
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = self.one();
                for x in xs {
                    let v = self.eval_memo(x, env, memo)?;
                    acc = self.mul(&acc, &v);
                }
                acc
            }
            Node::IntPow(b, k) => {
                let v = self.eval_memo(b, env, memo)?;
                self.powi(&v, *k)?
            }
            _ => return Err(NumError::Open(e.to_string())),
        };
        memo.insert(key, v.clone());
        Ok(v)
    }

    /// Value of a normal-form generator.
    pub fn gen(&mut self, g: &Gen, env: &Env) -> Result<Complex, NumError> {
        let p = self.prec;
        Ok(match g {
            Gen::Var { name, .. } | Gen::Const(name) => self.real(lookup(env, name)?.clone()),
            Gen::ExpBase { var, den } | Gen::ExpConst { name: var, den } => {
                let x = lookup(env, var)?.div(&BigFloat::from_u64(*den, p), p, RM);
                self.expi(&x)
            }
            Gen::ExpPi { den } => {
                let x = self.pi().div(&BigFloat::from_u64(*den, p), p, RM);
                self.expi(&x)
            }
            Gen::Sin(arg) => {
                let x = self.linear_arg(arg, env)?;
                let s = self.sin(&x);
                self.real(s)
            }
            Gen::Cos(arg) => {
                let x = self.linear_arg(arg, env)?;
                let c = self.cos(&x);
                self.real(c)
            }
        })
    }

    pub fn poly(&mut self, poly: &MultiPoly, env: &Env) -> Result<Complex, NumError> {
        let mut gens = HashMap::new();
        for g in poly.gens() {
            let v = self.gen(&g, env)?;
            gens.insert(g, v);
        }
        let mut acc = self.zero();
        for (m, c) in poly.terms() {
            let mut t = self.gaussian(c);
            for (g, e) in m.factors() {
                let v = self.powi(&gens[g], i64::from(*e))?;
                t = self.mul(&t, &v);
            }
            acc = self.add(&acc, &t);
        }
        Ok(acc)
    }

    pub fn rf(&mut self, r: &CanonicalRF, env: &Env) -> Result<Complex, NumError> {
        let n = self.poly(r.num(), env)?;
        let d = self.poly(r.den(), env)?;
        self.div(&n, &d)
    }
}

fn lookup<'a>(env: &'a Env, name: &str) -> Result<&'a BigFloat, NumError> {
    env.get(name).ok_or_else(|| NumError::Unbound(name.to_string()))
}

/// `a < b` for ordinary (non-NaN) values.
pub fn less(a: &BigFloat, b: &BigFloat) -> bool {
    matches!(a.cmp(b), Some(c) if c < 0)
}

/// Short scientific rendering, e.g. `1.2345678901234567e-3`.
pub fn sci(x: &BigFloat, digits: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let s = x.to_string();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s.as_str(), "0"),
    };
    let exp: i64 = exp.trim_start_matches('+').parse().unwrap_or(0);
    let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
    let all: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let int_len = mant.find('.').unwrap_or(mant.len()) as i64;
    let lead = all.find(|c| c != '0').unwrap_or(0);
    let sig = &all[lead..];
    let e10 = exp + int_len - 1 - lead as i64;
    let body = &sig[..sig.len().min(digits)];
    let body = body.trim_end_matches('0');
    let body = if body.is_empty() { "0" } else { body };
    let (h, rest) = body.split_at(1);
    if rest.is_empty() {
        format!("{sign}{h}e{e10}")
    } else {
        format!("{sign}{h}.{rest}e{e10}")
    }
}

/// Approximate value as `f64`, for reporting and thresholds.
pub fn to_f64(x: &BigFloat) -> f64 {
    sci(x, 17).parse().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope, SymbolKind};

    fn env(n: &mut Numeric, t: &str) -> Env {
        let mut e = Env::new();
        e.insert("t".into(), n.decimal(t));
        e
    }

    fn scope() -> Scope {
        Scope::new().with("t", SymbolKind::OdeVar)
    }

    #[test]
    fn pythagoras_residual_is_tiny() {
        let mut n = Numeric::new(256);
        let e = parse_expr("cos(t)^2 + sin(t)^2 - 1", &scope()).unwrap();
        let env = env(&mut n, "0.7331");
        let v = n.eval(&e, &env).unwrap();
        assert!(to_f64(&n.modulus(&v)) < 1e-70);
    }

    #[test]
    fn cube_at_one() {
        let mut n = Numeric::new(256);
        let e = parse_expr("(1 + t)^3", &scope()).unwrap();
        let env = env(&mut n, "1");
        let v = n.eval(&e, &env).unwrap();
        assert_eq!(sci(&v.re, 10), "8e0");
        assert!(v.im.is_zero());
    }

    #[test]
    fn pole_is_reported() {
        let mut n = Numeric::new(256);
        let e = parse_expr("1/(1 - t)", &scope()).unwrap();
        let env = env(&mut n, "1");
        assert_eq!(n.eval(&e, &env).unwrap_err(), NumError::Pole(128));
    }

    #[test]
    fn scientific_strings() {
        let mut n = Numeric::new(128);
        assert_eq!(sci(&n.decimal("0.00125"), 5), "1.25e-3");
        assert_eq!(sci(&n.decimal("-12345.5"), 3), "-1.23e4");
        assert!((to_f64(&n.decimal("3.5e-60")) - 3.5e-60).abs() < 1e-70);
    }
}
