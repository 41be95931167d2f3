//! Sparse multivariate polynomials over Gaussian rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::expr::{LinearArg, Name, VarRole};
use crate::scalar::{rational_to_string, GaussianRational};

/// A polynomial generator. The derived order is the monomial order's
/// generator order: variables (ODE variable first), exponential bases,
/// sine atoms, cosine atoms, constant exponentials, constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    Var { role: VarRole, name: Name },
    /// `exp(i * var / den)`.
    ExpBase { var: Name, den: u64 },
    Sin(LinearArg),
    Cos(LinearArg),
    /// `exp(i * name / den)`.
    ExpConst { name: Name, den: u64 },
    /// `exp(i * pi / den)`.
    ExpPi { den: u64 },
    Const(Name),
}

impl Gen {
    /// Stable textual key used in certificates.
    pub fn key(&self) -> String {
        match self {
            Gen::Var { name, .. } | Gen::Const(name) => name.to_string(),
            Gen::ExpBase { var, den } | Gen::ExpConst { name: var, den } => {
                if *den == 1 {
                    format!("exp(i*{var})")
                } else {
                    format!("exp(i*{var}/{den})")
                }
            }
            Gen::ExpPi { den } => format!("exp(i*pi/{den})"),
            Gen::Sin(a) => format!("sin({a})"),
            Gen::Cos(a) => format!("cos({a})"),
        }
    }

    /// Real-valued for real values of all symbols.
    pub fn is_real(&self) -> bool {
        !matches!(self, Gen::ExpBase { .. } | Gen::ExpConst { .. } | Gen::ExpPi { .. })
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

pub type GenRef = Arc<Gen>;

fn gen_cmp(a: &GenRef, b: &GenRef) -> Ordering {
    if Arc::ptr_eq(a, b) {
        Ordering::Equal
    } else {
        a.as_ref().cmp(b.as_ref())
    }
}

/// Power product with generators sorted ascending and no zero exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(GenRef, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn of(g: GenRef, e: u32) -> Self {
        if e == 0 {
            Self::one()
        } else {
            Monomial(vec![(g, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(GenRef, u32)] {
        &self.0
    }

    pub fn degree(&self, g: &Gen) -> u32 {
        self.0.iter().find(|(h, _)| h.as_ref() == g).map_or(0, |(_, e)| *e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        if o.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return o.clone();
        }
        let mut out = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < o.0.len() {
            let (ga, ea) = &self.0[i];
            let (gb, eb) = &o.0[j];
            match gen_cmp(ga, gb) {
                Ordering::Less => {
                    out.push((ga.clone(), *ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((gb.clone(), *eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((ga.clone(), ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.0[i..].iter().cloned());
        out.extend(o.0[j..].iter().cloned());
        Monomial(out)
    }

    /// `self / o` when `o` divides `self`.
    pub fn div(&self, o: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (g, e) in &self.0 {
            if j < o.0.len() {
                match gen_cmp(&o.0[j].0, g) {
                    Ordering::Less => return None,
                    Ordering::Equal => {
                        let f = o.0[j].1;
                        j += 1;
                        match e.cmp(&f) {
                            Ordering::Less => return None,
                            Ordering::Equal => continue,
                            Ordering::Greater => {
                                out.push((g.clone(), e - f));
                                continue;
                            }
                        }
                    }
                    Ordering::Greater => {}
                }
            }
            out.push((g.clone(), *e));
        }
        if j < o.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, o: &Monomial) -> Monomial {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < o.0.len() {
            match gen_cmp(&self.0[i].0, &o.0[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1.min(o.0[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Monomial(out)
    }

    /// Removes generator `g`, returning its exponent and the remainder.
    pub fn split_off(&self, g: &Gen) -> (u32, Monomial) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|(h, k)| {
                if h.as_ref() == g {
                    e = *k;
                    false
                } else {
                    true
                }
            })
            .cloned()
            .collect();
        (e, Monomial(rest))
    }
}

impl Ord for Monomial {
    /// Lexicographic in the generator order.
    fn cmp(&self, o: &Self) -> Ordering {
        let (a, b) = (&self.0, &o.0);
        let n = a.len().min(b.len());
        for k in 0..n {
            let (ga, ea) = &a[k];
            let (gb, eb) = &b[k];
            match gen_cmp(ga, gb) {
                Ordering::Equal => match ea.cmp(eb) {
                    Ordering::Equal => continue,
                    other => return other,
                },
                // The side holding the earlier generator has the larger exponent there.
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            }
        }
        a.len().cmp(&b.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Polynomial as a map from monomials to nonzero coefficients; the leading
/// term is the greatest monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn term(c: GaussianRational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { terms }
    }

    pub fn gen(g: GenRef) -> Self {
        Self::term(GaussianRational::one(), Monomial::of(g, 1))
    }

    pub fn gen_pow(g: GenRef, e: u32) -> Self {
        Self::term(GaussianRational::one(), Monomial::of(g, e))
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, GaussianRational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in it {
            p.add_term(m, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<&GaussianRational> {
        match self.terms.len() {
            1 => self.terms.get(&Monomial::one()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.is_zero() || self.as_constant().is_some()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &GaussianRational)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn leading(&self) -> Option<(&Monomial, &GaussianRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> GaussianRational {
        self.leading().map_or_else(GaussianRational::zero, |(_, c)| c.clone())
    }

    pub fn add_term(&mut self, m: Monomial, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &MultiPoly) -> MultiPoly {
        let (mut big, small) = if self.len() >= o.len() { (self.clone(), o) } else { (o.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c);
        }
        big
    }

    pub fn sub(&self, o: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &GaussianRational) -> MultiPoly {
        if k.is_zero() {
            return Self::zero();
        }
        if k.is_one() {
            return self.clone();
        }
        MultiPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul_term(&self, m: &Monomial, k: &GaussianRational) -> MultiPoly {
        if k.is_zero() {
            return Self::zero();
        }
        MultiPoly { terms: self.terms.iter().map(|(n, c)| (n.mul(m), c * k)).collect() }
    }

    pub fn mul(&self, o: &MultiPoly) -> MultiPoly {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if let Some(c) = o.as_constant() {
            return self.scale(c);
        }
        if let Some(c) = self.as_constant() {
            return o.scale(c);
        }
        let mut out = MultiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), &(ca * cb));
            }
        }
        out
    }

    pub fn pow(&self, mut e: u32) -> MultiPoly {
        let mut acc = MultiPoly::one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Generators occurring in some term.
    pub fn gens(&self) -> BTreeSet<GenRef> {
        self.terms.keys().flat_map(|m| m.factors().iter().map(|(g, _)| g.clone())).collect()
    }

    pub fn degree_in(&self, g: &Gen) -> u32 {
        self.terms.keys().map(|m| m.degree(g)).max().unwrap_or(0)
    }

    /// Coefficients with respect to `g`, indexed by exponent.
    pub fn coeffs_in(&self, g: &Gen) -> BTreeMap<u32, MultiPoly> {
        let mut out: BTreeMap<u32, MultiPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(g);
            out.entry(e).or_default().add_term(rest, c);
        }
        out
    }

    /// Inverse of [`MultiPoly::coeffs_in`].
    pub fn from_coeffs_in(g: &GenRef, coeffs: &BTreeMap<u32, MultiPoly>) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (e, c) in coeffs {
            let m = Monomial::of(g.clone(), *e);
            for (n, k) in &c.terms {
                out.add_term(n.mul(&m), k);
            }
        }
        out
    }

    /// Greatest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return Monomial::one() };
        let mut g = first.clone();
        for m in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub fn div_monomial(&self, m: &Monomial) -> Option<MultiPoly> {
        if m.is_one() {
            return Some(self.clone());
        }
        let mut terms = BTreeMap::new();
        for (n, c) in &self.terms {
            terms.insert(n.div(m)?, c.clone());
        }
        Some(MultiPoly { terms })
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &MultiPoly) -> Option<MultiPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.inv()?));
        }
        if d.len() == 1 {
            let (m, c) = d.leading().unwrap();
            return self.div_monomial(m).map(|q| q.scale(&c.inv().unwrap()));
        }
        let (dm, dc) = d.leading().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let dc_inv = dc.inv().unwrap();
        let mut r = self.clone();
        let mut q = MultiPoly::zero();
        while let Some((rm, rc)) = r.leading().map(|(m, c)| (m.clone(), c.clone())) {
            let m = rm.div(&dm)?;
            let c = &rc * &dc_inv;
            for (n, k) in &d.terms {
                r.add_term(n.mul(&m), &-(k * &c));
            }
            q.add_term(m, &c);
        }
        Some(q)
    }

    /// Divides by the leading coefficient.
    pub fn monic(&self) -> MultiPoly {
        match self.leading() {
            None => Self::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.inv().unwrap()),
        }
    }

    /// Coefficientwise map (used for conjugation and real/imaginary parts).
    pub fn map_coeffs(&self, f: impl Fn(&GaussianRational) -> GaussianRational) -> MultiPoly {
        MultiPoly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn has_only_real_coeffs(&self) -> bool {
        self.terms.values().all(|c| c.is_real())
    }

    /// Substitutes polynomials for generators; unmapped generators stay.
    pub fn substitute(&self, f: &dyn Fn(&GenRef) -> Option<MultiPoly>) -> MultiPoly {
        let mut cache: BTreeMap<(GenRef, u32), MultiPoly> = BTreeMap::new();
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let mut acc = MultiPoly::constant(c.clone());
            for (g, e) in m.factors() {
                let p = match cache.get(&(g.clone(), *e)) {
                    Some(p) => p.clone(),
                    None => {
                        let p = match f(g) {
                            Some(v) => v.pow(*e),
                            None => MultiPoly::gen_pow(g.clone(), *e),
                        };
                        cache.insert((g.clone(), *e), p.clone());
                        p
                    }
                };
                acc = acc.mul(&p);
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        out
    }

    /// Serializable `(coefficient, [(generator key, exponent)])` list, leading term first.
    pub fn to_records(&self) -> Vec<(GaussianRational, Vec<(String, u32)>)> {
        self.terms
            .iter()
            .rev()
            .map(|(m, c)| (c.clone(), m.factors().iter().map(|(g, e)| (g.key(), *e)).collect()))
            .collect()
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            let mono: Vec<String> = m
                .factors()
                .iter()
                .map(|(g, e)| if *e == 1 { g.key() } else { format!("{}^{}", g.key(), e) })
                .collect();
            let coeff = if c.is_real() { rational_to_string(&c.re) } else { format!("({c})") };
            if mono.is_empty() {
                write!(f, "{coeff}")?;
            } else {
                write!(f, "{coeff}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn var(name: &str) -> GenRef {
        Arc::new(Gen::Var { role: VarRole::Ode, name: name.into() })
    }

    fn c(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    #[test]
    fn lex_order_prefers_earlier_generators() {
        let t = var("t");
        let a = Arc::new(Gen::Const("a".into()));
        let m1 = Monomial::of(t.clone(), 1);
        let m2 = Monomial::of(a.clone(), 5);
        assert!(m1 > m2);
        assert!(Monomial::of(t.clone(), 2) > m1.mul(&m2));
        assert!(m2 > Monomial::one());
    }

    #[test]
    fn binomial_cube() {
        let t = var("t");
        let p = MultiPoly::gen(t.clone()).add(&MultiPoly::one());
        let cube = p.pow(3);
        let expected = MultiPoly::from_terms([
            (Monomial::one(), c(1)),
            (Monomial::of(t.clone(), 1), c(3)),
            (Monomial::of(t.clone(), 2), c(3)),
            (Monomial::of(t.clone(), 3), c(1)),
        ]);
        assert_eq!(cube, expected);
        assert_eq!(cube.leading_coeff(), GaussianRational::real(rat_int(1)));
    }

    #[test]
    fn exact_division() {
        let t = var("t");
        let a = Arc::new(Gen::Const("a".into()));
        let p = MultiPoly::gen(t.clone()).add(&MultiPoly::gen(a.clone()));
        let q = MultiPoly::gen(t.clone()).sub(&MultiPoly::one());
        let prod = p.mul(&q);
        assert_eq!(prod.div_exact(&q), Some(p.clone()));
        assert_eq!(prod.div_exact(&p), Some(q.clone()));
        assert_eq!(p.div_exact(&q), None);
    }
}
