//! Reduced rational functions.

use std::fmt;

use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::{Gen, GenRef, Monomial, MultiPoly};
use super::AlgebraError;
use crate::scalar::GaussianRational;

/// `num / den` with `gcd(num, den) = 1` and a monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalRF {
    num: MultiPoly,
    den: MultiPoly,
}

impl CanonicalRF {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        Ok(Self::normalized(num, den))
    }

    /// Builds from an already coprime pair, fixing the denominator's leading coefficient.
    fn normalized(num: MultiPoly, den: MultiPoly) -> Self {
        let lc = den.leading_coeff();
        if lc.is_one() {
            CanonicalRF { num, den }
        } else {
            let inv = lc.inv().unwrap();
            CanonicalRF { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn zero() -> Self {
        CanonicalRF { num: MultiPoly::zero(), den: MultiPoly::one() }
    }

    pub fn one() -> Self {
        Self::from_poly(MultiPoly::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::from_poly(MultiPoly::constant(c))
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        CanonicalRF { num: p, den: MultiPoly::one() }
    }

    pub fn gen(g: GenRef) -> Self {
        Self::from_poly(MultiPoly::gen(g))
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    pub fn into_parts(self) -> (MultiPoly, MultiPoly) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one_rf(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<&GaussianRational> {
        if self.den.is_one() {
            if self.num.is_zero() {
                return None;
            }
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.is_zero() || self.as_constant().is_some()
    }

    pub fn neg(&self) -> Self {
        CanonicalRF { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn scale(&self, k: &GaussianRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        CanonicalRF { num: self.num.scale(k), den: self.den.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return Self::new(self.num.add(&o.num), self.den.clone()).unwrap();
        }
        if self.den.is_one() {
            return CanonicalRF { num: self.num.mul(&o.den).add(&o.num), den: o.den.clone() };
        }
        if o.den.is_one() {
            return CanonicalRF { num: o.num.mul(&self.den).add(&self.num), den: self.den.clone() };
        }
        let g = gcd(&self.den, &o.den);
        if g.is_one() {
            let num = self.num.mul(&o.den).add(&o.num.mul(&self.den));
            return Self::normalized(num, self.den.mul(&o.den));
        }
        let b1 = self.den.div_exact(&g).unwrap();
        let d1 = o.den.div_exact(&g).unwrap();
        let num = self.num.mul(&d1).add(&o.num.mul(&b1));
        if num.is_zero() {
            return Self::zero();
        }
        let h = gcd(&num, &g);
        let (num, g2) = if h.is_one() { (num, g) } else { (num.div_exact(&h).unwrap(), g.div_exact(&h).unwrap()) };
        Self::normalized(num, b1.mul(&d1).mul(&g2))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return Self::from_poly(self.num.mul(&o.num));
        }
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let div = |p: &MultiPoly, g: &MultiPoly| if g.is_one() { p.clone() } else { p.div_exact(g).unwrap() };
        let num = div(&self.num, &g1).mul(&div(&o.num, &g2));
        let den = div(&self.den, &g2).mul(&div(&o.den, &g1));
        Self::normalized(num, den)
    }

    pub fn inv(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, o: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, k: i64) -> Result<Self, AlgebraError> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let e = u32::try_from(k.unsigned_abs()).map_err(|_| AlgebraError::ExponentTooLarge(k))?;
        if e == 0 {
            return Ok(Self::one());
        }
        Ok(CanonicalRF { num: base.num.pow(e), den: base.den.pow(e) }.renormalize())
    }

    fn renormalize(self) -> Self {
        Self::normalized(self.num, self.den)
    }

    /// Derivative under a generator derivation `d(g)`.
    pub fn derive(&self, d: &dyn Fn(&GenRef) -> MultiPoly) -> Self {
        let dn = poly_derive(&self.num, d);
        if self.den.is_one() {
            return Self::from_poly(dn);
        }
        let dd = poly_derive(&self.den, d);
        let num = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Self::new(num, self.den.mul(&self.den)).unwrap()
    }

    pub fn gens(&self) -> std::collections::BTreeSet<GenRef> {
        let mut g = self.num.gens();
        g.extend(self.den.gens());
        g
    }

    pub fn mentions(&self, pred: impl Fn(&Gen) -> bool) -> bool {
        self.gens().iter().any(|g| pred(g))
    }
}

/// Applies the derivation extending `d` from generators to polynomials.
pub fn poly_derive(p: &MultiPoly, d: &dyn Fn(&GenRef) -> MultiPoly) -> MultiPoly {
    let mut out = MultiPoly::zero();
    for (m, c) in p.terms() {
        for (g, e) in m.factors() {
            let dg = d(g);
            if dg.is_zero() {
                continue;
            }
            let rest = m.div(&Monomial::of(g.clone(), 1)).unwrap();
            let k = c * &GaussianRational::from_int(i64::from(*e));
            out = out.add(&dg.mul_term(&rest, &k));
        }
    }
    out
}

impl fmt::Display for CanonicalRF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}
