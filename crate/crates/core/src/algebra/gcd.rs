//! Multivariate polynomial gcd over the Gaussian rationals.
//!
//! Monomial content is split off first, then generators that occur in only
//! one argument are eliminated through coefficient gcds. The remaining
//! problem is solved recursively: content and primitive part with respect to
//! a main generator, a primitive pseudo-remainder sequence on the primitive
//! parts, and dense Euclid when a single generator is left.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::poly::{Gen, GenRef, Monomial, MultiPoly};
use crate::scalar::GaussianRational;

/// Monic greatest common divisor; `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() || a == b {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let m = ma.gcd(&mb);
    let a1 = a.div_monomial(&ma).unwrap();
    let b1 = b.div_monomial(&mb).unwrap();
    let g = gcd_no_monomial(&a1, &b1);
    g.mul_term(&m, &GaussianRational::one()).monic()
}

fn gcd_no_monomial(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    if a.len() <= b.len() {
        if b.div_exact(a).is_some() {
            return a.monic();
        }
    } else if a.div_exact(b).is_some() {
        return b.monic();
    }
    let ga = a.gens();
    let gb = b.gens();
    if let Some(x) = ga.difference(&gb).next() {
        return gcd_with_coeffs(b, a, x);
    }
    if let Some(x) = gb.difference(&ga).next() {
        return gcd_with_coeffs(a, b, x);
    }
    if ga.len() == 1 {
        let x = ga.iter().next().unwrap();
        return univariate_gcd(a, b, x);
    }
    let x = main_generator(a, b, &ga);
    let (ca, pa) = content_primitive(a, &x);
    let (cb, pb) = content_primitive(b, &x);
    let c = gcd(&ca, &cb);
    let p = primitive_prs(pa, pb, &x);
    c.mul(&p).monic()
}

/// gcd(b, a) where `x` occurs in `a` only: gcd(b, every x-coefficient of a).
fn gcd_with_coeffs(b: &MultiPoly, a: &MultiPoly, x: &Gen) -> MultiPoly {
    let mut g = b.clone();
    let mut coeffs: Vec<MultiPoly> = a.coeffs_in(x).into_values().collect();
    coeffs.sort_by_key(|c| c.len());
    for c in coeffs {
        g = gcd(&g, &c);
        if g.is_constant() {
            return MultiPoly::one();
        }
    }
    g.monic()
}

/// The generator of least degree keeps pseudo-remainder sequences short; with a
/// high-degree main generator the coefficients in the others blow up.
fn main_generator(a: &MultiPoly, b: &MultiPoly, gens: &BTreeSet<GenRef>) -> GenRef {
    gens.iter()
        .min_by_key(|g| (a.degree_in(g).min(b.degree_in(g)), a.degree_in(g).max(b.degree_in(g)), (*g).clone()))
        .unwrap()
        .clone()
}

/// Content with respect to `x` (gcd of the x-coefficients) and primitive part.
fn content_primitive(p: &MultiPoly, x: &Gen) -> (MultiPoly, MultiPoly) {
    let mut coeffs: Vec<MultiPoly> = p.coeffs_in(x).into_values().collect();
    coeffs.sort_by_key(|c| c.len());
    let mut c = MultiPoly::zero();
    for k in &coeffs {
        c = gcd(&c, k);
        if c.is_constant() {
            return (MultiPoly::one(), p.clone());
        }
    }
    let pp = p.div_exact(&c).expect("content divides polynomial");
    (c, pp)
}

fn primitive_prs(mut p: MultiPoly, mut q: MultiPoly, x: &GenRef) -> MultiPoly {
    if p.degree_in(x) < q.degree_in(x) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = pseudo_rem(&p, &q, x);
        if r.is_zero() {
            return content_primitive(&q, x).1.monic();
        }
        if r.degree_in(x) == 0 {
            return MultiPoly::one();
        }
        p = q;
        q = content_primitive(&r, x).1;
    }
}

/// Sparse pseudo-remainder of `p` by `q` in `x`.
fn pseudo_rem(p: &MultiPoly, q: &MultiPoly, x: &GenRef) -> MultiPoly {
    let dq = q.degree_in(x);
    let qc = q.coeffs_in(x);
    let lc = qc.get(&dq).cloned().unwrap_or_default();
    let mut r = p.clone();
    loop {
        let dr = r.degree_in(x);
        if r.is_zero() || dr < dq {
            return r;
        }
        let lr = r.coeffs_in(x).remove(&dr).unwrap_or_default();
        let shift = Monomial::of(x.clone(), dr - dq);
        r = r.mul(&lc).sub(&q.mul(&lr).mul_term(&shift, &GaussianRational::one()));
    }
}

fn to_dense(p: &MultiPoly, x: &Gen) -> Vec<GaussianRational> {
    let d = p.degree_in(x) as usize;
    let mut v = vec![GaussianRational::zero(); d + 1];
    for (m, c) in p.terms() {
        v[m.degree(x) as usize] = c.clone();
    }
    v
}

fn from_dense(v: &[GaussianRational], x: &GenRef) -> MultiPoly {
    MultiPoly::from_terms(v.iter().enumerate().map(|(e, c)| (Monomial::of(x.clone(), e as u32), c.clone())))
}

fn trim(v: &mut Vec<GaussianRational>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

/// Remainder of dense `a` by dense nonzero `b`.
pub(crate) fn dense_rem(mut a: Vec<GaussianRational>, b: &[GaussianRational]) -> Vec<GaussianRational> {
    let db = b.len() - 1;
    let inv = b[db].inv().unwrap();
    trim(&mut a);
    while a.len() > db {
        let k = a.len() - 1 - db;
        let f = &a[a.len() - 1] * &inv;
        for (j, bj) in b.iter().enumerate() {
            if !bj.is_zero() {
                a[k + j] -= &(&f * bj);
            }
        }
        a.pop();
        trim(&mut a);
    }
    a
}

fn univariate_gcd(a: &MultiPoly, b: &MultiPoly, x: &GenRef) -> MultiPoly {
    let mut u = to_dense(a, x);
    let mut v = to_dense(b, x);
    if u.len() < v.len() {
        std::mem::swap(&mut u, &mut v);
    }
    while !v.is_empty() {
        let r = dense_rem(u, &v);
        u = v;
        v = r;
        // Keep remainders monic to limit coefficient growth.
        if let Some(lead) = v.last().cloned() {
            let inv = lead.inv().unwrap();
            for c in v.iter_mut() {
                *c = &*c * &inv;
            }
        }
    }
    from_dense(&u, x).monic()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarRole;
    use std::sync::Arc;

    fn g(name: &str) -> MultiPoly {
        MultiPoly::gen(Arc::new(Gen::Var { role: VarRole::Ode, name: name.into() }))
    }

    fn k(n: i64) -> MultiPoly {
        MultiPoly::constant(GaussianRational::from_int(n))
    }

    #[test]
    fn univariate_common_factor() {
        let t = g("t");
        let a = t.add(&k(1)).pow(3).mul(&t.sub(&k(2)));
        let b = t.add(&k(1)).pow(2).mul(&t.add(&k(5)));
        assert_eq!(gcd(&a, &b), t.add(&k(1)).pow(2));
    }

    #[test]
    fn multivariate_common_factor() {
        let (t, u, w) = (g("t"), g("u"), g("w"));
        let f = t.mul(&u).add(&w).sub(&k(1));
        let a = f.mul(&t.add(&u));
        let b = f.mul(&t.sub(&w)).mul(&u);
        assert_eq!(gcd(&a, &b), f.monic());
        assert!(gcd(&t.add(&u), &t.sub(&u)).is_one());
    }

    #[test]
    fn monomial_content_is_kept() {
        let (t, u) = (g("t"), g("u"));
        let a = t.pow(2).mul(&u);
        let b = t.mul(&u.pow(3)).mul(&t.add(&k(1)));
        assert_eq!(gcd(&a, &b), t.mul(&u));
    }

    #[test]
    fn gaussian_coefficients() {
        let t = g("t");
        let i = MultiPoly::constant(GaussianRational::i());
        let a = t.sub(&i).mul(&t.add(&i));
        let b = t.sub(&i).pow(2);
        assert_eq!(gcd(&a, &b), t.sub(&i));
    }
}
