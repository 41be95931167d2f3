//! Real and imaginary parts of normal forms over real generators.

use super::poly::MultiPoly;
use super::{AlgebraError, CanonicalRF};
use crate::scalar::GaussianRational;

fn parts(p: &MultiPoly) -> (MultiPoly, MultiPoly) {
    (
        p.map_coeffs(|c| GaussianRational::real(c.re.clone())),
        p.map_coeffs(|c| GaussianRational::real(c.im.clone())),
    )
}

/// `(Re r, Im r)` assuming every generator is real-valued.
///
/// Fails on exponential generators; those must be rewritten first.
pub fn split_real_imag(r: &CanonicalRF) -> Result<(CanonicalRF, CanonicalRF), AlgebraError> {
    if let Some(g) = r.gens().into_iter().find(|g| !g.is_real()) {
        return Err(AlgebraError::Open(format!("complex generator {g} must be rewritten before splitting")));
    }
    let (a, b) = parts(r.num());
    if r.den().has_only_real_coeffs() {
        let d = r.den().clone();
        return Ok((CanonicalRF::new(a, d.clone())?, CanonicalRF::new(b, d)?));
    }
    // (a + ib) / (c + id) = ((ac + bd) + i(bc - ad)) / (c^2 + d^2)
    let (c, d) = parts(r.den());
    let norm = c.mul(&c).add(&d.mul(&d));
    let re = a.mul(&c).add(&b.mul(&d));
    let im = b.mul(&c).sub(&a.mul(&d));
    Ok((CanonicalRF::new(re, norm.clone())?, CanonicalRF::new(im, norm)?))
}
