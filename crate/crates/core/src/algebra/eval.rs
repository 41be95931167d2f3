//! Exact evaluation of normal forms at an initial point.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use super::poly::{Gen, GenRef, MultiPoly};
use super::{quarter_turns, trig_rf, AlgebraError, CanonicalRF};
use crate::expr::AtomKind;
use crate::ivp::Point;
use crate::scalar::{GaussianRational, Rational};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("denominator vanishes at {0}")]
    SingularEvaluation(String),
    #[error("no exact value for {0} at {1}")]
    UnsupportedEvaluation(String, String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

fn value_of(g: &Gen, var: &str, t0: &Point) -> Result<Option<MultiPoly>, EvalError> {
    let unsupported = || EvalError::UnsupportedEvaluation(g.key(), t0.to_string());
    Ok(match g {
        Gen::Var { name, .. } if &**name == var => match t0 {
            Point::Rational(q) => Some(MultiPoly::constant(GaussianRational::real(q.clone()))),
            Point::PiMultiple(q) if q.is_zero() => Some(MultiPoly::zero()),
            Point::PiMultiple(_) => return Err(unsupported()),
        },
        Gen::ExpBase { var: v, den } if &**v == var => {
            let turns = match t0 {
                Point::Rational(q) if q.is_zero() => Some(0),
                Point::Rational(_) => None,
                Point::PiMultiple(p) => quarter_turns(&(p / Rational::from_integer((*den).into()))),
            };
            match turns {
                Some(k) => Some(MultiPoly::constant(GaussianRational::i_pow(k))),
                None => return Err(unsupported()),
            }
        }
        Gen::Sin(arg) | Gen::Cos(arg) if arg.var.as_deref() == Some(var) => {
            let mut shifted = arg.shift();
            match t0 {
                Point::Rational(q) if q.is_zero() => {}
                Point::Rational(_) => return Err(unsupported()),
                Point::PiMultiple(p) => shifted.pi = &shifted.pi + &arg.coeff * p,
            }
            if quarter_turns(&shifted.pi).is_none() {
                return Err(unsupported());
            }
            let kind = if matches!(g, Gen::Sin(_)) { AtomKind::Sin } else { AtomKind::Cos };
            let r = trig_rf(kind, &shifted);
            Some(r.num().clone())
        }
        _ => None,
    })
}

/// Value of `r` with the variable `var` set to `t0`.
///
/// The result may still mention constants, other variables and constant atoms.
pub fn eval_at(r: &CanonicalRF, var: &str, t0: &Point) -> Result<CanonicalRF, EvalError> {
    let mut values: BTreeMap<GenRef, MultiPoly> = BTreeMap::new();
    for g in r.gens() {
        if let Some(v) = value_of(&g, var, t0)? {
            values.insert(g, v);
        }
    }
    if values.is_empty() {
        return Ok(r.clone());
    }
    let lookup = |g: &GenRef| values.get(g).cloned();
    let den = r.den().substitute(&lookup);
    if den.is_zero() {
        return Err(EvalError::SingularEvaluation(format!("{var} = {t0}")));
    }
    let num = r.num().substitute(&lookup);
    Ok(CanonicalRF::new(num, den)?)
}

