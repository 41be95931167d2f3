//! Symbolic differentiation and linear differential operators.

use thiserror::Error;

use crate::algebra::{AlgebraError, CanonicalRF, Canonicalizer};
use crate::expr::{Atom, AtomKind, Expr, Node};

pub use crate::ivp::LinOp;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CalculusError {
    #[error("cannot differentiate an open expression: {0}")]
    Open(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Derivative with respect to the variable named `var`.
pub fn differentiate(e: &Expr, var: &str) -> Result<Expr, CalculusError> {
    Ok(match e.node() {
        Node::Constant(_) | Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if &*v.name == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Atom(a) => {
            let q = a.arg.coeff_of(var);
            if num_traits::Zero::is_zero(&q) {
                return Ok(Expr::zero());
            }
            let q = Expr::rational(q);
            match a.kind {
                AtomKind::Sin => Expr::product([q, Expr::atom(Atom::cos(a.arg.clone()))]),
                AtomKind::Cos => Expr::product([Expr::int(-1), q, Expr::atom(Atom::sin(a.arg.clone()))]),
                AtomKind::ExpI => Expr::product([Expr::i(), q, e.clone()]),
            }
        }
        Node::Sum(xs) => Expr::sum(xs.iter().map(|x| differentiate(x, var)).collect::<Result<Vec<_>, _>>()?),
        Node::Product(xs) => {
            let mut terms = Vec::new();
            for (j, x) in xs.iter().enumerate() {
                let dx = differentiate(x, var)?;
                if dx.is_zero() {
                    continue;
                }
                let mut fs = xs.clone();
                fs[j] = dx;
                terms.push(Expr::product(fs));
            }
            Expr::sum(terms)
        }
        Node::IntPow(b, k) => {
            let db = differentiate(b, var)?;
            if db.is_zero() {
                return Ok(Expr::zero());
            }
            Expr::product([Expr::int(*k), Expr::pow(b.clone(), k - 1), db])
        }
        _ => return Err(CalculusError::Open(e.to_string())),
    })
}

/// `y, y', ..., y^(m)` by repeated differentiation.
pub fn derivatives(y: &Expr, var: &str, m: usize) -> Result<Vec<Expr>, CalculusError> {
    let mut out = vec![y.clone()];
    for _ in 0..m {
        let next = differentiate(out.last().unwrap(), var)?;
        out.push(next);
    }
    Ok(out)
}

/// Canonical forms of an operator application, kept for certificates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorApplication {
    /// `y, y', ..., y^(m)`.
    pub stages: Vec<CanonicalRF>,
    pub coeffs: Vec<CanonicalRF>,
    pub force: CanonicalRF,
    /// `y^(m) + a_1 y^(m-1) + ... + a_m y - b`.
    pub image: CanonicalRF,
}

impl OperatorApplication {
    /// The summands `y^(m)`, `a_1 y^(m-1)`, ..., `a_m y`, `-b`.
    pub fn terms(&self) -> Vec<CanonicalRF> {
        operator_terms(&self.stages, &self.coeffs, &self.force)
    }
}

pub fn operator_terms(stages: &[CanonicalRF], coeffs: &[CanonicalRF], force: &CanonicalRF) -> Vec<CanonicalRF> {
    let m = coeffs.len();
    let mut out = vec![stages[m].clone()];
    for (i, a) in coeffs.iter().enumerate() {
        out.push(a.mul(&stages[m - 1 - i]));
    }
    out.push(force.neg());
    out
}

/// Applies `op` to `y` through expression-level differentiation.
pub fn apply_operator_with(
    op: &LinOp,
    y: &Expr,
    canon: &mut Canonicalizer,
) -> Result<OperatorApplication, CalculusError> {
    let ds = derivatives(y, &op.var.name, op.order)?;
    let stages = ds.iter().map(|d| canon.run(d)).collect::<Result<Vec<_>, _>>()?;
    let coeffs = op.coeffs.iter().map(|a| canon.run(a)).collect::<Result<Vec<_>, _>>()?;
    let force = canon.run(&op.force)?;
    let image = operator_terms(&stages, &coeffs, &force).iter().fold(CanonicalRF::zero(), |acc, t| acc.add(t));
    Ok(OperatorApplication { stages, coeffs, force, image })
}

/// `canonicalize(y^(m) + a_1 y^(m-1) + ... + a_m y - b)`.
pub fn apply_operator(op: &LinOp, y: &Expr, ctx: crate::algebra::AlgebraCtx) -> Result<CanonicalRF, CalculusError> {
    Ok(apply_operator_with(op, y, &mut Canonicalizer::new(ctx))?.image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{canonicalize, AlgebraCtx};
    use crate::expr::{expand_finite_sums, parse_expr, Bindings, Name, Scope, SymbolKind, VarSymbol};

    fn scope() -> Scope {
        Scope::new()
            .with("t", SymbolKind::OdeVar)
            .with("r", SymbolKind::ParamVar)
            .with("c", SymbolKind::Const)
            .with("n", SymbolKind::IntParam)
    }

    fn ex(src: &str) -> Expr {
        let b: Bindings = [(Name::from("n"), 3)].into_iter().collect();
        expand_finite_sums(&parse_expr(src, &scope()).unwrap(), &b).unwrap()
    }

    fn zero(e: &Expr) -> bool {
        canonicalize(e, AlgebraCtx::for_exprs([e])).unwrap().is_zero()
    }

    #[test]
    fn pythagoras_derivative_vanishes() {
        let d = differentiate(&ex("cos(t)^2 + sin(t)^2 - 1"), "t").unwrap();
        assert!(zero(&d));
    }

    #[test]
    fn power_rule() {
        let d = differentiate(&ex("t^5"), "t").unwrap();
        assert!(zero(&Expr::sub(d, ex("5*t^4"))));
        let d = differentiate(&ex("(1 + t)^(-2)"), "t").unwrap();
        assert!(zero(&Expr::sub(d, ex("-2/(1 + t)^3"))));
    }

    #[test]
    fn other_variables_are_constant() {
        let d = differentiate(&ex("1 + r + r^2 + r^3"), "r").unwrap();
        assert!(zero(&Expr::sub(d, ex("1 + 2*r + 3*r^2"))));
        assert!(differentiate(&ex("r*c + sin(c)"), "t").unwrap().is_zero());
    }

    #[test]
    fn de_moivre_square() {
        let d = differentiate(&ex("(cos(t) + i*sin(t))^2"), "t").unwrap();
        assert!(zero(&Expr::sub(d, ex("2*(cos(t) + i*sin(t))*(-sin(t) + i*cos(t))"))));
    }

    #[test]
    fn binomial_operator_annihilates() {
        let t = VarSymbol::ode("t");
        let op = LinOp::new(t, vec![ex("-n/(1 + t)")], Expr::zero());
        let y = ex("(1 + t)^n - 1 - sum(k, 1, n, binom(n, k)*t^k)");
        assert!(apply_operator(&op, &y, AlgebraCtx::default()).unwrap().is_zero());
        let y = ex("(1 + t)^n");
        assert!(apply_operator(&op, &y, AlgebraCtx::default()).unwrap().is_zero());
    }

    #[test]
    fn second_order_trig_addition() {
        let op = LinOp::new(VarSymbol::ode("t"), vec![Expr::zero(), Expr::one()], Expr::zero());
        let y = ex("sin(t + c) - sin(t)*cos(c) - cos(t)*sin(c)");
        assert!(apply_operator(&op, &y, AlgebraCtx::default()).unwrap().is_zero());
    }

    #[test]
    fn zero_function() {
        let op = LinOp::new(VarSymbol::ode("t"), vec![ex("-i*n")], Expr::zero());
        assert!(apply_operator(&op, &Expr::zero(), AlgebraCtx::default()).unwrap().is_zero());
    }
}
