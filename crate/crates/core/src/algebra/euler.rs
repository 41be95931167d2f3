//! Rewriting between complex exponentials and sines and cosines.

use crate::expr::{Atom, AtomKind, Expr, Node};
use crate::scalar::GaussianRational;

use super::{AlgebraCtx, AlgebraError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ExpToTrig,
    TrigToExp,
}

/// A rewritten expression and whether the Euler identity was used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rewritten {
    pub expr: Expr,
    pub uses_euler: bool,
}

/// `exp(i*x) -> cos(x) + i*sin(x)`, or `sin(x) -> (E - 1/E)/(2i)` and
/// `cos(x) -> (E + 1/E)/2` with `E = exp(i*x)`.
pub fn euler_rewrite(e: &Expr, direction: Direction, ctx: AlgebraCtx) -> Result<Rewritten, AlgebraError> {
    let mut used = false;
    let expr = rewrite(e, direction, ctx, &mut used)?;
    Ok(Rewritten { expr, uses_euler: used })
}

fn rewrite(e: &Expr, dir: Direction, ctx: AlgebraCtx, used: &mut bool) -> Result<Expr, AlgebraError> {
    Ok(match e.node() {
        Node::Atom(a) => match (dir, a.kind) {
            (Direction::ExpToTrig, AtomKind::ExpI) => {
                *used = true;
                Expr::sum([
                    Expr::atom(Atom::cos(a.arg.clone())),
                    Expr::product([Expr::i(), Expr::atom(Atom::sin(a.arg.clone()))]),
                ])
            }
            (Direction::TrigToExp, AtomKind::Sin | AtomKind::Cos) => {
                for w in a.arg.frequencies() {
                    let s = w * crate::scalar::rat_int(ctx.base_den as i64);
                    if !s.is_integer() {
                        return Err(AlgebraError::IndivisibleFrequency(a.to_string(), ctx.base_den));
                    }
                }
                *used = true;
                let pos = Expr::atom(Atom::expi(a.arg.clone()));
                let neg = Expr::atom(Atom::expi(a.arg.neg()));
                if a.kind == AtomKind::Sin {
                    let k = GaussianRational::new(num_traits::Zero::zero(), crate::scalar::rat(-1, 2));
                    Expr::product([Expr::constant(k), Expr::sub(pos, neg)])
                } else {
                    Expr::product([Expr::rational(crate::scalar::rat(1, 2)), Expr::add(pos, neg)])
                }
            }
            _ => e.clone(),
        },
        Node::Sum(xs) => Expr::sum(xs.iter().map(|x| rewrite(x, dir, ctx, used)).collect::<Result<Vec<_>, _>>()?),
        Node::Product(xs) => {
            Expr::product(xs.iter().map(|x| rewrite(x, dir, ctx, used)).collect::<Result<Vec<_>, _>>()?)
        }
        Node::IntPow(b, k) => Expr::pow(rewrite(b, dir, ctx, used)?, *k),
        _ if e.is_closed() => e.clone(),
        _ => return Err(AlgebraError::Open(e.to_string())),
    })
}
