use std::collections::BTreeMap;

use thiserror::Error;

use super::{expr_to_i64, Expr, ExprError, Name, Node};

/// Integer parameter values by name.
pub type Bindings = BTreeMap<Name, i64>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExpandError {
    #[error("unresolved integer parameter `{0}`")]
    Unresolved(String),
    #[error("summation bound `{0}` is not an integer")]
    NonIntegerBound(String),
    #[error("sum over `{index}` has upper bound {upper} below lower bound {lower} minus one")]
    BadRange { index: String, lower: i64, upper: i64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Substitutes `bindings`, unrolls every `sum(...)` and applies deferred functions.
///
/// The result is closed except for lemma references, which the prover resolves.
pub fn expand_finite_sums(e: &Expr, bindings: &Bindings) -> Result<Expr, ExpandError> {
    let mut env = bindings.clone();
    go(e, &mut env)
}

fn go(e: &Expr, env: &mut Bindings) -> Result<Expr, ExpandError> {
    Ok(match e.node() {
        Node::Constant(_) | Node::Var(_) | Node::Const(_) | Node::Atom(_) | Node::Pi | Node::LemmaRef { .. } => e.clone(),
        Node::IntSym(n) => Expr::int(*env.get(n).ok_or_else(|| ExpandError::Unresolved(n.to_string()))?),
        Node::Sum(xs) => Expr::sum(xs.iter().map(|x| go(x, env)).collect::<Result<Vec<_>, _>>()?),
        Node::Product(xs) => Expr::product(xs.iter().map(|x| go(x, env)).collect::<Result<Vec<_>, _>>()?),
        Node::IntPow(b, k) => Expr::pow(go(b, env)?, *k),
        Node::Pow(b, x) => Expr::pow_expr(go(b, env)?, go(x, env)?)?,
        Node::Apply(f, args) => {
            let args = args.iter().map(|a| go(a, env)).collect::<Result<Vec<_>, _>>()?;
            Expr::apply(*f, args)?
        }
        Node::FiniteSum { index, lower, upper, body } => {
            let bound = |b: &Expr, env: &mut Bindings| -> Result<i64, ExpandError> {
                let v = go(b, env)?;
                expr_to_i64(&v).ok_or_else(|| ExpandError::NonIntegerBound(v.to_string()))
            };
            let lo = bound(lower, env)?;
            let hi = bound(upper, env)?;
            if hi < lo - 1 {
                return Err(ExpandError::BadRange { index: index.to_string(), lower: lo, upper: hi });
            }
            let saved = env.get(index).copied();
            let mut terms = Vec::with_capacity((hi - lo + 1).max(0) as usize);
            for k in lo..=hi {
                env.insert(index.clone(), k);
                terms.push(go(body, env)?);
            }
            match saved {
                Some(v) => env.insert(index.clone(), v),
                None => env.remove(index),
            };
            Expr::sum(terms)
        }
    })
}
