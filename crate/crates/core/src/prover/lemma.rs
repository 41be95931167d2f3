//! Certified lemmas and the identities built from them.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{
    canonicalize, euler_rewrite, rf_to_expr, split_real_imag, AlgebraCtx, AlgebraError, CanonicalRF, Direction,
};
use crate::calculus::{differentiate, CalculusError};
use thiserror::Error;

use crate::expr::{parse_document, Bindings, Expr, Name, ParseError, Side, VarSymbol};
use crate::ivp::{IdentityDecl, IntParam, Part};

/// A certified identity instance, with sides already expanded.
#[derive(Clone, Debug)]
pub struct CertifiedLemma {
    pub decl: Arc<IdentityDecl>,
    pub bindings: Bindings,
    pub lhs: Expr,
    pub rhs: Expr,
    pub certificate_hash: String,
}

impl CertifiedLemma {
    pub fn side(&self, side: Side) -> &Expr {
        match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }

    /// A side written in variable `var` instead of the lemma's own.
    pub fn side_in(&self, side: Side, var: &VarSymbol) -> Expr {
        let e = self.side(side);
        if self.decl.var.name == var.name && self.decl.var.role == var.role {
            e.clone()
        } else {
            e.rename_var(&self.decl.var.name, var)
        }
    }
}

/// Certified instances by identity name.
#[derive(Clone, Debug, Default)]
pub struct LemmaStore {
    entries: BTreeMap<Name, Vec<CertifiedLemma>>,
}

impl LemmaStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lemma: CertifiedLemma) {
        let v = self.entries.entry(lemma.decl.name.clone()).or_default();
        v.retain(|l| l.bindings != lemma.bindings);
        v.push(lemma);
    }

    pub fn remove(&mut self, name: &str) {
        self.entries.remove(name);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.get(name).is_some_and(|v| !v.is_empty())
    }

    /// The instance of `name` whose parameters agree with `bindings`.
    ///
    /// Parameters of the lemma not bound by the caller take their defaults.
    pub fn get(&self, name: &str, bindings: &Bindings) -> Option<&CertifiedLemma> {
        self.entries.get(name)?.iter().find(|l| {
            l.decl.params.iter().all(|p| {
                let want = bindings.get(&p.name).copied().unwrap_or(p.value);
                l.bindings.get(&p.name) == Some(&want)
            })
        })
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sides `multiplier * d/dvar` of the base's sides, in variable `var`.
pub fn derived_sides(base: &CertifiedLemma, multiplier: &Expr, var: &VarSymbol) -> Result<(Expr, Expr), CalculusError> {
    let side = |s: Side| -> Result<Expr, CalculusError> {
        let e = base.side_in(s, var);
        Ok(Expr::mul(multiplier.clone(), differentiate(&e, &var.name)?))
    };
    Ok((side(Side::Lhs)?, side(Side::Rhs)?))
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LemmaError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("generated declaration does not parse: {0}")]
    Parse(#[from] ParseError),
}

/// Header lines of a generated declaration block.
fn header(var: &VarSymbol, pvars: &[&VarSymbol], decl: &IdentityDecl, params: &[IntParam]) -> String {
    let mut out = format!("    var {};\n", var.name);
    if !pvars.is_empty() {
        let v: Vec<&str> = pvars.iter().map(|v| &*v.name).collect();
        out += &format!("    pvar {};\n", v.join(", "));
    }
    if !decl.consts.is_empty() {
        let c: Vec<&str> = decl.consts.iter().map(|c| &*c.name).collect();
        out += &format!("    const {};\n", c.join(", "));
    }
    for p in params {
        let range = match (p.min, p.max) {
            (None, None) => String::new(),
            (lo, hi) => format!(
                " range {}..{}",
                lo.map(|x| x.to_string()).unwrap_or_default(),
                hi.map(|x| x.to_string()).unwrap_or_default()
            ),
        };
        out += &format!("    param {} = {}{range};\n", p.name, p.value);
    }
    out
}

/// Appends `block` to the base's document and parses the new declaration back.
fn append_block(base: &IdentityDecl, name: &str, block: String) -> Result<IdentityDecl, LemmaError> {
    let source = format!("{}\n{block}", base.source.trim_end());
    let decls = parse_document(&source)?;
    Ok(decls.into_iter().find(|d| &*d.name == name).expect("the appended block declares `name`"))
}

/// A fresh identity `m * d(lhs)/dvar = m * d(rhs)/dvar` depending on `base`.
///
/// Its obligation is residual mode for `y' = 0, y(0) = 0`. The declaration's
/// source is the base's document with a `derive` block appended, so its
/// certificate can be replayed like any other.
pub fn derive_by_differentiation(
    base: &CertifiedLemma,
    multiplier: &Expr,
    var: &VarSymbol,
) -> Result<IdentityDecl, LemmaError> {
    derived_sides(base, multiplier, var)?;
    let b = &base.decl;
    let name = format!("{}_derivative", b.name);
    let pvars: Vec<&VarSymbol> = b.pvars.iter().filter(|v| v.name != var.name).collect();
    let params: Vec<IntParam> = b
        .params
        .iter()
        .map(|p| IntParam { value: base.bindings.get(&p.name).copied().unwrap_or(p.value), ..p.clone() })
        .collect();
    let block = format!(
        "identity {name} {{\n{}    derive: {};\n    multiplier: {multiplier};\n}}\n",
        header(var, &pvars, b, &params),
        b.name
    );
    append_block(b, &name, block)
}

/// Real or imaginary part of `e` after rewriting exponentials through Euler's formula.
pub fn split_part(e: &Expr, part: Part, ctx: AlgebraCtx) -> Result<CanonicalRF, AlgebraError> {
    let trig = euler_rewrite(e, Direction::ExpToTrig, ctx)?.expr;
    let (re, im) = split_real_imag(&canonicalize(&trig, ctx)?)?;
    Ok(match part {
        Part::Re => re,
        Part::Im => im,
    })
}

/// Real-part and imaginary-part identities of a certified complex identity.
///
/// Both share the base's IVP data and need no clearing factor.
pub fn split_certified_identity(base: &CertifiedLemma) -> Result<(IdentityDecl, IdentityDecl), LemmaError> {
    let ctx = AlgebraCtx::for_exprs([&base.lhs, &base.rhs]);
    let b = &base.decl;
    let pvars: Vec<&VarSymbol> = b.pvars.iter().collect();
    let params: Vec<IntParam> = b
        .params
        .iter()
        .map(|p| IntParam { value: base.bindings.get(&p.name).copied().unwrap_or(p.value), ..p.clone() })
        .collect();
    let iv = &b.ivp.interval;
    let mut blocks = String::new();
    for part in [Part::Re, Part::Im] {
        let (l, r) = (split_part(&base.lhs, part, ctx)?, split_part(&base.rhs, part, ctx)?);
        blocks += &format!(
            "identity {}_{} {{\n{}    split: {};\n    part: {};\n    lhs: {};\n    rhs: {};\n    ivp {{\n        at: {};\n        interval: ({}, {});\n    }}\n    depends: [{}, {}];\n}}\n",
            b.name,
            part.as_str(),
            header(&b.var, &pvars, b, &params),
            b.name,
            part.as_str(),
            rf_to_expr(&l),
            rf_to_expr(&r),
            b.ivp.t0,
            iv.lo,
            iv.hi,
            b.name,
            super::EULER,
        );
    }
    let re = append_block(b, &format!("{}_re", b.name), blocks.clone())?;
    let im = append_block(b, &format!("{}_im", b.name), blocks)?;
    Ok((re, im))
}
