//! Surface syntax printer. `parse_expr(&e.to_string())` reproduces `e.normalize()`.

use std::fmt::{self, Write};

use num_traits::{One, Signed, Zero};

use super::{Atom, AtomKind, Expr, Func, LinearArg, Node};
use crate::scalar::{GaussianRational, Rational};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Top,
    Factor,
    PowBase,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, Ctx::Top);
        f.write_str(&s)
    }
}

impl fmt::Display for LinearArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_linear(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_atom(&mut s, self);
        f.write_str(&s)
    }
}

/// Sign that can be pulled out as a leading `-`.
fn is_printed_negative(c: &GaussianRational) -> bool {
    (c.im.is_zero() && c.re.is_negative()) || (c.re.is_zero() && c.im.is_negative())
}

fn is_compound_constant(c: &GaussianRational) -> bool {
    !c.re.is_zero() && !c.im.is_zero()
}

fn write_constant(out: &mut String, c: &GaussianRational, ctx: Ctx) {
    let needs_parens = match ctx {
        Ctx::Top => false,
        Ctx::Factor => is_compound_constant(c) || is_printed_negative(c),
        Ctx::PowBase => true,
    };
    if needs_parens && !(ctx == Ctx::PowBase && c.is_real() && !c.re.is_negative() && c.re.denom().is_one()) {
        let _ = write!(out, "({c})");
    } else {
        let _ = write!(out, "{c}");
    }
}

fn write_expr(out: &mut String, e: &Expr, ctx: Ctx) {
    match e.node() {
        Node::Constant(c) => write_constant(out, c, ctx),
        Node::Var(v) => out.push_str(&v.name),
        Node::Const(c) => out.push_str(&c.name),
        Node::IntSym(n) => out.push_str(n),
        Node::Pi => out.push_str("pi"),
        Node::Atom(a) => write_atom(out, a),
        Node::Sum(terms) => {
            let paren = ctx != Ctx::Top;
            if paren {
                out.push('(');
            }
            for (k, t) in terms.iter().enumerate() {
                write_sum_term(out, t, k == 0);
            }
            if paren {
                out.push(')');
            }
        }
        Node::Product(factors) => {
            let paren = ctx == Ctx::PowBase;
            if paren {
                out.push('(');
            }
            write_product(out, factors);
            if paren {
                out.push(')');
            }
        }
        Node::IntPow(b, k) => {
            if *k == -1 {
                if ctx == Ctx::PowBase {
                    out.push('(');
                }
                out.push_str("1/");
                write_expr(out, b, Ctx::PowBase);
                if ctx == Ctx::PowBase {
                    out.push(')');
                }
            } else {
                if ctx == Ctx::PowBase {
                    out.push('(');
                }
                write_expr(out, b, Ctx::PowBase);
                if *k < 0 {
                    let _ = write!(out, "^({k})");
                } else {
                    let _ = write!(out, "^{k}");
                }
                if ctx == Ctx::PowBase {
                    out.push(')');
                }
            }
        }
        Node::Pow(b, x) => {
            if ctx == Ctx::PowBase {
                out.push('(');
            }
            write_expr(out, b, Ctx::PowBase);
            out.push('^');
            write_expr(out, x, Ctx::PowBase);
            if ctx == Ctx::PowBase {
                out.push(')');
            }
        }
        Node::FiniteSum { index, lower, upper, body } => {
            let _ = write!(out, "sum({index}, {lower}, {upper}, {body})");
        }
        Node::Apply(Func::ExpI, args) => {
            out.push_str("exp(i*");
            write_expr(out, &args[0], Ctx::Factor);
            out.push(')');
        }
        Node::Apply(func, args) => {
            out.push_str(func.name());
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, Ctx::Top);
            }
            out.push(')');
        }
        Node::LemmaRef { lemma, side, var } => {
            let _ = write!(out, "lemma({lemma}, {}", side.as_str());
            if let Some(v) = var {
                let _ = write!(out, ", {}", v.name);
            }
            out.push(')');
        }
    }
}

fn write_sum_term(out: &mut String, t: &Expr, first: bool) {
    let negated = match t.node() {
        Node::Constant(c) if is_printed_negative(c) => Some(Expr::constant(-c)),
        Node::Product(fs) => match fs[0].as_constant() {
            Some(c) if is_printed_negative(c) => {
                let mut rest = fs.clone();
                rest[0] = Expr::constant(-c);
                Some(Expr::product(rest))
            }
            _ => None,
        },
        _ => None,
    };
    match negated {
        Some(pos) => {
            out.push_str(if first { "-" } else { " - " });
            write_expr(out, &pos, Ctx::Factor);
        }
        None => {
            if !first {
                out.push_str(" + ");
            }
            let ctx = match t.node() {
                Node::Constant(c) if is_compound_constant(c) && !first => Ctx::Factor,
                _ => Ctx::Top,
            };
            write_expr(out, t, ctx);
        }
    }
}

fn write_product(out: &mut String, factors: &[Expr]) {
    let mut wrote_any = false;
    for f in factors {
        match f.node() {
            Node::Constant(c) if !wrote_any => {
                if is_printed_negative(c) {
                    out.push('-');
                    write_constant(out, &-c, Ctx::Factor);
                } else {
                    write_constant(out, c, Ctx::Factor);
                }
            }
            Node::IntPow(b, -1) if wrote_any => {
                out.push('/');
                write_expr(out, b, Ctx::PowBase);
            }
            _ => {
                if wrote_any {
                    out.push('*');
                }
                write_expr(out, f, Ctx::Factor);
            }
        }
        wrote_any = true;
    }
}

fn write_coeff_term(out: &mut String, c: &Rational, sym: &str, first: bool) {
    let neg = c.is_negative();
    let a = c.abs();
    match (first, neg) {
        (true, true) => out.push('-'),
        (false, true) => out.push_str(" - "),
        (false, false) => out.push_str(" + "),
        (true, false) => {}
    }
    if a.is_one() {
        out.push_str(sym);
    } else if a.denom().is_one() {
        let _ = write!(out, "{}*{sym}", a.numer());
    } else {
        let _ = write!(out, "{}/{}*{sym}", a.numer(), a.denom());
    }
}

fn write_linear(out: &mut String, arg: &LinearArg) {
    let mut first = true;
    if let Some(v) = &arg.var {
        write_coeff_term(out, &arg.coeff, v, first);
        first = false;
    }
    for (c, w) in &arg.consts {
        write_coeff_term(out, w, c, first);
        first = false;
    }
    if !arg.pi.is_zero() {
        write_coeff_term(out, &arg.pi, "pi", first);
        first = false;
    }
    if first {
        out.push('0');
    }
}

fn is_single_term(arg: &LinearArg) -> bool {
    let n = arg.var.iter().count() + arg.consts.len() + usize::from(!arg.pi.is_zero());
    n <= 1
}

fn write_atom(out: &mut String, a: &Atom) {
    match a.kind {
        AtomKind::Sin | AtomKind::Cos => {
            out.push_str(if a.kind == AtomKind::Sin { "sin(" } else { "cos(" });
            write_linear(out, &a.arg);
            out.push(')');
        }
        AtomKind::ExpI => {
            out.push_str("exp(i*");
            let simple = is_single_term(&a.arg)
                && (a.arg.frequencies().chain([&a.arg.pi]).all(|w| w.is_zero() || w.is_one()));
            if simple {
                write_linear(out, &a.arg);
            } else {
                out.push('(');
                write_linear(out, &a.arg);
                out.push(')');
            }
            out.push(')');
        }
    }
}
