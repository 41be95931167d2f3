mod common;

use common::{arb_expr, cases, central_difference_error, distance, env, ex};
use ivpcert::algebra::{canonicalize, derivative_rf, AlgebraCtx};
use ivpcert::calculus::differentiate;
use ivpcert::corpus;
use ivpcert::expr::{expand_finite_sums, Expr};
use ivpcert::oracle::Numeric;
use proptest::prelude::*;

fn is_zero(e: &Expr) -> bool {
    canonicalize(e, AlgebraCtx::for_exprs([e])).unwrap().is_zero()
}

fn d(e: &Expr) -> Expr {
    differentiate(e, "t").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(cases()))]

    #[test]
    fn linearity(f in arb_expr(), g in arb_expr(), al in -5i64..5, be in 1i64..4) {
        let alpha = Expr::int(al);
        let beta = Expr::div(Expr::i(), Expr::int(be));
        let combo = Expr::add(Expr::mul(alpha.clone(), f.clone()), Expr::mul(beta.clone(), g.clone()));
        let lhs = d(&combo);
        let rhs = Expr::add(Expr::mul(alpha, d(&f)), Expr::mul(beta, d(&g)));
        prop_assert!(is_zero(&Expr::sub(lhs, rhs)));
    }

    #[test]
    fn product_rule(f in arb_expr(), g in arb_expr()) {
        let lhs = d(&Expr::mul(f.clone(), g.clone()));
        let rhs = Expr::add(Expr::mul(d(&f), g.clone()), Expr::mul(f, d(&g)));
        prop_assert!(is_zero(&Expr::sub(lhs, rhs)));
    }
}

// At 256 bits the rounding of f(t +- h) alone is about 2^-256 / 1e-30, which is
// far above 1e-55; doubling the precision leaves only the O(h^2) truncation term.
#[test]
fn central_difference_matches_at_512_bits() {
    let worst = central_difference_error(512, 50);
    assert!(worst < 1e-55, "max error {worst:e}");
}

#[test]
fn central_difference_at_256_bits_is_rounding_limited() {
    let worst = central_difference_error(256, 50);
    assert!(worst < 1e-40, "max error {worst:e}");
}

#[test]
fn symbolic_derivative_matches_numeric_derivative_of_known_functions() {
    let mut num = Numeric::new(256);
    let e = env(&mut num, "0.75", "0.5");
    for (f, df) in [
        ("sin(t)^3", "3*sin(t)^2*cos(t)"),
        ("exp(i*(t + a))/(1 + t^2)", "i*exp(i*(t + a))/(1 + t^2) - 2*t*exp(i*(t + a))/(1 + t^2)^2"),
        ("(1 + t)^7", "7*(1 + t)^6"),
    ] {
        assert!(distance(&mut num, &d(&ex(f)), &ex(df), &e) < 1e-70, "{f}");
        assert!(is_zero(&Expr::sub(d(&ex(f)), ex(df))), "{f}");
    }
}

#[test]
fn differentiation_commutes_with_canonicalization_on_corpus_sides() {
    for decl in corpus::builtin_decls() {
        if decl.lhs.has_lemma_ref() || decl.rhs.has_lemma_ref() {
            continue;
        }
        let var = decl.var.name.to_string();
        let b = decl.default_bindings();
        for side in [&decl.lhs, &decl.rhs] {
            let e = expand_finite_sums(side, &b).unwrap();
            let de = differentiate(&e, &var).unwrap();
            let ctx = AlgebraCtx::for_exprs([&e, &de]);
            let direct = canonicalize(&de, ctx).unwrap();
            let via_form = derivative_rf(&canonicalize(&e, ctx).unwrap(), &var);
            assert_eq!(direct, via_form, "{} side {e}", decl.name);
        }
    }
}
