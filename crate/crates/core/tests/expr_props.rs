mod common;

use common::{cases, ex, scope, LEAVES, SAFE_DENS};
use ivpcert::algebra::{canonicalize, eval_at, AlgebraCtx, CanonicalRF};
use ivpcert::corpus;
use ivpcert::expr::{binomial, expand_finite_sums, parse_document, parse_expr, Bindings, Expr, Scope};
use ivpcert::ivp::Point;
use ivpcert::scalar::{rat, GaussianRational, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Trees assembled with the constructors rather than the parser.
fn built_expr() -> impl Strategy<Value = Expr> {
    let leaf = proptest::sample::select(LEAVES).prop_map(ex);
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::product),
            (inner.clone(), -2i64..4).prop_map(|(x, k)| Expr::pow(x, k)),
            inner.clone().prop_map(Expr::neg),
            (inner, proptest::sample::select(SAFE_DENS)).prop_map(|(x, d)| Expr::div(x, ex(d))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(cases()))]

    #[test]
    fn print_then_parse_is_normalize(e in built_expr()) {
        let printed = e.to_string();
        let back = parse_expr(&printed, &scope()).unwrap();
        prop_assert_eq!(back, e.normalize(), "{}", printed);
    }

    #[test]
    fn binomial_sums_expand_exactly(n in 1i64..=20, p in -9i64..10, q in 1i64..7) {
        let sc = Scope::new().with("t", ivpcert::expr::SymbolKind::OdeVar).with("n", ivpcert::expr::SymbolKind::IntParam);
        let e = parse_expr("sum(k, 1, n, binom(n, k)*t^k)", &sc).unwrap();
        let mut b = Bindings::new();
        b.insert("n".into(), n);
        let x = expand_finite_sums(&e, &b).unwrap();
        let r = canonicalize(&x, AlgebraCtx::for_exprs([&x])).unwrap();
        let t0 = rat(p, q);
        let got = eval_at(&r, "t", &Point::Rational(t0.clone())).unwrap();
        let mut expected = Rational::zero();
        let mut power = Rational::one();
        for k in 1..=n as u64 {
            power = &power * &t0;
            expected += Rational::from_integer(binomial(n as u64, k)) * &power;
        }
        prop_assert_eq!(got, CanonicalRF::constant(GaussianRational::real(expected)));
    }
}

#[test]
fn corpus_sides_round_trip() {
    for decl in corpus::builtin_decls() {
        let sc = Scope::of_decl(&decl);
        for side in [&decl.lhs, &decl.rhs] {
            let back = parse_expr(&side.to_string(), &sc).unwrap();
            assert_eq!(back, side.normalize(), "{}: {side}", decl.name);
        }
    }
}

#[test]
fn unbound_symbols_are_rejected_with_a_position() {
    let err = parse_expr("t + 2*x", &scope()).unwrap_err();
    assert_eq!((err.line, err.col), (1, 7));
    assert!(err.message.contains('x'), "{}", err.message);

    let doc = "identity bad {\n    var t;\n    lhs: sin(t);\n    rhs: cos(s);\n}\n";
    let err = parse_document(doc).unwrap_err();
    assert_eq!(err.line, 4);
    assert!(err.col > 1);
}

#[test]
fn malformed_documents_report_positions() {
    for (doc, line) in [
        ("identity a {\n  var t;\n  lhs: (t;\n  rhs: t;\n}\n", 3),
        ("identity a {\n  var t;\n  lhs: t;\n  rhs: t;\n  ivp { order: 0; }\n}\n", 5),
        ("identity a {\n  var t;\n  lhs: t;\n}\n", 1),
        ("identity a {\n  var t;\n  param n = 2 range 1..;\n  lhs: t^n;\n  rhs: t^n;\n  bogus: 1;\n}\n", 6),
    ] {
        let err = parse_document(doc).unwrap_err();
        assert_eq!(err.line, line, "{doc}: {err}");
        assert!(err.col >= 1);
    }
}
