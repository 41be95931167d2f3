mod common;

use std::sync::Arc;

use common::{arb_expr, arb_expr_from, cases, env, ex, random_points, EXP_LEAVES, POLY_DENS, REAL_TRIG_LEAVES, TRIG_DENS, TRIG_LEAVES};
use ivpcert::algebra::{
    canonicalize, eval_at, euler_rewrite, poly_to_expr, split_real_imag, AlgebraCtx, CanonicalRF, Direction, Gen, Monomial,
    MultiPoly,
};
use ivpcert::expr::{Expr, LinearArg, VarRole};
use ivpcert::ivp::Point;
use ivpcert::oracle::numeric::to_f64;
use ivpcert::oracle::Numeric;
use ivpcert::scalar::{rat, rat_int, GaussianRational};
use proptest::prelude::*;

fn canon_in(e: &Expr, ctx: AlgebraCtx) -> CanonicalRF {
    canonicalize(e, ctx).unwrap()
}

fn gens() -> Vec<Arc<Gen>> {
    vec![
        Arc::new(Gen::Var { role: VarRole::Ode, name: "t".into() }),
        Arc::new(Gen::Const("a".into())),
        Arc::new(Gen::Sin(LinearArg::of_var("t", rat_int(1)))),
        Arc::new(Gen::Cos(LinearArg::of_var("t", rat_int(2)))),
        Arc::new(Gen::ExpBase { var: "t".into(), den: 1 }),
    ]
}

fn arb_poly() -> impl Strategy<Value = MultiPoly> {
    let term = ((-9i64..10, 1i64..5, -3i64..4), proptest::collection::vec(0u32..4, 5));
    proptest::collection::vec(term, 1..6).prop_map(|terms| {
        let g = gens();
        MultiPoly::from_terms(terms.into_iter().map(|((re, d, im), exps)| {
            let m = exps.iter().zip(&g).fold(Monomial::one(), |m, (&e, g)| {
                if e == 0 { m } else { m.mul(&Monomial::of(g.clone(), e)) }
            });
            (m, GaussianRational::new(rat(re, d), rat_int(im)))
        }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(cases()))]

    #[test]
    fn distributive(a in arb_expr(), b in arb_expr(), c in arb_expr()) {
        let lhs = Expr::mul(a.clone(), Expr::add(b.clone(), c.clone()));
        let rhs = Expr::add(Expr::mul(a.clone(), b), Expr::mul(a, c));
        let ctx = AlgebraCtx::for_exprs([&lhs, &rhs]);
        prop_assert_eq!(canon_in(&lhs, ctx), canon_in(&rhs, ctx));
    }

    #[test]
    fn additive_inverse(e in arb_expr()) {
        let d = Expr::sub(e.clone(), e.clone());
        prop_assert!(canon_in(&d, AlgebraCtx::for_exprs([&d])).is_zero());
    }

    #[test]
    fn nonzero_polynomials_stay_nonzero(p in arb_poly()) {
        prop_assume!(!p.is_zero());
        let e = poly_to_expr(&p);
        let r = canon_in(&e, AlgebraCtx::for_exprs([&e]));
        prop_assert!(!r.is_zero());
        prop_assert_eq!(r, CanonicalRF::from_poly(p));
    }

    #[test]
    fn real_and_imaginary_parts_reconstruct(e in arb_expr_from(TRIG_LEAVES, TRIG_DENS)) {
        let ctx = AlgebraCtx::for_exprs([&e]);
        let trig = euler_rewrite(&e, Direction::ExpToTrig, ctx).unwrap().expr;
        let r = canon_in(&trig, ctx);
        let (re, im) = split_real_imag(&r).unwrap();
        let back = re.add(&im.scale(&GaussianRational::i()));
        prop_assert_eq!(back, r);
    }

    #[test]
    fn trig_to_exp_and_back(e in arb_expr_from(REAL_TRIG_LEAVES, POLY_DENS)) {
        let ctx = AlgebraCtx::for_exprs([&e]);
        let there = euler_rewrite(&e, Direction::TrigToExp, ctx).unwrap().expr;
        let back = euler_rewrite(&there, Direction::ExpToTrig, ctx).unwrap().expr;
        prop_assert_eq!(canon_in(&back, ctx), canon_in(&e, ctx));
    }

    #[test]
    fn exp_to_trig_and_back(e in arb_expr_from(EXP_LEAVES, POLY_DENS)) {
        let ctx = AlgebraCtx::for_exprs([&e]);
        let there = euler_rewrite(&e, Direction::ExpToTrig, ctx).unwrap().expr;
        let back = euler_rewrite(&there, Direction::TrigToExp, ctx).unwrap().expr;
        prop_assert_eq!(canon_in(&back, ctx), canon_in(&e, ctx));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(cases() / 10))]

    // Zero by construction, then checked as a function: the form must be 0 and
    // the expression must vanish numerically at every sampled point.
    #[test]
    fn zero_forms_vanish_numerically(f in arb_expr(), g in arb_expr(), h in arb_expr(), seed in 0u64..1000) {
        let lhs = Expr::mul(Expr::add(f.clone(), g.clone()), Expr::pow(h.clone(), 2));
        let rhs = Expr::add(Expr::mul(Expr::mul(h.clone(), f), h.clone()), Expr::mul(h.clone(), Expr::mul(g, h)));
        let e = Expr::sub(lhs, rhs);
        prop_assert!(canon_in(&e, AlgebraCtx::for_exprs([&e])).is_zero());
        let mut num = Numeric::new(256);
        for (t, a) in random_points(100, seed) {
            let env = env(&mut num, &t, &a);
            let v = num.eval(&e, &env).unwrap();
            prop_assert!(to_f64(&num.modulus(&v)) < 1e-50);
        }
    }

    #[test]
    fn exact_evaluation_matches_numeric(e in arb_expr_from(TRIG_LEAVES, TRIG_DENS), seed in 0u64..1000) {
        let r = canon_in(&e, AlgebraCtx::for_exprs([&e]));
        let mut num = Numeric::new(256);
        for t0 in [Point::zero(), Point::PiMultiple(rat_int(1))] {
            let exact = eval_at(&r, "t", &t0).unwrap();
            let t = num.point(&t0);
            for (_, a) in random_points(5, seed) {
                let mut env = env(&mut num, "0", &a);
                env.insert("t".into(), t.clone());
                let x = num.eval(&e, &env).unwrap();
                let y = num.rf(&exact, &env).unwrap();
                prop_assert!(to_f64(&num.modulus(&num.sub(&x, &y))) < 1e-50, "{} at {}", e, t0);
            }
        }
    }
}

#[test]
fn canonical_zeros_in_the_atom_model_vanish_numerically() {
    let mut num = Numeric::new(256);
    for src in [
        "(cos(t) + i*sin(t))*(cos(t) - i*sin(t)) - cos(t)^2 - sin(t)^2",
        "exp(i*t)^5 - exp(5*i*t)",
        "sin(t + pi) + sin(-t) + 2*sin(t)",
        "cos(a - t) - cos(t - a)",
        "(1 - t^6)/(1 - t) - (1 + t + t^2 + t^3 + t^4 + t^5)",
    ] {
        let e = ex(src);
        assert!(canon_in(&e, AlgebraCtx::for_exprs([&e])).is_zero(), "{src}");
        for (t, a) in random_points(100, 3) {
            let env = env(&mut num, &t, &a);
            let v = num.eval(&e, &env).unwrap();
            assert!(to_f64(&num.modulus(&v)) < 1e-50, "{src} at t={t}");
        }
    }
}

#[test]
fn atoms_are_independent_of_trig_identities() {
    for src in ["sin(t)^2 + cos(t)^2 - 1", "sin(2*t) - 2*sin(t)*cos(t)", "(cos(t) + i*sin(t))^5 - exp(5*i*t)"] {
        let e = ex(src);
        assert!(!canon_in(&e, AlgebraCtx::for_exprs([&e])).is_zero(), "{src}");
    }
}
