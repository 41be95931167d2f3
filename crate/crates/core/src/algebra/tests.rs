use super::*;
use crate::expr::{parse_expr, Scope, SymbolKind};
use crate::ivp::Point;
use crate::scalar::rat_int;

fn scope() -> Scope {
    Scope::new()
        .with("t", SymbolKind::OdeVar)
        .with("c", SymbolKind::Const)
        .with("a", SymbolKind::Const)
        .with("n", SymbolKind::IntParam)
}

fn canon(src: &str) -> CanonicalRF {
    let e = parse_expr(src, &scope()).unwrap();
    canonicalize(&e, AlgebraCtx::for_exprs([&e])).unwrap()
}

#[test]
fn pythagoras_is_not_an_algebraic_identity() {
    assert!(!canon("sin(t)^2 + cos(t)^2 - 1").is_zero());
}

#[test]
fn binomial_cube_cancels() {
    assert!(canon("(1 + t)^3 - (1 + 3*t + 3*t^2 + t^3)").is_zero());
}

#[test]
fn de_moivre_key_step() {
    assert!(canon("(cos(t) + i*sin(t))*(-sin(t) + i*cos(t)) - i*(cos(t) + i*sin(t))^2").is_zero());
}

#[test]
fn exponential_powers_share_a_form() {
    assert!(canon("exp(i*t)^3 - exp(3*i*t)").is_zero());
    assert!(canon("exp(i*t)*exp(-i*t) - 1").is_zero());
    assert!(canon("exp(i*(t/2))^2 - exp(i*t)").is_zero());
    assert!(canon("exp(i*(a + t)) - exp(i*a)*exp(i*t)").is_zero());
}

#[test]
fn rational_functions_reduce() {
    let r = canon("(t^2 - 1)/(t - 1)");
    assert!(r.is_polynomial());
    assert_eq!(r, canon("t + 1"));
    assert!(canon("1/(t - 1) + 1/(1 - t)").is_zero());
    let q = canon("(2*t + 2)/(4*t - 4)");
    assert!(q.den().leading_coeff().is_one());
}

#[test]
fn division_by_zero_is_reported() {
    let e = parse_expr("1/(t - t)", &scope()).unwrap();
    assert_eq!(canonicalize(&e, AlgebraCtx::default()), Err(AlgebraError::DivisionByZero));
}

#[test]
fn pi_shifts_fold() {
    assert_eq!(canon("sin(t + pi)"), canon("-sin(t)"));
    assert_eq!(canon("cos(t + pi/2)"), canon("-sin(t)"));
    assert!(canon("exp(i*pi) + 1").is_zero());
}

#[test]
fn parity_folds() {
    assert_eq!(canon("sin(-t)"), canon("-sin(t)"));
    assert_eq!(canon("cos(a - 2*t)"), canon("cos(2*t - a)"));
    assert_eq!(canon("sin(-a)"), canon("-sin(a)"));
}

#[test]
fn evaluation_rules() {
    let z = |src: &str, p: Point| eval_at(&canon(src), "t", &p);
    assert!(z("sin(t)", Point::zero()).unwrap().is_zero());
    let pi = Point::PiMultiple(rat_int(1));
    assert_eq!(z("exp(i*t)", pi.clone()).unwrap(), CanonicalRF::constant(GaussianRational::from_int(-1)));
    assert_eq!(z("sin(t + c)", Point::zero()).unwrap(), canon("sin(c)"));
    assert_eq!(z("sin(t + c)", pi.clone()).unwrap(), canon("-sin(c)"));
    assert!(matches!(z("sin(t)", Point::Rational(rat_int(1))), Err(EvalError::UnsupportedEvaluation(..))));
    assert!(matches!(z("1/(t - 1)", Point::Rational(rat_int(1))), Err(EvalError::SingularEvaluation(_))));
    assert!(z("exp(i*a)*(1 + exp(i*t) + exp(2*i*t) + exp(3*i*t))", pi).unwrap().is_zero());
}

#[test]
fn real_and_imaginary_parts() {
    let (re, im) = split_real_imag(&canon("(cos(t) + i*sin(t))^2")).unwrap();
    assert_eq!(re, canon("cos(t)^2 - sin(t)^2"));
    assert_eq!(im, canon("2*sin(t)*cos(t)"));
    let (re, im) = split_real_imag(&canon("i*cos(a)")).unwrap();
    assert!(re.is_zero());
    assert_eq!(im, canon("cos(a)"));
    let (re, im) = split_real_imag(&canon("1/(t + i)")).unwrap();
    assert_eq!(re, canon("t/(t^2 + 1)"));
    assert_eq!(im, canon("-1/(t^2 + 1)"));
    assert!(split_real_imag(&canon("exp(i*t)")).is_err());
}

#[test]
fn euler_rewrites() {
    let e = parse_expr("exp(2*i*t)", &scope()).unwrap();
    let ctx = AlgebraCtx::for_exprs([&e]);
    let r = euler_rewrite(&e, Direction::ExpToTrig, ctx).unwrap();
    assert!(r.uses_euler);
    assert_eq!(canonicalize(&r.expr, ctx).unwrap(), canon("cos(2*t) + i*sin(2*t)"));
    let p = parse_expr("cos(t)^2 + sin(t)^2", &scope()).unwrap();
    let x = euler_rewrite(&p, Direction::TrigToExp, ctx).unwrap();
    assert!(canonicalize(&x.expr, ctx).unwrap().is_one_rf());
    let half = parse_expr("sin(t/2)", &scope()).unwrap();
    assert!(euler_rewrite(&half, Direction::TrigToExp, AlgebraCtx::new(1)).is_err());
}

#[test]
fn normal_form_derivative() {
    let r = canon("sin(2*t)*exp(i*t)/(1 + t)");
    let d = derivative_rf(&r, "t");
    assert_eq!(d, canon("(2*cos(2*t)*exp(i*t) + i*sin(2*t)*exp(i*t))/(1 + t) - sin(2*t)*exp(i*t)/(1 + t)^2"));
}

#[test]
fn expression_round_trip() {
    for src in ["(1 + t)^3/(t - 2)", "exp(i*(t/2))^3*sin(t + c) - cos(a)", "exp(i*a)*(exp(3*i*t) - 1)/(exp(i*t) - 1)"] {
        let e = parse_expr(src, &scope()).unwrap();
        let ctx = AlgebraCtx::for_exprs([&e]);
        let r = canonicalize(&e, ctx).unwrap();
        assert_eq!(canonicalize(&rf_to_expr(&r), ctx).unwrap(), r, "{src}");
    }
}
