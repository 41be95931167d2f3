//! Shared fixtures for the integration suites: a random expression grammar over
//! `t` (the ODE variable) and the constant `a`, plus numeric helpers.
#![allow(dead_code)]

use ivpcert::expr::{parse_expr, Expr, Scope, SymbolKind};
use ivpcert::oracle::numeric::to_f64;
use ivpcert::oracle::{Env, Numeric};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scope() -> Scope {
    Scope::new().with("t", SymbolKind::OdeVar).with("a", SymbolKind::Const)
}

pub fn ex(s: &str) -> Expr {
    parse_expr(s, &scope()).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub const LEAVES: &[&str] = &[
    "t", "a", "1", "2", "-3", "1/2", "-5/3", "i", "sin(t)", "cos(t)", "sin(2*t)", "cos(t/2)",
    "sin(t + a)", "cos(3*t - a)", "exp(i*t)", "exp(-2*i*t)", "exp(i*(t + a))",
];

/// Denominators that stay away from zero on the real line for real `a`.
pub const SAFE_DENS: &[&str] = &["1 + t^2", "2 + cos(t)", "3 + sin(2*t)", "2 + a^2", "5 + t*sin(t)"];

/// Leaves without a bare `t`, so `t = pi` has an exact value.
pub const TRIG_LEAVES: &[&str] =
    &["a", "1", "-3", "1/2", "i", "sin(t)", "cos(t)", "sin(2*t)", "cos(t/2)", "sin(t + a)", "exp(i*t)", "exp(i*(t + a))"];
pub const TRIG_DENS: &[&str] = &["2 + cos(t)", "3 + sin(2*t)", "2 + a^2"];

/// Real trigonometric leaves (no `i`, no exponentials).
pub const REAL_TRIG_LEAVES: &[&str] = &["t", "a", "2", "-1/3", "sin(t)", "cos(2*t)", "sin(t/2)", "cos(t + a)"];
/// Exponential leaves (no sine or cosine).
pub const EXP_LEAVES: &[&str] = &["t", "a", "i", "-2", "exp(i*t)", "exp(-i*t)", "exp(i*(t/2))", "exp(i*(t + a))"];
pub const POLY_DENS: &[&str] = &["1 + t^2", "2 + a^2"];

/// Source text of a random expression over `leaves`; every division is by one of `dens`.
pub fn expr_src_from(leaves: &'static [&'static str], dens: &'static [&'static str]) -> impl Strategy<Value = String> {
    let leaf = proptest::sample::select(leaves).prop_map(String::from);
    leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x}) + ({y})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x}) - ({y})")),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| format!("({x})*({y})")),
            (inner.clone(), 0u32..4).prop_map(|(x, k)| format!("({x})^{k}")),
            (inner, proptest::sample::select(dens)).prop_map(|(x, d)| format!("({x})/({d})")),
        ]
    })
}

pub fn expr_src() -> impl Strategy<Value = String> {
    expr_src_from(LEAVES, SAFE_DENS)
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    expr_src().prop_map(|s| ex(&s))
}

pub fn arb_expr_from(leaves: &'static [&'static str], dens: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    expr_src_from(leaves, dens).prop_map(|s| ex(&s))
}

/// 1000 unless `PROPTEST_CASES` says otherwise.
pub fn cases() -> u32 {
    std::env::var("PROPTEST_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(1000)
}

/// Deterministic fuzz expressions for tests that need a fixed sample.
pub fn fuzz_exprs(count: usize, seed: u64) -> Vec<Expr> {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &bytes);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let strategy = arb_expr();
    (0..count).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect()
}

/// Random points with `t` in (-2, 2) and `a` in (-2, 2), as decimal strings.
pub fn random_points(count: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t: f64 = rng.gen_range(-2.0..2.0);
            let a: f64 = rng.gen_range(-2.0..2.0);
            (format!("{t:.17}"), format!("{a:.17}"))
        })
        .collect()
}

pub fn env(num: &mut Numeric, t: &str, a: &str) -> Env {
    let mut e = Env::new();
    e.insert("t".into(), num.decimal(t));
    e.insert("a".into(), num.decimal(a));
    e
}

/// |x - y| at the numeric context's precision, as f64.
pub fn distance(num: &mut Numeric, x: &Expr, y: &Expr, env: &Env) -> f64 {
    let u = num.eval(x, env).expect("evaluates");
    let v = num.eval(y, env).expect("evaluates");
    to_f64(&num.modulus(&num.sub(&u, &v)))
}

use ivpcert::corpus::{self, CorpusRun};
use ivpcert::exec::Execution;
use ivpcert::expr::expand_finite_sums;
use ivpcert::ivp::IdentityDecl;
use ivpcert::oracle::SamplePlan;
use ivpcert::prover::{CertifyOptions, LemmaStore};
use std::sync::Arc;

/// The full built-in corpus, certified once with default options.
pub fn full_corpus(exec: Execution) -> (CorpusRun, LemmaStore) {
    let mut store = LemmaStore::new();
    let opts = CertifyOptions { exec, ..CertifyOptions::default() };
    let run = corpus::run(&corpus::builtin(), &mut store, &opts);
    (run, store)
}

/// `count` non-identities: corpus declarations with a shifted right-hand side.
pub fn mutations(count: usize) -> Vec<Arc<IdentityDecl>> {
    let direct: Vec<_> = corpus::builtin_decls().into_iter().filter(|d| d.origin == ivpcert::ivp::Origin::Direct).collect();
    (0..count).map(|k| Arc::new(corpus::mutate(&direct[k % direct.len()], k / direct.len() + k))).collect()
}

/// Expanded sides of a direct declaration at its default bindings.
pub fn expanded_sides(d: &IdentityDecl) -> (Expr, Expr) {
    let b = d.default_bindings();
    (expand_finite_sums(&d.lhs, &b).unwrap(), expand_finite_sums(&d.rhs, &b).unwrap())
}

/// The falsifier's plan for a declaration: 100 points at 256 bits in its interval.
pub fn oracle_plan(d: &IdentityDecl, seed: u64) -> SamplePlan {
    let names = d.pvars.iter().map(|v| v.name.clone()).chain(d.consts.iter().map(|c| c.name.clone()));
    SamplePlan::new(d.var.name.clone(), d.ivp.interval.clone()).count(100).precision(256).seed(seed).consts(names)
}

use serde_json::Value;

/// JSON-pointer paths of every scalar leaf of `v` below `prefix`.
pub fn leaf_paths(v: &Value, prefix: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                leaf_paths(x, &format!("{prefix}/{k}"), out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                leaf_paths(x, &format!("{prefix}/{i}"), out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

/// A different value of the same JSON type: rationals and integers move by
/// one, booleans flip, hashes change a digit, other text gains a term.
pub fn mutated_leaf(v: &Value) -> Value {
    use ivpcert::scalar::{parse_rational, rational_to_string};
    match v {
        Value::Number(n) => Value::from(n.as_i64().unwrap() + 1),
        Value::Bool(b) => Value::Bool(!b),
        Value::String(s) => {
            if let Some(q) = parse_rational(s) {
                return Value::String(rational_to_string(&(q + ivpcert::scalar::rat_int(1))));
            }
            if s.len() == 64 && s.chars().all(|c| c.is_ascii_hexdigit()) {
                let flipped = if s.starts_with('0') { "1" } else { "0" };
                return Value::String(format!("{flipped}{}", &s[1..]));
            }
            Value::String(format!("{s} + 1"))
        }
        Value::Null => Value::Bool(true),
        _ => unreachable!("leaves only"),
    }
}

/// Largest |(f(t+h) - f(t-h))/2h - f'(t)| over the fuzz sample.
pub fn central_difference_error(prec: usize, count: usize) -> f64 {
    let mut num = Numeric::new(prec);
    let h = num.decimal("1e-30");
    let two_h = num.add(&num.real(h.clone()), &num.real(h.clone()));
    let mut worst = 0f64;
    for (k, (f, (t, a))) in fuzz_exprs(count, 7).into_iter().zip(random_points(count, 11)).enumerate() {
        let df = ivpcert::calculus::differentiate(&f, "t").unwrap();
        let mut e = env(&mut num, &t, &a);
        let t0 = e["t"].clone();
        let right = num.add(&num.real(t0.clone()), &num.real(h.clone())).re;
        let left = num.sub(&num.real(t0.clone()), &num.real(h.clone())).re;
        e.insert("t".into(), right);
        let fr = num.eval(&f, &e).unwrap();
        e.insert("t".into(), left);
        let fl = num.eval(&f, &e).unwrap();
        e.insert("t".into(), t0);
        let exact = num.eval(&df, &e).unwrap();
        let approx = num.div(&num.sub(&fr, &fl), &two_h).unwrap();
        let err = to_f64(&num.modulus(&num.sub(&approx, &exact)));
        assert!(err.is_finite(), "case {k}: {f}");
        worst = worst.max(err);
    }
    worst
}
