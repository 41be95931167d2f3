use std::sync::{Arc, OnceLock};

use ivpcert::corpus::{self, CorpusEntry};
use ivpcert::expr::Expr;
use ivpcert::ivp::{IdentityDecl, Mode, Origin, Point};
use ivpcert::prover::{certify, CertifyError, CertifyOptions, LemmaStore, ProofObligation, Status};
use ivpcert::scalar::rat_int;

fn opts() -> CertifyOptions {
    CertifyOptions { samples: 100, ..CertifyOptions::default() }
}

/// Corpus lemmas for the first few parameter values of every entry.
fn lemma_store() -> LemmaStore {
    static STORE: OnceLock<LemmaStore> = OnceLock::new();
    STORE
        .get_or_init(|| {
            let entries: Vec<CorpusEntry> = corpus::builtin()
                .into_iter()
                .map(|mut e| {
                    e.sweep.retain(|n| (1..=4).contains(n));
                    e
                })
                .collect();
            let mut store = LemmaStore::new();
            let run = corpus::run(&entries, &mut store, &opts());
            assert_eq!(run.failures(), 0);
            store
        })
        .clone()
}

fn direct_decls() -> Vec<Arc<IdentityDecl>> {
    corpus::builtin_decls().into_iter().filter(|d| d.origin == Origin::Direct).collect()
}

fn status(ob: &ProofObligation, store: &LemmaStore) -> Status {
    certify(ob, store, &opts()).unwrap().verdict.status
}

#[test]
fn perturbed_identities_are_never_certified() {
    let store = lemma_store();
    for decl in direct_decls() {
        for k in 0..6 {
            let d = corpus::mutate(&decl, k);
            let s = status(&ProofObligation::new(Arc::new(d)), &store);
            assert_ne!(s, Status::Certified, "{} shifted by {}", decl.name, corpus::perturbation(k, &decl.var));
        }
    }
}

#[test]
fn wrong_operators_are_never_certified() {
    let store = lemma_store();
    for decl in direct_decls().into_iter().filter(|d| d.mode == Mode::Coincidence) {
        for k in 0..decl.ivp.op.order {
            let mut d = (*decl).clone();
            d.ivp.op.coeffs[k] = Expr::add(d.ivp.op.coeffs[k].clone(), Expr::one());
            assert_ne!(status(&ProofObligation::new(Arc::new(d)), &store), Status::Certified, "{} a{k} + 1", decl.name);
        }
        let mut d = (*decl).clone();
        d.ivp.op.force = Expr::add(d.ivp.op.force.clone(), Expr::one());
        assert_ne!(status(&ProofObligation::new(Arc::new(d)), &store), Status::Certified, "{} force + 1", decl.name);
    }
}

#[test]
fn wrong_initial_values_are_never_certified() {
    let store = lemma_store();
    for decl in direct_decls().into_iter().filter(|d| d.mode == Mode::Coincidence) {
        for k in 0..decl.ivp.initial_values.len() {
            let mut d = (*decl).clone();
            d.ivp.initial_values[k] = Expr::add(d.ivp.initial_values[k].clone(), Expr::one());
            assert_eq!(
                status(&ProofObligation::new(Arc::new(d)), &store),
                Status::InitialValueMismatch,
                "{} y^({k})(t0) + 1",
                decl.name
            );
        }
    }
}

#[test]
fn missing_lemma_is_a_dependency_error() {
    let mut store = lemma_store();
    store.remove("geometric_sum");
    let agp = corpus::builtin_entry("agp").unwrap();
    match certify(&ProofObligation::new(agp.decl.clone()), &store, &opts()) {
        Err(CertifyError::MissingDependency { lemma, .. }) => assert_eq!(&*lemma, "geometric_sum"),
        other => panic!("expected a missing dependency, got {other:?}"),
    }
}

#[test]
fn singular_initial_point_is_refused() {
    let g = corpus::builtin_entry("geometric_sum").unwrap();
    let mut d = (*g.decl).clone();
    d.ivp.t0 = Point::Rational(rat_int(1));
    let s = status(&ProofObligation::new(Arc::new(d)), &LemmaStore::new());
    assert_eq!(s, Status::SingularInitialPoint);
}

#[test]
fn homogeneous_entries_certify_in_both_modes() {
    let store = lemma_store();
    let mut checked = 0;
    for decl in direct_decls() {
        if !decl.ivp.op.force.is_zero() {
            continue;
        }
        let ob = ProofObligation::new(decl.clone());
        let residual = status(&ob.clone().with_mode(Mode::Residual), &store);
        let coincidence = status(&ob.with_mode(Mode::Coincidence), &store);
        assert_eq!(residual, coincidence, "{}", decl.name);
        assert_eq!(residual, Status::Certified, "{}", decl.name);
        checked += 1;
    }
    assert!(checked >= 6, "only {checked} homogeneous entries");
}

#[test]
fn parameter_sweeps_are_exact_at_desk_scale() {
    let store = LemmaStore::new();
    let b = corpus::builtin_entry("binomial").unwrap();
    let t = std::time::Instant::now();
    let s = status(&ProofObligation::new(b.decl.clone()).bind("n", 64), &store);
    assert_eq!(s, Status::Certified);
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let dm = corpus::builtin_entry("demoivre").unwrap();
    for n in [-7, 0, 9] {
        assert_eq!(status(&ProofObligation::new(dm.decl.clone()).bind("n", n), &store), Status::Certified, "n={n}");
    }
}

#[test]
fn out_of_range_parameters_are_rejected() {
    let b = corpus::builtin_entry("binomial").unwrap();
    let r = certify(&ProofObligation::new(b.decl.clone()).bind("n", 0), &LemmaStore::new(), &opts());
    assert!(matches!(r, Err(CertifyError::InvalidBinding { .. })), "{r:?}");
}
