mod common;

use std::sync::OnceLock;

use common::{full_corpus, leaf_paths, mutated_leaf};
use ivpcert::certificate::{check, check_with_source, Certificate, CertificatePool, CheckError, EXTENSION};
use ivpcert::exec::Execution;
use serde_json::Value;

fn pool() -> CertificatePool {
    static POOL: OnceLock<CertificatePool> = OnceLock::new();
    POOL.get_or_init(|| {
        let (run, _) = full_corpus(Execution::Parallel);
        assert_eq!(run.failures(), 0);
        run.certificates().cloned().collect()
    })
    .clone()
}

fn resealed(c: &Certificate, path: &str) -> Certificate {
    let mut doc = c.doc.clone();
    let leaf = doc.pointer_mut(path).unwrap();
    *leaf = mutated_leaf(leaf);
    Certificate::seal(doc)
}

#[test]
fn corpus_certificates_round_trip_and_are_reproducible() {
    let first = pool();
    for c in first.iter() {
        let text = String::from_utf8(c.to_bytes()).unwrap();
        let back = Certificate::parse(&text).unwrap();
        assert_eq!(&back, c);
        assert_eq!(back.recomputed_hash(), c.content_hash);
        assert!(c.file_name().ends_with(EXTENSION));
        let acc = check(&back, &first).unwrap_or_else(|e| panic!("{}: {e}", c.instance()));
        assert_eq!(acc.content_hash, c.content_hash);
        assert!(acc.stages > 0 || c.doc.get("split").is_some());
    }
    // A sequential rerun writes the same bytes.
    let (again, _) = full_corpus(Execution::Sequential);
    let second: CertificatePool = again.certificates().cloned().collect();
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(second.iter()) {
        assert_eq!(a.to_bytes(), b.to_bytes(), "{}", a.instance());
    }
}

#[test]
fn proof_body_mutations_are_all_rejected() {
    let pool = pool();
    let mut tried = 0;
    for c in pool.iter().step_by(9) {
        let mut paths = Vec::new();
        for key in ["cleared_operator_identity", "initial_evaluations", "split"] {
            if let Some(v) = c.doc.get(key) {
                leaf_paths(v, &format!("/{key}"), &mut paths);
            }
        }
        for p in paths.iter().step_by(3) {
            let m = resealed(c, p);
            let mut with = pool.clone();
            with.insert(m.clone());
            assert!(check(&m, &with).is_err(), "{} accepted after changing {p}", c.instance());
            tried += 1;
        }
    }
    assert!(tried > 500, "{tried}");
}

#[test]
fn edits_without_resealing_fail_the_hash() {
    let pool = pool();
    let c = pool.iter().find(|c| c.name() == "pythagoras").unwrap();
    let mut doc = c.doc.clone();
    doc["regular_point_evidence"]["sampling"]["seed"] = Value::from(7);
    let edited = Certificate { doc, content_hash: c.content_hash.clone() };
    assert!(matches!(check(&edited, &pool), Err(CheckError::HashMismatch { .. }) | Err(CheckError::EvidenceMismatch(_))));
    let text = String::from_utf8(c.to_bytes()).unwrap().replacen("\"mode\": \"residual\"", "\"mode\": \"coincidence\"", 1);
    let edited = Certificate::parse(&text).unwrap();
    assert!(check(&edited, &pool).is_err());
}

#[test]
fn schema_versions_and_sources_are_enforced() {
    let pool = pool();
    let c = pool.iter().find(|c| c.instance() == "binomial[n=3]").unwrap();
    let mut doc = c.doc.clone();
    doc["schema_version"] = Value::from(2);
    assert!(matches!(check(&Certificate::seal(doc), &pool), Err(CheckError::SchemaError(_))));

    let src = c.doc["identity"]["source"].as_str().unwrap().replace("(1 + t)^n", "(1 + t)^n + 0");
    assert!(matches!(check_with_source(c, &src, &pool), Err(CheckError::HashMismatch { .. })));
    assert!(Certificate::parse("{\"schema_version\": 1}").is_err());
}

#[test]
fn dependencies_must_be_present_and_intact() {
    let pool = pool();
    let agp = pool.iter().find(|c| c.instance() == "agp[n=5]").unwrap().clone();
    let alone: CertificatePool = [agp.clone()].into_iter().collect();
    assert!(matches!(check(&agp, &alone), Err(CheckError::MissingDependency { .. })));

    // A tampered lemma certificate under its old hash is caught.
    let dep_hash = agp.doc["dependencies"][0]["certificate_hash"].as_str().unwrap().to_string();
    let dep = pool.get(&dep_hash).unwrap();
    let mut doc = dep.doc.clone();
    doc["sides"]["rhs"] = Value::String(format!("{} + 1", doc["sides"]["rhs"].as_str().unwrap()));
    let forged = Certificate { doc, content_hash: dep_hash.clone() };
    let mut bad: CertificatePool = pool.iter().filter(|c| c.content_hash != dep_hash).cloned().collect();
    bad.insert(forged);
    assert!(matches!(check(&agp, &bad), Err(CheckError::HashMismatch { .. })));
}

#[test]
fn stage_errors_name_the_stage() {
    let pool = pool();
    let c = pool.iter().find(|c| c.instance() == "demoivre[n=4]").unwrap();
    let m = resealed(c, "/cleared_operator_identity/subjects/0/stages/1/num/0/c/re");
    match check(&m, &pool) {
        Err(CheckError::StageMismatch { subject, stage }) => assert_eq!((subject.as_str(), stage.as_str()), ("residual", "1")),
        other => panic!("{other:?}"),
    }
    let m = resealed(c, "/initial_evaluations/0/order");
    assert!(matches!(check(&m, &pool), Err(CheckError::SchemaError(_)) | Err(CheckError::InitialMismatch { .. }) | Err(CheckError::Rejected(_))));
}
