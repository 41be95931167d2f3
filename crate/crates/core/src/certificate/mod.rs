//! Proof certificates: canonical JSON documents and their replay checker.
//!
//! A document is UTF-8 JSON with object keys sorted and no floating-point
//! numbers. Rationals are `"p/q"` strings, Gaussian rationals are
//! `{"re", "im"}` pairs, polynomials are term lists
//! `[{"c": coefficient, "m": [[generator, exponent], ...]}, ...]` with the
//! leading term first, and rational functions are `{"num", "den"}` pairs.
//! `content_hash` is the SHA-256 of the compact serialization of the
//! document without that key.

mod check;

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::algebra::{CanonicalRF, MultiPoly};
use crate::expr::Bindings;
use crate::ivp::Origin;
use crate::prover::{instance_name, DenominatorAtT0, InitialEvaluation, Proof, ProofBody, SubjectProof};
use crate::scalar::{rational_to_string, GaussianRational};

pub use check::{check, check_with_source, Accepted, CheckError};

pub const SCHEMA_VERSION: u64 = 1;
pub const ENGINE_VERSION: &str = concat!("ivpcert ", env!("CARGO_PKG_VERSION"));
/// File extension for certificate documents.
pub const EXTENSION: &str = "ivpcert.json";

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub doc: Value,
    pub content_hash: String,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("not a certificate document: {0}")]
pub struct FormatError(pub String);

impl Certificate {
    /// Seals a document: drops any stale hash and computes the current one.
    pub fn seal(mut doc: Value) -> Self {
        if let Some(m) = doc.as_object_mut() {
            m.remove("content_hash");
        }
        let content_hash = hash_value(&doc);
        if let Some(m) = doc.as_object_mut() {
            m.insert("content_hash".into(), Value::String(content_hash.clone()));
        }
        Certificate { doc, content_hash }
    }

    /// Reads a document as written, without checking its hash.
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| FormatError(e.to_string()))?;
        let content_hash = doc
            .get("content_hash")
            .and_then(Value::as_str)
            .ok_or_else(|| FormatError("missing `content_hash`".into()))?
            .to_string();
        Ok(Certificate { doc, content_hash })
    }

    /// Canonical bytes: pretty-printed with sorted keys and a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(&self.doc).expect("values serialize");
        v.push(b'\n');
        v
    }

    pub fn name(&self) -> &str {
        self.doc["identity"]["name"].as_str().unwrap_or("")
    }

    pub fn instance(&self) -> &str {
        self.doc["identity"]["instance"].as_str().unwrap_or("")
    }

    pub fn bindings(&self) -> Bindings {
        self.doc["identity"]["bindings"]
            .as_object()
            .map(|m| m.iter().filter_map(|(k, v)| Some((k.as_str().into(), v.as_i64()?))).collect())
            .unwrap_or_default()
    }

    /// `name[n=5]` becomes `name_n5.ivpcert.json`.
    pub fn file_name(&self) -> String {
        let mut s = self.name().to_string();
        for (k, v) in self.bindings() {
            s += &format!("_{k}{}", if v < 0 { format!("m{}", -v) } else { v.to_string() });
        }
        format!("{s}.{EXTENSION}")
    }

    /// The hash the document's current contents would seal to.
    pub fn recomputed_hash(&self) -> String {
        let mut doc = self.doc.clone();
        if let Some(m) = doc.as_object_mut() {
            m.remove("content_hash");
        }
        hash_value(&doc)
    }
}

/// Certificates available to the checker, by content hash.
#[derive(Clone, Debug, Default)]
pub struct CertificatePool {
    by_hash: BTreeMap<String, Certificate>,
}

impl CertificatePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Certificate) {
        self.by_hash.insert(c.content_hash.clone(), c);
    }

    pub fn get(&self, hash: &str) -> Option<&Certificate> {
        self.by_hash.get(hash)
    }

    pub fn len(&self) -> usize {
        self.by_hash.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_hash.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Certificate> {
        self.by_hash.values()
    }
}

impl FromIterator<Certificate> for CertificatePool {
    fn from_iter<I: IntoIterator<Item = Certificate>>(iter: I) -> Self {
        let mut p = CertificatePool::new();
        for c in iter {
            p.insert(c);
        }
        p
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_value(v: &Value) -> String {
    sha256_hex(&serde_json::to_vec(v).expect("values serialize"))
}

pub fn encode_gaussian(c: &GaussianRational) -> Value {
    json!({ "re": rational_to_string(&c.re), "im": rational_to_string(&c.im) })
}

pub fn encode_poly(p: &MultiPoly) -> Value {
    Value::Array(
        p.to_records()
            .into_iter()
            .map(|(c, m)| {
                let m: Vec<Value> = m.into_iter().map(|(g, e)| json!([g, e])).collect();
                json!({ "c": encode_gaussian(&c), "m": m })
            })
            .collect(),
    )
}

pub fn encode_rf(r: &CanonicalRF) -> Value {
    json!({ "num": encode_poly(r.num()), "den": encode_poly(r.den()) })
}

pub fn encode_bindings(b: &Bindings) -> Value {
    Value::Object(b.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn encode_origin(o: &Origin) -> Value {
    match o {
        Origin::Direct => json!({ "kind": "direct" }),
        Origin::Derived { base, multiplier } => {
            json!({ "kind": "derived", "base": &**base, "multiplier": multiplier.to_string() })
        }
        Origin::Split { base, part, clear } => {
            json!({ "kind": "split", "base": &**base, "part": part.as_str(), "clear": clear.to_string() })
        }
    }
}

pub(crate) fn encode_subject(s: &SubjectProof) -> Value {
    json!({
        "subject": s.subject.as_str(),
        "stages": s.stages.iter().map(encode_rf).collect::<Vec<_>>(),
        "common_denominator": encode_poly(&s.common_denominator),
        "cleared_terms": s.cleared_terms.iter().map(encode_poly).collect::<Vec<_>>(),
    })
}

pub(crate) fn encode_initial(e: &InitialEvaluation) -> Value {
    json!({
        "subject": e.subject.as_str(),
        "order": e.order,
        "value": encode_rf(&e.value),
        "expected": encode_rf(&e.expected),
        "source": e.source.as_str(),
    })
}

pub(crate) fn encode_t0_den(d: &DenominatorAtT0) -> Value {
    json!({ "label": d.label, "den": encode_poly(&d.den), "value": encode_rf(&d.value) })
}

/// Canonical document for a successful proof.
pub fn emit(p: &Proof) -> Certificate {
    let ob = &p.obligation;
    let d = &ob.decl;
    let mut doc = Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("engine_version".into(), json!(ENGINE_VERSION));
    doc.insert(
        "identity".into(),
        json!({
            "name": &*d.name,
            "instance": instance_name(&d.name, &ob.bindings),
            "source": &*d.source,
            "source_sha256": sha256_hex(d.source.as_bytes()),
            "bindings": encode_bindings(&ob.bindings),
            "origin": encode_origin(&d.origin),
        }),
    );
    doc.insert("mode".into(), json!(ob.mode.as_str()));
    doc.insert("declared_mode".into(), json!(d.mode.as_str()));
    doc.insert("base_denominator".into(), json!(p.base_den));
    doc.insert(
        "ivp".into(),
        json!({
            "var": &*d.var.name,
            "order": d.ivp.op.order,
            "coeffs": p.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "force": p.force.to_string(),
            "t0": d.ivp.t0.to_string(),
            "initial_values": p.values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "interval": d.ivp.interval.to_string(),
        }),
    );
    doc.insert("sides".into(), json!({ "lhs": p.lhs.to_string(), "rhs": p.rhs.to_string() }));
    match &p.body {
        ProofBody::Operator(op) => {
            doc.insert(
                "cleared_operator_identity".into(),
                json!({
                    "coeffs": op.coeffs.iter().map(encode_rf).collect::<Vec<_>>(),
                    "force": encode_rf(&op.force),
                    "subjects": op.subjects.iter().map(encode_subject).collect::<Vec<_>>(),
                }),
            );
            doc.insert("initial_evaluations".into(), Value::Array(op.initial.iter().map(encode_initial).collect()));
        }
        ProofBody::Split(s) => {
            doc.insert(
                "split".into(),
                json!({
                    "part": s.part.as_str(),
                    "clear": encode_rf(&s.clear),
                    "base_parts": s.base_parts.iter().map(encode_rf).collect::<Vec<_>>(),
                    "cleared": s.cleared.iter().map(encode_rf).collect::<Vec<_>>(),
                }),
            );
            doc.insert("initial_evaluations".into(), json!([]));
        }
    }
    let s = &p.sampling;
    doc.insert(
        "regular_point_evidence".into(),
        json!({
            "t0_denominators": p.t0_denominators.iter().map(encode_t0_den).collect::<Vec<_>>(),
            "sampling": {
                "count": s.count,
                "precision": s.precision,
                "seed": s.seed,
                "min_modulus": s.min_modulus,
                "near_zero": s.near_zero,
                "note": s.note,
            },
        }),
    );
    doc.insert(
        "dependencies".into(),
        Value::Array(
            p.dependencies
                .iter()
                .map(|r| {
                    json!({
                        "name": &*r.name,
                        "bindings": encode_bindings(&r.bindings),
                        "certificate_hash": r.certificate_hash,
                    })
                })
                .collect(),
        ),
    );
    Certificate::seal(Value::Object(doc))
}
