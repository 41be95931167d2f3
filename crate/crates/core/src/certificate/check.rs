//! Replay of certificate documents.
//!
//! The checker rebuilds every claim from the declaration source with fresh
//! canonicalization calls and derivatives taken on normal forms, then compares
//! the encodings against the document. It never calls the prover, and split
//! claims are cross-checked with the exponential normal form.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use super::{encode_poly, encode_rf, sha256_hex, Certificate, CertificatePool, SCHEMA_VERSION};
use crate::algebra::{
    canonicalize, derivative_rf, eval_at, euler_rewrite, gcd, rf_to_expr, split_real_imag, AlgebraCtx, CanonicalRF,
    Direction, EvalError, MultiPoly,
};
use crate::expr::{expand_finite_sums, parse_document, parse_expr, Bindings, Expr, Scope, Side, VarSymbol};
use crate::ivp::{IdentityDecl, Mode, Origin, Part};
use crate::oracle::expnf;
use crate::oracle::sample::{self, SamplePlan, EVIDENCE_SPAN};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("{what} hash mismatch: recorded {recorded}, computed {computed}")]
    HashMismatch { what: String, recorded: String, computed: String },
    #[error("stage mismatch in {subject} at {stage}")]
    StageMismatch { subject: String, stage: String },
    #[error("initial evaluation mismatch for {subject} at order {order}")]
    InitialMismatch { subject: String, order: usize },
    #[error("regular-point evidence mismatch: {0}")]
    EvidenceMismatch(String),
    #[error("missing dependency `{name}` with hash {hash}")]
    MissingDependency { name: String, hash: String },
    #[error("rejected: {0}")]
    Rejected(String),
}

/// Summary of an accepted certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accepted {
    pub instance: String,
    pub content_hash: String,
    /// Normal forms recomputed and compared.
    pub stages: usize,
}

type CResult<T> = Result<T, CheckError>;

fn schema(msg: impl Into<String>) -> CheckError {
    CheckError::SchemaError(msg.into())
}

fn reject(msg: impl Into<String>) -> CheckError {
    CheckError::Rejected(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> CResult<&'a Value> {
    v.get(key).ok_or_else(|| schema(format!("missing `{key}`")))
}

fn str_field<'a>(v: &'a Value, key: &str) -> CResult<&'a str> {
    field(v, key)?.as_str().ok_or_else(|| schema(format!("`{key}` is not a string")))
}

fn u64_field(v: &Value, key: &str) -> CResult<u64> {
    field(v, key)?.as_u64().ok_or_else(|| schema(format!("`{key}` is not an unsigned integer")))
}

fn array<'a>(v: &'a Value, key: &str) -> CResult<&'a Vec<Value>> {
    field(v, key)?.as_array().ok_or_else(|| schema(format!("`{key}` is not an array")))
}

fn bindings_of(v: &Value) -> CResult<Bindings> {
    let m = v.as_object().ok_or_else(|| schema("bindings are not an object"))?;
    m.iter()
        .map(|(k, v)| Ok((k.as_str().into(), v.as_i64().ok_or_else(|| schema("binding is not an integer"))?)))
        .collect()
}

/// Checks a certificate against the source embedded in it.
pub fn check(cert: &Certificate, pool: &CertificatePool) -> Result<Accepted, CheckError> {
    let source = str_field(field(&cert.doc, "identity")?, "source")?.to_string();
    check_with_source(cert, &source, pool)
}

/// Checks a certificate against a separately supplied declaration source.
pub fn check_with_source(cert: &Certificate, source: &str, pool: &CertificatePool) -> Result<Accepted, CheckError> {
    let doc = &cert.doc;
    match doc.get("schema_version").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(schema(format!("unsupported schema version {v}"))),
        None => return Err(schema("missing `schema_version`")),
    }
    let engine = str_field(doc, "engine_version")?;
    let well_formed = engine.strip_prefix("ivpcert ").is_some_and(|v| {
        let parts: Vec<&str> = v.split('.').collect();
        parts.len() == 3 && parts.iter().all(|p| !p.is_empty() && p.bytes().all(|c| c.is_ascii_digit()))
    });
    if !well_formed {
        return Err(schema(format!("malformed engine version `{engine}`")));
    }
    let identity = field(doc, "identity")?;
    let recorded_src = str_field(identity, "source_sha256")?;
    let computed_src = sha256_hex(source.as_bytes());
    if recorded_src != computed_src || str_field(identity, "source")? != source {
        return Err(CheckError::HashMismatch {
            what: "source".into(),
            recorded: recorded_src.into(),
            computed: computed_src,
        });
    }
    let mut r = Replay::new(doc, source, pool)?;
    r.run()?;
    let computed = cert.recomputed_hash();
    if computed != cert.content_hash || doc.get("content_hash").and_then(Value::as_str) != Some(&cert.content_hash) {
        return Err(CheckError::HashMismatch { what: "content".into(), recorded: cert.content_hash.clone(), computed });
    }
    Ok(Accepted { instance: str_field(identity, "instance")?.into(), content_hash: computed, stages: r.stages })
}

struct Dep<'a> {
    decl: IdentityDecl,
    cert: &'a Certificate,
}

struct Replay<'a> {
    doc: &'a Value,
    pool: &'a CertificatePool,
    decl: IdentityDecl,
    bindings: Bindings,
    mode: Mode,
    ctx: AlgebraCtx,
    deps: BTreeMap<String, Dep<'a>>,
    stages: usize,
}

fn find_decl(source: &str, name: &str) -> CResult<IdentityDecl> {
    let decls = parse_document(source).map_err(|e| reject(format!("source does not parse: {e}")))?;
    decls.into_iter().find(|d| &*d.name == name).ok_or_else(|| reject(format!("source declares no `{name}`")))
}

fn instance(name: &str, b: &Bindings) -> String {
    if b.is_empty() {
        return name.into();
    }
    let parts: Vec<String> = b.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}[{}]", parts.join(","))
}

fn expand(e: &Expr, b: &Bindings) -> CResult<Expr> {
    expand_finite_sums(e, b).map_err(|err| reject(format!("cannot expand `{e}`: {err}")))
}

impl<'a> Replay<'a> {
    fn new(doc: &'a Value, source: &str, pool: &'a CertificatePool) -> CResult<Self> {
        let identity = field(doc, "identity")?;
        let name = str_field(identity, "name")?;
        let decl = find_decl(source, name)?;
        let bindings = bindings_of(field(identity, "bindings")?)?;
        let params: Vec<&str> = decl.params.iter().map(|p| &*p.name).collect();
        if bindings.keys().map(|k| &**k).collect::<Vec<_>>() != params {
            return Err(reject("bindings do not match the declared parameters"));
        }
        for p in &decl.params {
            if !p.admits(bindings[&p.name]) {
                return Err(reject(format!("parameter `{}` out of range", p.name)));
            }
        }
        if str_field(identity, "instance")? != instance(name, &bindings) {
            return Err(reject("instance name"));
        }
        if field(identity, "origin")? != &super::encode_origin(&decl.origin) {
            return Err(reject("origin does not match the source"));
        }
        let mode = Mode::parse(str_field(doc, "mode")?).ok_or_else(|| schema("unknown mode"))?;
        if str_field(doc, "declared_mode")? != decl.mode.as_str() {
            return Err(reject("declared mode does not match the source"));
        }
        let ok_mode = match decl.origin {
            Origin::Split { .. } => mode == Mode::Split,
            Origin::Derived { .. } => mode == Mode::Residual,
            Origin::Direct => mode != Mode::Split,
        };
        if !ok_mode {
            return Err(reject(format!("mode {} does not apply", mode.as_str())));
        }
        let base_den = u64_field(doc, "base_denominator")?;
        if base_den == 0 {
            return Err(schema("base denominator is zero"));
        }
        let mut r = Replay {
            doc,
            pool,
            decl,
            bindings,
            mode,
            ctx: AlgebraCtx::new(base_den),
            deps: BTreeMap::new(),
            stages: 0,
        };
        r.load_dependencies()?;
        Ok(r)
    }

    fn load_dependencies(&mut self) -> CResult<()> {
        let mut required: Vec<String> = self.decl.depends.iter().map(|d| d.to_string()).collect();
        if matches!(self.decl.origin, Origin::Split { .. }) && !required.iter().any(|d| d == crate::prover::EULER) {
            required.push(crate::prover::EULER.into());
        }
        for entry in array(self.doc, "dependencies")? {
            let name = str_field(entry, "name")?.to_string();
            let hash = str_field(entry, "certificate_hash")?.to_string();
            let b = bindings_of(field(entry, "bindings")?)?;
            let cert = self
                .pool
                .get(&hash)
                .ok_or_else(|| CheckError::MissingDependency { name: name.clone(), hash: hash.clone() })?;
            let computed = cert.recomputed_hash();
            if computed != hash {
                return Err(CheckError::HashMismatch { what: format!("dependency `{name}`"), recorded: hash, computed });
            }
            if cert.name() != name || cert.bindings() != b {
                return Err(reject(format!("dependency `{name}` names a different instance")));
            }
            let dep_source = cert.doc["identity"]["source"].as_str().ok_or_else(|| schema("dependency source"))?;
            let decl = find_decl(dep_source, &name)?;
            for p in &decl.params {
                let want = self.bindings.get(&p.name).copied().unwrap_or(p.value);
                if b.get(&p.name) != Some(&want) {
                    return Err(reject(format!("dependency `{name}` is bound to other parameters")));
                }
            }
            if !required.contains(&name) || self.deps.insert(name.clone(), Dep { decl, cert }).is_some() {
                return Err(reject(format!("unexpected dependency `{name}`")));
            }
        }
        if let Some(d) = required.iter().find(|d| !self.deps.contains_key(*d)) {
            return Err(reject(format!("dependency `{d}` is not listed")));
        }
        Ok(())
    }

    /// A side of a dependency, read from its certificate and written in `var`.
    fn lemma_side(&self, name: &str, side: Side, var: &VarSymbol) -> CResult<Expr> {
        let dep = self.deps.get(name).ok_or_else(|| reject(format!("lemma `{name}` is not a dependency")))?;
        let text = dep.cert.doc["sides"][side.as_str()]
            .as_str()
            .ok_or_else(|| schema(format!("dependency `{name}` has no {} side", side.as_str())))?;
        let e = parse_expr(text, &Scope::of_decl(&dep.decl))
            .map_err(|err| reject(format!("side of `{name}` does not parse: {err}")))?;
        Ok(if dep.decl.var.name == var.name && dep.decl.var.role == var.role {
            e
        } else {
            e.rename_var(&dep.decl.var.name, var)
        })
    }

    fn resolve(&self, v: &Expr, swap: bool) -> CResult<Expr> {
        v.resolve_lemma_refs(&|name: &str, side: Side, var: Option<&VarSymbol>| {
            let side = match (side, swap) {
                (s, false) => s,
                (Side::Lhs, true) => Side::Rhs,
                (Side::Rhs, true) => Side::Lhs,
            };
            self.lemma_side(name, side, var.unwrap_or(&self.decl.var))
        })
    }

    fn canon(&self, e: &Expr) -> CResult<CanonicalRF> {
        canonicalize(e, self.ctx).map_err(|err| reject(format!("`{e}` does not canonicalize: {err}")))
    }

    fn at_t0(&self, r: &CanonicalRF) -> CResult<CanonicalRF> {
        eval_at(r, &self.decl.var.name, &self.decl.ivp.t0).map_err(|e| match e {
            EvalError::SingularEvaluation(s) => reject(format!("singular at the initial point: {s}")),
            other => reject(other.to_string()),
        })
    }

    fn run(&mut self) -> CResult<()> {
        let d = &self.decl;
        if !d.ivp.interval.contains(&d.ivp.t0) {
            return Err(reject("initial point outside the interval"));
        }
        let sides = field(self.doc, "sides")?;
        let claimed = [str_field(sides, "lhs")?, str_field(sides, "rhs")?];
        let scope = Scope::of_decl(d);
        let mut recorded = Vec::new();
        for text in claimed {
            let e = parse_expr(text, &scope).map_err(|err| reject(format!("recorded side does not parse: {err}")))?;
            recorded.push(e);
        }
        if self.mode == Mode::Split {
            self.run_split(&recorded)
        } else {
            self.run_operator(&recorded)
        }
    }

    /// Sides of the obligation as normal forms, rebuilt from the source.
    fn side_forms(&self) -> CResult<[CanonicalRF; 2]> {
        let d = &self.decl;
        match &d.origin {
            Origin::Derived { base, multiplier } => {
                let m = self.canon(&expand(multiplier, &self.bindings)?)?;
                let mut out = Vec::new();
                for s in [Side::Lhs, Side::Rhs] {
                    let b = self.canon(&self.lemma_side(base, s, &d.var)?)?;
                    out.push(m.mul(&derivative_rf(&b, &d.var.name)));
                }
                Ok(out.try_into().unwrap())
            }
            _ => Ok([
                self.canon(&expand(&d.lhs, &self.bindings)?)?,
                self.canon(&expand(&d.rhs, &self.bindings)?)?,
            ]),
        }
    }

    /// Compares the recorded `ivp` block with the source. Split certificates
    /// carry no operator, so their coefficient and value lists are empty.
    fn check_ivp_text(&self) -> CResult<Vec<Expr>> {
        let d = &self.decl;
        let ivp = field(self.doc, "ivp")?;
        let b = &self.bindings;
        let split = self.mode == Mode::Split;
        let coeffs: Vec<String> = if split {
            Vec::new()
        } else {
            d.ivp.op.coeffs.iter().map(|c| Ok(expand(c, b)?.to_string())).collect::<CResult<_>>()?
        };
        let raw_values: Vec<Expr> =
            if split { Vec::new() } else { d.ivp.initial_values.iter().map(|v| expand(v, b)).collect::<CResult<_>>()? };
        let force = if split { Expr::zero() } else { expand(&d.ivp.op.force, b)? };
        let strings = |key: &str| -> CResult<Vec<String>> {
            array(ivp, key)?
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| schema(format!("`{key}` entry"))))
                .collect()
        };
        let same = str_field(ivp, "var")? == &*d.var.name
            && u64_field(ivp, "order")? == d.ivp.op.order as u64
            && strings("coeffs")? == coeffs
            && str_field(ivp, "force")? == force.to_string()
            && str_field(ivp, "t0")? == d.ivp.t0.to_string()
            && strings("initial_values")? == raw_values.iter().map(|v| v.to_string()).collect::<Vec<_>>()
            && str_field(ivp, "interval")? == d.ivp.interval.to_string();
        if !same {
            return Err(reject("ivp data does not match the source"));
        }
        Ok(raw_values)
    }

    /// The recorded base denominator must be the least one for the atoms the
    /// prover canonicalized, so it cannot be chosen freely.
    fn check_base_den<'e>(&self, exprs: impl IntoIterator<Item = &'e Expr>) -> CResult<()> {
        let least = AlgebraCtx::for_exprs(exprs).base_den;
        if least != self.ctx.base_den {
            return Err(reject(format!("base denominator {} is not the least one ({least})", self.ctx.base_den)));
        }
        Ok(())
    }

    fn run_operator(&mut self, recorded: &[Expr]) -> CResult<()> {
        let raw_values = self.check_ivp_text()?;
        let d = self.decl.clone();
        let var = &d.var.name;
        let b = self.bindings.clone();
        let mut used: Vec<Expr> = recorded.to_vec();
        for c in d.ivp.op.coeffs.iter().chain([&d.ivp.op.force]) {
            used.push(expand(c, &b)?);
        }
        for v in &raw_values {
            used.push(self.resolve(v, false)?);
        }
        self.check_base_den(&used)?;
        let sides = self.side_forms()?;
        for (k, e) in recorded.iter().enumerate() {
            if self.canon(e)? != sides[k] {
                return Err(reject(format!("recorded {} side does not match the source", ["lhs", "rhs"][k])));
            }
        }
        let coi = field(self.doc, "cleared_operator_identity")?;
        let claimed_coeffs = array(coi, "coeffs")?;
        let mut coeffs = Vec::new();
        for (i, c) in d.ivp.op.coeffs.iter().enumerate() {
            let r = self.canon(&expand(c, &b)?)?;
            if claimed_coeffs.get(i) != Some(&encode_rf(&r)) {
                return Err(CheckError::StageMismatch { subject: "operator".into(), stage: format!("a{}", i + 1) });
            }
            coeffs.push(r);
        }
        if claimed_coeffs.len() != coeffs.len() {
            return Err(CheckError::StageMismatch { subject: "operator".into(), stage: "order".into() });
        }
        let force = self.canon(&expand(&d.ivp.op.force, &b)?)?;
        if field(coi, "force")? != &encode_rf(&force) {
            return Err(CheckError::StageMismatch { subject: "operator".into(), stage: "b".into() });
        }
        if self.mode == Mode::Residual && !force.is_zero() {
            return Err(reject("residual mode with a nonzero force"));
        }

        // Regular point.
        let mut t0_dens = Vec::new();
        let labelled = coeffs.iter().enumerate().map(|(i, c)| (format!("a{}", i + 1), c)).chain([("b".to_string(), &force)]);
        for (label, r) in labelled {
            if r.den().is_constant() {
                continue;
            }
            let v = self.at_t0(&CanonicalRF::from_poly(r.den().clone()))?;
            if v.is_zero() {
                return Err(reject(format!("denominator of {label} vanishes at the initial point")));
            }
            t0_dens.push(serde_json::json!({ "label": label, "den": encode_poly(r.den()), "value": encode_rf(&v) }));
        }

        let subjects: Vec<(&str, CanonicalRF)> = match self.mode {
            Mode::Residual => vec![("residual", sides[0].sub(&sides[1]))],
            _ => vec![("lhs", sides[0].clone()), ("rhs", sides[1].clone())],
        };
        let claimed_subjects = array(coi, "subjects")?;
        if claimed_subjects.len() != subjects.len() {
            return Err(CheckError::StageMismatch { subject: "operator".into(), stage: "subjects".into() });
        }
        let m = d.ivp.op.order;
        let mut all_stages = Vec::new();
        for ((name, y), claim) in subjects.iter().zip(claimed_subjects) {
            let mismatch = |stage: String| CheckError::StageMismatch { subject: name.to_string(), stage };
            if str_field(claim, "subject")? != *name {
                return Err(mismatch("subject".into()));
            }
            let claimed_stages = array(claim, "stages")?;
            let mut stages = vec![y.clone()];
            for k in 1..=m {
                stages.push(derivative_rf(&stages[k - 1], var));
            }
            for (k, s) in stages.iter().enumerate() {
                if claimed_stages.get(k) != Some(&encode_rf(s)) {
                    return Err(mismatch(k.to_string()));
                }
                self.stages += 1;
            }
            if claimed_stages.len() != stages.len() {
                return Err(mismatch((m + 1).to_string()));
            }
            let mut terms = vec![stages[m].clone()];
            for (i, a) in coeffs.iter().enumerate() {
                terms.push(a.mul(&stages[m - 1 - i]));
            }
            terms.push(force.neg());
            let common = terms.iter().fold(MultiPoly::one(), |acc, t| {
                let g = gcd(&acc, t.den());
                acc.mul(&t.den().div_exact(&g).expect("gcd divides"))
            });
            if field(claim, "common_denominator")? != &encode_poly(&common) {
                return Err(mismatch("common_denominator".into()));
            }
            let claimed_cleared = array(claim, "cleared_terms")?;
            let mut total = MultiPoly::zero();
            for (k, t) in terms.iter().enumerate() {
                let c = t.num().mul(&common.div_exact(t.den()).ok_or_else(|| reject("common denominator"))?);
                if claimed_cleared.get(k) != Some(&encode_poly(&c)) {
                    return Err(mismatch(format!("cleared_terms[{k}]")));
                }
                total = total.add(&c);
            }
            if claimed_cleared.len() != terms.len() {
                return Err(mismatch("cleared_terms".into()));
            }
            if !total.is_zero() {
                return Err(reject(format!("operator does not annihilate the {name}")));
            }
            all_stages.push((*name, stages));
        }

        // Initial data.
        let claimed_init = array(self.doc, "initial_evaluations")?;
        let mut expected_init = Vec::new();
        let other_side = self.mode == Mode::Coincidence && d.mode != Mode::Coincidence;
        for (name, stages) in &all_stages {
            for j in 0..m {
                let mismatch = || CheckError::InitialMismatch { subject: name.to_string(), order: j };
                let value = self.at_t0(&stages[j])?;
                let (expected, source) = match self.mode {
                    Mode::Residual => (CanonicalRF::zero(), "zero"),
                    _ if other_side => {
                        if *name == "rhs" {
                            continue;
                        }
                        (self.at_t0(&all_stages[1].1[j])?, "other-side")
                    }
                    _ => {
                        let k = expected_init.len();
                        let source = claimed_init
                            .get(k)
                            .and_then(|c| c.get("source"))
                            .and_then(Value::as_str)
                            .ok_or_else(mismatch)?;
                        let swap = match source {
                            "declared" => false,
                            "declared-swapped" if raw_values[j].has_lemma_ref() => true,
                            _ => return Err(mismatch()),
                        };
                        let v = self.canon(&self.resolve(&raw_values[j], swap)?)?;
                        (self.at_t0(&v)?, if swap { "declared-swapped" } else { "declared" })
                    }
                };
                if value != expected {
                    return Err(mismatch());
                }
                expected_init.push((
                    name.to_string(),
                    j,
                    serde_json::json!({
                        "subject": name,
                        "order": j,
                        "value": encode_rf(&value),
                        "expected": encode_rf(&expected),
                        "source": source,
                    }),
                ));
            }
        }
        for (k, (name, j, e)) in expected_init.iter().enumerate() {
            if claimed_init.get(k) != Some(e) {
                return Err(CheckError::InitialMismatch { subject: name.clone(), order: *j });
            }
        }
        if claimed_init.len() != expected_init.len() {
            return Err(CheckError::InitialMismatch { subject: "count".into(), order: claimed_init.len() });
        }

        let mut dens: Vec<MultiPoly> = coeffs.iter().chain([&force]).map(|c| c.den().clone()).collect();
        dens.extend(all_stages.iter().map(|(_, s)| s[0].den().clone()));
        self.check_evidence(t0_dens, &dens)
    }

    fn run_split(&mut self, recorded: &[Expr]) -> CResult<()> {
        let d = self.decl.clone();
        let Origin::Split { base, part, clear } = &d.origin else { unreachable!() };
        let b = self.bindings.clone();
        let targets = [expand(&d.lhs, &b)?, expand(&d.rhs, &b)?];
        for (k, e) in recorded.iter().enumerate() {
            if self.canon(e)? != self.canon(&targets[k])? {
                return Err(reject(format!("recorded {} side does not match the source", ["lhs", "rhs"][k])));
            }
        }
        let clear = expand(clear, &b)?;
        self.check_ivp_text()?;
        let base_sides = [self.lemma_side(base, Side::Lhs, &d.var)?, self.lemma_side(base, Side::Rhs, &d.var)?];
        self.check_base_den(targets.iter().chain([&clear]).chain(&base_sides))?;
        let sp = field(self.doc, "split")?;
        if str_field(sp, "part")? != part.as_str() {
            return Err(reject("split part"));
        }
        let mismatch = |stage: &str| CheckError::StageMismatch { subject: "split".into(), stage: stage.into() };
        let to_exp = |e: &Expr| -> CResult<CanonicalRF> {
            let x = euler_rewrite(e, Direction::TrigToExp, self.ctx).map_err(|err| reject(err.to_string()))?.expr;
            self.canon(&x)
        };
        let clear_trig = self.canon(&clear)?;
        let at = self.at_t0(&clear_trig)?;
        if at.is_zero() {
            return Err(reject("clearing factor vanishes at the initial point"));
        }
        let clear_exp = to_exp(&clear)?;
        if field(sp, "clear")? != &encode_rf(&clear_exp) {
            return Err(mismatch("clear"));
        }
        let claimed_parts = array(sp, "base_parts")?;
        let claimed_cleared = array(sp, "cleared")?;
        let mut counted = 0;
        for (k, side) in [Side::Lhs, Side::Rhs].into_iter().enumerate() {
            let base_side = self.lemma_side(base, side, &d.var)?;
            let trig = euler_rewrite(&base_side, Direction::ExpToTrig, self.ctx).map_err(|e| reject(e.to_string()))?.expr;
            let (re, im) = split_real_imag(&self.canon(&trig)?).map_err(|e| reject(e.to_string()))?;
            // Both parts must be real and recombine to the base side.
            let real = |r: &CanonicalRF| {
                [r.num(), r.den()].iter().all(|p| p.has_only_real_coeffs()) && !r.mentions(|g| !g.is_real())
            };
            let recombined = Expr::add(rf_to_expr(&re), Expr::mul(Expr::i(), rf_to_expr(&im)));
            let agrees = expnf::agrees(&base_side, &recombined).map_err(|e| reject(e.to_string()))?;
            if !real(&re) || !real(&im) || !agrees {
                return Err(mismatch("base_parts"));
            }
            let chosen = match part {
                Part::Re => re,
                Part::Im => im,
            };
            if claimed_parts.get(k) != Some(&encode_rf(&chosen)) {
                return Err(mismatch(&format!("base_parts[{k}]")));
            }
            let target = clear_exp.mul(&to_exp(&targets[k])?);
            let from_base = clear_exp.mul(&to_exp(&rf_to_expr(&chosen))?);
            if claimed_cleared.get(k) != Some(&encode_rf(&target)) {
                return Err(mismatch(&format!("cleared[{k}]")));
            }
            if target != from_base {
                return Err(reject(format!("cleared {} differs from the base part", side.as_str())));
            }
            // Independent zero test of the same claim.
            let diff = Expr::mul(clear.clone(), Expr::sub(targets[k].clone(), rf_to_expr(&chosen)));
            let nf = expnf::exp_normalize(&diff).map_err(|e| reject(e.to_string()))?;
            if !nf.is_zero() {
                return Err(reject(format!("exponential normal form of the {} claim is nonzero (D = {})", side.as_str(), nf.base_den)));
            }
            counted += 2;
        }
        self.stages += counted;
        if claimed_parts.len() != 2 || claimed_cleared.len() != 2 {
            return Err(mismatch("arity"));
        }
        if !array(self.doc, "initial_evaluations")?.is_empty() {
            return Err(CheckError::InitialMismatch { subject: "split".into(), order: 0 });
        }
        let t0_dens = vec![serde_json::json!({ "label": "clear", "den": encode_poly(clear_trig.num()), "value": encode_rf(&at) })];
        let mut dens = vec![clear_trig.num().clone(), clear_trig.den().clone()];
        for e in &targets {
            if let Ok(r) = canonicalize(e, self.ctx) {
                dens.push(r.den().clone());
            }
        }
        self.check_evidence(t0_dens, &dens)
    }

    fn check_evidence(&self, t0_dens: Vec<Value>, dens: &[MultiPoly]) -> CResult<()> {
        let ev = field(self.doc, "regular_point_evidence")?;
        if array(ev, "t0_denominators")? != &t0_dens {
            return Err(CheckError::EvidenceMismatch("denominator values at the initial point".into()));
        }
        let s = field(ev, "sampling")?;
        let count = u64_field(s, "count")? as usize;
        let precision = u64_field(s, "precision")? as usize;
        let seed = u64_field(s, "seed")?;
        let d = &self.decl;
        let names = d.pvars.iter().map(|v| v.name.clone()).chain(d.consts.iter().map(|c| c.name.clone()));
        let plan = SamplePlan::new(d.var.name.clone(), d.ivp.interval.clone())
            .count(count)
            .precision(precision)
            .seed(seed)
            .span(EVIDENCE_SPAN)
            .consts(names);
        let mut polys: Vec<MultiPoly> = Vec::new();
        for p in dens {
            if !p.is_constant() && !polys.contains(p) {
                polys.push(p.clone());
            }
        }
        let r = sample::min_modulus(&polys, &plan, crate::exec::Execution::Sequential);
        let note_ok = str_field(s, "note")? == sample::evidence_note(&d.ivp.interval);
        if str_field(s, "min_modulus")? != r.min_modulus || u64_field(s, "near_zero")? != r.near_zero as u64 || r.count != count || !note_ok {
            return Err(CheckError::EvidenceMismatch(format!(
                "sampling replay gives min modulus {} with {} near-zero points",
                r.min_modulus, r.near_zero
            )));
        }
        Ok(())
    }
}
