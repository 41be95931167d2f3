//! Certification through uniqueness of solutions to linear initial value problems.
//!
//! An obligation is checked in order: the instance is expanded, the declared
//! initial point must lie in the interval and be a regular point of the
//! operator, the operator must annihilate the subject(s) exactly, the
//! derivatives at the initial point must match, and finally the coefficient
//! denominators are sampled across the interval. Only the last step is
//! numeric and it never decides the verdict.

mod lemma;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{
    canonicalize, eval_at, euler_rewrite, gcd, rf_to_expr, AlgebraCtx, CanonicalRF, Canonicalizer, Direction, EvalError,
    MultiPoly,
};
use crate::calculus::{apply_operator_with, operator_terms};
use crate::certificate::{self, Certificate};
use crate::exec::Execution;
use crate::expr::{expand_finite_sums, Bindings, Expr, Name, Side, VarSymbol};
use crate::ivp::{IdentityDecl, LinOp, Mode, Origin, Part};
use crate::oracle::sample::{self, SamplePlan, EVIDENCE_SPAN};

pub use lemma::{
    derive_by_differentiation, derived_sides, split_certified_identity, split_part, CertifiedLemma, LemmaStore,
};

/// Name of the identity that licenses rewriting between trig and exp forms.
pub const EULER: &str = "euler";

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub samples: usize,
    pub precision: usize,
    pub seed: u64,
    /// Points tried when looking for a numeric counterexample.
    pub falsify_samples: usize,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { samples: 1000, precision: 256, seed: 1, falsify_samples: 100, exec: Execution::Parallel }
    }
}

#[derive(Clone, Debug)]
pub struct ProofObligation {
    pub decl: Arc<IdentityDecl>,
    pub bindings: Bindings,
    pub mode: Mode,
}

impl ProofObligation {
    pub fn new(decl: Arc<IdentityDecl>) -> Self {
        let bindings = decl.default_bindings();
        let mode = decl.mode;
        ProofObligation { decl, bindings, mode }
    }

    pub fn bind(mut self, name: &str, value: i64) -> Self {
        self.bindings.insert(name.into(), value);
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// `name` or `name[n=5]`.
    pub fn instance(&self) -> String {
        instance_name(&self.decl.name, &self.bindings)
    }
}

pub fn instance_name(name: &str, bindings: &Bindings) -> String {
    if bindings.is_empty() {
        return name.to_string();
    }
    let b: Vec<String> = bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}[{}]", b.join(","))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Certified,
    NotAnnihilated,
    InitialValueMismatch,
    SingularInitialPoint,
    Unsupported,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Certified => "Certified",
            Status::NotAnnihilated => "NotAnnihilated",
            Status::InitialValueMismatch => "InitialValueMismatch",
            Status::SingularInitialPoint => "SingularInitialPoint",
            Status::Unsupported => "Unsupported",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub diagnostics: Vec<String>,
    /// A point where `lhs - rhs` is numerically far from zero.
    pub counterexample: Option<String>,
}

impl Verdict {
    pub fn certified() -> Self {
        Verdict { status: Status::Certified, diagnostics: Vec::new(), counterexample: None }
    }

    pub fn fail(status: Status, diagnostic: impl Into<String>) -> Self {
        Verdict { status, diagnostics: vec![diagnostic.into()], counterexample: None }
    }

    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CertifyError {
    #[error("`{identity}` depends on `{lemma}`, which has no certified instance for {bindings}")]
    MissingDependency { identity: String, lemma: String, bindings: String },
    #[error("parameter `{name}` = {value} is outside its declared range")]
    InvalidBinding { name: String, value: i64 },
    #[error("`{0}` has no parameter `{1}`")]
    UnknownParameter(String, String),
    #[error("mode {mode} does not apply to `{identity}`")]
    ModeMismatch { identity: String, mode: &'static str },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    Residual,
    Lhs,
    Rhs,
}

impl Subject {
    pub fn as_str(self) -> &'static str {
        match self {
            Subject::Residual => "residual",
            Subject::Lhs => "lhs",
            Subject::Rhs => "rhs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "residual" => Some(Subject::Residual),
            "lhs" => Some(Subject::Lhs),
            "rhs" => Some(Subject::Rhs),
            _ => None,
        }
    }
}

/// Where the expected value of an initial evaluation came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Expected {
    /// Zero data for a residual.
    Zero,
    /// The declared value, lemma references resolved as written.
    Declared,
    /// The declared value with each lemma reference taken from the other side.
    DeclaredSwapped,
    /// The same derivative of the other side (coincidence check of a residual declaration).
    OtherSide,
}

impl Expected {
    pub fn as_str(self) -> &'static str {
        match self {
            Expected::Zero => "zero",
            Expected::Declared => "declared",
            Expected::DeclaredSwapped => "declared-swapped",
            Expected::OtherSide => "other-side",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(Expected::Zero),
            "declared" => Some(Expected::Declared),
            "declared-swapped" => Some(Expected::DeclaredSwapped),
            "other-side" => Some(Expected::OtherSide),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubjectProof {
    pub subject: Subject,
    /// `y, y', ..., y^(m)` in normal form.
    pub stages: Vec<CanonicalRF>,
    /// Least common multiple of the operator term denominators.
    pub common_denominator: MultiPoly,
    /// Operator terms multiplied by `common_denominator`; they sum to zero.
    pub cleared_terms: Vec<MultiPoly>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialEvaluation {
    pub subject: Subject,
    pub order: usize,
    pub value: CanonicalRF,
    pub expected: CanonicalRF,
    pub source: Expected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorProof {
    pub coeffs: Vec<CanonicalRF>,
    pub force: CanonicalRF,
    pub subjects: Vec<SubjectProof>,
    pub initial: Vec<InitialEvaluation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitProof {
    pub part: Part,
    /// The clearing factor, in exponential form.
    pub clear: CanonicalRF,
    /// The chosen part of each base side, over independent trig atoms.
    pub base_parts: [CanonicalRF; 2],
    /// `clear * target` for each side, in exponential form; equal to `clear * part`.
    pub cleared: [CanonicalRF; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofBody {
    Operator(OperatorProof),
    Split(SplitProof),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenominatorAtT0 {
    pub label: String,
    pub den: MultiPoly,
    pub value: CanonicalRF,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingEvidence {
    pub count: usize,
    pub precision: usize,
    pub seed: u64,
    pub min_modulus: String,
    pub near_zero: usize,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyRef {
    pub name: Name,
    pub bindings: Bindings,
    pub certificate_hash: String,
}

/// Everything a certificate records.
#[derive(Clone, Debug)]
pub struct Proof {
    pub obligation: ProofObligation,
    pub base_den: u64,
    pub lhs: Expr,
    pub rhs: Expr,
    pub coeffs: Vec<Expr>,
    pub force: Expr,
    pub values: Vec<Expr>,
    pub body: ProofBody,
    pub t0_denominators: Vec<DenominatorAtT0>,
    pub sampling: SamplingEvidence,
    pub dependencies: Vec<DependencyRef>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub obligation: ProofObligation,
    pub verdict: Verdict,
    pub proof: Option<Proof>,
    pub certificate: Option<Certificate>,
}

impl Outcome {
    /// The certified instance as a lemma for later obligations.
    pub fn lemma(&self) -> Option<CertifiedLemma> {
        let (p, c) = (self.proof.as_ref()?, self.certificate.as_ref()?);
        self.verdict.is_certified().then(|| CertifiedLemma {
            decl: self.obligation.decl.clone(),
            bindings: self.obligation.bindings.clone(),
            lhs: p.lhs.clone(),
            rhs: p.rhs.clone(),
            certificate_hash: c.content_hash.clone(),
        })
    }
}

fn fmt_bindings(b: &Bindings) -> String {
    if b.is_empty() {
        return "no parameters".into();
    }
    b.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

fn check_bindings(ob: &ProofObligation) -> Result<(), CertifyError> {
    for (k, v) in &ob.bindings {
        let p = ob.decl.param(k).ok_or_else(|| CertifyError::UnknownParameter(ob.decl.name.to_string(), k.to_string()))?;
        if !p.admits(*v) {
            return Err(CertifyError::InvalidBinding { name: k.to_string(), value: *v });
        }
    }
    let split = matches!(ob.decl.origin, Origin::Split { .. });
    if split != (ob.mode == Mode::Split) || (matches!(ob.decl.origin, Origin::Derived { .. }) && ob.mode != Mode::Residual) {
        return Err(CertifyError::ModeMismatch { identity: ob.decl.name.to_string(), mode: ob.mode.as_str() });
    }
    Ok(())
}

fn dependencies<'a>(ob: &ProofObligation, store: &'a LemmaStore) -> Result<Vec<&'a CertifiedLemma>, CertifyError> {
    let mut names: Vec<&str> = ob.decl.depends.iter().map(|d| &**d).collect();
    if matches!(ob.decl.origin, Origin::Split { .. }) && !names.contains(&EULER) {
        names.push(EULER);
    }
    names
        .into_iter()
        .map(|d| {
            store.get(d, &ob.bindings).ok_or_else(|| CertifyError::MissingDependency {
                identity: ob.decl.name.to_string(),
                lemma: d.to_string(),
                bindings: fmt_bindings(&ob.bindings),
            })
        })
        .collect()
}

fn truncate(s: String, n: usize) -> String {
    if s.len() <= n {
        return s;
    }
    let mut cut = n;
    while !s.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{}... ({} chars)", &s[..cut], s.len())
}

/// Resolves lemma references in an initial value, optionally from the other side.
fn resolve_value(
    v: &Expr,
    ob: &ProofObligation,
    store: &LemmaStore,
    swap: bool,
) -> Result<Expr, CertifyError> {
    v.resolve_lemma_refs(&|name: &str, side: Side, var: Option<&VarSymbol>| {
        let l = store.get(name, &ob.bindings).ok_or_else(|| CertifyError::MissingDependency {
            identity: ob.decl.name.to_string(),
            lemma: name.to_string(),
            bindings: fmt_bindings(&ob.bindings),
        })?;
        let side = match (side, swap) {
            (s, false) => s,
            (Side::Lhs, true) => Side::Rhs,
            (Side::Rhs, true) => Side::Lhs,
        };
        Ok(l.side_in(side, var.unwrap_or(&ob.decl.var)))
    })
}

fn expand(e: &Expr, b: &Bindings) -> Result<Expr, String> {
    expand_finite_sums(e, b).map_err(|err| format!("cannot expand `{e}`: {err}"))
}

struct Material {
    lhs: Expr,
    rhs: Expr,
    coeffs: Vec<Expr>,
    force: Expr,
    values: Vec<Expr>,
    raw_values: Vec<Expr>,
}

fn materialize(ob: &ProofObligation, store: &LemmaStore) -> Result<Result<Material, String>, CertifyError> {
    let d = &ob.decl;
    let b = &ob.bindings;
    let sides = match &d.origin {
        Origin::Derived { base, multiplier } => {
            let l = store.get(base, b).expect("dependencies were resolved");
            match expand(multiplier, b).and_then(|m| derived_sides(l, &m, &d.var).map_err(|e| e.to_string())) {
                Ok(s) => Ok(s),
                Err(e) => Err(e),
            }
        }
        _ => expand(&d.lhs, b).and_then(|l| Ok((l, expand(&d.rhs, b)?))),
    };
    let (lhs, rhs) = match sides {
        Ok(s) => s,
        Err(e) => return Ok(Err(e)),
    };
    let mut coeffs = Vec::new();
    for c in &d.ivp.op.coeffs {
        match expand(c, b) {
            Ok(c) => coeffs.push(c),
            Err(e) => return Ok(Err(e)),
        }
    }
    let force = match expand(&d.ivp.op.force, b) {
        Ok(f) => f,
        Err(e) => return Ok(Err(e)),
    };
    let mut values = Vec::new();
    let mut raw_values = Vec::new();
    for v in &d.ivp.initial_values {
        let raw = match expand(v, b) {
            Ok(v) => v,
            Err(e) => return Ok(Err(e)),
        };
        values.push(resolve_value(&raw, ob, store, false)?);
        raw_values.push(raw);
    }
    Ok(Ok(Material { lhs, rhs, coeffs, force, values, raw_values }))
}

fn sample_names(d: &IdentityDecl) -> Vec<Name> {
    d.pvars.iter().map(|v| v.name.clone()).chain(d.consts.iter().map(|c| c.name.clone())).collect()
}

fn evidence(ob: &ProofObligation, dens: &[MultiPoly], opts: &CertifyOptions) -> SamplingEvidence {
    let d = &ob.decl;
    let plan = SamplePlan::new(d.var.name.clone(), d.ivp.interval.clone())
        .count(opts.samples)
        .precision(opts.precision)
        .seed(opts.seed)
        .span(EVIDENCE_SPAN)
        .consts(sample_names(d));
    let mut polys: Vec<MultiPoly> = Vec::new();
    for p in dens {
        if !p.is_constant() && !polys.contains(p) {
            polys.push(p.clone());
        }
    }
    let r = sample::min_modulus(&polys, &plan, opts.exec);
    SamplingEvidence {
        count: r.count,
        precision: opts.precision,
        seed: opts.seed,
        min_modulus: r.min_modulus,
        near_zero: r.near_zero,
        note: sample::evidence_note(&d.ivp.interval),
    }
}

/// A numeric witness that `lhs != rhs`, if one is found.
fn counterexample(ob: &ProofObligation, lhs: &Expr, rhs: &Expr, opts: &CertifyOptions) -> Option<String> {
    let d = &ob.decl;
    let plan = SamplePlan::new(d.var.name.clone(), d.ivp.interval.clone())
        .count(opts.falsify_samples)
        .precision(opts.precision)
        .seed(opts.seed)
        .consts(sample_names(d));
    let r = sample::falsify(lhs, rhs, &plan, opts.exec);
    r.witness.map(|w| {
        let l = &r.lines[w];
        format!("{} where |lhs - rhs| = {}", l.point, l.modulus)
    })
}

fn dependency_refs(deps: &[&CertifiedLemma]) -> Vec<DependencyRef> {
    let mut out: Vec<DependencyRef> = deps
        .iter()
        .map(|l| DependencyRef {
            name: l.decl.name.clone(),
            bindings: l.bindings.clone(),
            certificate_hash: l.certificate_hash.clone(),
        })
        .collect();
    out.sort_by(|a, b| (&a.name, &a.bindings).cmp(&(&b.name, &b.bindings)));
    out.dedup();
    out
}

/// Least common multiple of monic polynomials.
pub fn poly_lcm<'a>(ps: impl IntoIterator<Item = &'a MultiPoly>) -> MultiPoly {
    let mut m = MultiPoly::one();
    for p in ps {
        let g = gcd(&m, p);
        m = m.mul(&p.div_exact(&g).expect("gcd divides"));
    }
    m
}

/// Terms of an operator application over a common denominator.
pub fn clear_denominators(terms: &[CanonicalRF]) -> (MultiPoly, Vec<MultiPoly>) {
    let m = poly_lcm(terms.iter().map(|t| t.den()));
    let cleared = terms.iter().map(|t| t.num().mul(&m.div_exact(t.den()).expect("lcm is a multiple"))).collect();
    (m, cleared)
}

fn eval_failure(e: EvalError, what: &str) -> Verdict {
    match e {
        EvalError::SingularEvaluation(s) => {
            Verdict::fail(Status::SingularInitialPoint, format!("{what} is singular at the initial point: {s}"))
        }
        other => Verdict::fail(Status::Unsupported, format!("cannot evaluate {what} exactly: {other}")),
    }
}

struct Failed(Verdict);

impl From<Verdict> for Failed {
    fn from(v: Verdict) -> Self {
        Failed(v)
    }
}

/// Checks an obligation against a store of certified lemmas.
pub fn certify(ob: &ProofObligation, store: &LemmaStore, opts: &CertifyOptions) -> Result<Outcome, CertifyError> {
    check_bindings(ob)?;
    let deps = dependencies(ob, store)?;
    let result = if ob.mode == Mode::Split {
        certify_split(ob, store, opts, &deps)
    } else {
        certify_operator(ob, store, opts, &deps)?
    };
    Ok(match result {
        Ok(proof) => {
            let cert = certificate::emit(&proof);
            Outcome { obligation: ob.clone(), verdict: Verdict::certified(), proof: Some(proof), certificate: Some(cert) }
        }
        Err(Failed(verdict)) => Outcome { obligation: ob.clone(), verdict, proof: None, certificate: None },
    })
}

fn certify_operator(
    ob: &ProofObligation,
    store: &LemmaStore,
    opts: &CertifyOptions,
    deps: &[&CertifiedLemma],
) -> Result<Result<Proof, Failed>, CertifyError> {
    let m = match materialize(ob, store)? {
        Ok(m) => m,
        Err(e) => return Ok(Err(Verdict::fail(Status::Unsupported, e).into())),
    };
    Ok(prove_operator(ob, store, opts, deps, m))
}

fn prove_operator(
    ob: &ProofObligation,
    store: &LemmaStore,
    opts: &CertifyOptions,
    deps: &[&CertifiedLemma],
    m: Material,
) -> Result<Proof, Failed> {
    let d = &ob.decl;
    let var = &d.var;
    let t0 = &d.ivp.t0;
    let ctx = AlgebraCtx::for_exprs(
        [&m.lhs, &m.rhs, &m.force].into_iter().chain(m.coeffs.iter()).chain(m.values.iter()),
    );
    if !d.ivp.interval.contains(t0) {
        return Err(Verdict::fail(
            Status::SingularInitialPoint,
            format!("initial point {t0} is not inside the interval {}", d.ivp.interval),
        )
        .into());
    }
    let mut canon = Canonicalizer::new(ctx);
    let mut run = |e: &Expr, what: &str| {
        canon.run(e).map_err(|err| Failed(Verdict::fail(Status::Unsupported, format!("{what} `{e}`: {err}"))))
    };
    let coeffs = m.coeffs.iter().enumerate().map(|(i, c)| run(c, &format!("coefficient a{}", i + 1))).collect::<Result<Vec<_>, _>>()?;
    let force = run(&m.force, "force")?;
    if ob.mode == Mode::Residual && !force.is_zero() {
        return Err(Verdict::fail(
            Status::Unsupported,
            format!("residual mode needs a homogeneous operator, but the force is {force}"),
        )
        .into());
    }

    // Regular point: every coefficient denominator is nonzero at t0.
    let mut t0_dens = Vec::new();
    let labelled = coeffs.iter().enumerate().map(|(i, c)| (format!("a{}", i + 1), c)).chain([("b".to_string(), &force)]);
    for (label, r) in labelled {
        if r.den().is_constant() {
            continue;
        }
        let v = eval_at(&CanonicalRF::from_poly(r.den().clone()), &var.name, t0)
            .map_err(|e| eval_failure(e, &format!("the denominator of {label}")))?;
        if v.is_zero() {
            return Err(Verdict::fail(
                Status::SingularInitialPoint,
                format!("the denominator {} of {label} vanishes at {t0}", r.den()),
            )
            .into());
        }
        t0_dens.push(DenominatorAtT0 { label, den: r.den().clone(), value: v });
    }

    let op = LinOp::new(var.clone(), m.coeffs.clone(), m.force.clone());
    let subjects: Vec<(Subject, Expr)> = match ob.mode {
        Mode::Residual => vec![(Subject::Residual, Expr::sub(m.lhs.clone(), m.rhs.clone()))],
        _ => vec![(Subject::Lhs, m.lhs.clone()), (Subject::Rhs, m.rhs.clone())],
    };
    let mut proofs = Vec::new();
    for (subject, y) in &subjects {
        let app = apply_operator_with(&op, y, &mut canon)
            .map_err(|e| Failed(Verdict::fail(Status::Unsupported, format!("{}: {e}", subject.as_str()))))?;
        if !app.image.is_zero() {
            let mut v = Verdict::fail(
                Status::NotAnnihilated,
                format!("the operator applied to the {} leaves {}", subject.as_str(), truncate(app.image.to_string(), 400)),
            );
            v.counterexample = counterexample(ob, &m.lhs, &m.rhs, opts);
            return Err(v.into());
        }
        let (common, cleared) = clear_denominators(&operator_terms(&app.stages, &coeffs, &force));
        proofs.push(SubjectProof { subject: *subject, stages: app.stages, common_denominator: common, cleared_terms: cleared });
    }

    // Initial data.
    let order = d.ivp.op.order;
    let at = |r: &CanonicalRF, what: &str| eval_at(r, &var.name, t0).map_err(|e| Failed(eval_failure(e, what)));
    let mut initial = Vec::new();
    let rhs_values: Vec<CanonicalRF> = if ob.mode == Mode::Coincidence && d.mode != Mode::Coincidence {
        let rhs = proofs.iter().find(|p| p.subject == Subject::Rhs).unwrap();
        (0..order).map(|j| at(&rhs.stages[j], &format!("rhs derivative {j}"))).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    for p in &proofs {
        for j in 0..order {
            let what = format!("derivative {j} of the {}", p.subject.as_str());
            let value = at(&p.stages[j], &what)?;
            let (expected, source) = match (ob.mode, d.mode) {
                (Mode::Residual, _) => (CanonicalRF::zero(), Expected::Zero),
                (_, Mode::Coincidence) => {
                    let declared = canon.run(&m.values[j]).map_err(|e| {
                        Failed(Verdict::fail(Status::Unsupported, format!("initial value {j}: {e}")))
                    })?;
                    let declared = at(&declared, &format!("initial value {j}"))?;
                    if declared == value || !m.raw_values[j].has_lemma_ref() {
                        (declared, Expected::Declared)
                    } else {
                        let swapped = resolve_value(&m.raw_values[j], ob, store, true)
                            .map_err(|e| Failed(Verdict::fail(Status::Unsupported, e.to_string())))?;
                        let swapped = canonicalize(&swapped, ctx)
                            .map_err(|e| Failed(Verdict::fail(Status::Unsupported, format!("initial value {j}: {e}"))))?;
                        let swapped = at(&swapped, &format!("initial value {j}"))?;
                        if swapped == value {
                            (swapped, Expected::DeclaredSwapped)
                        } else {
                            (declared, Expected::Declared)
                        }
                    }
                }
                _ => {
                    if p.subject == Subject::Rhs {
                        continue;
                    }
                    (rhs_values[j].clone(), Expected::OtherSide)
                }
            };
            if value != expected {
                let mut v = Verdict::fail(
                    Status::InitialValueMismatch,
                    format!(
                        "{what} at {t0} is {}, expected {}",
                        truncate(value.to_string(), 200),
                        truncate(expected.to_string(), 200)
                    ),
                );
                v.counterexample = counterexample(ob, &m.lhs, &m.rhs, opts);
                return Err(v.into());
            }
            initial.push(InitialEvaluation { subject: p.subject, order: j, value, expected, source });
        }
    }

    let mut dens: Vec<MultiPoly> = coeffs.iter().chain([&force]).map(|c| c.den().clone()).collect();
    dens.extend(proofs.iter().map(|p| p.stages[0].den().clone()));
    let sampling = evidence(ob, &dens, opts);
    Ok(Proof {
        obligation: ob.clone(),
        base_den: ctx.base_den,
        lhs: m.lhs,
        rhs: m.rhs,
        coeffs: m.coeffs,
        force: m.force,
        values: m.raw_values,
        body: ProofBody::Operator(OperatorProof { coeffs, force, subjects: proofs, initial }),
        t0_denominators: t0_dens,
        sampling,
        dependencies: dependency_refs(deps),
    })
}

fn certify_split(
    ob: &ProofObligation,
    store: &LemmaStore,
    opts: &CertifyOptions,
    deps: &[&CertifiedLemma],
) -> Result<Proof, Failed> {
    let d = &ob.decl;
    let Origin::Split { base, part, clear } = &d.origin else { unreachable!("split mode needs a split origin") };
    let unsupported = |e: String| Failed(Verdict::fail(Status::Unsupported, e));
    let b = &ob.bindings;
    let lhs = expand(&d.lhs, b).map_err(unsupported)?;
    let rhs = expand(&d.rhs, b).map_err(unsupported)?;
    let clear = expand(clear, b).map_err(unsupported)?;
    let lemma = store.get(base, b).expect("dependencies were resolved");
    let base_l = lemma.side_in(Side::Lhs, &d.var);
    let base_r = lemma.side_in(Side::Rhs, &d.var);
    let ctx = AlgebraCtx::for_exprs([&lhs, &rhs, &clear, &base_l, &base_r]);
    let t0 = &d.ivp.t0;
    if !d.ivp.interval.contains(t0) {
        return Err(Verdict::fail(
            Status::SingularInitialPoint,
            format!("initial point {t0} is not inside the interval {}", d.ivp.interval),
        )
        .into());
    }
    let algebra = |e: crate::algebra::AlgebraError| Failed(Verdict::fail(Status::Unsupported, e.to_string()));
    let to_exp = |e: &Expr| -> Result<CanonicalRF, Failed> {
        let x = euler_rewrite(e, Direction::TrigToExp, ctx).map_err(algebra)?.expr;
        canonicalize(&x, ctx).map_err(algebra)
    };
    let clear_trig = canonicalize(&clear, ctx).map_err(algebra)?;
    let at_t0 = eval_at(&clear_trig, &d.var.name, t0).map_err(|e| Failed(eval_failure(e, "the clearing factor")))?;
    if at_t0.is_zero() {
        return Err(Verdict::fail(Status::SingularInitialPoint, format!("the clearing factor {clear} vanishes at {t0}")).into());
    }
    let clear_exp = to_exp(&clear)?;
    let parts = [split_part(&base_l, *part, ctx).map_err(algebra)?, split_part(&base_r, *part, ctx).map_err(algebra)?];
    let targets = [&lhs, &rhs];
    let mut cleared = Vec::new();
    for (k, side) in ["lhs", "rhs"].into_iter().enumerate() {
        let target = clear_exp.mul(&to_exp(targets[k])?);
        let from_base = clear_exp.mul(&to_exp(&rf_to_expr(&parts[k]))?);
        if target != from_base {
            let mut v = Verdict::fail(
                Status::NotAnnihilated,
                format!(
                    "clear * ({side} - {} part of the base {side}) leaves {}",
                    part.as_str(),
                    truncate(target.sub(&from_base).to_string(), 400)
                ),
            );
            v.counterexample = counterexample(ob, &lhs, &rhs, opts);
            return Err(v.into());
        }
        cleared.push(target);
    }
    let cleared: [CanonicalRF; 2] = cleared.try_into().unwrap();
    let mut dens = vec![clear_trig.num().clone(), clear_trig.den().clone()];
    for e in [&lhs, &rhs] {
        if let Ok(r) = canonicalize(e, ctx) {
            dens.push(r.den().clone());
        }
    }
    let sampling = evidence(ob, &dens, opts);
    let t0_dens = vec![DenominatorAtT0 { label: "clear".into(), den: clear_trig.num().clone(), value: at_t0 }];
    Ok(Proof {
        obligation: ob.clone(),
        base_den: ctx.base_den,
        lhs,
        rhs,
        coeffs: Vec::new(),
        force: Expr::zero(),
        values: Vec::new(),
        body: ProofBody::Split(SplitProof { part: *part, clear: clear_exp, base_parts: parts, cleared }),
        t0_denominators: t0_dens,
        sampling,
        dependencies: dependency_refs(deps),
    })
}

/// Certifies a batch in dependency order, feeding each success into the store.
///
/// Obligations at the same dependency level run concurrently under `opts.exec`.
pub fn certify_all(
    obligations: &[ProofObligation],
    store: &mut LemmaStore,
    opts: &CertifyOptions,
) -> Vec<Result<Outcome, CertifyError>> {
    certify_all_with(obligations, store, opts, |ob, store| certify(ob, store, opts), |r| r.as_ref().ok())
}

/// [`certify_all`] with a custom per-obligation step whose result carries the outcome.
pub fn certify_all_with<R, F, G>(
    obligations: &[ProofObligation],
    store: &mut LemmaStore,
    opts: &CertifyOptions,
    step: F,
    outcome: G,
) -> Vec<R>
where
    R: Send + Clone,
    F: Fn(&ProofObligation, &LemmaStore) -> R + Sync + Send,
    G: Fn(&R) -> Option<&Outcome>,
{
    let mut by_name: BTreeMap<Name, Vec<usize>> = BTreeMap::new();
    for (i, ob) in obligations.iter().enumerate() {
        by_name.entry(ob.decl.name.clone()).or_default().push(i);
    }
    let decls: Vec<Arc<IdentityDecl>> = by_name.values().map(|ix| obligations[ix[0]].decl.clone()).collect();
    let levels = level_order(&decls);
    let mut results: Vec<Option<R>> = vec![None; obligations.len()];
    for level in levels {
        let idx: Vec<usize> = level.iter().flat_map(|d| by_name[&decls[*d].name].iter().copied()).collect();
        let snapshot = &*store;
        let outs = crate::exec::map(opts.exec, &idx, |&i| step(&obligations[i], snapshot));
        for (i, r) in idx.into_iter().zip(outs) {
            if let Some(o) = outcome(&r) {
                if let Some(l) = o.lemma() {
                    store.insert(l);
                }
            }
            results[i] = Some(r);
        }
    }
    results.into_iter().map(|r| r.expect("every obligation is scheduled")).collect()
}

/// Levels of the dependency graph restricted to `decls`; outside names are treated as satisfied.
fn level_order(decls: &[Arc<IdentityDecl>]) -> Vec<Vec<usize>> {
    let index: BTreeMap<&str, usize> = decls.iter().enumerate().map(|(i, d)| (&*d.name, i)).collect();
    let mut level = vec![usize::MAX; decls.len()];
    fn depth(i: usize, decls: &[Arc<IdentityDecl>], index: &BTreeMap<&str, usize>, level: &mut [usize], seen: &mut Vec<bool>) -> usize {
        if level[i] != usize::MAX {
            return level[i];
        }
        if seen[i] {
            return 0;
        }
        seen[i] = true;
        let mut deps: Vec<&str> = decls[i].depends.iter().map(|n| &**n).collect();
        if matches!(decls[i].origin, Origin::Split { .. }) {
            deps.push(EULER);
        }
        let d = deps
            .into_iter()
            .filter_map(|n| index.get(n))
            .map(|&j| depth(j, decls, index, level, seen) + 1)
            .max()
            .unwrap_or(0);
        level[i] = d;
        d
    }
    let mut seen = vec![false; decls.len()];
    for i in 0..decls.len() {
        depth(i, decls, &index, &mut level, &mut seen);
    }
    let top = level.iter().copied().max().unwrap_or(0);
    let mut out = vec![Vec::new(); if decls.is_empty() { 0 } else { top + 1 }];
    for (i, l) in level.into_iter().enumerate() {
        out[l].push(i);
    }
    out
}
