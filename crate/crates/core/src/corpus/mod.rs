//! The built-in identity corpus and dependency ordering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::certificate::Certificate;
use crate::expr::{parse_document, Atom, Bindings, Expr, LinearArg, Name, VarSymbol};
use crate::ivp::{IdentityDecl, Origin};
use crate::prover::{certify, CertifyError, CertifyOptions, LemmaStore, Outcome, ProofObligation, Status, EULER};
use crate::scalar::rat;

/// Errors with the name of an identity on a dependency cycle.
pub fn check_acyclic(decls: &[IdentityDecl]) -> Result<(), Name> {
    dependency_levels(decls).map(|_| ())
}

/// Groups declarations into levels such that every dependency of a level-`k`
/// entry that is present in `decls` lives in a level below `k`.
pub fn dependency_levels(decls: &[IdentityDecl]) -> Result<Vec<Vec<usize>>, Name> {
    let index: BTreeMap<&str, usize> = decls.iter().enumerate().map(|(i, d)| (&*d.name, i)).collect();
    let mut level: Vec<Option<usize>> = vec![None; decls.len()];
    fn visit(
        i: usize,
        decls: &[IdentityDecl],
        index: &BTreeMap<&str, usize>,
        level: &mut Vec<Option<usize>>,
        stack: &mut Vec<usize>,
    ) -> Result<usize, Name> {
        if let Some(l) = level[i] {
            return Ok(l);
        }
        if stack.contains(&i) {
            return Err(decls[i].name.clone());
        }
        stack.push(i);
        let mut l = 0;
        for d in &decls[i].depends {
            if let Some(&j) = index.get(&**d) {
                l = l.max(visit(j, decls, index, level, stack)? + 1);
            }
        }
        stack.pop();
        level[i] = Some(l);
        Ok(l)
    }
    let mut stack = Vec::new();
    for i in 0..decls.len() {
        visit(i, decls, &index, &mut level, &mut stack)?;
    }
    let depth = level.iter().map(|l| l.unwrap() + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); depth];
    for (i, l) in level.iter().enumerate() {
        out[l.unwrap()].push(i);
    }
    Ok(out)
}

/// DSL documents of the built-in corpus, by file name.
pub const DOCUMENTS: [(&str, &str); 8] = [
    ("pythagoras.ivp", include_str!("../../corpus/pythagoras.ivp")),
    ("binomial.ivp", include_str!("../../corpus/binomial.ivp")),
    ("demoivre.ivp", include_str!("../../corpus/demoivre.ivp")),
    ("euler.ivp", include_str!("../../corpus/euler.ivp")),
    ("trig_addition.ivp", include_str!("../../corpus/trig_addition.ivp")),
    ("geometric.ivp", include_str!("../../corpus/geometric.ivp")),
    ("progressions.ivp", include_str!("../../corpus/progressions.ivp")),
    ("trig_sums.ivp", include_str!("../../corpus/trig_sums.ivp")),
];

/// One built-in identity together with the parameter values it is run for.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub decl: Arc<IdentityDecl>,
    /// Values of the declaration's single parameter; empty when it has none.
    pub sweep: Vec<i64>,
    pub expected: Status,
    /// The classical formula, in LaTeX.
    pub anchor: &'static str,
}

impl CorpusEntry {
    pub fn name(&self) -> &str {
        &self.decl.name
    }

    pub fn obligations(&self) -> Vec<ProofObligation> {
        let base = ProofObligation::new(self.decl.clone());
        match self.decl.params.first() {
            None => vec![base],
            Some(p) => self.sweep.iter().map(|&v| base.clone().bind(&p.name, v)).collect(),
        }
    }
}

const ANCHORS: [(&str, &str); 15] = [
    ("pythagoras", r"\cos^2 t+\sin^2t=1"),
    ("binomial", r"(1+t)^n=1+\sum_{k=1}^n\frac{n!}{k!(n-k)!}t^k"),
    ("binomial_normalized", r"\frac{1}{(1+t)^n}+\sum_{k=1}^n\frac{n!}{k!(n-k)!}\frac{t^k}{(1+t)^n}=1"),
    ("demoivre", r"(\cos{t} + i \sin{t})^n=\cos{nt} +i\sin{nt}"),
    ("demoivre_normalized", r"(\cos t+i\sin t)^{-n}(\cos nt+i\sin nt)=1"),
    ("euler", r"e^{it}=\cos t+i\sin t"),
    ("trig_addition", r"\sin(t+c)=\sin t\cos c+\cos t\sin c"),
    ("geometric_sum", r"1+\sum_{k=1}^{n-1}t^k=\frac{1-t^n}{1-t}"),
    ("geometric_sum_derivative", r"\sum_{k=1}^{n}(k-1)t^{k-1}=t\frac{d}{dt}\Bigl(\frac{1-t^n}{1-t}\Bigr)"),
    ("agp", r"\sum_{k=1}^{n}\{a+(k-1)t\}r^{k-1}=a\frac{1-r^n}{1-r}+tr\frac{1-nr^{n-1}+(n-1)r^{n}}{(1-r)^2}"),
    ("arithmetic_sum", r"\sum_{k=1}^{n}\{a+(k-1)t\}=\frac{n}{2}\{2a+(n-1)t\}"),
    ("sines_cosines", r"y(\pi)=e^{ia}\frac{1-(-1)^{n}}{2}"),
    ("cos_sum", r"\sum_{k=0}^{n-1}\cos(a+kt)=\frac{\cos\{a+(n-1)t/2\}\sin\{nt/2\}}{\sin (t/2)}"),
    ("sin_sum", r"\sum_{k=0}^{n-1}\sin(a+kt)=\frac{\sin\{a+(n-1)t/2\}\sin\{nt/2\}}{\sin (t/2)}"),
    ("trivial", ""),
];

/// Default parameter values for an identity of the built-in corpus.
pub fn default_sweep(name: &str) -> Vec<i64> {
    match name {
        "binomial" => (1..=32).collect(),
        "demoivre" | "demoivre_normalized" => (-10..=10).collect(),
        "binomial_normalized" | "geometric_sum" | "geometric_sum_derivative" | "agp" | "arithmetic_sum"
        | "sines_cosines" | "cos_sum" | "sin_sum" => (1..=16).collect(),
        _ => Vec::new(),
    }
}

/// Every declaration of the built-in documents, in document order.
pub fn builtin_decls() -> Vec<Arc<IdentityDecl>> {
    DOCUMENTS
        .iter()
        .flat_map(|(file, src)| parse_document(src).unwrap_or_else(|e| panic!("built-in {file}: {e}")))
        .map(Arc::new)
        .collect()
}

/// The built-in corpus with its default sweeps.
pub fn builtin() -> Vec<CorpusEntry> {
    builtin_decls()
        .into_iter()
        .map(|decl| CorpusEntry {
            sweep: default_sweep(&decl.name),
            expected: Status::Certified,
            anchor: ANCHORS.iter().find(|(n, _)| **n == *decl.name).map(|(_, a)| *a).unwrap_or(""),
            decl,
        })
        .collect()
}

pub fn builtin_entry(name: &str) -> Option<CorpusEntry> {
    builtin().into_iter().find(|e| e.name() == name)
}

/// Entries whose name contains `filter`, plus everything they depend on.
///
/// Dependencies pulled in only to satisfy others are run at their own
/// parameter values too, so the summary lists them as well.
pub fn select(entries: &[CorpusEntry], filter: &str) -> Vec<CorpusEntry> {
    let mut keep: BTreeSet<String> = entries.iter().filter(|e| e.name().contains(filter)).map(|e| e.name().to_string()).collect();
    loop {
        let before = keep.len();
        for e in entries {
            if keep.contains(e.name()) {
                keep.extend(e.decl.depends.iter().map(|d| d.to_string()));
                if matches!(e.decl.origin, Origin::Split { .. }) {
                    keep.insert(EULER.to_string());
                }
            }
        }
        if keep.len() == before {
            break;
        }
    }
    entries.iter().filter(|e| keep.contains(e.name())).cloned().collect()
}

/// One certified (or failed) obligation of a corpus run.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub instance: String,
    pub name: String,
    pub bindings: Bindings,
    pub outcome: Result<Outcome, CertifyError>,
    pub expected: Status,
    pub anchor: &'static str,
    pub elapsed: Duration,
    /// True when the entry only ran to satisfy a dependency of a selected one.
    pub dependency_only: bool,
}

impl RunRow {
    pub fn status(&self) -> Option<Status> {
        self.outcome.as_ref().ok().map(|o| o.verdict.status)
    }

    pub fn passed(&self) -> bool {
        self.status() == Some(self.expected)
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.outcome.as_ref().ok()?.certificate.as_ref()
    }

    pub fn verdict_text(&self) -> String {
        match &self.outcome {
            Ok(o) => o.verdict.status.to_string(),
            Err(e) => format!("error: {e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusRun {
    pub rows: Vec<RunRow>,
    pub elapsed: Duration,
}

impl CorpusRun {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.passed()).count()
    }

    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.rows.iter().filter_map(RunRow::certificate)
    }

    /// The summary table; with `timings` false the text depends only on the inputs.
    pub fn render(&self, timings: bool) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let hash = r.certificate().map(|c| &c.content_hash[..16]).unwrap_or("-");
            let _ = write!(out, "{:<40} {:<22} {hash}", r.instance, r.verdict_text());
            if timings {
                let _ = write!(out, " {:>9.3}ms", r.elapsed.as_secs_f64() * 1e3);
            }
            let _ = writeln!(out, "  {}", r.anchor);
        }
        let _ = write!(out, "# {} obligations, {} failed", self.rows.len(), self.failures());
        if timings {
            let _ = write!(out, ", {:.3}s", self.elapsed.as_secs_f64());
        }
        out.push('\n');
        out
    }
}

/// Certifies every obligation of `entries` in dependency order.
pub fn run(entries: &[CorpusEntry], store: &mut LemmaStore, opts: &CertifyOptions) -> CorpusRun {
    let start = Instant::now();
    let mut obligations = Vec::new();
    let mut meta = Vec::new();
    for e in entries {
        for ob in e.obligations() {
            meta.push((e.expected, e.anchor));
            obligations.push(ob);
        }
    }
    let timed = certify_all_timed(&obligations, store, opts);
    let rows = obligations
        .iter()
        .zip(meta)
        .zip(timed)
        .map(|((ob, (expected, anchor)), (outcome, elapsed))| RunRow {
            instance: ob.instance(),
            name: ob.decl.name.to_string(),
            bindings: ob.bindings.clone(),
            outcome,
            expected,
            anchor,
            elapsed,
            dependency_only: false,
        })
        .collect();
    CorpusRun { rows, elapsed: start.elapsed() }
}

fn certify_all_timed(
    obligations: &[ProofObligation],
    store: &mut LemmaStore,
    opts: &CertifyOptions,
) -> Vec<(Result<Outcome, CertifyError>, Duration)> {
    crate::prover::certify_all_with(obligations, store, opts, |ob, store| {
        let t = Instant::now();
        let r = certify(ob, store, opts);
        (r, t.elapsed())
    }, |(r, _)| r.as_ref().ok())
}

/// Additive perturbations that turn an identity into a non-identity.
pub fn perturbation(k: usize, var: &VarSymbol) -> Expr {
    let c = Expr::rational(rat(1 + (k % 5) as i64, 7));
    let t = Expr::var(var.clone());
    let shape = match k % 6 {
        0 => Expr::one(),
        1 => t,
        2 => Expr::pow(t, 2),
        3 => Expr::atom(Atom::sin(LinearArg::of_var(&var.name, rat(1, 1)))),
        4 => Expr::atom(Atom::expi(LinearArg::of_var(&var.name, rat(1, 1)))),
        _ => Expr::add(Expr::one(), Expr::atom(Atom::cos(LinearArg::of_var(&var.name, rat(2, 1))))),
    };
    Expr::mul(c, shape)
}

/// A copy of `decl` whose right-hand side is shifted by [`perturbation`]`(k)`.
pub fn mutate(decl: &IdentityDecl, k: usize) -> IdentityDecl {
    let mut d = decl.clone();
    d.rhs = Expr::add(d.rhs.clone(), perturbation(k, &d.var));
    d
}
