//! `ivpcert`: certify identities, run the built-in corpus, replay certificates
//! and search for numeric counterexamples.
//!
//! Exit status: 0 when everything is certified, accepted or consistent; 1 when
//! some verdict is negative; 2 on usage, input or parse errors.

mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ivpcert::certificate::{self, Certificate, CertificatePool};
use ivpcert::corpus::{self, CorpusEntry};
use ivpcert::exec::{self, Execution};
use ivpcert::expr::{expand_finite_sums, parse_document, Bindings};
use ivpcert::ivp::{Bound, IdentityDecl, Interval, Mode, Origin};
use ivpcert::oracle::sample::{self, PointVerdict, SamplePlan};
use ivpcert::prover::{self, CertifiedLemma, CertifyOptions, LemmaStore, Outcome, ProofObligation, Status};

use config::{parse_values, Config};

#[derive(Parser, Debug)]
#[command(name = "ivpcert", version, about = "Certify identities through uniqueness of linear IVP solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify every identity of a DSL file (or `builtin:NAME`).
    Prove(ProveArgs),
    /// Certify the built-in corpus in dependency order.
    Corpus(CorpusArgs),
    /// Replay certificate files.
    Check(CheckArgs),
    /// Sample `lhs - rhs` numerically over an interval.
    Falsify(FalsifyArgs),
}

#[derive(Args, Debug, Clone)]
struct EngineArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Working precision of the sampler, in bits.
    #[arg(long)]
    precision: Option<usize>,
    /// Regular-point sampling count.
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML file with defaults for these flags and corpus sweeps.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProveArgs {
    /// DSL file, or `builtin:NAME` for a corpus identity.
    input: String,
    /// Parameter override `NAME=K`, `NAME=A..B` or `NAME=K1,K2`.
    #[arg(long = "param", value_name = "NAME=VALUES")]
    params: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check the declared identity in coincidence mode instead of its own mode.
    #[arg(long)]
    coincidence: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Only entries whose name contains this (plus their dependencies).
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave timings out of the summary.
    #[arg(long)]
    no_timings: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Certificate files; dependencies are looked up among all of them.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Extra certificates consulted for dependencies only.
    #[arg(long = "with", value_name = "FILE")]
    with: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct FalsifyArgs {
    input: String,
    #[arg(long = "param", value_name = "NAME=K")]
    params: Vec<String>,
    /// Only this identity of the file.
    #[arg(long)]
    identity: Option<String>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 256)]
    precision: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the declared interval, e.g. `-10,-1` or `0,2*pi`.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    interval: Option<String>,
    /// Hold a constant or parameter variable at a decimal value, e.g. `a=1.25`.
    #[arg(long = "set", value_name = "NAME=DECIMAL")]
    set: Vec<String>,
    /// Print only the summary lines.
    #[arg(long)]
    quiet: bool,
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Prove(a) => cmd_prove(a),
        Command::Corpus(a) => cmd_corpus(a),
        Command::Check(a) => cmd_check(a),
        Command::Falsify(a) => cmd_falsify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct Engine {
    opts: CertifyOptions,
    jobs: usize,
    config: Config,
}

fn engine(a: &EngineArgs) -> Result<Engine> {
    let config = Config::load(a.config.as_deref())?;
    let mut opts = CertifyOptions::default();
    if let Some(p) = a.precision.or(config.precision) {
        if p < 64 {
            bail!("precision must be at least 64 bits");
        }
        opts.precision = p;
    }
    if let Some(s) = a.samples.or(config.samples) {
        opts.samples = s;
    }
    if let Some(s) = config.falsify_samples {
        opts.falsify_samples = s;
    }
    if let Some(s) = a.seed.or(config.seed) {
        opts.seed = s;
    }
    let jobs = a.jobs.or(config.jobs).unwrap_or(0);
    opts.exec = Execution::from_jobs(jobs);
    Ok(Engine { opts, jobs, config })
}

/// Declarations named by `input`, and the library used to resolve their dependencies.
fn load(input: &str) -> Result<(Vec<Arc<IdentityDecl>>, Vec<Arc<IdentityDecl>>)> {
    let builtin = corpus::builtin_decls();
    if let Some(name) = input.strip_prefix("builtin:") {
        let d = builtin
            .iter()
            .find(|d| &*d.name == name)
            .cloned()
            .ok_or_else(|| anyhow!("no built-in identity `{name}`"))?;
        return Ok((vec![d], builtin));
    }
    let text = std::fs::read_to_string(input).with_context(|| format!("cannot read {input}"))?;
    let decls: Vec<Arc<IdentityDecl>> =
        parse_document(&text).map_err(|e| anyhow!("{input}:{e}"))?.into_iter().map(Arc::new).collect();
    let local: BTreeSet<&str> = decls.iter().map(|d| &*d.name).collect();
    let mut library = decls.clone();
    library.extend(builtin.into_iter().filter(|d| !local.contains(&*d.name)));
    Ok((decls, library))
}

fn overrides(params: &[String]) -> Result<BTreeMap<String, Vec<i64>>> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| anyhow!("`--param {p}` is not NAME=VALUES"))?;
            Ok((k.trim().to_string(), parse_values(v)?))
        })
        .collect()
}

/// Instances of `decl` for every combination of overridden parameter values.
fn instances(decl: &Arc<IdentityDecl>, over: &BTreeMap<String, Vec<i64>>) -> Vec<ProofObligation> {
    let mut out = vec![ProofObligation::new(decl.clone())];
    for p in &decl.params {
        if let Some(values) = over.get(&*p.name) {
            out = out.into_iter().flat_map(|ob| values.iter().map(move |&v| ob.clone().bind(&p.name, v))).collect();
        }
    }
    out
}

/// Obligations for everything `targets` depend on, at matching parameter values.
fn dependency_closure(
    targets: &[ProofObligation],
    library: &[Arc<IdentityDecl>],
) -> Result<Vec<ProofObligation>> {
    let find = |name: &str| library.iter().find(|d| &*d.name == name).cloned();
    let mut seen: BTreeSet<String> = targets.iter().map(|o| o.instance()).collect();
    let mut out = Vec::new();
    let mut queue: Vec<ProofObligation> = targets.to_vec();
    while let Some(ob) = queue.pop() {
        let mut deps: Vec<String> = ob.decl.depends.iter().map(|d| d.to_string()).collect();
        if matches!(ob.decl.origin, Origin::Split { .. }) {
            deps.push(prover::EULER.into());
        }
        for name in deps {
            let decl = find(&name).ok_or_else(|| anyhow!("`{}` depends on unknown `{name}`", ob.decl.name))?;
            let mut dep = ProofObligation::new(decl.clone());
            for p in &decl.params {
                if let Some(v) = ob.bindings.get(&p.name) {
                    dep = dep.bind(&p.name, *v);
                }
            }
            if seen.insert(dep.instance()) {
                queue.push(dep.clone());
                out.push(dep);
            }
        }
    }
    Ok(out)
}

fn write_certificate(dir: &Path, c: &Certificate) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(c.file_name());
    std::fs::write(&path, c.to_bytes()).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn stage_report(o: &Outcome) -> Vec<(String, String)> {
    let split = o.obligation.mode == Mode::Split;
    let names: &[&str] = if split {
        &["expand sums", "clearing factor", "part comparison"]
    } else {
        &["expand sums", "regular point", "annihilation", "initial values"]
    };
    let failed = match o.verdict.status {
        Status::Certified => names.len(),
        Status::Unsupported => 0,
        Status::SingularInitialPoint => 1,
        Status::NotAnnihilated => 2,
        Status::InitialValueMismatch => 3,
    };
    let mut out = Vec::new();
    for (k, n) in names.iter().enumerate() {
        let text = match k.cmp(&failed) {
            std::cmp::Ordering::Less => "ok".to_string(),
            std::cmp::Ordering::Equal => format!("FAILED ({})", o.verdict.status),
            std::cmp::Ordering::Greater => "skipped".to_string(),
        };
        out.push((n.to_string(), text));
    }
    if let Some(p) = &o.proof {
        let s = &p.sampling;
        let text = if s.min_modulus == "none" {
            "no denominators to sample".to_string()
        } else {
            format!("min |den| = {} over {} points, {} near zero (advisory)", s.min_modulus, s.count, s.near_zero)
        };
        out.push(("sampled evidence".into(), text));
    }
    out
}

fn run_obligations(
    obligations: &[ProofObligation],
    e: &Engine,
) -> Vec<Result<Outcome, prover::CertifyError>> {
    let mut store = LemmaStore::new();
    let opts = e.opts.clone();
    exec::with_jobs(e.jobs, || prover::certify_all(obligations, &mut store, &opts))
}

fn cmd_prove(a: ProveArgs) -> Result<bool> {
    let e = engine(&a.engine)?;
    let (decls, library) = load(&a.input)?;
    let over = overrides(&a.params)?;
    for k in over.keys() {
        if !decls.iter().any(|d| d.param(k).is_some()) {
            bail!("no identity in {} has a parameter `{k}`", a.input);
        }
    }
    let mut targets: Vec<ProofObligation> = decls.iter().flat_map(|d| instances(d, &over)).collect();
    if a.coincidence {
        targets = targets
            .into_iter()
            .map(|o| if o.decl.origin == Origin::Direct { o.with_mode(Mode::Coincidence) } else { o })
            .collect();
    }
    let deps = dependency_closure(&targets, &library)?;
    let n_targets = targets.len();
    let mut all = targets;
    all.extend(deps);
    let results = run_obligations(&all, &e);
    let mut ok = true;
    for (k, (ob, r)) in all.iter().zip(&results).enumerate() {
        let role = if k < n_targets { "" } else { " (dependency)" };
        match r {
            Err(err) => {
                ok = false;
                println!("{}{role}: error: {err}", ob.instance());
            }
            Ok(o) => {
                println!("{}{role}: {}", ob.instance(), o.verdict.status);
                for (stage, text) in stage_report(o) {
                    println!("  {stage:<18} {text}");
                }
                for d in &o.verdict.diagnostics {
                    println!("  diagnostic         {d}");
                }
                if let Some(c) = &o.verdict.counterexample {
                    println!("  counterexample     {c}");
                }
                if let Some(c) = &o.certificate {
                    match &a.out {
                        Some(dir) => println!("  certificate        {} -> {}", c.content_hash, write_certificate(dir, c)?.display()),
                        None => println!("  certificate        {}", c.content_hash),
                    }
                }
                ok &= o.verdict.is_certified();
            }
        }
    }
    Ok(ok)
}

fn cmd_corpus(a: CorpusArgs) -> Result<bool> {
    let e = engine(&a.engine)?;
    let mut entries: Vec<CorpusEntry> = corpus::builtin();
    for (name, spec) in &e.config.sweep {
        let entry = entries
            .iter_mut()
            .find(|x| x.name() == name)
            .ok_or_else(|| anyhow!("config sweep names unknown entry `{name}`"))?;
        if entry.decl.params.is_empty() {
            bail!("entry `{name}` has no parameter to sweep");
        }
        entry.sweep = spec.values()?;
    }
    let entries = match &a.filter {
        Some(f) => corpus::select(&entries, f),
        None => entries,
    };
    if entries.is_empty() {
        bail!("no corpus entry matches the filter");
    }
    let mut store = LemmaStore::new();
    let opts = e.opts.clone();
    let mut run = exec::with_jobs(e.jobs, || corpus::run(&entries, &mut store, &opts));
    if let Some(f) = &a.filter {
        for r in &mut run.rows {
            r.dependency_only = !r.name.contains(f.as_str());
        }
    }
    print!("{}", run.render(!a.no_timings));
    if let Some(dir) = &a.out {
        for c in run.certificates() {
            write_certificate(dir, c)?;
        }
    }
    Ok(run.failures() == 0)
}

fn read_certificate(path: &Path) -> Result<std::result::Result<Certificate, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Certificate::parse(&text).map_err(|e| e.to_string()))
}

fn cmd_check(a: CheckArgs) -> Result<bool> {
    let mut targets = Vec::new();
    for p in &a.files {
        targets.push((p.clone(), read_certificate(p)?));
    }
    let mut pool: CertificatePool = targets.iter().filter_map(|(_, c)| c.as_ref().ok().cloned()).collect();
    for p in &a.with {
        if let Ok(c) = read_certificate(p)? {
            pool.insert(c);
        }
    }
    let checks = exec::map(Execution::Parallel, &targets, |(_, c)| match c {
        Ok(c) => certificate::check(c, &pool).map_err(|e| e.to_string()),
        Err(e) => Err(format!("schema error: {e}")),
    });
    let mut ok = true;
    for ((path, _), r) in targets.iter().zip(checks) {
        match r {
            Ok(acc) => println!("accepted {} {} ({} stages) {}", acc.instance, acc.content_hash, acc.stages, path.display()),
            Err(e) => {
                ok = false;
                println!("REJECTED {}: {e}", path.display());
            }
        }
    }
    Ok(ok)
}

fn parse_interval(s: &str) -> Result<Interval> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| anyhow!("interval `{s}` is not LO,HI"))?;
    let bound = |x: &str| Bound::parse(x).ok_or_else(|| anyhow!("bad interval bound `{x}`"));
    let iv = Interval { lo: bound(lo)?, hi: bound(hi)? };
    if !iv.is_nonempty() {
        bail!("interval {iv} is empty");
    }
    Ok(iv)
}

/// Expanded sides of an obligation, uncertified; derived sides come from the library.
fn sides_of(
    ob: &ProofObligation,
    library: &[Arc<IdentityDecl>],
) -> Result<(ivpcert::expr::Expr, ivpcert::expr::Expr)> {
    let d = &ob.decl;
    let b: &Bindings = &ob.bindings;
    match &d.origin {
        Origin::Derived { base, multiplier } => {
            let base_decl = library.iter().find(|x| x.name == *base).ok_or_else(|| anyhow!("unknown base `{base}`"))?;
            let mut bb = base_decl.default_bindings();
            for (k, v) in b {
                if bb.contains_key(k) {
                    bb.insert(k.clone(), *v);
                }
            }
            let base_ob = ProofObligation { decl: base_decl.clone(), bindings: bb, mode: base_decl.mode };
            let (lhs, rhs) = sides_of(&base_ob, library)?;
            let lemma = CertifiedLemma {
                decl: base_decl.clone(),
                bindings: base_ob.bindings,
                lhs,
                rhs,
                certificate_hash: String::new(),
            };
            let m = expand_finite_sums(multiplier, b)?;
            Ok(prover::derived_sides(&lemma, &m, &d.var)?)
        }
        _ => Ok((expand_finite_sums(&d.lhs, b)?, expand_finite_sums(&d.rhs, b)?)),
    }
}

fn cmd_falsify(a: FalsifyArgs) -> Result<bool> {
    let (decls, library) = load(&a.input)?;
    let decls: Vec<_> = match &a.identity {
        Some(n) => decls.into_iter().filter(|d| &*d.name == n).collect(),
        None => decls,
    };
    if decls.is_empty() {
        bail!("no identity to falsify");
    }
    if a.precision < 64 {
        bail!("precision must be at least 64 bits");
    }
    let over = overrides(&a.params)?;
    let interval = a.interval.as_deref().map(parse_interval).transpose()?;
    let mut fixed = Vec::new();
    for s in &a.set {
        let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("`--set {s}` is not NAME=DECIMAL"))?;
        v.trim().parse::<f64>().map_err(|_| anyhow!("`{v}` is not a decimal number"))?;
        fixed.push((k.trim().to_string(), v.trim().to_string()));
    }
    let exec = Execution::from_jobs(a.jobs.unwrap_or(0));
    let mut ok = true;
    for d in &decls {
        for ob in instances(d, &over) {
            let (lhs, rhs) = sides_of(&ob, &library)?;
            let names = d.pvars.iter().map(|v| v.name.clone()).chain(d.consts.iter().map(|c| c.name.clone()));
            let mut plan = SamplePlan::new(d.var.name.clone(), interval.clone().unwrap_or_else(|| d.ivp.interval.clone()))
                .count(a.samples)
                .precision(a.precision)
                .seed(a.seed)
                .consts(names);
            for (k, v) in &fixed {
                if !plan.const_bindings.iter().any(|n| **n == **k) {
                    bail!("`{}` has no constant or parameter variable `{k}`", d.name);
                }
                plan = plan.fix(k.as_str(), v.as_str());
            }
            let report = exec::with_jobs(a.jobs.unwrap_or(0), || sample::falsify(&lhs, &rhs, &plan, exec));
            println!("# {} over {}", ob.instance(), plan.interval);
            if a.quiet {
                for line in report.render().lines().filter(|l| l.starts_with('#')) {
                    println!("{line}");
                }
            } else {
                print!("{}", report.render());
            }
            ok &= report.verdict == PointVerdict::Consistent;
        }
    }
    Ok(ok)
}
