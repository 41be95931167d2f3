//! Seeded sampling over declared intervals and the numeric falsifier.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use astro_float::{BigFloat, RoundingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::numeric::{less, sci, Complex, Env, NumError, Numeric};
use crate::algebra::MultiPoly;
use crate::exec::{self, Execution};
use crate::expr::{Expr, Name};
use crate::ivp::{Bound, Interval};

const RM: RoundingMode = RoundingMode::ToEven;

/// Relative distance kept from each end of the sampling window.
pub const MARGIN: f64 = 1e-3;
/// Residual moduli at or below this are consistent with an identity.
pub const PASS: &str = "1e-50";
/// Residual moduli above this falsify an identity.
pub const FALSIFY: &str = "1e-3";
/// Half-width used for unbounded ends by the falsifier.
pub const ORACLE_SPAN: f64 = 4.0;
/// Half-width used for unbounded ends by regular-point sampling.
pub const EVIDENCE_SPAN: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub interval: Interval,
    pub count: usize,
    pub precision: usize,
    pub seed: u64,
    /// The variable that ranges over the interval.
    pub var: Name,
    /// Other variables and constants, drawn uniformly from `(-2, 2)` at each point.
    pub const_bindings: Vec<Name>,
    /// Width substituted for an unbounded end.
    pub span: f64,
    /// Symbols held at a decimal value instead of being drawn.
    pub fixed: BTreeMap<Name, String>,
}

impl SamplePlan {
    pub fn new(var: impl Into<Name>, interval: Interval) -> Self {
        SamplePlan {
            interval,
            count: 100,
            precision: 256,
            seed: 0,
            var: var.into(),
            const_bindings: Vec::new(),
            span: ORACLE_SPAN,
            fixed: BTreeMap::new(),
        }
    }

    pub fn count(mut self, n: usize) -> Self {
        self.count = n;
        self
    }

    pub fn precision(mut self, p: usize) -> Self {
        self.precision = p;
        self
    }

    pub fn seed(mut self, s: u64) -> Self {
        self.seed = s;
        self
    }

    pub fn span(mut self, s: f64) -> Self {
        self.span = s;
        self
    }

    pub fn consts(mut self, names: impl IntoIterator<Item = Name>) -> Self {
        self.const_bindings = names.into_iter().filter(|n| *n != self.var).collect();
        self.const_bindings.sort();
        self.const_bindings.dedup();
        self
    }

    /// Holds `name` at the decimal `value` at every point.
    pub fn fix(mut self, name: impl Into<Name>, value: impl Into<String>) -> Self {
        self.fixed.insert(name.into(), value.into());
        self
    }

    /// Sampling window `[lo, hi]` with the margin applied.
    pub fn window(&self, num: &mut Numeric) -> (BigFloat, BigFloat) {
        let p = num.precision();
        let span = num.decimal(&format!("{:e}", self.span));
        let fin = |b: &Bound, num: &mut Numeric| match b {
            Bound::Finite(pt) => Some(num.point(pt)),
            _ => None,
        };
        let (lo, hi) = match (fin(&self.interval.lo, num), fin(&self.interval.hi, num)) {
            (Some(a), Some(b)) => (a, b),
            (Some(a), None) => {
                let b = a.add(&span, p, RM);
                (a, b)
            }
            (None, Some(b)) => (b.sub(&span, p, RM), b),
            (None, None) => (span.neg(), span.clone()),
        };
        let width = hi.sub(&lo, p, RM);
        let m = width.mul(&num.decimal(&format!("{MARGIN:e}")), p, RM);
        (lo.add(&m, p, RM), hi.sub(&m, p, RM))
    }
}

/// Deterministic stream of sample points for a plan.
pub struct Sampler {
    rng: ChaCha8Rng,
    lo: BigFloat,
    width: BigFloat,
    var: Name,
    others: Vec<Name>,
    fixed: Vec<(Name, BigFloat)>,
    prec: usize,
}

impl Sampler {
    pub fn new(plan: &SamplePlan, num: &mut Numeric) -> Self {
        let (lo, hi) = plan.window(num);
        let width = hi.sub(&lo, num.precision(), RM);
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(plan.seed),
            lo,
            width,
            var: plan.var.clone(),
            others: plan.const_bindings.iter().filter(|n| !plan.fixed.contains_key(*n)).cloned().collect(),
            fixed: plan.fixed.iter().map(|(k, v)| (k.clone(), num.decimal(v))).collect(),
            prec: num.precision(),
        }
    }

    fn unit(&mut self) -> BigFloat {
        // A 64-bit uniform fraction, exact at any precision of at least 64 bits.
        let u: u64 = self.rng.gen();
        let two64 = BigFloat::from_u64(1 << 32, self.prec).powi(2, self.prec, RM);
        BigFloat::from_u64(u, self.prec).div(&two64, self.prec, RM)
    }

    pub fn next_env(&mut self) -> Env {
        let p = self.prec;
        let mut env = Env::new();
        let u = self.unit();
        env.insert(self.var.clone(), self.lo.add(&self.width.mul(&u, p, RM), p, RM));
        for name in self.others.clone() {
            let u = self.unit();
            let x = u.mul(&BigFloat::from_i64(4, p), p, RM).sub(&BigFloat::from_i64(2, p), p, RM);
            env.insert(name, x);
        }
        for (name, v) in &self.fixed {
            env.insert(name.clone(), v.clone());
        }
        env
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PointVerdict {
    Consistent,
    Inconclusive,
    Falsified,
}

impl PointVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PointVerdict::Consistent => "consistent",
            PointVerdict::Inconclusive => "inconclusive",
            PointVerdict::Falsified => "falsified",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleLine {
    pub point: String,
    pub modulus: String,
    pub verdict: PointVerdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub lines: Vec<SampleLine>,
    pub max_modulus: String,
    pub max_modulus_f64: f64,
    pub verdict: PointVerdict,
    /// Index of the first falsifying point.
    pub witness: Option<usize>,
    pub poles: usize,
    pub seed: u64,
    pub precision: usize,
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let _ = writeln!(s, "{} {} {}", l.point, l.modulus, l.verdict.as_str());
        }
        let _ = writeln!(
            s,
            "# samples={} poles_resampled={} seed={} precision={} max_residual={} verdict={}",
            self.lines.len(),
            self.poles,
            self.seed,
            self.precision,
            self.max_modulus,
            self.verdict.as_str()
        );
        if let Some(w) = self.witness {
            let _ = writeln!(s, "# witness {}", self.lines[w].point);
        }
        s
    }
}

fn render_point(env: &Env, var: &str) -> String {
    let t = sci(&env[var], 20);
    if env.len() == 1 {
        return t;
    }
    let mut s = format!("{var}={t}");
    for (k, v) in env {
        if &**k != var {
            let _ = write!(s, ",{k}={}", sci(v, 20));
        }
    }
    s
}

fn classify(num: &mut Numeric, m: &BigFloat) -> PointVerdict {
    if !less(&num.decimal(PASS), m) {
        PointVerdict::Consistent
    } else if less(&num.decimal(FALSIFY), m) {
        PointVerdict::Falsified
    } else {
        PointVerdict::Inconclusive
    }
}

const CHUNK: usize = 16;

/// Evaluates `f` at the plan's points, replacing poles by fresh draws.
fn sample_values<F>(plan: &SamplePlan, exec: Execution, f: F) -> (Vec<(Env, Option<Complex>)>, usize)
where
    F: Fn(&mut Numeric, &Env) -> Result<Complex, NumError> + Sync + Send,
{
    let mut num = Numeric::new(plan.precision);
    let mut sampler = Sampler::new(plan, &mut num);
    let envs: Vec<Env> = (0..plan.count).map(|_| sampler.next_env()).collect();
    let batch = |envs: &[Env]| {
        exec::map_chunks(exec, envs, CHUNK, |c| {
            let mut n = Numeric::new(plan.precision);
            c.iter().map(|e| f(&mut n, e).ok()).collect()
        })
    };
    let mut vals = batch(&envs);
    let mut out: Vec<(Env, Option<Complex>)> = envs.into_iter().zip(vals.drain(..)).collect();
    let mut poles = 0;
    // Replacement draws happen in index order, so reports do not depend on scheduling.
    for slot in out.iter_mut() {
        let mut tries = 0;
        while slot.1.is_none() && tries < 10 {
            poles += 1;
            tries += 1;
            let env = sampler.next_env();
            let v = f(&mut num, &env).ok();
            *slot = (env, v);
        }
    }
    (out, poles)
}

/// Numeric falsification of `lhs - rhs` over the plan.
pub fn falsify(lhs: &Expr, rhs: &Expr, plan: &SamplePlan, exec: Execution) -> Report {
    let (vals, poles) = sample_values(plan, exec, |n, env| {
        let a = n.eval(lhs, env)?;
        let b = n.eval(rhs, env)?;
        Ok(n.sub(&a, &b))
    });
    let mut num = Numeric::new(plan.precision);
    let mut lines = Vec::new();
    let mut max = num.int(0);
    let mut verdict = PointVerdict::Consistent;
    let mut witness = None;
    for (env, v) in &vals {
        let point = render_point(env, &plan.var);
        let Some(v) = v else {
            lines.push(SampleLine { point, modulus: "pole".into(), verdict: PointVerdict::Inconclusive });
            verdict = verdict.max(PointVerdict::Inconclusive);
            continue;
        };
        let m = num.modulus(v);
        let pv = classify(&mut num, &m);
        if pv == PointVerdict::Falsified && witness.is_none() {
            witness = Some(lines.len());
        }
        verdict = verdict.max(pv);
        if less(&max, &m) {
            max = m.clone();
        }
        lines.push(SampleLine { point, modulus: sci(&m, 6), verdict: pv });
    }
    Report {
        lines,
        max_modulus: sci(&max, 6),
        max_modulus_f64: super::numeric::to_f64(&max),
        verdict,
        witness,
        poles,
        seed: plan.seed,
        precision: plan.precision,
    }
}

/// Smallest modulus of any of `polys` over the plan's points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nonvanishing {
    pub count: usize,
    pub min_modulus: String,
    /// Points where some polynomial fell below the pole threshold.
    pub near_zero: usize,
}

pub fn min_modulus(polys: &[MultiPoly], plan: &SamplePlan, exec: Execution) -> Nonvanishing {
    let mut num = Numeric::new(plan.precision);
    if polys.is_empty() {
        return Nonvanishing { count: plan.count, min_modulus: "none".into(), near_zero: 0 };
    }
    let mut sampler = Sampler::new(plan, &mut num);
    let envs: Vec<Env> = (0..plan.count).map(|_| sampler.next_env()).collect();
    let mins: Vec<Option<(BigFloat, bool)>> = exec::map_chunks(exec, &envs, CHUNK, |c| {
        let mut n = Numeric::new(plan.precision);
        c.iter()
            .map(|env| {
                let mut best: Option<(BigFloat, bool)> = None;
                for p in polys {
                    let v = n.poly(p, env).ok()?;
                    let m = n.modulus(&v);
                    let pole = n.is_pole(&v);
                    if best.as_ref().is_none_or(|(b, _)| less(&m, b)) {
                        best = Some((m, pole));
                    }
                }
                best
            })
            .collect()
    });
    let mut min: Option<BigFloat> = None;
    let mut near_zero = 0;
    for (m, pole) in mins.into_iter().flatten() {
        near_zero += usize::from(pole);
        if min.as_ref().is_none_or(|b| less(&m, b)) {
            min = Some(m);
        }
    }
    Nonvanishing { count: plan.count, min_modulus: min.map_or("none".into(), |m| sci(&m, 6)), near_zero }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope, SymbolKind};
    use crate::ivp::Point;
    use crate::scalar::rat;

    fn scope() -> Scope {
        Scope::new().with("t", SymbolKind::OdeVar).with("a", SymbolKind::Const)
    }

    fn ex(s: &str) -> Expr {
        parse_expr(s, &scope()).unwrap()
    }

    #[test]
    fn points_stay_inside_window() {
        let iv = Interval { lo: Bound::Finite(Point::Rational(rat(-1, 1))), hi: Bound::PosInf };
        let plan = SamplePlan::new("t", iv).consts(["a".into()]);
        let mut num = Numeric::new(256);
        let mut s = Sampler::new(&plan, &mut num);
        for _ in 0..200 {
            let env = s.next_env();
            let t = super::super::numeric::to_f64(&env["t"]);
            assert!(t > -1.0 + 3e-3 && t < 3.0 - 3e-3, "{t}");
            let a = super::super::numeric::to_f64(&env["a"]);
            assert!(a.abs() < 2.0);
        }
    }

    #[test]
    fn identity_is_consistent_and_mutation_is_falsified() {
        let plan = SamplePlan::new("t", Interval::real_line()).count(30).seed(7);
        let ok = falsify(&ex("cos(t)^2 + sin(t)^2"), &ex("1"), &plan, Execution::Parallel);
        assert_eq!(ok.verdict, PointVerdict::Consistent);
        let bad = falsify(&ex("sin(t)^2 + 2*cos(t)^2"), &ex("1"), &plan, Execution::Parallel);
        assert_eq!(bad.verdict, PointVerdict::Falsified);
        assert!(bad.witness.is_some());
    }

    #[test]
    fn reports_do_not_depend_on_scheduling() {
        let plan = SamplePlan::new("t", Interval::real_line()).count(40).seed(3).consts(["a".into()]);
        let (l, r) = (ex("cos(t + a)"), ex("cos(t)*cos(a) - sin(t)*sin(a)"));
        let a = falsify(&l, &r, &plan, Execution::Parallel).render();
        let b = falsify(&l, &r, &plan, Execution::Sequential).render();
        assert_eq!(a, b);
    }
}

/// Note recorded with regular-point evidence sampled under [`EVIDENCE_SPAN`].
pub fn evidence_note(interval: &Interval) -> String {
    let unbounded = matches!(interval.lo, Bound::NegInf) || matches!(interval.hi, Bound::PosInf);
    if unbounded {
        format!(
            "advisory; unbounded ends of {interval} replaced by points {EVIDENCE_SPAN:e} beyond the finite end; other symbols drawn from (-2, 2)"
        )
    } else {
        format!("advisory; sampled inside {interval}; other symbols drawn from (-2, 2)")
    }
}
