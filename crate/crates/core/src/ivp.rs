//! Initial value problems and identity declarations.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::expr::{ConstSymbol, Expr, Name, VarSymbol};
use crate::scalar::{parse_rational, Rational};

/// An initial point or finite interval endpoint: a rational or a rational multiple of pi.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Rational(Rational),
    PiMultiple(Rational),
}

impl Point {
    pub fn zero() -> Self {
        Point::Rational(Rational::zero())
    }

    pub fn is_pi_multiple(&self) -> bool {
        matches!(self, Point::PiMultiple(q) if !q.is_zero())
    }

    /// The scalar `q` in `q` or `q*pi`.
    pub fn scalar(&self) -> &Rational {
        match self {
            Point::Rational(q) | Point::PiMultiple(q) => q,
        }
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        match self {
            Point::Rational(q) => q.to_f64().unwrap_or(f64::NAN),
            Point::PiMultiple(q) => q.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI,
        }
    }

    /// Decimal string with enough digits for a 256-bit or wider parse.
    pub fn to_decimal(&self, digits: usize) -> String {
        let (q, scale) = match self {
            Point::Rational(q) => (q.clone(), None),
            Point::PiMultiple(q) => (q.clone(), Some(())),
        };
        let mut s = decimal_of(&q, digits + 5);
        if scale.is_some() {
            s = format!("{s}*pi");
        }
        s
    }

    pub fn parse(s: &str) -> Option<Point> {
        let s = s.trim();
        if let Some(head) = s.strip_suffix("*pi") {
            return parse_rational(head).map(Point::PiMultiple);
        }
        match s {
            "pi" => Some(Point::PiMultiple(Rational::from_integer(1.into()))),
            "-pi" => Some(Point::PiMultiple(Rational::from_integer((-1).into()))),
            _ => parse_rational(s).map(Point::Rational),
        }
    }
}

fn decimal_of(q: &Rational, digits: usize) -> String {
    use num_bigint::BigInt;
    let neg = q.is_negative();
    let a = q.abs();
    let int = a.numer() / a.denom();
    let mut rem = a.numer() % a.denom();
    let mut frac = String::new();
    for _ in 0..digits {
        rem *= BigInt::from(10);
        frac.push_str(&(&rem / a.denom()).to_string());
        rem %= a.denom();
    }
    format!("{}{}.{}", if neg { "-" } else { "" }, int, frac)
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Rational(q) => write!(f, "{}", crate::scalar::rational_to_string(q)),
            Point::PiMultiple(q) => write!(f, "{}*pi", crate::scalar::rational_to_string(q)),
        }
    }
}

// pi lies strictly between these two 60-digit truncations.
const PI_LO: &str = "314159265358979323846264338327950288419716939937510582097494/100000000000000000000000000000000000000000000000000000000000";
const PI_HI: &str = "314159265358979323846264338327950288419716939937510582097495/100000000000000000000000000000000000000000000000000000000000";

fn pi_bounds() -> (Rational, Rational) {
    (parse_rational(PI_LO).unwrap(), parse_rational(PI_HI).unwrap())
}

/// Exact comparison; pi's irrationality makes `q*pi` and `r` differ unless both are zero.
pub fn cmp_points(a: &Point, b: &Point) -> Ordering {
    match (a, b) {
        (Point::Rational(x), Point::Rational(y)) | (Point::PiMultiple(x), Point::PiMultiple(y)) => x.cmp(y),
        (Point::PiMultiple(q), Point::Rational(r)) => cmp_pi_rational(q, r),
        (Point::Rational(r), Point::PiMultiple(q)) => cmp_pi_rational(q, r).reverse(),
    }
}

fn cmp_pi_rational(q: &Rational, r: &Rational) -> Ordering {
    if q.is_zero() {
        return Rational::zero().cmp(r);
    }
    let (lo, hi) = pi_bounds();
    let (a, b) = if q.is_negative() { (q * &hi, q * &lo) } else { (q * &lo, q * &hi) };
    if &b < r {
        Ordering::Less
    } else if &a > r {
        Ordering::Greater
    } else {
        // Only reachable for rationals agreeing with q*pi to ~60 digits.
        (q.to_f64_lossy() * std::f64::consts::PI).partial_cmp(&r.to_f64_lossy()).unwrap_or(Ordering::Equal)
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for Rational {
    fn to_f64_lossy(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    NegInf,
    PosInf,
    Finite(Point),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-inf"),
            Bound::PosInf => f.write_str("inf"),
            Bound::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl Bound {
    pub fn parse(s: &str) -> Option<Bound> {
        match s.trim() {
            "-inf" => Some(Bound::NegInf),
            "inf" | "+inf" => Some(Bound::PosInf),
            other => Point::parse(other).map(Bound::Finite),
        }
    }
}

/// Open interval `(lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn real_line() -> Self {
        Interval { lo: Bound::NegInf, hi: Bound::PosInf }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let above = match &self.lo {
            Bound::NegInf => true,
            Bound::PosInf => false,
            Bound::Finite(lo) => cmp_points(lo, p) == Ordering::Less,
        };
        let below = match &self.hi {
            Bound::PosInf => true,
            Bound::NegInf => false,
            Bound::Finite(hi) => cmp_points(p, hi) == Ordering::Less,
        };
        above && below
    }

    pub fn is_nonempty(&self) -> bool {
        match (&self.lo, &self.hi) {
            (Bound::Finite(a), Bound::Finite(b)) => cmp_points(a, b) == Ordering::Less,
            (Bound::PosInf, _) | (_, Bound::NegInf) => false,
            _ => true,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// `y^(m) + a_1 y^(m-1) + ... + a_m y = b` in the variable `var`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinOp {
    pub var: VarSymbol,
    pub order: usize,
    pub coeffs: Vec<Expr>,
    pub force: Expr,
}

impl LinOp {
    pub fn new(var: VarSymbol, coeffs: Vec<Expr>, force: Expr) -> Self {
        LinOp { var, order: coeffs.len(), coeffs, force }
    }

    /// `y' = 0`.
    pub fn trivial(var: VarSymbol) -> Self {
        LinOp::new(var, vec![Expr::zero()], Expr::zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IvpSpec {
    pub op: LinOp,
    pub t0: Point,
    pub initial_values: Vec<Expr>,
    pub interval: Interval,
}

impl IvpSpec {
    pub fn trivial(var: VarSymbol) -> Self {
        IvpSpec {
            op: LinOp::trivial(var),
            t0: Point::zero(),
            initial_values: vec![Expr::zero()],
            interval: Interval::real_line(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntParam {
    pub name: Name,
    pub value: i64,
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl IntParam {
    pub fn admits(&self, v: i64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// `lhs - rhs` solves the homogeneous problem with zero initial data.
    Residual,
    /// `lhs` and `rhs` each solve the declared problem.
    Coincidence,
    /// Real or imaginary part of a certified complex identity.
    Split,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Residual => "residual",
            Mode::Coincidence => "coincidence",
            Mode::Split => "split",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "residual" => Some(Mode::Residual),
            "coincidence" => Some(Mode::Coincidence),
            "split" => Some(Mode::Split),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Re => "re",
            Part::Im => "im",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Sides written out in the source.
    Direct,
    /// `multiplier * d/dvar` of both sides of `base`.
    Derived { base: Name, multiplier: Expr },
    /// Real or imaginary part of `base`, checked after multiplying by `clear`.
    Split { base: Name, part: Part, clear: Expr },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdentityDecl {
    pub name: Name,
    pub var: VarSymbol,
    pub pvars: Vec<VarSymbol>,
    pub consts: Vec<ConstSymbol>,
    pub params: Vec<IntParam>,
    pub lhs: Expr,
    pub rhs: Expr,
    pub ivp: IvpSpec,
    pub depends: Vec<Name>,
    pub mode: Mode,
    pub origin: Origin,
    pub note: Option<String>,
    /// Text of the document the declaration was parsed from.
    pub source: Arc<str>,
}

impl IdentityDecl {
    pub fn param(&self, name: &str) -> Option<&IntParam> {
        self.params.iter().find(|p| &*p.name == name)
    }

    /// Declared parameter defaults.
    pub fn default_bindings(&self) -> crate::expr::Bindings {
        self.params.iter().map(|p| (p.name.clone(), p.value)).collect()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VarSymbol> {
        std::iter::once(&self.var).chain(self.pvars.iter())
    }

    pub fn find_var(&self, name: &str) -> Option<&VarSymbol> {
        self.variables().find(|v| &*v.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    #[test]
    fn pi_comparisons() {
        let pi = Point::PiMultiple(rat_int(1));
        assert_eq!(cmp_points(&pi, &Point::Rational(rat(314, 100))), Ordering::Greater);
        assert_eq!(cmp_points(&pi, &Point::Rational(rat(315, 100))), Ordering::Less);
        assert_eq!(cmp_points(&Point::PiMultiple(rat_int(-2)), &Point::Rational(rat_int(-6))), Ordering::Less);
        let iv = Interval { lo: Bound::Finite(Point::zero()), hi: Bound::Finite(Point::PiMultiple(rat_int(2))) };
        assert!(iv.contains(&pi));
        assert!(!iv.contains(&Point::zero()));
        assert!(!iv.contains(&Point::Rational(rat_int(7))));
    }

    #[test]
    fn point_strings() {
        assert_eq!(Point::parse("3/2*pi"), Some(Point::PiMultiple(rat(3, 2))));
        assert_eq!(Point::parse("pi"), Some(Point::PiMultiple(rat_int(1))));
        assert_eq!(Point::PiMultiple(rat_int(1)).to_string(), "1/1*pi");
        assert_eq!(Point::Rational(rat(-1, 4)).to_decimal(3), "-0.25000000");
        assert_eq!(Bound::parse("-inf"), Some(Bound::NegInf));
    }
}
