//! Closed-form scalar expressions over the plane coordinates `x1`, `x2` and a
//! curve parameter `t`, with exact differentiation.
//!
//! Trees are kept in a light normal form by the smart constructors
//! ([`ScalarExpr::sum`], [`ScalarExpr::product`], ...): nested sums and
//! products are flattened, constants are folded, factors with a common base
//! are merged and zeros/ones are dropped. Nothing else is rewritten.

mod parse;

pub use parse::{parse_expr, parse_with};

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X1,
    X2,
    T,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::T => "t",
        }
    }

    /// Coordinate axis, 0-based.
    pub fn axis(k: usize) -> Var {
        match k {
            0 => Var::X1,
            1 => Var::X2,
            _ => panic!("axis index {k} out of range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Arctan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "arctan" => Func::Arctan,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64> {
        let out = match self {
            Func::Exp => v.exp(),
            Func::Log => {
                if v <= 0.0 {
                    return Err(Error::Domain(format!("log of non-positive value {v}")));
                }
                v.ln()
            }
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Arctan => v.atan(),
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::Domain(format!("{}({v}) is not finite", self.name())))
        }
    }
}

/// Exponent of a power node. Rationals are kept exact, reduced, with a
/// positive denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Rational(i64, i64),
    Real(f64),
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Exponent {
    pub fn rational(p: i64, q: i64) -> Exponent {
        assert!(q != 0, "zero denominator");
        let g = gcd(p, q).max(1);
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 {
            p = -p;
            q = -q;
        }
        Exponent::Rational(p, q)
    }

    pub fn integer(n: i64) -> Exponent {
        Exponent::Rational(n, 1)
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Rational(p, q) => p as f64 / q as f64,
            Exponent::Real(r) => r,
        }
    }

    pub fn is_zero(self) -> bool {
        self.value() == 0.0
    }

    pub fn is_one(self) -> bool {
        self.value() == 1.0
    }

    fn add(self, other: Exponent) -> Exponent {
        match (self, other) {
            (Exponent::Rational(p1, q1), Exponent::Rational(p2, q2)) => {
                let num = p1
                    .checked_mul(q2)
                    .and_then(|a| p2.checked_mul(q1).and_then(|b| a.checked_add(b)));
                match (num, q1.checked_mul(q2)) {
                    (Some(n), Some(d)) => Exponent::rational(n, d),
                    _ => Exponent::Real(self.value() + other.value()),
                }
            }
            _ => Exponent::Real(self.value() + other.value()),
        }
    }

    fn mul_int(self, n: i64) -> Exponent {
        match self {
            Exponent::Rational(p, q) => match p.checked_mul(n) {
                Some(m) => Exponent::rational(m, q),
                None => Exponent::Real(self.value() * n as f64),
            },
            Exponent::Real(r) => Exponent::Real(r * n as f64),
        }
    }

    fn as_integer(self) -> Option<i64> {
        match self {
            Exponent::Rational(p, 1) => Some(p),
            _ => None,
        }
    }

    pub fn minus_one(self) -> Exponent {
        self.add(Exponent::integer(-1))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exponent::Rational(p, 1) => write!(f, "{p}"),
            Exponent::Rational(p, q) => write!(f, "{p}/{q}"),
            // Debug keeps a '.' or an exponent marker, which is how the
            // parser tells a real exponent from an integer one.
            Exponent::Real(r) => write!(f, "{r:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Const(f64),
    Var(Var),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Pow(Box<ScalarExpr>, Exponent),
    Apply(Func, Box<ScalarExpr>),
}

use ScalarExpr::*;

#[derive(Debug, Clone, Copy, Default)]
struct Env {
    x: Option<Point>,
    t: Option<f64>,
}

fn pow_value(b: f64, e: Exponent) -> Result<f64> {
    let out = match e {
        Exponent::Rational(p, q) => {
            if b > 0.0 {
                if q == 1 && p.unsigned_abs() <= i32::MAX as u64 {
                    b.powi(p as i32)
                } else {
                    b.powf(p as f64 / q as f64)
                }
            } else if b == 0.0 {
                if p > 0 {
                    0.0
                } else {
                    return Err(Error::Domain("division by zero".into()));
                }
            } else if q % 2 == 0 {
                return Err(Error::Domain(format!("even root of negative value {b}")));
            } else {
                let m = if q == 1 && p.unsigned_abs() <= i32::MAX as u64 {
                    (-b).powi(p as i32)
                } else {
                    (-b).powf(p as f64 / q as f64)
                };
                if p % 2 == 0 {
                    m
                } else {
                    -m
                }
            }
        }
        Exponent::Real(r) => {
            if b > 0.0 {
                b.powf(r)
            } else if b == 0.0 && r > 0.0 {
                0.0
            } else {
                return Err(Error::Domain(format!("real power {r} of non-positive value {b}")));
            }
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Domain(format!("{b}^{e} is not finite")))
    }
}

impl ScalarExpr {
    pub fn constant(v: f64) -> ScalarExpr {
        // normalise -0.0 so that rendering never emits "-0"
        Const(if v == 0.0 { 0.0 } else { v })
    }

    pub fn zero() -> ScalarExpr {
        Const(0.0)
    }

    pub fn one() -> ScalarExpr {
        Const(1.0)
    }

    pub fn var(v: Var) -> ScalarExpr {
        Var(v)
    }

    pub fn x1() -> ScalarExpr {
        Var(Var::X1)
    }

    pub fn x2() -> ScalarExpr {
        Var(Var::X2)
    }

    pub fn t() -> ScalarExpr {
        Var(Var::T)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn sum(terms: Vec<ScalarExpr>) -> ScalarExpr {
        // collect like terms: k1*m + k2*m -> (k1 + k2)*m
        let mut items: Vec<(f64, ScalarExpr)> = Vec::with_capacity(terms.len());
        let mut c = 0.0;
        let mut push = |e: ScalarExpr, items: &mut Vec<(f64, ScalarExpr)>| {
            let (k, rest) = match e {
                Const(v) => {
                    c += v;
                    return;
                }
                Product(fs) if matches!(fs[0], Const(_)) => {
                    let k = fs[0].as_const().unwrap();
                    let mut rest: Vec<ScalarExpr> = fs.into_iter().skip(1).collect();
                    (k, if rest.len() == 1 { rest.pop().unwrap() } else { Product(rest) })
                }
                other => (1.0, other),
            };
            match items.iter_mut().find(|(_, r)| *r == rest) {
                Some(slot) => slot.0 += k,
                None => items.push((k, rest)),
            }
        };
        for term in terms {
            match term {
                Sum(inner) => {
                    for e in inner {
                        push(e, &mut items);
                    }
                }
                other => push(other, &mut items),
            }
        }
        let mut out: Vec<ScalarExpr> = items
            .into_iter()
            .filter(|(k, _)| *k != 0.0)
            .map(|(k, r)| if k == 1.0 { r } else { ScalarExpr::product(vec![Const(k), r]) })
            .collect();
        if c != 0.0 {
            out.push(ScalarExpr::constant(c));
        }
        match out.len() {
            0 => ScalarExpr::zero(),
            1 => out.pop().unwrap(),
            _ => Sum(out),
        }
    }

    pub fn product(factors: Vec<ScalarExpr>) -> ScalarExpr {
        let mut flat = Vec::with_capacity(factors.len());
        let mut c = 1.0;
        for f in factors {
            match f {
                Product(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        // merge factors sharing a base: b^p * b^q -> b^(p+q)
        let mut items: Vec<(ScalarExpr, Exponent)> = Vec::with_capacity(flat.len());
        let mut merged = false;
        // exp(a) * exp(b) -> exp(a + b)
        let mut exp_args: Vec<ScalarExpr> = Vec::new();
        for f in flat {
            if let Const(v) = f {
                c *= v;
                continue;
            }
            if let Apply(Func::Exp, a) = f {
                exp_args.push(*a);
                continue;
            }
            let (base, e) = match f {
                Pow(b, e) => (*b, e),
                other => (other, Exponent::integer(1)),
            };
            if let Some(slot) = items.iter_mut().find(|(b, _)| *b == base) {
                slot.1 = slot.1.add(e);
                merged = true;
            } else {
                items.push((base, e));
            }
        }
        if c == 0.0 {
            return ScalarExpr::zero();
        }
        let mut out: Vec<ScalarExpr> = Vec::with_capacity(items.len() + 1);
        if c != 1.0 {
            out.push(ScalarExpr::constant(c));
        }
        for (b, e) in items {
            out.push(ScalarExpr::pow(b, e));
        }
        match exp_args.len() {
            0 => {}
            1 => out.push(Apply(Func::Exp, Box::new(exp_args.pop().unwrap()))),
            _ => {
                merged = true;
                out.push(ScalarExpr::sum(exp_args).exp());
            }
        }
        if merged && out.iter().any(|f| matches!(f, Const(_) | Product(_))) {
            return ScalarExpr::product(out);
        }
        match out.len() {
            0 => ScalarExpr::one(),
            1 => out.pop().unwrap(),
            _ => Product(out),
        }
    }

    pub fn pow(base: ScalarExpr, e: Exponent) -> ScalarExpr {
        if e.is_zero() {
            return ScalarExpr::one();
        }
        if e.is_one() {
            return base;
        }
        match base {
            Const(b) => {
                if let Ok(v) = pow_value(b, e) {
                    return ScalarExpr::constant(v);
                }
                Pow(Box::new(Const(b)), e)
            }
            Apply(Func::Exp, a) => a.scale(e.value()).exp(),
            // integer powers distribute over products and compose with powers
            Pow(b, p) if e.as_integer().is_some() => ScalarExpr::pow(*b, p.mul_int(e.as_integer().unwrap())),
            Product(fs) if e.as_integer().is_some() => {
                ScalarExpr::product(fs.into_iter().map(|f| ScalarExpr::pow(f, e)).collect())
            }
            other => Pow(Box::new(other), e),
        }
    }

    pub fn powi(base: ScalarExpr, n: i64) -> ScalarExpr {
        ScalarExpr::pow(base, Exponent::integer(n))
    }

    pub fn recip(self) -> ScalarExpr {
        ScalarExpr::powi(self, -1)
    }

    pub fn apply(func: Func, arg: ScalarExpr) -> ScalarExpr {
        if let (Func::Log, Apply(Func::Exp, a)) = (func, &arg) {
            return (**a).clone();
        }
        if let Const(v) = arg {
            if let Ok(out) = func.apply(v) {
                return ScalarExpr::constant(out);
            }
        }
        Apply(func, Box::new(arg))
    }

    pub fn exp(self) -> ScalarExpr {
        ScalarExpr::apply(Func::Exp, self)
    }

    pub fn log(self) -> ScalarExpr {
        ScalarExpr::apply(Func::Log, self)
    }

    pub fn sin(self) -> ScalarExpr {
        ScalarExpr::apply(Func::Sin, self)
    }

    pub fn cos(self) -> ScalarExpr {
        ScalarExpr::apply(Func::Cos, self)
    }

    pub fn arctan(self) -> ScalarExpr {
        ScalarExpr::apply(Func::Arctan, self)
    }

    pub fn scale(self, c: f64) -> ScalarExpr {
        ScalarExpr::product(vec![ScalarExpr::constant(c), self])
    }

    fn ev(&self, env: &Env) -> Result<f64> {
        match self {
            Const(v) => Ok(*v),
            Var(v) => {
                let val = match v {
                    Var::X1 => env.x.map(|p| p[0]),
                    Var::X2 => env.x.map(|p| p[1]),
                    Var::T => env.t,
                };
                val.ok_or_else(|| Error::Domain(format!("variable {} is unbound", v.name())))
            }
            Sum(ts) => {
                let mut s = 0.0;
                for term in ts {
                    s += term.ev(env)?;
                }
                Ok(s)
            }
            Product(fs) => {
                let mut s = 1.0;
                for f in fs {
                    s *= f.ev(env)?;
                }
                Ok(s)
            }
            Pow(b, e) => pow_value(b.ev(env)?, *e),
            Apply(f, a) => f.apply(a.ev(env)?),
        }
    }

    fn eval_env(&self, env: Env) -> Result<f64> {
        let v = self.ev(&env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain("non-finite result".into()))
        }
    }

    /// Evaluate at a point of the plane. Any use of `t` is an error.
    pub fn eval(&self, p: Point) -> Result<f64> {
        self.eval_env(Env { x: Some(p), t: None })
    }

    /// Evaluate a curve expression at parameter value `t`.
    pub fn eval_t(&self, t: f64) -> Result<f64> {
        self.eval_env(Env { x: None, t: Some(t) })
    }

    pub fn diff(&self, var: Var) -> ScalarExpr {
        match self {
            Const(_) => ScalarExpr::zero(),
            Var(v) => {
                if *v == var {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            Sum(ts) => ScalarExpr::sum(ts.iter().map(|e| e.diff(var)).collect()),
            Product(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for i in 0..fs.len() {
                    let di = fs[i].diff(var);
                    if di.is_zero() {
                        continue;
                    }
                    let mut factors = fs.clone();
                    factors[i] = di;
                    terms.push(ScalarExpr::product(factors));
                }
                ScalarExpr::sum(terms)
            }
            Pow(b, e) => {
                let db = b.diff(var);
                if db.is_zero() {
                    return ScalarExpr::zero();
                }
                let coeff = match *e {
                    Exponent::Rational(p, q) => p as f64 / q as f64,
                    Exponent::Real(r) => r,
                };
                ScalarExpr::product(vec![
                    ScalarExpr::constant(coeff),
                    ScalarExpr::pow((**b).clone(), e.minus_one()),
                    db,
                ])
            }
            Apply(f, a) => {
                let da = a.diff(var);
                if da.is_zero() {
                    return ScalarExpr::zero();
                }
                let a = (**a).clone();
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Log => a.recip(),
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().scale(-1.0),
                    Func::Arctan => {
                        ScalarExpr::sum(vec![ScalarExpr::one(), ScalarExpr::powi(a, 2)]).recip()
                    }
                };
                ScalarExpr::product(vec![outer, da])
            }
        }
    }

    /// Derivative along coordinate axis `k` (0 for x1, 1 for x2).
    pub fn diff_axis(&self, k: usize) -> ScalarExpr {
        self.diff(Var::axis(k))
    }

    /// Replace `x1`, `x2` by the given expressions.
    pub fn substitute(&self, s1: &ScalarExpr, s2: &ScalarExpr) -> ScalarExpr {
        match self {
            Const(v) => Const(*v),
            Var(Var::X1) => s1.clone(),
            Var(Var::X2) => s2.clone(),
            Var(Var::T) => Var(Var::T),
            Sum(ts) => ScalarExpr::sum(ts.iter().map(|e| e.substitute(s1, s2)).collect()),
            Product(fs) => ScalarExpr::product(fs.iter().map(|e| e.substitute(s1, s2)).collect()),
            Pow(b, e) => ScalarExpr::pow(b.substitute(s1, s2), *e),
            Apply(f, a) => ScalarExpr::apply(*f, a.substitute(s1, s2)),
        }
    }

    /// Rebuild through the smart constructors. Normalised trees are fixed points.
    pub fn simplify(&self) -> ScalarExpr {
        self.substitute(&ScalarExpr::x1(), &ScalarExpr::x2())
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Const(_) => false,
            Var(v) => *v == var,
            Sum(xs) | Product(xs) => xs.iter().any(|e| e.depends_on(var)),
            Pow(b, _) => b.depends_on(var),
            Apply(_, a) => a.depends_on(var),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Const(_) | Var(_) => 1,
            Sum(xs) | Product(xs) => 1 + xs.iter().map(|e| e.node_count()).sum::<usize>(),
            Pow(b, _) => 1 + b.node_count(),
            Apply(_, a) => 1 + a.node_count(),
        }
    }
}

fn fmt_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(v) => {
                if *v < 0.0 {
                    write!(f, "({})", fmt_number(*v))
                } else {
                    write!(f, "{}", fmt_number(*v))
                }
            }
            Var(v) => write!(f, "{}", v.name()),
            Sum(ts) => {
                for (i, term) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{term}")?;
                }
                Ok(())
            }
            Product(fs) => {
                for (i, factor) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    match factor {
                        Sum(_) | Product(_) => write!(f, "({factor})")?,
                        _ => write!(f, "{factor}")?,
                    }
                }
                Ok(())
            }
            Pow(b, e) => {
                match **b {
                    Var(_) | Apply(..) | Const(_) => write!(f, "{b}")?,
                    _ => write!(f, "({b})")?,
                }
                write!(f, "^({e})")
            }
            Apply(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(vec![self, rhs])
    }
}

impl Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(vec![self, -rhs])
    }
}

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        self.scale(-1.0)
    }
}

impl Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::product(vec![self, rhs])
    }
}

impl Div for ScalarExpr {
    type Output = ScalarExpr;
    fn div(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::product(vec![self, rhs.recip()])
    }
}

impl From<f64> for ScalarExpr {
    fn from(v: f64) -> ScalarExpr {
        ScalarExpr::constant(v)
    }
}

/// Where a map or a connection is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Plane,
    /// x1 > 0
    RightHalfPlane,
}

impl Domain {
    pub fn contains(self, p: Point) -> bool {
        match self {
            Domain::Plane => p[0].is_finite() && p[1].is_finite(),
            Domain::RightHalfPlane => p[0] > 0.0 && p[1].is_finite(),
        }
    }
}

/// An expression together with its first and second partial derivatives.
#[derive(Debug, Clone)]
pub struct ScalarJet {
    pub value: ScalarExpr,
    pub grad: [ScalarExpr; 2],
    pub hess: [[ScalarExpr; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl ScalarJet {
    pub fn new(e: &ScalarExpr) -> ScalarJet {
        let g1 = e.diff(Var::X1);
        let g2 = e.diff(Var::X2);
        let h11 = g1.diff(Var::X1);
        let h12 = g1.diff(Var::X2);
        let h22 = g2.diff(Var::X2);
        ScalarJet {
            value: e.clone(),
            grad: [g1, g2],
            hess: [[h11, h12.clone()], [h12, h22]],
        }
    }

    pub fn eval(&self, p: Point) -> Result<JetValue> {
        let h12 = self.hess[0][1].eval(p)?;
        Ok(JetValue {
            value: self.value.eval(p)?,
            grad: [self.grad[0].eval(p)?, self.grad[1].eval(p)?],
            hess: [[self.hess[0][0].eval(p)?, h12], [h12, self.hess[1][1].eval(p)?]],
        })
    }
}

/// A vector field `c1 ∂1 + c2 ∂2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldExpr {
    pub c1: ScalarExpr,
    pub c2: ScalarExpr,
}

impl VectorFieldExpr {
    pub fn new(c1: ScalarExpr, c2: ScalarExpr) -> VectorFieldExpr {
        VectorFieldExpr { c1, c2 }
    }

    /// Parse both components with the given parameter bindings.
    pub fn parse(c1: &str, c2: &str, params: &[(&str, f64)]) -> Result<VectorFieldExpr> {
        Ok(VectorFieldExpr::new(parse_with(c1, params)?, parse_with(c2, params)?))
    }

    pub fn component(&self, k: usize) -> &ScalarExpr {
        match k {
            0 => &self.c1,
            1 => &self.c2,
            _ => panic!("component {k} out of range"),
        }
    }

    pub fn eval(&self, p: Point) -> Result<[f64; 2]> {
        Ok([self.c1.eval(p)?, self.c2.eval(p)?])
    }

    pub fn scale(&self, c: f64) -> VectorFieldExpr {
        VectorFieldExpr::new(self.c1.clone().scale(c), self.c2.clone().scale(c))
    }

    pub fn linear_combination(fields: &[VectorFieldExpr], coeffs: &[f64]) -> VectorFieldExpr {
        assert_eq!(fields.len(), coeffs.len());
        let c1 = fields.iter().zip(coeffs).map(|(f, c)| f.c1.clone().scale(*c)).collect();
        let c2 = fields.iter().zip(coeffs).map(|(f, c)| f.c2.clone().scale(*c)).collect();
        VectorFieldExpr::new(ScalarExpr::sum(c1), ScalarExpr::sum(c2))
    }

    /// Pull back through a local diffeomorphism `map`: X(P) = J(P)^{-1} Y(map(P)).
    pub fn pullback(&self, map: &PlaneMap) -> VectorFieldExpr {
        let y1 = self.c1.substitute(&map.f1, &map.f2);
        let y2 = self.c2.substitute(&map.f1, &map.f2);
        let j11 = map.f1.diff(Var::X1);
        let j12 = map.f1.diff(Var::X2);
        let j21 = map.f2.diff(Var::X1);
        let j22 = map.f2.diff(Var::X2);
        let det = j11.clone() * j22.clone() - j12.clone() * j21.clone();
        let inv = det.recip();
        let c1 = (j22 * y1.clone() - j12 * y2.clone()) * inv.clone();
        let c2 = (j11 * y2 - j21 * y1) * inv;
        VectorFieldExpr::new(c1, c2)
    }

    pub fn render(&self) -> [String; 2] {
        [self.c1.to_string(), self.c2.to_string()]
    }
}

impl fmt::Display for VectorFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})∂1 + ({})∂2", self.c1, self.c2)
    }
}

/// A map of the plane into the plane, given by two component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMap {
    pub f1: ScalarExpr,
    pub f2: ScalarExpr,
    pub domain: Domain,
}

impl PlaneMap {
    pub fn new(f1: ScalarExpr, f2: ScalarExpr, domain: Domain) -> PlaneMap {
        PlaneMap { f1, f2, domain }
    }

    pub fn parse(f1: &str, f2: &str, params: &[(&str, f64)], domain: Domain) -> Result<PlaneMap> {
        Ok(PlaneMap::new(parse_with(f1, params)?, parse_with(f2, params)?, domain))
    }

    pub fn identity(domain: Domain) -> PlaneMap {
        PlaneMap::new(ScalarExpr::x1(), ScalarExpr::x2(), domain)
    }

    pub fn eval(&self, p: Point) -> Result<Point> {
        Ok([self.f1.eval(p)?, self.f2.eval(p)?])
    }

    pub fn jet(&self) -> MapJet {
        MapJet { components: [ScalarJet::new(&self.f1), ScalarJet::new(&self.f2)] }
    }

    /// Swap the two output components.
    pub fn transposed(&self) -> PlaneMap {
        PlaneMap::new(self.f2.clone(), self.f1.clone(), self.domain)
    }
}

/// Cached derivatives of a [`PlaneMap`].
#[derive(Debug, Clone)]
pub struct MapJet {
    pub components: [ScalarJet; 2],
}

impl MapJet {
    /// Value, Jacobian `J[c][i] = ∂i Φ^c` and second derivatives `H[c][i][j]`.
    pub fn eval(&self, p: Point) -> Result<(Point, [[f64; 2]; 2], [[[f64; 2]; 2]; 2])> {
        let a = self.components[0].eval(p)?;
        let b = self.components[1].eval(p)?;
        Ok(([a.value, b.value], [a.grad, b.grad], [a.hess, b.hess]))
    }
}
