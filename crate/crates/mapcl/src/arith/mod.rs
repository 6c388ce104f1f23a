//! Linear real arithmetic over exact rationals: formulas, a Fourier–Motzkin
//! decision procedure with witnesses, the translation from interval segment
//! constraints, and SMT-LIB export.

mod fm;
mod smtlib;
mod translate;

pub use fm::{solve, solve_with_cap, DEFAULT_ATOM_CAP};
pub use smtlib::export_smtlib;
pub use translate::{seg_length_var, tr1, TranslateError};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Q = BigRational;

/// Converts a finite float to the rational it denotes exactly.
pub fn q(x: f64) -> Q {
    BigRational::from_float(x).expect("finite number")
}

pub fn q_int(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `Σ cᵢ·xᵢ + c₀`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Linear {
    pub coeffs: BTreeMap<String, Q>,
    pub constant: Q,
}

impl Linear {
    pub fn var(name: &str) -> Linear {
        Linear { coeffs: BTreeMap::from([(name.to_string(), Q::one())]), constant: Q::zero() }
    }

    pub fn constant(c: Q) -> Linear {
        Linear { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, v: &str) -> Q {
        self.coeffs.get(v).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, other: &Linear) -> Linear {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert_with(Q::zero);
            *e += c;
            if e.is_zero() {
                out.coeffs.remove(v);
            }
        }
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, k: &Q) -> Linear {
        if k.is_zero() {
            return Linear::default();
        }
        Linear {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn sub(&self, other: &Linear) -> Linear {
        self.add(&other.scale(&-Q::one()))
    }

    /// Replaces `v` by `by`.
    pub fn substitute(&self, v: &str, by: &Linear) -> Linear {
        let c = self.coeff(v);
        if c.is_zero() {
            return self.clone();
        }
        let mut rest = self.clone();
        rest.coeffs.remove(v);
        rest.add(&by.scale(&c))
    }

    pub fn eval(&self, assignment: &BTreeMap<String, Q>) -> Q {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * assignment.get(v).cloned().unwrap_or_else(Q::zero);
        }
        acc
    }

    /// Scales so that the first coefficient has absolute value one.
    fn normalized(&self) -> Linear {
        match self.coeffs.values().next() {
            Some(c) => self.scale(&(Q::one() / c.abs())),
            None => self.clone(),
        }
    }
}

/// Relation of a linear term to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Lt,
    Eq,
    Ne,
}

impl Rel {
    pub fn holds(self, x: &Q) -> bool {
        match self {
            Rel::Le => !x.is_positive(),
            Rel::Lt => x.is_negative(),
            Rel::Eq => x.is_zero(),
            Rel::Ne => !x.is_zero(),
        }
    }
}

/// `lin rel 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub lin: Linear,
    pub rel: Rel,
}

impl Constraint {
    pub fn holds(&self, assignment: &BTreeMap<String, Q>) -> bool {
        self.rel.holds(&self.lin.eval(assignment))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lra {
    True,
    False,
    Atom(Constraint),
    Not(Box<Lra>),
    And(Vec<Lra>),
    Or(Vec<Lra>),
    Exists(String, Box<Lra>),
    Forall(String, Box<Lra>),
}

fn atom(lin: Linear, rel: Rel) -> Lra {
    if lin.is_constant() {
        return if rel.holds(&lin.constant) { Lra::True } else { Lra::False };
    }
    Lra::Atom(Constraint { lin, rel })
}

impl Lra {
    pub fn le(a: &Linear, b: &Linear) -> Lra {
        atom(a.sub(b), Rel::Le)
    }

    pub fn lt(a: &Linear, b: &Linear) -> Lra {
        atom(a.sub(b), Rel::Lt)
    }

    pub fn ge(a: &Linear, b: &Linear) -> Lra {
        atom(b.sub(a), Rel::Le)
    }

    pub fn gt(a: &Linear, b: &Linear) -> Lra {
        atom(b.sub(a), Rel::Lt)
    }

    pub fn eq(a: &Linear, b: &Linear) -> Lra {
        atom(a.sub(b), Rel::Eq)
    }

    pub fn ne(a: &Linear, b: &Linear) -> Lra {
        atom(a.sub(b), Rel::Ne)
    }

    pub fn and(items: Vec<Lra>) -> Lra {
        let mut out = Vec::new();
        for i in items {
            match i {
                Lra::True => {}
                Lra::False => return Lra::False,
                Lra::And(xs) => out.extend(xs),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Lra::True,
            1 => out.pop().unwrap(),
            _ => Lra::And(out),
        }
    }

    pub fn or(items: Vec<Lra>) -> Lra {
        let mut out = Vec::new();
        for i in items {
            match i {
                Lra::False => {}
                Lra::True => return Lra::True,
                Lra::Or(xs) => out.extend(xs),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Lra::False,
            1 => out.pop().unwrap(),
            _ => Lra::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Lra) -> Lra {
        match a {
            Lra::True => Lra::False,
            Lra::False => Lra::True,
            Lra::Not(x) => *x,
            x => Lra::Not(Box::new(x)),
        }
    }

    pub fn exists(v: &str, body: Lra) -> Lra {
        match body {
            Lra::True | Lra::False => body,
            b => Lra::Exists(v.to_string(), Box::new(b)),
        }
    }

    pub fn forall(v: &str, body: Lra) -> Lra {
        match body {
            Lra::True | Lra::False => body,
            b => Lra::Forall(v.to_string(), Box::new(b)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Lra::True | Lra::False => {}
            Lra::Atom(c) => out.extend(c.lin.coeffs.keys().cloned()),
            Lra::Not(a) => a.collect_free(out),
            Lra::And(xs) | Lra::Or(xs) => xs.iter().for_each(|x| x.collect_free(out)),
            Lra::Exists(v, b) | Lra::Forall(v, b) => {
                let mut inner = BTreeSet::new();
                b.collect_free(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    /// All variable names, bound or free.
    pub fn all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Lra::True | Lra::False => {}
            Lra::Atom(c) => out.extend(c.lin.coeffs.keys().cloned()),
            Lra::Not(a) => a.all_vars(out),
            Lra::And(xs) | Lra::Or(xs) => xs.iter().for_each(|x| x.all_vars(out)),
            Lra::Exists(v, b) | Lra::Forall(v, b) => {
                out.insert(v.clone());
                b.all_vars(out);
            }
        }
    }

    /// Truth under an assignment of every free variable, for quantifier-free formulas.
    pub fn eval_qf(&self, assignment: &BTreeMap<String, Q>) -> Option<bool> {
        Some(match self {
            Lra::True => true,
            Lra::False => false,
            Lra::Atom(c) => c.holds(assignment),
            Lra::Not(a) => !a.eval_qf(assignment)?,
            Lra::And(xs) => {
                for x in xs {
                    if !x.eval_qf(assignment)? {
                        return Some(false);
                    }
                }
                true
            }
            Lra::Or(xs) => {
                for x in xs {
                    if x.eval_qf(assignment)? {
                        return Some(true);
                    }
                }
                false
            }
            Lra::Exists(..) | Lra::Forall(..) => return None,
        })
    }

    pub fn size(&self) -> usize {
        match self {
            Lra::True | Lra::False | Lra::Atom(_) => 1,
            Lra::Not(a) | Lra::Exists(_, a) | Lra::Forall(_, a) => 1 + a.size(),
            Lra::And(xs) | Lra::Or(xs) => 1 + xs.iter().map(Lra::size).sum::<usize>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SatResult {
    Sat { witness: BTreeMap<String, Q> },
    Unsat,
    Unknown { reason: String },
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat { .. })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            SatResult::Sat { witness } => serde_json::json!({
                "result": "sat",
                "witness": witness
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::json!({"value": to_f64(v), "exact": v.to_string()})))
                    .collect::<serde_json::Map<_, _>>(),
            }),
            SatResult::Unsat => serde_json::json!({"result": "unsat"}),
            SatResult::Unknown { reason } => serde_json::json!({"result": "unknown", "reason": reason}),
        }
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "{v}")?;
            } else {
                write!(f, "{c}*{v}")?;
            }
        }
        if first || !self.constant.is_zero() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{}", self.constant)?;
        }
        Ok(())
    }
}

impl fmt::Display for Lra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lra::True => write!(f, "true"),
            Lra::False => write!(f, "false"),
            Lra::Atom(c) => {
                let r = match c.rel {
                    Rel::Le => "<=",
                    Rel::Lt => "<",
                    Rel::Eq => "=",
                    Rel::Ne => "!=",
                };
                write!(f, "{} {r} 0", c.lin)
            }
            Lra::Not(a) => write!(f, "!({a})"),
            Lra::And(xs) | Lra::Or(xs) => {
                let op = if matches!(self, Lra::And(_)) { " && " } else { " || " };
                let parts: Vec<String> = xs.iter().map(|x| format!("({x})")).collect();
                write!(f, "{}", parts.join(op))
            }
            Lra::Exists(v, b) => write!(f, "exists {v}. {b}"),
            Lra::Forall(v, b) => write!(f, "forall {v}. {b}"),
        }
    }
}
