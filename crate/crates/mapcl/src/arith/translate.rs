use super::{q, Linear, Lra, Q};
use crate::syntax::{Arith, Ctor, Formula, SegTerm, Sort};
use num_traits::Zero;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("product of two non-constant terms: {0}")]
    Nonlinear(String),
    #[error("not expressible in linear arithmetic: {0}")]
    Unsupported(String),
}

/// Name of the length variable standing for segment variable `z`.
pub fn seg_length_var(z: &str) -> String {
    format!("k_{z}")
}

struct Tr {
    used: BTreeSet<String>,
    /// Current length variable of each segment variable in scope.
    seg: HashMap<String, Vec<String>>,
    /// Current name of each real variable in scope.
    real: HashMap<String, Vec<String>>,
}

/// A length under side conditions, one per case.
type Cases = Vec<(Vec<Lra>, Linear)>;

/// Translates a formula over interval segments and reals into linear arithmetic.
/// Segments become their lengths; free segment variables are constrained non-negative.
pub fn tr1(f: &Formula) -> Result<Lra, TranslateError> {
    let mut used = BTreeSet::new();
    collect_names(f, &mut used);
    let mut tr = Tr { used, seg: HashMap::new(), real: HashMap::new() };
    let mut frees = Vec::new();
    for v in f.free_vars() {
        if seg_free(f, &v) {
            let k = tr.fresh(&seg_length_var(&v));
            tr.seg.insert(v.clone(), vec![k.clone()]);
            frees.push(Lra::ge(&Linear::var(&k), &Linear::default()));
        }
    }
    let body = tr.formula(f)?;
    frees.push(body);
    Ok(Lra::and(frees))
}

fn collect_names(f: &Formula, out: &mut BTreeSet<String>) {
    out.extend(f.free_vars());
    match f {
        Formula::Exists(_, v, b) | Formula::Forall(_, v, b) => {
            out.insert(v.clone());
            collect_names(b, out);
        }
        Formula::Not(a) | Formula::Closure(a) => collect_names(a, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Coalesce(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        _ => {}
    }
}

/// Whether free variable `v` occurs in segment position.
fn seg_free(f: &Formula, v: &str) -> bool {
    match f {
        Formula::SegEq(a, b) => seg_mentions(a, v) || seg_mentions(b, v),
        Formula::LenEq(s, _) => seg_mentions(s, v),
        Formula::Not(a) => seg_free(a, v),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => seg_free(a, v) || seg_free(b, v),
        Formula::Exists(_, w, b) | Formula::Forall(_, w, b) => w != v && seg_free(b, v),
        _ => false,
    }
}

fn seg_mentions(s: &SegTerm, v: &str) -> bool {
    match s {
        SegTerm::Var(w) => w == v,
        SegTerm::Concat(a, b) => seg_mentions(a, v) || seg_mentions(b, v),
        _ => false,
    }
}

impl Tr {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        while self.used.contains(&name) {
            name.push('\'');
        }
        self.used.insert(name.clone());
        name
    }

    fn arith(&self, a: &Arith) -> Result<Linear, TranslateError> {
        Ok(match a {
            Arith::Const(c) => Linear::constant(q(*c)),
            Arith::Var(v) => Linear::var(self.real.get(v).and_then(|s| s.last()).unwrap_or(v)),
            Arith::Add(x, y) => self.arith(x)?.add(&self.arith(y)?),
            Arith::Mul(x, y) => {
                let (x, y) = (self.arith(x)?, self.arith(y)?);
                if x.is_constant() {
                    y.scale(&x.constant)
                } else if y.is_constant() {
                    x.scale(&y.constant)
                } else {
                    return Err(TranslateError::Nonlinear(a.to_string()));
                }
            }
            Arith::Attr(..) | Arith::SafeDist(..) => return Err(TranslateError::Unsupported(a.to_string())),
        })
    }

    fn length(&self, s: &SegTerm) -> Result<Cases, TranslateError> {
        let zero = Linear::default;
        Ok(match s {
            SegTerm::Var(z) => {
                let k = self.seg.get(z).and_then(|s| s.last()).cloned().unwrap_or_else(|| seg_length_var(z));
                vec![(vec![], Linear::var(&k))]
            }
            SegTerm::Concat(a, b) => {
                let (la, lb) = (self.length(a)?, self.length(b)?);
                let mut out = Vec::new();
                for (ca, xa) in &la {
                    for (cb, xb) in &lb {
                        let mut conds = ca.clone();
                        conds.extend(cb.iter().cloned());
                        out.push((conds, xa.add(xb)));
                    }
                }
                out
            }
            SegTerm::Ctor(Ctor::Interval, args) => {
                let t = self.arith(&args[0])?;
                vec![(vec![Lra::ge(&t, &zero())], t)]
            }
            SegTerm::Ctor(Ctor::Line, args) => {
                let a = self.arith(&args[0])?;
                self.arith(&args[1])?;
                vec![(vec![Lra::gt(&a, &zero())], a)]
            }
            SegTerm::Ctor(Ctor::Arc, args) => {
                let r = self.arith(&args[0])?;
                self.arith(&args[1])?;
                let theta = self.arith(&args[2])?;
                let pos = Lra::gt(&r, &zero());
                if theta.is_constant() {
                    let abs = if theta.constant < Q::zero() { -theta.constant.clone() } else { theta.constant.clone() };
                    vec![(vec![pos, Lra::ne(&theta, &zero())], r.scale(&abs))]
                } else if r.is_constant() {
                    vec![
                        (vec![pos.clone(), Lra::gt(&theta, &zero())], theta.scale(&r.constant)),
                        (vec![pos, Lra::lt(&theta, &zero())], theta.scale(&-r.constant.clone())),
                    ]
                } else {
                    return Err(TranslateError::Nonlinear(s.to_string()));
                }
            }
            SegTerm::It(_) => return Err(TranslateError::Unsupported(s.to_string())),
        })
    }

    fn equal_lengths(&self, a: &Cases, b: &Cases) -> Lra {
        let mut out = Vec::new();
        for (ca, xa) in a {
            for (cb, xb) in b {
                let mut conj = ca.clone();
                conj.extend(cb.iter().cloned());
                conj.push(Lra::eq(xa, xb));
                out.push(Lra::and(conj));
            }
        }
        Lra::or(out)
    }

    fn formula(&mut self, f: &Formula) -> Result<Lra, TranslateError> {
        Ok(match f {
            Formula::True => Lra::True,
            Formula::False => Lra::False,
            Formula::Cmp(op, a, b) => {
                let (a, b) = (self.arith(a)?, self.arith(b)?);
                use crate::syntax::CmpOp::*;
                match op {
                    Le => Lra::le(&a, &b),
                    Lt => Lra::lt(&a, &b),
                    Eq => Lra::eq(&a, &b),
                    Ge => Lra::ge(&a, &b),
                    Gt => Lra::gt(&a, &b),
                }
            }
            Formula::SegEq(a, b) => {
                let (a, b) = (self.length(a)?, self.length(b)?);
                self.equal_lengths(&a, &b)
            }
            Formula::LenEq(s, t) => {
                let s = self.length(s)?;
                let t = vec![(vec![], self.arith(t)?)];
                self.equal_lengths(&s, &t)
            }
            Formula::Not(a) => Lra::not(self.formula(a)?),
            Formula::And(a, b) => Lra::and(vec![self.formula(a)?, self.formula(b)?]),
            Formula::Or(a, b) => Lra::or(vec![self.formula(a)?, self.formula(b)?]),
            Formula::Implies(a, b) => Lra::or(vec![Lra::not(self.formula(a)?), self.formula(b)?]),
            Formula::Exists(sort @ (Sort::Real | Sort::Seg), v, b) | Formula::Forall(sort @ (Sort::Real | Sort::Seg), v, b) => {
                let univ = matches!(f, Formula::Forall(..));
                let (scope, name) = if *sort == Sort::Seg {
                    let name = self.fresh(&seg_length_var(v));
                    (&mut self.seg, name)
                } else {
                    (&mut self.real, v.clone())
                };
                scope.entry(v.clone()).or_default().push(name.clone());
                let body = self.formula(b);
                let scope = if *sort == Sort::Seg { &mut self.seg } else { &mut self.real };
                scope.get_mut(v).unwrap().pop();
                let body = body?;
                let k = Linear::var(&name);
                match (sort, univ) {
                    (Sort::Seg, false) => Lra::exists(&name, Lra::and(vec![Lra::ge(&k, &Linear::default()), body])),
                    (Sort::Seg, true) => Lra::forall(&name, Lra::or(vec![Lra::lt(&k, &Linear::default()), body])),
                    (_, false) => Lra::exists(&name, body),
                    (_, true) => Lra::forall(&name, body),
                }
            }
            _ => return Err(TranslateError::Unsupported(f.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve, SatResult};
    use super::*;
    use crate::syntax::parse;

    fn sat(src: &str) -> SatResult {
        solve(&tr1(&parse(src).unwrap()).unwrap())
    }

    #[test]
    fn concatenation_adds_lengths() {
        assert!(sat("exists seg z. exists seg w. z ^ w = interval(5) && len(z) = 2").is_sat());
        assert_eq!(sat("exists seg z. exists seg w. z ^ w = interval(5) && len(z) = 6"), SatResult::Unsat);
    }

    #[test]
    fn segment_lengths_are_non_negative() {
        assert_eq!(sat("exists seg z. len(z) = -1"), SatResult::Unsat);
        assert!(sat("forall seg z. exists real t. len(z) = t && t >= 0").is_sat());
        assert_eq!(sat("exists real t. interval(t) = interval(t) && t < 0"), SatResult::Unsat);
    }

    #[test]
    fn free_segment_variables_are_reported_by_length() {
        let f = crate::syntax::parse_with("len(z) = 4", &[("z", crate::syntax::Sort::Seg)]).unwrap();
        let SatResult::Sat { witness } = solve(&tr1(&f).unwrap()) else { panic!() };
        assert_eq!(witness[&seg_length_var("z")], q(4.0));
    }

    #[test]
    fn products_of_variables_are_rejected() {
        let err = tr1(&parse("exists real a. exists real b. a * b = 1").unwrap()).unwrap_err();
        assert!(matches!(err, TranslateError::Nonlinear(_)));
    }

    #[test]
    fn names_do_not_capture() {
        let f = parse("exists real k_z. exists seg z. len(z) = 1 && k_z = 2").unwrap();
        assert!(solve(&tr1(&f).unwrap()).is_sat());
    }
}
