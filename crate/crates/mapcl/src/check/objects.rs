use super::{CheckError, Result};
use crate::syntax::*;
use std::collections::BTreeSet;

/// Object attributes, in the order their variables are introduced.
const ATTRS: [&str; 8] = ["it", "pos", "sp", "wt", "ln", "weight", "cl", "id"];

fn name(y: &str, attr: &str) -> String {
    format!("{y}_{attr}")
}

fn unsupported(msg: impl Into<String>) -> CheckError {
    CheckError::Unsupported(msg.into())
}

struct Rewriter<'a> {
    objs: &'a [String],
    used: BTreeSet<&'static str>,
}

impl Rewriter<'_> {
    fn need_obj<'r>(&self, r: &'r Ref) -> Result<&'r str> {
        match r {
            Ref::Var(v) if self.objs.contains(v) => Ok(v),
            _ => Err(unsupported(format!("`{r}` is not an eliminated object variable"))),
        }
    }

    fn attr_name(at: NumAttr) -> &'static str {
        match at {
            NumAttr::Sp => "sp",
            NumAttr::Wt => "wt",
            NumAttr::Ln => "ln",
            NumAttr::Weight => "weight",
        }
    }

    fn arith(&mut self, a: &Arith) -> Result<Arith> {
        Ok(match a {
            Arith::Attr(r, at) => {
                let y = self.need_obj(r)?;
                let at = Self::attr_name(*at);
                self.used.insert(at);
                real_var(&name(y, at))
            }
            Arith::SafeDist(..) => return Err(unsupported(format!("`{a}` is not linear"))),
            Arith::Add(x, y) => add(self.arith(x)?, self.arith(y)?),
            Arith::Mul(x, y) => mul(self.arith(x)?, self.arith(y)?),
            _ => a.clone(),
        })
    }

    fn seg(&mut self, s: &SegTerm) -> Result<SegTerm> {
        Ok(match s {
            SegTerm::It(r) => {
                let y = self.need_obj(r)?;
                self.used.insert("it");
                seg_var(&name(y, "it"))
            }
            SegTerm::Ctor(c, args) => SegTerm::Ctor(*c, args.iter().map(|a| self.arith(a)).collect::<Result<_>>()?),
            SegTerm::Concat(a, b) => concat(self.seg(a)?, self.seg(b)?),
            SegTerm::Var(_) => s.clone(),
        })
    }

    /// Alternatives `(guard, term)` for a position term.
    fn pos(&mut self, p: &PosTerm) -> Result<Vec<(Formula, PosTerm)>> {
        Ok(match p {
            PosTerm::ObjPos(r) => {
                let y = self.need_obj(r)?;
                self.used.insert("pos");
                let on = real_var(&name(y, "on"));
                let at = Ref::var(&name(y, "at"));
                vec![
                    (Formula::Cmp(CmpOp::Eq, on.clone(), num(0.0)), PosTerm::Vertex(at.clone())),
                    (
                        Formula::Cmp(CmpOp::Eq, on, num(1.0)),
                        PosTerm::Fwd(at, seg_var(&name(y, "via")), real_var(&name(y, "off"))),
                    ),
                ]
            }
            PosTerm::Fwd(x, s, t) => vec![(Formula::True, PosTerm::Fwd(x.clone(), self.seg(s)?, self.arith(t)?))],
            PosTerm::Bwd(t, s, x) => vec![(Formula::True, PosTerm::Bwd(self.arith(t)?, self.seg(s)?, x.clone()))],
            PosTerm::Vertex(_) => vec![(Formula::True, p.clone())],
        })
    }

    fn guarded(&mut self, ps: &[&PosTerm], build: impl Fn(&[PosTerm]) -> Formula) -> Result<Formula> {
        let mut combos: Vec<(Vec<Formula>, Vec<PosTerm>)> = vec![(Vec::new(), Vec::new())];
        for p in ps {
            let alts = self.pos(p)?;
            combos = combos
                .into_iter()
                .flat_map(|(gs, ts)| {
                    alts.iter().map(move |(g, t)| {
                        let mut gs = gs.clone();
                        let mut ts = ts.clone();
                        if *g != Formula::True {
                            gs.push(g.clone());
                        }
                        ts.push(t.clone());
                        (gs, ts)
                    })
                })
                .collect();
        }
        Ok(or_all(combos.into_iter().map(|(mut gs, ts)| {
            gs.push(build(&ts));
            and_all(gs)
        })))
    }

    fn formula(&mut self, f: &Formula) -> Result<Formula> {
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, self.arith(a)?, self.arith(b)?),
            Formula::SegEq(a, b) => Formula::SegEq(self.seg(a)?, self.seg(b)?),
            Formula::LenEq(s, t) => Formula::LenEq(self.seg(s)?, self.arith(t)?),
            Formula::Edge(x, s, y) => Formula::Edge(x.clone(), self.seg(s)?, y.clone()),
            Formula::Road(x, s, y, l) => {
                let l = match l {
                    Some(l) => Some(self.arith(l)?),
                    None => None,
                };
                Formula::Road(x.clone(), self.seg(s)?, y.clone(), l)
            }
            Formula::PosEq(p, q) => self.guarded(&[p, q], |t| Formula::PosEq(t[0].clone(), t[1].clone()))?,
            Formula::Ride(p, s, q) => {
                let s = self.seg(s)?;
                self.guarded(&[p, q], |t| Formula::Ride(t[0].clone(), s.clone(), t[1].clone()))?
            }
            Formula::Dist(p, q, d) => {
                let d = self.arith(d)?;
                self.guarded(&[p, q], |t| Formula::Dist(t[0].clone(), t[1].clone(), d.clone()))?
            }
            Formula::ObjEq(a, b) => {
                let (a, b) = (self.need_obj(a)?, self.need_obj(b)?);
                Formula::Cmp(CmpOp::Eq, real_var(&name(a, "id")), real_var(&name(b, "id")))
            }
            Formula::Color(r, c) => {
                let y = self.need_obj(r)?;
                self.used.insert("cl");
                let code = if *c == Color::Green { 1.0 } else { 0.0 };
                Formula::Cmp(CmpOp::Eq, real_var(&name(y, "cl")), num(code))
            }
            Formula::Pred(p) => return Err(unsupported(format!("predicate `{}`", p.name()))),
            Formula::Not(a) => not(self.formula(a)?),
            Formula::Closure(a) => closure(self.formula(a)?),
            Formula::And(a, b) => and(self.formula(a)?, self.formula(b)?),
            Formula::Or(a, b) => or(self.formula(a)?, self.formula(b)?),
            Formula::Implies(a, b) => implies(self.formula(a)?, self.formula(b)?),
            Formula::Coalesce(a, b) => coalesce(self.formula(a)?, self.formula(b)?),
            Formula::Exists(Sort::Obj(_), y, _) => return Err(unsupported(format!("object quantifier on `{y}` below the prefix"))),
            Formula::Forall(Sort::Obj(_), y, _) => return Err(unsupported(format!("universal object quantifier on `{y}`"))),
            Formula::Exists(s, v, body) => exists(*s, v, self.formula(body)?),
            Formula::Forall(s, v, body) => forall(*s, v, self.formula(body)?),
        })
    }
}

/// Variables standing for one attribute of object `y`.
fn attr_vars(y: &str, attr: &str) -> Vec<(Sort, String)> {
    match attr {
        "it" => vec![(Sort::Seg, name(y, "it"))],
        "pos" => vec![
            (Sort::Real, name(y, "on")),
            (Sort::Vertex, name(y, "at")),
            (Sort::Seg, name(y, "via")),
            (Sort::Real, name(y, "off")),
        ],
        _ => vec![(Sort::Real, name(y, attr))],
    }
}

fn attr_eq(a: &str, b: &str, attr: &str) -> Formula {
    and_all(attr_vars(a, attr).into_iter().zip(attr_vars(b, attr)).map(|((s, x), (_, y))| match s {
        Sort::Seg => Formula::SegEq(seg_var(&x), seg_var(&y)),
        Sort::Vertex => Formula::PosEq(PosTerm::Vertex(Ref::var(&x)), PosTerm::Vertex(Ref::var(&y))),
        _ => Formula::Cmp(CmpOp::Eq, real_var(&x), real_var(&y)),
    }))
}

/// Replaces the leading existential object quantifiers of `f` by variables
/// for each used attribute, with constraints forcing objects of equal
/// identifier to agree on every attribute.
pub fn eliminate_objects(f: &Formula) -> Result<Formula> {
    let mut objs = Vec::new();
    let mut body = f;
    while let Formula::Exists(Sort::Obj(_), y, inner) = body {
        objs.push(y.clone());
        body = inner;
    }
    let mut rw = Rewriter { objs: &objs, used: BTreeSet::new() };
    let body = rw.formula(body)?;
    let used: Vec<&str> = ATTRS.iter().copied().filter(|a| *a != "id" && rw.used.contains(a)).collect();
    let mut side = Vec::new();
    for y in &objs {
        if used.contains(&"pos") {
            let on = real_var(&name(y, "on"));
            side.push(or(Formula::Cmp(CmpOp::Eq, on.clone(), num(0.0)), Formula::Cmp(CmpOp::Eq, on, num(1.0))));
        }
        if used.contains(&"cl") {
            let cl = real_var(&name(y, "cl"));
            side.push(or(Formula::Cmp(CmpOp::Eq, cl.clone(), num(0.0)), Formula::Cmp(CmpOp::Eq, cl, num(1.0))));
        }
    }
    for (i, a) in objs.iter().enumerate() {
        for b in &objs[i + 1..] {
            for attr in &used {
                let same = Formula::Cmp(CmpOp::Eq, real_var(&name(a, "id")), real_var(&name(b, "id")));
                side.push(implies(same, attr_eq(a, b, attr)));
            }
        }
    }
    side.push(body);
    let mut out = and_all(side);
    for y in objs.iter().rev() {
        for attr in used.iter().rev() {
            for (s, v) in attr_vars(y, attr).into_iter().rev() {
                out = exists(s, &v, out);
            }
        }
        out = exists(Sort::Real, &name(y, "id"), out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_speed_bound() {
        let f = parse("exists vehicle y. y.sp <= 5").unwrap();
        let expected = exists(Sort::Real, "y_id", exists(Sort::Real, "y_sp", Formula::Cmp(CmpOp::Le, real_var("y_sp"), num(5.0))));
        assert_eq!(eliminate_objects(&f).unwrap(), expected);
    }

    #[test]
    fn one_consistency_implication_per_attribute() {
        let f = parse("exists vehicle a. exists vehicle b. a.sp <= b.sp && a.ln = b.ln").unwrap();
        let out = eliminate_objects(&f).unwrap().to_string();
        assert_eq!(out.matches("=>").count(), 2, "{out}");
    }

    #[test]
    fn universal_objects_are_rejected() {
        let f = parse("forall vehicle y. y.sp <= 5").unwrap();
        assert!(matches!(eliminate_objects(&f), Err(CheckError::Unsupported(_))));
    }
}
