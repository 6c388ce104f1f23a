use super::{CheckError, Checker, Env, Result, Value};
use crate::arith::{self, SatResult};
use crate::graph::MetricGraph;
use crate::sat::{Mask, SymEdge, SymGraph, Translator};
use crate::segment::{Prim, SegKind, Segment};
use crate::syntax::*;
use std::collections::{BTreeSet, HashMap};

/// A segment term denoting the given curve or interval.
fn seg_term(s: &Segment) -> Result<SegTerm> {
    match s {
        Segment::Interval { len } => Ok(interval(num(*len))),
        Segment::Curve(c) => {
            let pieces = c.prims.iter().map(|p| match *p {
                Prim::Line(a, phi) => line(num(a), num(phi)),
                Prim::Arc(r, phi, th) => arc(num(r), num(phi), num(th)),
            });
            pieces.reduce(concat).ok_or_else(|| CheckError::Unsupported("the empty curve has no term".into()))
        }
        Segment::Region(_) => Err(CheckError::Unsupported("region segments have no term".into())),
    }
}

#[derive(Default)]
struct Subst {
    reals: HashMap<String, f64>,
    segs: HashMap<String, SegTerm>,
    bound: BTreeSet<String>,
}

impl Subst {
    fn live(&self, v: &str) -> bool {
        !self.bound.contains(v)
    }

    fn arith(&self, a: &Arith) -> Arith {
        match a {
            Arith::Var(v) if self.live(v) => self.reals.get(v).map_or_else(|| a.clone(), |x| num(*x)),
            Arith::Add(x, y) => add(self.arith(x), self.arith(y)),
            Arith::Mul(x, y) => mul(self.arith(x), self.arith(y)),
            _ => a.clone(),
        }
    }

    fn seg(&self, s: &SegTerm) -> SegTerm {
        match s {
            SegTerm::Var(v) if self.live(v) => self.segs.get(v).cloned().unwrap_or_else(|| s.clone()),
            SegTerm::Ctor(c, args) => SegTerm::Ctor(*c, args.iter().map(|a| self.arith(a)).collect()),
            SegTerm::Concat(a, b) => concat(self.seg(a), self.seg(b)),
            _ => s.clone(),
        }
    }

    fn pos(&self, p: &PosTerm) -> PosTerm {
        match p {
            PosTerm::Fwd(x, s, t) => PosTerm::Fwd(x.clone(), self.seg(s), self.arith(t)),
            PosTerm::Bwd(t, s, x) => PosTerm::Bwd(self.arith(t), self.seg(s), x.clone()),
            _ => p.clone(),
        }
    }

    fn formula(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::True | Formula::False | Formula::ObjEq(..) | Formula::Color(..) | Formula::Pred(_) => f.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, self.arith(a), self.arith(b)),
            Formula::SegEq(a, b) => Formula::SegEq(self.seg(a), self.seg(b)),
            Formula::LenEq(s, t) => Formula::LenEq(self.seg(s), self.arith(t)),
            Formula::Edge(x, s, y) => Formula::Edge(x.clone(), self.seg(s), y.clone()),
            Formula::Road(x, s, y, l) => Formula::Road(x.clone(), self.seg(s), y.clone(), l.as_ref().map(|l| self.arith(l))),
            Formula::PosEq(p, q) => Formula::PosEq(self.pos(p), self.pos(q)),
            Formula::Ride(p, s, q) => Formula::Ride(self.pos(p), self.seg(s), self.pos(q)),
            Formula::Dist(p, q, t) => Formula::Dist(self.pos(p), self.pos(q), self.arith(t)),
            Formula::Not(a) => not(self.formula(a)),
            Formula::Closure(a) => closure(self.formula(a)),
            Formula::And(a, b) => and(self.formula(a), self.formula(b)),
            Formula::Or(a, b) => or(self.formula(a), self.formula(b)),
            Formula::Implies(a, b) => implies(self.formula(a), self.formula(b)),
            Formula::Coalesce(a, b) => coalesce(self.formula(a), self.formula(b)),
            Formula::Exists(s, v, body) | Formula::Forall(s, v, body) => {
                let fresh = self.bound.insert(v.clone());
                let body = self.formula(body);
                if fresh {
                    self.bound.remove(v);
                }
                match f {
                    Formula::Exists(..) => exists(*s, v, body),
                    _ => forall(*s, v, body),
                }
            }
        }
    }
}

/// Replaces free real and segment variables by the given values.
pub fn substitute(f: &Formula, bindings: &[(String, Value)]) -> Result<Formula> {
    let mut s = Subst::default();
    for (k, v) in bindings {
        match v {
            Value::Real(x) => {
                s.reals.insert(k.clone(), *x);
            }
            Value::Seg(x) => {
                s.segs.insert(k.clone(), seg_term(x)?);
            }
            _ => {}
        }
    }
    Ok(s.formula(f))
}

fn sym_graph(g: &MetricGraph) -> Result<SymGraph> {
    let mut edges = Vec::new();
    for e in g.edges() {
        edges.push(SymEdge { src: e.src, dst: e.dst, label: seg_term(&e.seg)?, len: num(e.seg.len()) });
    }
    Ok(SymGraph { n: g.vertex_count(), edges })
}

fn residue_in(g: &MetricGraph, m: Mask, bindings: &[(String, Value)], f: &Formula) -> Result<Formula> {
    let mut mu = HashMap::new();
    for (k, v) in bindings {
        match v {
            Value::Vertex(x) => {
                mu.insert(k.clone(), *x);
            }
            Value::Obj(_) => return Err(CheckError::Unsupported(format!("object variable `{k}` in a residue"))),
            _ => {}
        }
    }
    let consts: HashMap<String, usize> = g.names().iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let sg = sym_graph(g)?;
    let mut tr = Translator::new(&sg).map_err(|e| CheckError::Unsupported(e.to_string()))?.with_constants(consts);
    tr.tr(m, &mu, &substitute(f, bindings)?).map_err(|e| CheckError::Unsupported(e.to_string()))
}

/// The segment-logic formula left after evaluating the graph parts of `f`
/// on `g`, with free variables bound by `bindings`.
pub fn residue(g: &MetricGraph, bindings: &[(String, Value)], f: &Formula) -> Result<Formula> {
    if g.edge_count() > 64 {
        return Err(CheckError::TooManyEdges(g.edge_count()));
    }
    let m = if g.edge_count() == 64 { u64::MAX } else { (1u64 << g.edge_count()) - 1 };
    residue_in(g, m, bindings, f)
}

/// Decides the closed formula `f` on the subgraph `m` with the solver.
pub(super) fn decide(c: &Checker, m: Mask, env: &Env, f: &Formula) -> Result<bool> {
    if !matches!(c.g.kind(), Some(SegKind::Interval) | None) {
        return Err(CheckError::Unsupported("quantified segments over curves".into()));
    }
    let bindings: Vec<(String, Value)> = env.iter().filter_map(|(k, v)| v.clone().map(|v| (k.clone(), v))).collect();
    let res = residue_in(c.g, m, &bindings, f)?;
    let lra = arith::tr1(&res).map_err(|e| CheckError::Unsupported(e.to_string()))?;
    match arith::solve_with_cap(&lra, c.opts.atom_cap) {
        SatResult::Sat { .. } => Ok(true),
        SatResult::Unsat => Ok(false),
        SatResult::Unknown { reason } => Err(CheckError::Undecided(reason)),
    }
}
