//! Finite candidate sets for quantified variables.
//!
//! `Strong(S)`: the formula is false for every value outside `S`.
//! `Weak(S, fresh)`: if the formula holds for some value, it holds for one in
//! `S`, or for any value accepted by no atom when `fresh` is set.

use super::eval::{in_mask, is_open, lookup};
use super::{Checker, Env, Result, Value};
use crate::graph::GraphPosition;
use crate::sat::Mask;
use crate::segment::{norm_angle, Prim, Segment, SegKind};
use crate::syntax::*;
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub(super) enum Cands {
    /// The formula does not depend on the variable.
    Indep,
    Strong(Vec<Value>),
    Weak(Vec<Value>, bool),
    Fail(String),
}

pub(super) fn merge(mut a: Vec<Value>, b: Vec<Value>) -> Vec<Value> {
    for x in b {
        if !a.iter().any(|y| y.same(&x)) {
            a.push(x);
        }
    }
    a
}

fn and_c(a: Cands, b: Cands) -> Cands {
    use Cands::*;
    match (a, b) {
        (Indep, x) | (x, Indep) => x,
        (Strong(a), Strong(b)) => Strong(if a.len() <= b.len() { a } else { b }),
        (Strong(a), _) | (_, Strong(a)) => Strong(a),
        (Fail(w), _) | (_, Fail(w)) => Fail(w),
        (Weak(..), Weak(..)) => Fail("conjunction of unbounded parts".into()),
    }
}

fn or_c(a: Cands, b: Cands) -> Cands {
    use Cands::*;
    match (a, b) {
        (Fail(w), _) | (_, Fail(w)) => Fail(w),
        (Indep, Indep) => Indep,
        (Strong(a), Strong(b)) => Strong(merge(a, b)),
        (Indep, Strong(a)) | (Strong(a), Indep) => Weak(a, true),
        (Indep, Weak(a, _)) | (Weak(a, _), Indep) => Weak(a, true),
        (Weak(a, f), Strong(b)) | (Strong(b), Weak(a, f)) => Weak(merge(a, b), f),
        (Weak(a, f), Weak(b, g)) => Weak(merge(a, b), f || g),
    }
}

fn coalesce_c(a: Cands, b: Cands) -> Cands {
    use Cands::*;
    match (a, b) {
        (Indep, Indep) => Indep,
        (Strong(a), Strong(b)) => Strong(if a.len() <= b.len() { a } else { b }),
        (Strong(a), _) | (_, Strong(a)) => Strong(a),
        (Fail(w), _) | (_, Fail(w)) => Fail(w),
        _ => Fail("coalescing of unbounded parts".into()),
    }
}

fn forall_c(a: Cands, nonempty: bool) -> Cands {
    match a {
        Cands::Strong(s) if nonempty => Cands::Strong(s),
        Cands::Indep => Cands::Indep,
        Cands::Fail(w) => Cands::Fail(w),
        _ => Cands::Fail("universal over an unbounded part".into()),
    }
}

fn pos_vars(p: &PosTerm) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    p.vars(&mut s);
    s
}

fn seg_vars(t: &SegTerm) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    t.vars(&mut s);
    s
}

fn arith_vars(a: &Arith) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    a.vars(&mut s);
    s
}

fn reals(xs: impl IntoIterator<Item = f64>) -> Vec<Value> {
    merge(Vec::new(), xs.into_iter().map(Value::Real).collect())
}

impl Checker<'_> {
    fn nonempty(&self, sort: Sort) -> bool {
        match sort {
            Sort::Vertex => self.g.vertex_count() > 0,
            Sort::Obj(kind) => self.state.is_some_and(|s| s.objects.iter().any(|(_, o)| kind.is_none_or(|k| o.kind() == k))),
            Sort::Real | Sort::Seg => true,
        }
    }

    pub(super) fn cands(&self, m: Mask, env: &Env, sort: Sort, v: &str, f: &Formula, pos: bool) -> Result<Cands> {
        Ok(match f {
            Formula::True | Formula::False => Cands::Indep,
            Formula::Not(a) => self.cands(m, env, sort, v, a, !pos)?,
            Formula::And(a, b) | Formula::Or(a, b) => {
                let ca = self.cands(m, env, sort, v, a, pos)?;
                let cb = self.cands(m, env, sort, v, b, pos)?;
                if matches!(f, Formula::And(..)) == pos {
                    and_c(ca, cb)
                } else {
                    or_c(ca, cb)
                }
            }
            Formula::Implies(a, b) => {
                let ca = self.cands(m, env, sort, v, a, !pos)?;
                let cb = self.cands(m, env, sort, v, b, pos)?;
                if pos {
                    or_c(ca, cb)
                } else {
                    and_c(ca, cb)
                }
            }
            Formula::Coalesce(a, b) if pos => {
                coalesce_c(self.cands(m, env, sort, v, a, true)?, self.cands(m, env, sort, v, b, true)?)
            }
            Formula::Closure(a) if pos => match self.cands(m, env, sort, v, a, true)? {
                Cands::Weak(..) => Cands::Fail("closure of an unbounded part".into()),
                c => c,
            },
            Formula::Coalesce(..) | Formula::Closure(..) => {
                if f.free_vars().contains(v) {
                    Cands::Fail(format!("negated `{f}`"))
                } else {
                    Cands::Indep
                }
            }
            Formula::Exists(s, w, body) | Formula::Forall(s, w, body) => {
                if w == v {
                    return Ok(Cands::Indep);
                }
                let mut inner = env.clone();
                inner.push((w.clone(), None));
                let c = self.cands(m, &inner, sort, v, body, pos)?;
                if matches!(f, Formula::Exists(..)) == pos {
                    c
                } else {
                    forall_c(c, self.nonempty(*s))
                }
            }
            atom => {
                if !atom.free_vars().contains(v) {
                    Cands::Indep
                } else {
                    match self.atom_set(m, env, sort, v, atom)? {
                        Some(s) if pos => Cands::Strong(s),
                        Some(_) => Cands::Weak(Vec::new(), true),
                        None => Cands::Fail(atom.to_string()),
                    }
                }
            }
        })
    }

    /// Adds the candidate set of every atom of `f` mentioning `v` to `out`;
    /// returns the first atom without one.
    pub(super) fn collect_atom_sets(&self, m: Mask, env: &Env, sort: Sort, v: &str, f: &Formula, out: &mut Vec<Value>) -> Result<Option<String>> {
        match f {
            Formula::True | Formula::False => Ok(None),
            Formula::Not(a) | Formula::Closure(a) => self.collect_atom_sets(m, env, sort, v, a, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Coalesce(a, b) => {
                if let Some(w) = self.collect_atom_sets(m, env, sort, v, a, out)? {
                    return Ok(Some(w));
                }
                self.collect_atom_sets(m, env, sort, v, b, out)
            }
            Formula::Exists(_, w, body) | Formula::Forall(_, w, body) => {
                if w == v {
                    return Ok(None);
                }
                let mut inner = env.clone();
                inner.push((w.clone(), None));
                self.collect_atom_sets(m, &inner, sort, v, body, out)
            }
            atom => {
                if !atom.free_vars().contains(v) {
                    return Ok(None);
                }
                match self.atom_set(m, env, sort, v, atom)? {
                    Some(s) => {
                        *out = merge(std::mem::take(out), s);
                        Ok(None)
                    }
                    None => Ok(Some(atom.to_string())),
                }
            }
        }
    }

    /// `(c, k)` with `a = c·v + k`, when `a` is linear in `v` and otherwise known.
    fn linear_in(&self, env: &Env, a: &Arith, v: &str) -> Option<(f64, f64)> {
        match a {
            Arith::Const(c) => Some((0.0, *c)),
            Arith::Var(w) if w == v => Some((1.0, 0.0)),
            Arith::Var(w) => match lookup(env, w) {
                Ok(Some(Value::Real(x))) => Some((0.0, *x)),
                _ => None,
            },
            Arith::Add(x, y) => {
                let (a, b) = (self.linear_in(env, x, v)?, self.linear_in(env, y, v)?);
                Some((a.0 + b.0, a.1 + b.1))
            }
            Arith::Mul(x, y) => {
                let (a, b) = (self.linear_in(env, x, v)?, self.linear_in(env, y, v)?);
                if a.0 == 0.0 {
                    Some((a.1 * b.0, a.1 * b.1))
                } else if b.0 == 0.0 {
                    Some((b.1 * a.0, b.1 * a.1))
                } else {
                    None
                }
            }
            Arith::Attr(..) | Arith::SafeDist(..) => {
                if is_open(env, &arith_vars(a), v) {
                    return None;
                }
                self.arith(env, a).ok().flatten().map(|x| (0.0, x))
            }
        }
    }

    /// Values of `v` with `a = target`.
    pub(super) fn solve(&self, env: &Env, a: &Arith, v: &str, target: f64) -> Option<Vec<Value>> {
        let (c, k) = self.linear_in(env, a, v)?;
        (c.abs() > 1e-12).then(|| reals([(target - k) / c]))
    }

    /// Values of `v` with `a = target` modulo a full turn, normalized.
    fn solve_angle(&self, env: &Env, a: &Arith, v: &str, target: f64) -> Option<Vec<Value>> {
        let (c, k) = self.linear_in(env, a, v)?;
        (c.abs() > 1e-12).then(|| reals([norm_angle(target - k) / c]))
    }

    fn ground_seg(&self, env: &Env, t: &SegTerm, v: &str) -> Result<Option<Option<Segment>>> {
        if is_open(env, &seg_vars(t), v) {
            return Ok(None);
        }
        Ok(Some(self.seg(env, t)?))
    }

    fn ground_pos(&self, m: Mask, env: &Env, p: &PosTerm, v: &str) -> Result<Option<Option<GraphPosition>>> {
        if is_open(env, &pos_vars(p), v) {
            return Ok(None);
        }
        Ok(Some(self.pos(m, env, p)?))
    }

    /// Values of `v` for which the term denotes `target`.
    fn unify(&self, env: &Env, v: &str, t: &SegTerm, target: &Segment) -> Result<Option<Vec<Value>>> {
        let single = |s: &Segment| match s {
            Segment::Curve(c) if c.prims.len() == 1 => Some(c.prims[0]),
            _ => None,
        };
        Ok(match t {
            SegTerm::Var(w) if w == v => Some(vec![Value::Seg(target.clone())]),
            SegTerm::Ctor(Ctor::Interval, args) => match target {
                Segment::Interval { len } => self.solve(env, &args[0], v, *len),
                _ => Some(Vec::new()),
            },
            SegTerm::Ctor(Ctor::Line, args) => match single(target) {
                Some(Prim::Line(a, phi)) => {
                    if args[0].mentions(v) {
                        self.solve(env, &args[0], v, a)
                    } else {
                        self.solve_angle(env, &args[1], v, phi)
                    }
                }
                _ => Some(Vec::new()),
            },
            SegTerm::Ctor(Ctor::Arc, args) => match single(target) {
                Some(Prim::Arc(r, phi, th)) => {
                    if args[0].mentions(v) {
                        self.solve(env, &args[0], v, r)
                    } else if args[2].mentions(v) {
                        self.solve(env, &args[2], v, th)
                    } else {
                        self.solve_angle(env, &args[1], v, phi)
                    }
                }
                _ => Some(Vec::new()),
            },
            SegTerm::Concat(a, b) => {
                let total = target.len();
                if !a.mentions(v) {
                    let Some(head) = self.ground_seg(env, a, v)? else { return Ok(None) };
                    match head {
                        Some(h) if target.has_prefix(&h) => match target.split(h.len().min(total), total) {
                            Ok(rest) => self.unify(env, v, b, &rest)?,
                            Err(_) => Some(Vec::new()),
                        },
                        _ => Some(Vec::new()),
                    }
                } else if !b.mentions(v) {
                    let Some(tail) = self.ground_seg(env, b, v)? else { return Ok(None) };
                    let Some(tail) = tail else { return Ok(Some(Vec::new())) };
                    let cut = total - tail.len();
                    if cut < 0.0 && !crate::segment::approx(cut, 0.0) {
                        return Ok(Some(Vec::new()));
                    }
                    let cut = cut.max(0.0);
                    match (target.split(0.0, cut), target.split(cut, total)) {
                        (Ok(head), Ok(end)) if end.equiv(&tail) => self.unify(env, v, a, &head)?,
                        _ => Some(Vec::new()),
                    }
                } else {
                    None
                }
            }
            _ => None,
        })
    }

    fn edge_candidates(&self, m: Mask, env: &Env, sort: Sort, v: &str, x: &Ref, s: &SegTerm, y: &Ref, lanes: Option<&Arith>) -> Result<Option<Vec<Value>>> {
        let is_v = |r: &Ref| matches!(r, Ref::Var(w) if w == v);
        let fixed = |r: &Ref| -> Result<Option<usize>> {
            if is_v(r) || matches!(r, Ref::Var(w) if !matches!(lookup(env, w), Ok(Some(_)))) {
                Ok(None)
            } else {
                self.vertex(env, r)
            }
        };
        let (fx, fy) = (fixed(x)?, fixed(y)?);
        let label = if s.mentions(v) { None } else { self.ground_seg(env, s, v)? };
        let mut out = Vec::new();
        for e in self.g.edge_ids().filter(|&e| in_mask(m, e)) {
            let edge = self.g.edge(e);
            if fx.is_some_and(|x| x != edge.src) || fy.is_some_and(|y| y != edge.dst) {
                continue;
            }
            if let Some(l) = &label {
                if !l.as_ref().is_some_and(|l| l.equiv(&edge.seg)) {
                    continue;
                }
            }
            let vals = match sort {
                Sort::Vertex => match (is_v(x), is_v(y)) {
                    (true, true) if edge.src == edge.dst => vec![Value::Vertex(edge.src)],
                    (true, true) => Vec::new(),
                    (true, false) => vec![Value::Vertex(edge.src)],
                    (false, true) => vec![Value::Vertex(edge.dst)],
                    (false, false) => return Ok(None),
                },
                _ if s.mentions(v) => match self.unify(env, v, s, &edge.seg)? {
                    Some(vals) => vals,
                    None => return Ok(None),
                },
                _ => match lanes {
                    Some(l) if l.mentions(v) => match self.g.lanes(edge.src, edge.dst) {
                        Some(n) => match self.solve(env, l, v, n as f64) {
                            Some(vals) => vals,
                            None => return Ok(None),
                        },
                        None => Vec::new(),
                    },
                    _ => return Ok(None),
                },
            };
            out = merge(out, vals);
        }
        Ok(Some(out))
    }

    /// Values of `v` at which the atom can hold, if finitely many.
    fn atom_set(&self, m: Mask, env: &Env, sort: Sort, v: &str, f: &Formula) -> Result<Option<Vec<Value>>> {
        let pm = |p: &PosTerm| pos_vars(p).contains(v);
        Ok(match f {
            Formula::Cmp(CmpOp::Eq, a, b) => {
                let (Some((ca, ka)), Some((cb, kb))) = (self.linear_in(env, a, v), self.linear_in(env, b, v)) else {
                    return Ok(None);
                };
                let c = ca - cb;
                (c.abs() > 1e-12).then(|| reals([(kb - ka) / c]))
            }
            Formula::SegEq(a, b) => {
                let (term, other) = match (a.mentions(v), b.mentions(v)) {
                    (true, false) => (a, b),
                    (false, true) => (b, a),
                    _ => return Ok(None),
                };
                match self.ground_seg(env, other, v)? {
                    None => None,
                    Some(None) => Some(Vec::new()),
                    Some(Some(target)) => self.unify(env, v, term, &target)?,
                }
            }
            Formula::LenEq(s, t) => {
                if s.mentions(v) {
                    let interval = matches!(self.g.kind(), Some(SegKind::Interval) | None);
                    match s {
                        SegTerm::Var(w) if w == v && interval && !t.mentions(v) && !is_open(env, &arith_vars(t), v) => {
                            Some(match self.arith(env, t)?.map(Segment::interval) {
                                Some(Ok(seg)) => vec![Value::Seg(seg)],
                                _ => Vec::new(),
                            })
                        }
                        _ => None,
                    }
                } else {
                    match self.ground_seg(env, s, v)? {
                        None => None,
                        Some(None) => Some(Vec::new()),
                        Some(Some(seg)) => self.solve(env, t, v, seg.len()),
                    }
                }
            }
            Formula::Edge(x, s, y) => self.edge_candidates(m, env, sort, v, x, s, y, None)?,
            Formula::Road(x, s, y, l) => self.edge_candidates(m, env, sort, v, x, s, y, l.as_ref())?,
            Formula::PosEq(p, q) => {
                let (term, other) = match (pm(p), pm(q)) {
                    (true, false) => (p, q),
                    (false, true) => (q, p),
                    _ => return Ok(None),
                };
                let target = match self.ground_pos(m, env, other, v)? {
                    None => return Ok(None),
                    Some(None) => return Ok(Some(Vec::new())),
                    Some(Some(t)) => t,
                };
                match (term, target) {
                    (PosTerm::Vertex(Ref::Var(w)), GraphPosition::Vertex(x)) if w == v => Some(vec![Value::Vertex(x)]),
                    (PosTerm::Vertex(_), _) => Some(Vec::new()),
                    (PosTerm::Fwd(..) | PosTerm::Bwd(..), GraphPosition::Vertex(_)) => Some(Vec::new()),
                    (PosTerm::Fwd(x, s, t) | PosTerm::Bwd(t, s, x), GraphPosition::OnEdge(e, a)) => {
                        let fwd = matches!(term, PosTerm::Fwd(..));
                        let edge = self.g.edge(e);
                        if matches!(x, Ref::Var(w) if w == v) {
                            Some(vec![Value::Vertex(if fwd { edge.src } else { edge.dst })])
                        } else if s.mentions(v) {
                            self.unify(env, v, s, &edge.seg)?
                        } else {
                            self.solve(env, t, v, if fwd { a } else { edge.seg.len() - a })
                        }
                    }
                    (PosTerm::ObjPos(_), _) => None,
                }
            }
            Formula::Ride(p, s, q) if s.mentions(v) && !pm(p) && !pm(q) => {
                match (self.ground_pos(m, env, p, v)?, self.ground_pos(m, env, q, v)?) {
                    (Some(Some(p)), Some(Some(q))) => {
                        let mut out = Vec::new();
                        for l in self.ride_labels(m, &p, &q) {
                            match self.unify(env, v, s, &l)? {
                                Some(vals) => out = merge(out, vals),
                                None => return Ok(None),
                            }
                        }
                        Some(out)
                    }
                    (Some(None), Some(_)) | (Some(_), Some(None)) => Some(Vec::new()),
                    _ => None,
                }
            }
            Formula::Dist(p, q, t) if t.mentions(v) && !pm(p) && !pm(q) => {
                match (self.ground_pos(m, env, p, v)?, self.ground_pos(m, env, q, v)?) {
                    (Some(Some(p)), Some(Some(q))) => {
                        let d = self.distance_in(m, &p, &q);
                        if d.is_finite() {
                            self.solve(env, t, v, d)
                        } else {
                            Some(Vec::new())
                        }
                    }
                    (Some(None), Some(_)) | (Some(_), Some(None)) => Some(Vec::new()),
                    _ => None,
                }
            }
            Formula::Pred(p) => self.pred_set(m, env, v, p)?,
            _ => None,
        })
    }
}
