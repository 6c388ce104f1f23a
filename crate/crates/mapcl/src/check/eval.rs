use super::{CheckError, Checker, Env, Result, Value};
use crate::graph::{distance, rides, EdgeId, GraphPosition};
use crate::sat::Mask;
use crate::segment::{approx, Segment};
use crate::syntax::*;
use crate::world::Object;

pub(super) fn lookup<'e>(env: &'e Env, v: &str) -> Result<Option<&'e Value>> {
    env.iter()
        .rev()
        .find(|(k, _)| k == v)
        .map(|(_, x)| x.as_ref())
        .ok_or_else(|| CheckError::Unbound(v.to_string()))
}

/// Whether some variable of `vars` other than `v` is left open in `env`.
pub(super) fn is_open<'s>(env: &Env, vars: impl IntoIterator<Item = &'s String>, v: &str) -> bool {
    vars.into_iter().any(|w| w != v && !matches!(lookup(env, w), Ok(Some(_))))
}

/// Strictly between the two ends of a segment of length `len`.
pub(super) fn interior(t: f64, len: f64) -> bool {
    t > 0.0 && t < len && !approx(t, 0.0) && !approx(t, len)
}

pub(super) fn in_mask(m: Mask, e: EdgeId) -> bool {
    m & (1u64 << e.0) != 0
}

impl Checker<'_> {
    pub(super) fn vertex(&self, env: &Env, r: &Ref) -> Result<Option<usize>> {
        match r {
            Ref::Var(v) => Ok(match lookup(env, v)? {
                Some(Value::Vertex(x)) => Some(*x),
                _ => None,
            }),
            Ref::Const(c) => self.g.vertex_id(c).map(Some).ok_or_else(|| CheckError::Unbound(format!("@{c}"))),
        }
    }

    pub(super) fn object_index(&self, env: &Env, r: &Ref) -> Result<Option<usize>> {
        match r {
            Ref::Var(v) => Ok(match lookup(env, v)? {
                Some(Value::Obj(i)) => Some(*i),
                _ => None,
            }),
            Ref::Const(c) => self
                .state
                .and_then(|s| s.index_of(c))
                .map(Some)
                .ok_or_else(|| CheckError::Unbound(format!("@{c}"))),
        }
    }

    pub(super) fn object(&self, env: &Env, r: &Ref) -> Result<Option<&Object>> {
        Ok(self.object_index(env, r)?.and_then(|i| self.state.map(|s| &s.objects[i].1)))
    }

    fn speed(&self, env: &Env, r: &Ref) -> Result<Option<f64>> {
        Ok(self.object(env, r)?.map(|o| o.as_vehicle().map_or(0.0, |c| c.sp)))
    }

    pub(super) fn arith(&self, env: &Env, a: &Arith) -> Result<Option<f64>> {
        Ok(match a {
            Arith::Const(c) => Some(*c),
            Arith::Var(v) => match lookup(env, v)? {
                Some(Value::Real(x)) => Some(*x),
                _ => None,
            },
            Arith::Add(x, y) => self.arith(env, x)?.zip(self.arith(env, y)?).map(|(x, y)| x + y),
            Arith::Mul(x, y) => self.arith(env, x)?.zip(self.arith(env, y)?).map(|(x, y)| x * y),
            Arith::Attr(r, at) => match self.object(env, r)? {
                Some(Object::Vehicle(c)) => match at {
                    NumAttr::Sp => Some(c.sp),
                    NumAttr::Wt => Some(c.wt),
                    NumAttr::Ln => Some(c.ln),
                    NumAttr::Weight => c.weight,
                },
                Some(_) => match at {
                    NumAttr::Sp | NumAttr::Wt => Some(0.0),
                    NumAttr::Ln | NumAttr::Weight => None,
                },
                None => None,
            },
            Arith::SafeDist(a, b) => match (self.speed(env, a)?, self.speed(env, b)?) {
                (Some(sa), Some(sb)) => {
                    let brake = 2.0 * self.opts.brake;
                    Some((sa * sa / brake - sb * sb / brake).max(0.0) + sa * self.opts.reaction)
                }
                _ => None,
            },
        })
    }

    pub(super) fn seg(&self, env: &Env, s: &SegTerm) -> Result<Option<Segment>> {
        Ok(match s {
            SegTerm::Var(v) => match lookup(env, v)? {
                Some(Value::Seg(x)) => Some(x.clone()),
                _ => None,
            },
            SegTerm::Ctor(c, args) => {
                let mut xs = Vec::with_capacity(args.len());
                for a in args {
                    match self.arith(env, a)? {
                        Some(x) => xs.push(x),
                        None => return Ok(None),
                    }
                }
                match (c, xs.as_slice()) {
                    (Ctor::Interval, [t]) => Segment::interval(if approx(*t, 0.0) { t.max(0.0) } else { *t }).ok(),
                    (Ctor::Line, [a, phi]) => Segment::line(*a, *phi).ok(),
                    (Ctor::Arc, [r, phi, th]) => Segment::arc(*r, *phi, *th).ok(),
                    _ => None,
                }
            }
            SegTerm::Concat(a, b) => match (self.seg(env, a)?, self.seg(env, b)?) {
                (Some(a), Some(b)) => a.concat(&b).ok(),
                _ => None,
            },
            SegTerm::It(r) => self.object(env, r)?.and_then(|o| o.as_vehicle()).map(|c| c.it.clone()),
        })
    }

    /// The unique edge of `m` leaving (or entering) `x` whose segment is `s`.
    fn unique_edge(&self, m: Mask, x: usize, s: &Segment, outgoing: bool) -> Option<EdgeId> {
        let mut it = self
            .g
            .edge_ids()
            .filter(|&e| in_mask(m, e))
            .filter(|&e| if outgoing { self.g.edge(e).src == x } else { self.g.edge(e).dst == x })
            .filter(|&e| self.g.edge(e).seg.equiv(s));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    pub(crate) fn pos(&self, m: Mask, env: &Env, p: &PosTerm) -> Result<Option<GraphPosition>> {
        Ok(match p {
            PosTerm::Vertex(r) => self.vertex(env, r)?.map(GraphPosition::Vertex),
            PosTerm::Fwd(x, s, t) | PosTerm::Bwd(t, s, x) => {
                let fwd = matches!(p, PosTerm::Fwd(..));
                let (Some(x), Some(s), Some(t)) = (self.vertex(env, x)?, self.seg(env, s)?, self.arith(env, t)?) else {
                    return Ok(None);
                };
                let len = s.len();
                if !interior(t, len) {
                    return Ok(None);
                }
                self.unique_edge(m, x, &s, fwd).map(|e| GraphPosition::OnEdge(e, if fwd { t } else { len - t }))
            }
            PosTerm::ObjPos(r) => match self.object(env, r)?.map(Object::pos) {
                Some(GraphPosition::OnEdge(e, _)) if !in_mask(m, e) => None,
                other => other,
            },
        })
    }

    /// The single edge of `m` if it runs from `x` to `y` with segment `s`.
    fn edge_atom(&self, m: Mask, env: &Env, x: &Ref, s: &SegTerm, y: &Ref) -> Result<Option<EdgeId>> {
        if m.count_ones() != 1 {
            return Ok(None);
        }
        let e = EdgeId(m.trailing_zeros() as usize);
        let edge = self.g.edge(e);
        let (Some(x), Some(y), Some(s)) = (self.vertex(env, x)?, self.vertex(env, y)?, self.seg(env, s)?) else {
            return Ok(None);
        };
        Ok((edge.src == x && edge.dst == y && edge.seg.equiv(&s)).then_some(e))
    }

    pub(super) fn ride_labels(&self, m: Mask, p: &GraphPosition, q: &GraphPosition) -> Vec<Segment> {
        let sub = self.sub(m);
        match (Self::to_sub(&sub, p), Self::to_sub(&sub, q)) {
            (Some(p), Some(q)) => rides(&sub.g, &p, &q).into_iter().map(|r| r.label).collect(),
            _ => Vec::new(),
        }
    }

    pub(super) fn distance_in(&self, m: Mask, p: &GraphPosition, q: &GraphPosition) -> f64 {
        let sub = self.sub(m);
        match (Self::to_sub(&sub, p), Self::to_sub(&sub, q)) {
            (Some(p), Some(q)) => distance(&sub.g, &p, &q),
            _ => f64::INFINITY,
        }
    }

    pub(super) fn atom(&self, m: Mask, env: &Env, f: &Formula) -> Result<bool> {
        Ok(match f {
            Formula::Cmp(op, a, b) => match (self.arith(env, a)?, self.arith(env, b)?) {
                (Some(x), Some(y)) => op.holds(x, y),
                _ => false,
            },
            Formula::SegEq(a, b) => match (self.seg(env, a)?, self.seg(env, b)?) {
                (Some(a), Some(b)) => a.equiv(&b),
                _ => false,
            },
            Formula::LenEq(s, t) => match (self.seg(env, s)?, self.arith(env, t)?) {
                (Some(s), Some(t)) => approx(s.len(), t),
                _ => false,
            },
            Formula::Edge(x, s, y) => self.edge_atom(m, env, x, s, y)?.is_some(),
            Formula::Road(x, s, y, l) => match self.edge_atom(m, env, x, s, y)? {
                Some(e) => {
                    let edge = self.g.edge(e);
                    match (self.g.lanes(edge.src, edge.dst), l) {
                        (Some(_), None) => true,
                        (Some(n), Some(l)) => self.arith(env, l)?.is_some_and(|l| approx(n as f64, l)),
                        (None, _) => false,
                    }
                }
                None => false,
            },
            Formula::PosEq(p, q) => match (self.pos(m, env, p)?, self.pos(m, env, q)?) {
                (Some(p), Some(q)) => self.g.same_position(&p, &q),
                _ => false,
            },
            Formula::Ride(p, s, q) => match (self.pos(m, env, p)?, self.seg(env, s)?, self.pos(m, env, q)?) {
                (Some(p), Some(s), Some(q)) => self.ride_labels(m, &p, &q).iter().any(|l| l.equiv(&s)),
                _ => false,
            },
            Formula::Dist(p, q, t) => match (self.pos(m, env, p)?, self.pos(m, env, q)?, self.arith(env, t)?) {
                (Some(p), Some(q), Some(t)) => {
                    let d = self.distance_in(m, &p, &q);
                    d.is_finite() && approx(d, t)
                }
                _ => false,
            },
            Formula::ObjEq(a, b) => match (self.object_index(env, a)?, self.object_index(env, b)?) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
            Formula::Color(r, c) => matches!(self.object(env, r)?, Some(Object::Light(l)) if l.cl == *c),
            Formula::Pred(p) => self.pred(m, env, p)?,
            other => unreachable!("not an atom: {other}"),
        })
    }
}
