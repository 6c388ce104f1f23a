use super::eval::{in_mask, is_open};
use super::{CheckError, Checker, Env, Result, Value};
use crate::graph::{EdgeId, GraphPosition};
use crate::sat::Mask;
use crate::segment::{angle_eq, approx, Prim, SegKind, Segment};
use crate::syntax::*;
use crate::world::{Object, Vehicle};
use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

/// Tolerance for matching itineraries and distances along them.
pub const ITINERARY_TOL: f64 = 1e-6;

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= ITINERARY_TOL * 1f64.max(x.abs()).max(y.abs())
}

/// Whether `z` is an initial piece of `it`, up to [`ITINERARY_TOL`].
pub fn prefix_of(it: &Segment, z: &Segment) -> bool {
    let (li, lz) = (it.len(), z.len());
    if lz > li && !close(lz, li) {
        return false;
    }
    match (it, z) {
        (Segment::Interval { .. }, Segment::Interval { .. }) => true,
        (Segment::Curve(_), Segment::Curve(_)) | (Segment::Region(_), Segment::Region(_)) => {
            let Ok(head) = it.split(0.0, lz.min(li)) else { return false };
            let (Some(h), Some(c)) = (head.curve(), z.curve()) else { return false };
            (0..=8).all(|k| {
                let t = k as f64 / 8.0;
                let (p, q) = (h.eval(t), c.eval(t));
                close(p.0, q.0) && close(p.1, q.1)
            })
        }
        _ => false,
    }
}

fn single(s: &Segment) -> Option<Prim> {
    match s {
        Segment::Curve(c) if c.prims.len() == 1 => Some(c.prims[0]),
        Segment::Region(r) if r.center.prims.len() == 1 => Some(r.center.prims[0]),
        _ => None,
    }
}

fn first_prim(s: &Segment) -> Option<Prim> {
    s.curve().and_then(|c| c.prims.first().copied())
}

impl Checker<'_> {
    fn vertices_of(&self, env: &Env, xs: &[Ref]) -> Result<Option<Vec<usize>>> {
        let mut out = Vec::new();
        for x in xs {
            match self.vertex(env, x)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn vehicle(&self, env: &Env, r: &Ref) -> Result<Option<&Vehicle>> {
        Ok(self.object(env, r)?.and_then(Object::as_vehicle))
    }

    fn needs_geometry(&self, p: &Pred) -> Result<()> {
        if matches!(self.g.kind(), Some(SegKind::Interval) | None) {
            return Err(CheckError::Unsupported(format!("`{}` needs a map with curve segments", p.name())));
        }
        Ok(())
    }

    fn mask_edges(&self, m: Mask) -> impl Iterator<Item = EdgeId> + '_ {
        self.g.edge_ids().filter(move |&e| in_mask(m, e))
    }

    /// Lengths of rides from the vehicle to `q` that follow its itinerary.
    fn lengths_along(&self, m: Mask, c: &Vehicle, q: &GraphPosition) -> Vec<f64> {
        self.ride_labels(m, &c.pos, q).iter().filter(|z| prefix_of(&c.it, z)).map(Segment::len).collect()
    }

    fn on_subgraph(&self, m: Mask, p: &GraphPosition, xs: &[usize], strict: bool) -> bool {
        match *p {
            GraphPosition::Vertex(v) => !strict && xs.contains(&v),
            GraphPosition::OnEdge(e, _) => {
                in_mask(m, e) && xs.contains(&self.g.edge(e).src) && xs.contains(&self.g.edge(e).dst)
            }
        }
    }

    /// The vehicle stands at a vertex of `xs` whose outgoing edge has the
    /// wanted shape and starts its itinerary.
    fn takes(&self, m: Mask, c: &Vehicle, xs: &[usize], shape: impl Fn(Prim) -> bool) -> bool {
        let GraphPosition::Vertex(x) = c.pos else { return false };
        xs.contains(&x)
            && self.mask_edges(m).any(|e| {
                let edge = self.g.edge(e);
                edge.src == x && single(&edge.seg).is_some_and(&shape) && prefix_of(&c.it, &edge.seg)
            })
    }

    pub(super) fn pred(&self, m: Mask, env: &Env, p: &Pred) -> Result<bool> {
        Ok(match p {
            Pred::Meets(c, d, o) => {
                let (Some(c), Some(o), Some(d)) = (self.vehicle(env, c)?, self.object(env, o)?, self.arith(env, d)?) else {
                    return Ok(false);
                };
                self.lengths_along(m, c, &o.pos()).into_iter().any(|l| close(l, d))
            }
            Pred::Inside(o, xs, lane) => {
                let (Some(o), Some(xs)) = (self.object(env, o)?, self.vertices_of(env, xs)?) else { return Ok(false) };
                let lane_ok = match lane {
                    None => true,
                    Some(l) => match (o.as_vehicle(), self.arith(env, l)?) {
                        (Some(c), Some(l)) => approx(c.ln, l),
                        _ => false,
                    },
                };
                lane_ok && self.on_subgraph(m, &o.pos(), &xs, false)
            }
            Pred::OnEdges(o, xs) => {
                let (Some(o), Some(xs)) = (self.object(env, o)?, self.vertices_of(env, xs)?) else { return Ok(false) };
                self.on_subgraph(m, &o.pos(), &xs, true)
            }
            Pred::RightOf(x, y, xs) => {
                self.needs_geometry(p)?;
                let (Some(x), Some(y), Some(xs)) = (self.vertex(env, x)?, self.vertex(env, y)?, self.vertices_of(env, xs)?) else {
                    return Ok(false);
                };
                self.mask_edges(m).any(|e1| {
                    let a = self.g.edge(e1);
                    let Some(Prim::Line(_, phi)) = single(&a.seg) else { return false };
                    a.src == y
                        && xs.contains(&a.dst)
                        && self.mask_edges(m).any(|e2| {
                            let b = self.g.edge(e2);
                            b.src == x
                                && b.dst == a.dst
                                && matches!(single(&b.seg), Some(Prim::Arc(_, psi, th)) if angle_eq(psi, phi + FRAC_PI_2) && approx(th, -FRAC_PI_2))
                        })
                })
            }
            Pred::Opposite(x, y, xs) => {
                self.needs_geometry(p)?;
                let (Some(x), Some(y), Some(xs)) = (self.vertex(env, x)?, self.vertex(env, y)?, self.vertices_of(env, xs)?) else {
                    return Ok(false);
                };
                let headings = |from: usize| -> Vec<f64> {
                    self.mask_edges(m)
                        .filter_map(|e| {
                            let edge = self.g.edge(e);
                            match single(&edge.seg) {
                                Some(Prim::Line(_, phi)) if edge.src == from && xs.contains(&edge.dst) => Some(phi),
                                _ => None,
                            }
                        })
                        .collect()
                };
                let hy = headings(y);
                headings(x).iter().any(|&a| hy.iter().any(|&b| angle_eq(b, a + std::f64::consts::PI)))
            }
            Pred::GoStraight(c, xs) | Pred::TurnRight(c, xs) | Pred::TurnLeft(c, xs) => {
                self.needs_geometry(p)?;
                let (Some(c), Some(xs)) = (self.vehicle(env, c)?, self.vertices_of(env, xs)?) else { return Ok(false) };
                match p {
                    Pred::GoStraight(..) => self.takes(m, c, &xs, |q| matches!(q, Prim::Line(..))),
                    Pred::TurnRight(..) => self.takes(m, c, &xs, |q| matches!(q, Prim::Arc(_, _, th) if approx(th, -FRAC_PI_2))),
                    _ => self.takes(m, c, &xs, |q| matches!(q, Prim::Arc(_, _, th) if approx(th, FRAC_PI_2))),
                }
            }
            Pred::ArcAhead(c, r) => {
                let (Some(c), Some(r)) = (self.vehicle(env, c)?, self.arith(env, r)?) else { return Ok(false) };
                matches!(first_prim(&c.it), Some(Prim::Arc(radius, _, _)) if approx(radius, r))
            }
            Pred::Passes(c, x) => {
                let (Some(c), Some(x)) = (self.vehicle(env, c)?, self.vertex(env, x)?) else { return Ok(false) };
                !self.lengths_along(m, c, &GraphPosition::Vertex(x)).is_empty()
            }
        })
    }

    /// Values of the real variable `v` at which the predicate can hold.
    pub(super) fn pred_set(&self, m: Mask, env: &Env, v: &str, p: &Pred) -> Result<Option<Vec<Value>>> {
        let mut vars = BTreeSet::new();
        let num = match p {
            Pred::Meets(c, d, o) if d.mentions(v) => {
                c.vars(&mut vars);
                o.vars(&mut vars);
                d
            }
            Pred::Inside(o, xs, Some(l)) if l.mentions(v) => {
                o.vars(&mut vars);
                xs.iter().for_each(|x| x.vars(&mut vars));
                l
            }
            Pred::ArcAhead(c, r) if r.mentions(v) => {
                c.vars(&mut vars);
                r
            }
            _ => return Ok(None),
        };
        if vars.contains(v) || is_open(env, &vars, v) {
            return Ok(None);
        }
        let targets: Vec<f64> = match p {
            Pred::Meets(c, _, o) => match (self.vehicle(env, c)?, self.object(env, o)?) {
                (Some(c), Some(o)) => self.lengths_along(m, c, &o.pos()),
                _ => Vec::new(),
            },
            Pred::Inside(o, xs, _) => match (self.object(env, o)?, self.vertices_of(env, xs)?) {
                (Some(Object::Vehicle(c)), Some(xs)) if self.on_subgraph(m, &c.pos, &xs, false) => vec![c.ln],
                _ => Vec::new(),
            },
            Pred::ArcAhead(c, _) => match self.vehicle(env, c)?.and_then(|c| first_prim(&c.it)) {
                Some(Prim::Arc(r, _, _)) => vec![r],
                _ => Vec::new(),
            },
            _ => unreachable!(),
        };
        let mut out = Vec::new();
        for t in targets {
            match self.solve(env, num, v, t) {
                Some(vals) => out.extend(vals),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}
