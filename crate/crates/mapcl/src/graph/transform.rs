use super::{Edge, EdgeId, GraphError, MetricGraph, Result, VertexId};
use crate::segment::{abstract_ci, abstract_rc, Segment};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abstraction {
    /// Curves to intervals.
    CurveToInterval,
    /// Regions to curves.
    RegionToCurve,
}

/// Maps every edge label through the abstraction. Parallel edges whose
/// abstractions coincide are merged.
pub fn abstract_graph(g: &MetricGraph, how: Abstraction) -> Result<MetricGraph> {
    let mut out = MetricGraph::new();
    for name in g.names() {
        out.add_vertex(name)?;
    }
    for e in g.edges() {
        let seg = match (how, &e.seg) {
            (Abstraction::CurveToInterval, Segment::Curve(c)) => abstract_ci(c),
            (Abstraction::RegionToCurve, Segment::Region(r)) => Segment::Curve(abstract_rc(r)),
            _ => return Err(GraphError::Invalid("abstraction does not apply to these segments".into())),
        };
        if out.edges.iter().any(|f| f.src == e.src && f.dst == e.dst && f.seg.equiv(&seg)) {
            continue;
        }
        out.add_edge(e.src, e.dst, seg)?;
    }
    out.meta = g.meta.clone();
    Ok(out)
}

struct Work {
    edges: Vec<Option<Edge>>,
    removed: Vec<bool>,
}

impl Work {
    fn from(g: &MetricGraph) -> Work {
        Work { edges: g.edges().iter().cloned().map(Some).collect(), removed: vec![false; g.vertex_count()] }
    }

    fn live(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|e| (i, e)))
    }

    /// Removes `v` when it has exactly one incoming and one outgoing edge,
    /// they differ, and their segments concatenate into a new edge.
    fn try_remove(&mut self, v: VertexId) -> bool {
        let ins: Vec<usize> = self.live().filter(|(_, e)| e.dst == v).map(|(i, _)| i).collect();
        let outs: Vec<usize> = self.live().filter(|(_, e)| e.src == v).map(|(i, _)| i).collect();
        if ins.len() != 1 || outs.len() != 1 || ins[0] == outs[0] {
            return false;
        }
        let (a, b) = (self.edges[ins[0]].clone().unwrap(), self.edges[outs[0]].clone().unwrap());
        let Ok(seg) = a.seg.concat(&b.seg) else { return false };
        let clash = self
            .live()
            .any(|(i, e)| i != ins[0] && i != outs[0] && e.src == a.src && e.dst == b.dst && e.seg.equiv(&seg));
        if clash {
            return false;
        }
        self.edges[ins[0]] = Some(Edge { src: a.src, dst: b.dst, seg });
        self.edges[outs[0]] = None;
        self.removed[v] = true;
        true
    }

    fn finish(self, g: &MetricGraph) -> MetricGraph {
        let mut out = MetricGraph::new();
        let mut map = vec![usize::MAX; g.vertex_count()];
        for v in g.vertices() {
            if !self.removed[v] {
                map[v] = out.add_vertex(g.name(v)).unwrap();
            }
        }
        for e in self.edges.into_iter().flatten() {
            out.edges.push(Edge { src: map[e.src], dst: map[e.dst], seg: e.seg });
        }
        out.meta = g.meta.clone();
        out
    }
}

/// Repeatedly removes vertices of in- and out-degree one whose two edges
/// concatenate, visiting vertices in id order.
pub fn contract(g: &MetricGraph) -> MetricGraph {
    let mut w = Work::from(g);
    loop {
        let mut changed = false;
        for v in g.vertices() {
            if !w.removed[v] && w.try_remove(v) {
                changed = true;
            }
        }
        if !changed {
            return w.finish(g);
        }
    }
}

/// Splits edge `e` at the given interior offsets, adding one fresh vertex per cut.
pub fn refine(g: &MetricGraph, e: EdgeId, cuts: &[f64]) -> Result<MetricGraph> {
    let edge = g.edges().get(e.0).ok_or_else(|| GraphError::UnknownEdge(format!("{}", e.0)))?.clone();
    let len = edge.seg.len();
    let mut cuts = cuts.to_vec();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.iter().any(|&c| !(c > 0.0 && c < len)) {
        return Err(GraphError::Position(format!("cuts must lie strictly inside (0, {len})")));
    }
    let mut out = MetricGraph::new();
    for name in g.names() {
        out.add_vertex(name)?;
    }
    out.meta = g.meta.clone();
    for (i, f) in g.edges().iter().enumerate() {
        if i != e.0 {
            out.edges.push(f.clone());
        }
    }
    let base = g.edge_label(e);
    let mut prev = edge.src;
    let mut at = 0.0;
    for (k, &c) in cuts.iter().enumerate() {
        let mut name = format!("{base}@{k}");
        while out.vertex_id(&name).is_some() {
            name.push('\'');
        }
        let v = out.add_vertex(&name)?;
        out.edges.push(Edge { src: prev, dst: v, seg: edge.seg.split(at, c)? });
        prev = v;
        at = c;
    }
    out.edges.push(Edge { src: prev, dst: edge.dst, seg: edge.seg.split(at, len)? });
    Ok(out)
}

/// Whether contracting some vertices of `fine` yields `coarse`, matching vertices by name.
pub fn is_contraction(fine: &MetricGraph, coarse: &MetricGraph) -> bool {
    if coarse.names().iter().any(|n| fine.vertex_id(n).is_none()) {
        return false;
    }
    let mut w = Work::from(fine);
    let mut pending: BTreeSet<VertexId> =
        fine.vertices().filter(|&v| coarse.vertex_id(fine.name(v)).is_none()).collect();
    while !pending.is_empty() {
        let Some(v) = pending.iter().copied().find(|&v| w.try_remove(v)) else { return false };
        pending.remove(&v);
    }
    let reduced = w.finish(fine);
    same_edges(&reduced, coarse)
}

fn same_edges(a: &MetricGraph, b: &MetricGraph) -> bool {
    if a.edge_count() != b.edge_count() || a.vertex_count() != b.vertex_count() {
        return false;
    }
    let mut used = vec![false; b.edge_count()];
    a.edges().iter().all(|e| {
        let (s, d) = (b.vertex_id(a.name(e.src)), b.vertex_id(a.name(e.dst)));
        let hit = b.edges().iter().enumerate().position(|(i, f)| {
            !used[i] && Some(f.src) == s && Some(f.dst) == d && f.seg.equiv(&e.seg)
        });
        match hit {
            Some(i) => {
                used[i] = true;
                true
            }
            None => false,
        }
    })
}

/// Graph isomorphism respecting edge segments.
pub fn isomorphic(a: &MetricGraph, b: &MetricGraph) -> bool {
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let sig = |g: &MetricGraph, v: VertexId| (g.in_degree(v), g.out_degree(v));
    let mut order: Vec<VertexId> = a.vertices().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(a.in_degree(v) + a.out_degree(v)));
    let mut map = vec![usize::MAX; a.vertex_count()];
    let mut taken = vec![false; b.vertex_count()];
    fn extend(
        a: &MetricGraph,
        b: &MetricGraph,
        order: &[VertexId],
        k: usize,
        map: &mut Vec<usize>,
        taken: &mut Vec<bool>,
        sig: &dyn Fn(&MetricGraph, VertexId) -> (usize, usize),
    ) -> bool {
        if k == order.len() {
            return true;
        }
        let v = order[k];
        for w in b.vertices() {
            if taken[w] || sig(a, v) != sig(b, w) {
                continue;
            }
            map[v] = w;
            if consistent(a, b, map) {
                taken[w] = true;
                if extend(a, b, order, k + 1, map, taken, sig) {
                    return true;
                }
                taken[w] = false;
            }
            map[v] = usize::MAX;
        }
        false
    }
    extend(a, b, &order, 0, &mut map, &mut taken, &sig)
}

/// Edges among mapped vertices must correspond one to one, segments included.
fn consistent(a: &MetricGraph, b: &MetricGraph, map: &[usize]) -> bool {
    let mapped = |v: VertexId| map[v] != usize::MAX;
    let mut pairs: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    for e in a.edges() {
        if mapped(e.src) && mapped(e.dst) {
            pairs.insert((e.src, e.dst));
        }
    }
    pairs.into_iter().all(|(s, d)| {
        let xs: Vec<&Segment> = a.edges().iter().filter(|e| e.src == s && e.dst == d).map(|e| &e.seg).collect();
        let ys: Vec<&Segment> =
            b.edges().iter().filter(|e| e.src == map[s] && e.dst == map[d]).map(|e| &e.seg).collect();
        xs.len() == ys.len() && xs.iter().all(|x| ys.iter().any(|y| y.equiv(x)))
    }) && {
        let inv: BTreeSet<usize> = map.iter().copied().filter(|&w| w != usize::MAX).collect();
        b.edges().iter().filter(|e| inv.contains(&e.src) && inv.contains(&e.dst)).count()
            == a.edges().iter().filter(|e| mapped(e.src) && mapped(e.dst)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_ring, distance, example_intersection, GraphPosition};
    use crate::segment::Segment;

    fn iv(a: f64) -> Segment {
        Segment::interval(a).unwrap()
    }

    #[test]
    fn refine_then_contract_restores_edge() {
        let mut g = MetricGraph::new();
        g.add_named_edge("a", "b", Segment::arc(2.0, 0.0, 1.0).unwrap()).unwrap();
        let r = refine(&g, EdgeId(0), &[0.5, 1.2]).unwrap();
        assert_eq!(r.vertex_count(), 4);
        assert!(is_contraction(&r, &g));
        let c = contract(&r);
        assert!(isomorphic(&c, &g));
        assert!(c.edges()[0].seg.equiv(&g.edges()[0].seg));
    }

    #[test]
    fn contraction_needs_matching_label() {
        // a -s14-> d -s45-> e -s52-> b contracts to a -s12-> b only when s12 = s14 s45 s52
        let mut fine = MetricGraph::new();
        fine.add_named_edge("a", "d", iv(1.0)).unwrap();
        fine.add_named_edge("d", "e", iv(2.0)).unwrap();
        fine.add_named_edge("e", "b", iv(3.0)).unwrap();
        let mut good = MetricGraph::new();
        good.add_named_edge("a", "b", iv(6.0)).unwrap();
        let mut bad = MetricGraph::new();
        bad.add_named_edge("a", "b", iv(5.0)).unwrap();
        assert!(is_contraction(&fine, &good));
        assert!(!is_contraction(&fine, &bad));
    }

    #[test]
    fn kinks_block_contraction() {
        let mut g = MetricGraph::new();
        g.add_named_edge("a", "b", Segment::line(1.0, 0.0).unwrap()).unwrap();
        g.add_named_edge("b", "c", Segment::line(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(contract(&g).vertex_count(), 3);
        let i = abstract_graph(&g, Abstraction::CurveToInterval).unwrap();
        assert_eq!(contract(&i).vertex_count(), 2);
    }

    #[test]
    fn ring_contracts_to_a_loop() {
        let g = build_ring(10.0, 2.0, 0.0);
        let c = contract(&g);
        assert_eq!((c.vertex_count(), c.edge_count()), (1, 1));
        assert!(is_contraction(&g, &c));
        let d = distance(&c, &GraphPosition::Vertex(0), &GraphPosition::OnEdge(EdgeId(0), 10.0));
        assert!((d - 10.0).abs() < 1e-9);
    }

    #[test]
    fn isomorphism_ignores_names() {
        let mut g = MetricGraph::new();
        g.add_named_edge("a", "b", iv(1.0)).unwrap();
        g.add_named_edge("b", "c", iv(2.0)).unwrap();
        let mut h = MetricGraph::new();
        h.add_named_edge("y", "z", iv(2.0)).unwrap();
        h.add_named_edge("x", "y", iv(1.0)).unwrap();
        assert!(isomorphic(&g, &h));
        let mut k = MetricGraph::new();
        k.add_named_edge("y", "z", iv(1.0)).unwrap();
        k.add_named_edge("x", "y", iv(2.0)).unwrap();
        assert!(!isomorphic(&g, &k));
    }

    #[test]
    fn maximal_contraction_depends_on_order_near_parallel_edges() {
        // merging either chain vertex would duplicate the direct edge, so
        // whichever vertex is merged first blocks the other
        let mut g = MetricGraph::new();
        g.add_named_edge("a", "b", iv(2.0)).unwrap();
        g.add_named_edge("b", "c", iv(1.0)).unwrap();
        g.add_named_edge("a", "c", iv(3.0)).unwrap();
        let fine = refine(&g, EdgeId(1), &[0.5]).unwrap();
        assert_eq!(contract(&g), g);
        assert!(!isomorphic(&contract(&fine), &g));
        assert!(is_contraction(&fine, &g));
    }

    #[test]
    fn intersection_does_not_contract() {
        let g = example_intersection(1.0, 0.5);
        assert_eq!(contract(&g), g);
    }
}
