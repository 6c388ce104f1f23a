use super::{EdgeId, GraphError, MetricGraph, Result, VertexId};
use crate::segment::TOL;
use serde::Serialize;
use std::collections::VecDeque;

/// Planar coordinates of every vertex, with the first vertex at the origin.
pub type Addressing = Vec<(f64, f64)>;

/// A circuit whose edges do not close up geometrically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Edge labels in traversal order.
    pub circuit: Vec<String>,
    /// Sum of the end points of edges traversed forward minus those traversed backward.
    pub residual: [f64; 2],
    #[serde(skip)]
    pub edges: Vec<(EdgeId, bool)>,
}

/// Assigns coordinates along a spanning tree and checks every remaining edge
/// against them. Each reported circuit is oriented so that its edge with the
/// smallest id is traversed forward.
pub fn check_consistency(g: &MetricGraph) -> Result<std::result::Result<Addressing, Violation>> {
    if g.vertex_count() == 0 {
        return Ok(Ok(Vec::new()));
    }
    let mut end = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        end.push(e.seg.endpoint().ok_or(GraphError::NotGeometric)?);
    }
    let n = g.vertex_count();
    let mut chi: Vec<Option<(f64, f64)>> = vec![None; n];
    let mut parent: Vec<Option<(EdgeId, bool)>> = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut tree = vec![false; g.edge_count()];
    chi[0] = Some((0.0, 0.0));
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        let (x, y) = chi[v].unwrap();
        for e in g.edge_ids() {
            let edge = g.edge(e);
            let (dx, dy) = end[e.0];
            let (w, pos, fwd) = if edge.src == v {
                (edge.dst, (x + dx, y + dy), true)
            } else if edge.dst == v {
                (edge.src, (x - dx, y - dy), false)
            } else {
                continue;
            };
            if chi[w].is_none() {
                chi[w] = Some(pos);
                parent[w] = Some((e, fwd));
                depth[w] = depth[v] + 1;
                tree[e.0] = true;
                queue.push_back(w);
            }
        }
    }
    if chi.iter().any(Option::is_none) {
        return Err(GraphError::NotConnected);
    }
    let chi: Addressing = chi.into_iter().map(Option::unwrap).collect();
    let scale = chi.iter().fold(1f64, |m, p| m.max(p.0.abs()).max(p.1.abs()));
    for e in g.edge_ids() {
        if tree[e.0] {
            continue;
        }
        let edge = g.edge(e);
        let (s, d) = (chi[edge.src], chi[edge.dst]);
        let r = (s.0 + end[e.0].0 - d.0, s.1 + end[e.0].1 - d.1);
        if r.0.abs() > TOL * scale || r.1.abs() > TOL * scale {
            let mut edges = vec![(e, true)];
            edges.extend(tree_path(edge.dst, edge.src, &parent, &depth, g));
            let mut residual = [r.0, r.1];
            let smallest = edges.iter().min_by_key(|(x, _)| *x).copied().unwrap();
            if !smallest.1 {
                edges.reverse();
                for x in edges.iter_mut() {
                    x.1 = !x.1;
                }
                residual = [-residual[0], -residual[1]];
            }
            let at = edges.iter().position(|x| x.0 == smallest.0).unwrap();
            edges.rotate_left(at);
            let circuit = edges.iter().map(|(x, _)| g.edge_label(*x)).collect();
            return Ok(Err(Violation { circuit, residual, edges }));
        }
    }
    Ok(Ok(chi))
}

/// Tree edges from `a` to `b`, each flagged forward when traversed from source to target.
fn tree_path(
    a: VertexId,
    b: VertexId,
    parent: &[Option<(EdgeId, bool)>],
    depth: &[usize],
    g: &MetricGraph,
) -> Vec<(EdgeId, bool)> {
    let up = |v: VertexId| {
        let (e, fwd) = parent[v].unwrap();
        let edge = g.edge(e);
        (e, if fwd { edge.src } else { edge.dst })
    };
    let (mut x, mut y) = (a, b);
    let mut head = Vec::new();
    let mut tail = Vec::new();
    while depth[x] > depth[y] {
        let (e, p) = up(x);
        head.push((e, g.edge(e).src == x));
        x = p;
    }
    while depth[y] > depth[x] {
        let (e, p) = up(y);
        tail.push((e, g.edge(e).dst == y));
        y = p;
    }
    while x != y {
        let (e, p) = up(x);
        head.push((e, g.edge(e).src == x));
        x = p;
        let (f, q) = up(y);
        tail.push((f, g.edge(f).dst == y));
        y = q;
    }
    tail.reverse();
    head.extend(tail);
    head
}

/// Forward and backward end-point sums of an oriented circuit.
pub fn circuit_sides(g: &MetricGraph, edges: &[(EdgeId, bool)]) -> ((f64, f64), (f64, f64)) {
    let mut fwd = (0.0, 0.0);
    let mut bwd = (0.0, 0.0);
    for &(e, f) in edges {
        let (x, y) = g.edge(e).seg.endpoint().unwrap_or((0.0, 0.0));
        let side = if f { &mut fwd } else { &mut bwd };
        side.0 += x;
        side.1 += y;
    }
    (fwd, bwd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_ring, example_intersection};
    use crate::segment::Segment;

    #[test]
    fn intersection_is_consistent() {
        let g = example_intersection(1.0, 0.5);
        let chi = check_consistency(&g).unwrap().unwrap();
        let v3 = g.vertex_id("v3").unwrap();
        assert!((chi[v3].0 - 2.5).abs() < 1e-12 && chi[v3].1.abs() < 1e-12);
    }

    #[test]
    fn perturbed_intersection_reports_unit_residual() {
        let g = example_intersection(1.0, 0.5);
        let mut h = crate::graph::MetricGraph::new();
        for n in g.names() {
            h.add_vertex(n).unwrap();
        }
        for (i, e) in g.edges().iter().enumerate() {
            let seg = if i == 0 { Segment::line(3.5, 0.0).unwrap() } else { e.seg.clone() };
            h.add_edge(e.src, e.dst, seg).unwrap();
        }
        let v = check_consistency(&h).unwrap().unwrap_err();
        assert!((v.residual[0] - 1.0).abs() < 1e-9 && v.residual[1].abs() < 1e-9, "{v:?}");
        assert_eq!(v.circuit[0], "u1->v3#0");
        let (f, b) = circuit_sides(&h, &v.edges);
        assert!((f.0 - b.0 - 1.0).abs() < 1e-9 && (f.1 - b.1).abs() < 1e-9);
    }

    #[test]
    fn ring_closes() {
        assert!(check_consistency(&build_ring(10.0, 2.0, 0.3)).unwrap().is_ok());
    }

    #[test]
    fn disconnected_and_interval_graphs_are_rejected() {
        let mut g = crate::graph::MetricGraph::new();
        g.add_named_edge("a", "b", Segment::line(1.0, 0.0).unwrap()).unwrap();
        g.add_vertex("c").unwrap();
        assert_eq!(check_consistency(&g), Err(GraphError::NotConnected));
        let mut h = crate::graph::MetricGraph::new();
        h.add_named_edge("a", "b", Segment::interval(1.0).unwrap()).unwrap();
        assert_eq!(check_consistency(&h), Err(GraphError::NotGeometric));
    }
}
