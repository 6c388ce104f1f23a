use super::{EdgeId, GraphPosition, MetricGraph, VertexId};
use crate::segment::{approx, SegKind, Segment};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

/// A ride between two positions: the traversed edge pieces and the segment they spell.
#[derive(Debug, Clone, PartialEq)]
pub struct Ride {
    /// `(edge, from, to)` offsets with positive length, in travel order.
    pub pieces: Vec<(EdgeId, f64, f64)>,
    pub label: Segment,
}

/// Non-empty paths from `from` to `to` that repeat no edge and avoid
/// `excluded`, in lexicographic order of edge ids.
pub fn acyclic_paths(g: &MetricGraph, from: VertexId, to: VertexId, excluded: &[EdgeId]) -> Vec<Vec<EdgeId>> {
    let mut out = Vec::new();
    let mut used = vec![false; g.edge_count()];
    for e in excluded {
        used[e.0] = true;
    }
    let mut path = Vec::new();
    walk(g, from, to, &mut used, &mut path, &mut out);
    out
}

fn walk(g: &MetricGraph, at: VertexId, to: VertexId, used: &mut [bool], path: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>) {
    if !path.is_empty() && at == to {
        out.push(path.clone());
    }
    for e in g.out_edges(at).collect::<Vec<_>>() {
        if used[e.0] {
            continue;
        }
        used[e.0] = true;
        path.push(e);
        walk(g, g.edge(e).dst, to, used, path, out);
        path.pop();
        used[e.0] = false;
    }
}

/// The ways of writing a position as `(edge, offset)` with the offset in `[0, len]`.
fn representations(g: &MetricGraph, p: &GraphPosition) -> Vec<(EdgeId, f64)> {
    match *p {
        GraphPosition::OnEdge(e, a) => vec![(e, a)],
        GraphPosition::Vertex(v) => g
            .out_edges(v)
            .map(|e| (e, 0.0))
            .chain(g.in_edges(v).map(|e| (e, g.edge(e).seg.len())))
            .collect(),
    }
}

/// All rides from `p` to `q`, deduplicated by their traversed pieces.
pub fn rides(g: &MetricGraph, p: &GraphPosition, q: &GraphPosition) -> Vec<Ride> {
    let mut cache: HashMap<(VertexId, VertexId, Vec<EdgeId>), Vec<Vec<EdgeId>>> = HashMap::new();
    let mut paths = |from: VertexId, to: VertexId, excl: Vec<EdgeId>| -> Vec<Vec<EdgeId>> {
        cache.entry((from, to, excl.clone())).or_insert_with(|| acyclic_paths(g, from, to, &excl)).clone()
    };
    let mut shapes: Vec<Vec<(EdgeId, f64, f64)>> = Vec::new();
    for (e, a) in representations(g, p) {
        for (f, b) in representations(g, q) {
            let le = g.edge(e).seg.len();
            let full = |w: &[EdgeId]| w.iter().map(|&x| (x, 0.0, g.edge(x).seg.len())).collect::<Vec<_>>();
            if e == f {
                if a <= b || approx(a, b) {
                    shapes.push(vec![(e, a, b.max(a))]);
                }
                if b <= a || approx(a, b) {
                    let (src, dst) = (g.edge(e).src, g.edge(e).dst);
                    if src == dst {
                        shapes.push(vec![(e, a, le), (e, 0.0, b)]);
                    }
                    for w in paths(dst, src, vec![e]) {
                        let mut s = vec![(e, a, le)];
                        s.extend(full(&w));
                        s.push((e, 0.0, b));
                        shapes.push(s);
                    }
                }
            } else {
                if g.edge(e).dst == g.edge(f).src {
                    shapes.push(vec![(e, a, le), (f, 0.0, b)]);
                }
                for w in paths(g.edge(e).dst, g.edge(f).src, vec![e, f]) {
                    let mut s = vec![(e, a, le)];
                    s.extend(full(&w));
                    s.push((f, 0.0, b));
                    shapes.push(s);
                }
            }
        }
    }
    let mut out: Vec<Ride> = Vec::new();
    for shape in shapes {
        let zero = g.edge(shape[0].0).seg.zero_like();
        let pieces: Vec<_> = shape.into_iter().filter(|&(_, x, y)| !approx(x, y)).collect();
        if out.iter().any(|r| same_pieces(&r.pieces, &pieces)) {
            continue;
        }
        let mut label = Some(zero);
        for &(x, lo, hi) in &pieces {
            label = label.and_then(|l| g.edge(x).seg.split(lo, hi).ok().and_then(|s| l.concat(&s).ok()));
        }
        if let Some(label) = label {
            out.push(Ride { pieces, label });
        }
    }
    out
}

fn same_pieces(a: &[(EdgeId, f64, f64)], b: &[(EdgeId, f64, f64)]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0 && approx(x.1, y.1) && approx(x.2, y.2))
}

/// Shortest ride length from `p` to `q`, or infinity when no ride exists.
///
/// Interval graphs use a shortest-path search; other graphs enumerate rides,
/// because concatenation may be undefined along a path.
pub fn distance(g: &MetricGraph, p: &GraphPosition, q: &GraphPosition) -> f64 {
    if g.same_position(p, q) {
        return 0.0;
    }
    match g.kind() {
        Some(SegKind::Interval) | None => dijkstra(g, p, q),
        _ => distance_by_rides(g, p, q),
    }
}

pub fn distance_by_rides(g: &MetricGraph, p: &GraphPosition, q: &GraphPosition) -> f64 {
    if g.same_position(p, q) {
        return 0.0;
    }
    rides(g, p, q).iter().map(|r| r.label.len()).fold(f64::INFINITY, f64::min)
}

#[derive(PartialEq)]
struct Item(f64, VertexId);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn dijkstra(g: &MetricGraph, p: &GraphPosition, q: &GraphPosition) -> f64 {
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    let mut best = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    match *p {
        GraphPosition::Vertex(v) => {
            dist[v] = 0.0;
            heap.push(Item(0.0, v));
        }
        GraphPosition::OnEdge(e, a) => {
            let edge = g.edge(e);
            dist[edge.dst] = edge.seg.len() - a;
            heap.push(Item(dist[edge.dst], edge.dst));
            if let GraphPosition::OnEdge(f, b) = *q {
                if e == f && a <= b {
                    best = b - a;
                }
            }
        }
    }
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for e in g.out_edges(v) {
            let edge = g.edge(e);
            let nd = d + edge.seg.len();
            if nd < dist[edge.dst] {
                dist[edge.dst] = nd;
                heap.push(Item(nd, edge.dst));
            }
        }
    }
    let reach = match *q {
        GraphPosition::Vertex(w) => dist[w],
        GraphPosition::OnEdge(f, b) => dist[g.edge(f).src] + b,
    };
    best.min(reach)
}
