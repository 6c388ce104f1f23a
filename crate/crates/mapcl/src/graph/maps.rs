//! Map patterns and the split of a map into roads and junctions.

use super::{EdgeId, JunctionMeta, MapMeta, MetricGraph, Result, RoadMeta, VertexId};
use crate::segment::Segment;
use std::collections::BTreeSet;
use std::f64::consts::PI;

/// A maximal chain of edges whose inner vertices have one way in and one way out.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadPart {
    pub edges: Vec<EdgeId>,
    pub entrance: VertexId,
    pub exit: VertexId,
    pub lanes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionPart {
    pub edges: Vec<EdgeId>,
    pub vertices: Vec<VertexId>,
    pub entrances: Vec<VertexId>,
    pub exits: Vec<VertexId>,
}

/// A road end glued to a junction vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub road: usize,
    /// True for the road's exit, false for its entrance.
    pub road_exit: bool,
    pub junction: usize,
    pub vertex: VertexId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapStructure {
    pub roads: Vec<RoadPart>,
    pub junctions: Vec<JunctionPart>,
    pub connections: Vec<Connection>,
}

/// Splits a map into roads and junctions by degree analysis.
///
/// An edge belongs to a road when its source has a single outgoing edge and
/// its target a single incoming edge. Road edges chain through vertices with
/// one way in and one way out. The remaining edges form junctions, one per
/// weakly connected component.
pub fn decompose_map(g: &MetricGraph) -> MapStructure {
    let road_edge: Vec<bool> =
        g.edge_ids().map(|e| g.out_degree(g.edge(e).src) == 1 && g.in_degree(g.edge(e).dst) == 1).collect();
    let links = |v: VertexId| g.in_degree(v) == 1 && g.out_degree(v) == 1;
    let next_of = |e: EdgeId| -> Option<EdgeId> {
        let v = g.edge(e).dst;
        if !links(v) {
            return None;
        }
        g.out_edges(v).next().filter(|f| road_edge[f.0])
    };
    let prev_of = |e: EdgeId| -> Option<EdgeId> {
        let v = g.edge(e).src;
        if !links(v) {
            return None;
        }
        g.in_edges(v).next().filter(|f| road_edge[f.0])
    };
    let mut seen = vec![false; g.edge_count()];
    let mut roads = Vec::new();
    let mut chain_from = |start: EdgeId, seen: &mut Vec<bool>| {
        let mut edges = vec![start];
        seen[start.0] = true;
        let mut cur = start;
        while let Some(n) = next_of(cur) {
            if seen[n.0] {
                break;
            }
            seen[n.0] = true;
            edges.push(n);
            cur = n;
        }
        let (entrance, exit) = (g.edge(edges[0]).src, g.edge(*edges.last().unwrap()).dst);
        let lanes = g.lanes(entrance, exit).unwrap_or(1);
        roads.push(RoadPart { edges, entrance, exit, lanes });
    };
    for e in g.edge_ids() {
        if road_edge[e.0] && !seen[e.0] && prev_of(e).is_none() {
            chain_from(e, &mut seen);
        }
    }
    for e in g.edge_ids() {
        if road_edge[e.0] && !seen[e.0] {
            chain_from(e, &mut seen);
        }
    }

    let rest: Vec<EdgeId> = g.edge_ids().filter(|e| !road_edge[e.0]).collect();
    let mut comp = vec![usize::MAX; g.vertex_count()];
    let mut junctions: Vec<JunctionPart> = Vec::new();
    for &e in &rest {
        let s = g.edge(e).src;
        if comp[s] != usize::MAX {
            continue;
        }
        let id = junctions.len();
        let mut stack = vec![s];
        comp[s] = id;
        while let Some(v) = stack.pop() {
            for &f in &rest {
                let (a, b) = (g.edge(f).src, g.edge(f).dst);
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && comp[y] == usize::MAX {
                        comp[y] = id;
                        stack.push(y);
                    }
                }
            }
        }
        let edges: Vec<EdgeId> = rest.iter().copied().filter(|f| comp[g.edge(*f).src] == id).collect();
        let vertices: Vec<VertexId> = g.vertices().filter(|&v| comp[v] == id).collect();
        let entrances = vertices.iter().copied().filter(|&v| !edges.iter().any(|f| g.edge(*f).dst == v)).collect();
        let exits = vertices.iter().copied().filter(|&v| !edges.iter().any(|f| g.edge(*f).src == v)).collect();
        junctions.push(JunctionPart { edges, vertices, entrances, exits });
    }
    let mut connections = Vec::new();
    for (ri, r) in roads.iter().enumerate() {
        for (v, road_exit) in [(r.entrance, false), (r.exit, true)] {
            if comp[v] != usize::MAX {
                connections.push(Connection { road: ri, road_exit, junction: comp[v], vertex: v });
            }
        }
    }
    MapStructure { roads, junctions, connections }
}

/// A single road `entrance -seg-> exit`.
pub fn build_road(entrance: &str, seg: Segment, exit: &str, lanes: u32) -> Result<MetricGraph> {
    let mut g = MetricGraph::new();
    g.add_named_edge(entrance, exit, seg)?;
    g.meta = MapMeta {
        pattern: Some("road".into()),
        roads: vec![RoadMeta { entrance: entrance.into(), exit: exit.into(), lanes }],
        junctions: Vec::new(),
    };
    Ok(g)
}

/// A straight road `x -> y` heading east.
pub fn straight_road(len: f64, lanes: u32) -> MetricGraph {
    build_road("x", Segment::line(len, 0.0).expect("positive length"), "y", lanes).expect("single edge")
}

/// A junction connecting `entrances[k]` to `exits[j]` for each `(k, j, segment)`.
pub fn build_junction(entrances: &[&str], exits: &[&str], edges: &[(usize, usize, Segment)]) -> Result<MetricGraph> {
    let mut g = MetricGraph::new();
    for n in entrances.iter().chain(exits) {
        g.add_vertex(n)?;
    }
    for (k, j, s) in edges {
        g.add_named_edge(entrances[*k], exits[*j], s.clone())?;
    }
    g.meta.junctions.push(JunctionMeta {
        entrances: entrances.iter().map(|s| s.to_string()).collect(),
        exits: exits.iter().map(|s| s.to_string()).collect(),
        vertices: Vec::new(),
    });
    Ok(g)
}

pub fn build_intersection(entrances: &[&str], exits: &[&str], edges: &[(usize, usize, Segment)]) -> Result<MetricGraph> {
    let mut g = build_junction(entrances, exits, edges)?;
    g.meta.pattern = Some("intersection".into());
    Ok(g)
}

/// Several entrances feeding one exit.
pub fn build_merger(entrances: &[&str], exit: &str, segs: &[Segment]) -> Result<MetricGraph> {
    let edges: Vec<_> = segs.iter().cloned().enumerate().map(|(k, s)| (k, 0, s)).collect();
    let mut g = build_junction(entrances, &[exit], &edges)?;
    g.meta.pattern = Some("merger".into());
    Ok(g)
}

/// One entrance splitting into several exits.
pub fn build_fork(entrance: &str, exits: &[&str], segs: &[Segment]) -> Result<MetricGraph> {
    let edges: Vec<_> = segs.iter().cloned().enumerate().map(|(j, s)| (0, j, s)).collect();
    let mut g = build_junction(&[entrance], exits, &edges)?;
    g.meta.pattern = Some("fork".into());
    Ok(g)
}

/// The four-way intersection with turn radius `r` and lane gap `d`: from
/// each entrance one straight line, one right turn and one left turn.
pub fn example_intersection(r: f64, d: f64) -> MetricGraph {
    let en = ["u1", "u2", "u3", "u4"];
    let ex = ["v1", "v2", "v3", "v4"];
    let mut edges = Vec::new();
    for k in 0..4 {
        let phi = heading(k);
        // straight to the opposite side, right turn, left turn
        edges.push((k, (k + 2) % 4, Segment::line(2.0 * r + d, phi).unwrap()));
        edges.push((k, (k + 1) % 4, Segment::arc(r, phi, -PI / 2.0).unwrap()));
        edges.push((k, (k + 3) % 4, Segment::arc(r + d, phi, PI / 2.0).unwrap()));
    }
    build_intersection(&en, &ex, &edges).unwrap()
}

fn heading(k: usize) -> f64 {
    [0.0, PI / 2.0, PI, -PI / 2.0][k]
}

/// The intersection with an approach road into every entrance and a
/// departure road out of every exit, each of length `len`.
pub fn intersection_with_roads(r: f64, d: f64, len: f64) -> MetricGraph {
    let mut g = example_intersection(r, d);
    for k in 0..4 {
        let (w, u) = (format!("w{}", k + 1), format!("u{}", k + 1));
        g.add_named_edge(&w, &u, Segment::line(len, heading(k)).unwrap()).unwrap();
        g.meta.roads.push(RoadMeta { entrance: w, exit: u, lanes: 1 });
    }
    for k in 0..4 {
        // v_{k+1} is reached straight from the entrance two steps ahead
        let (v, y) = (format!("v{}", k + 1), format!("y{}", k + 1));
        g.add_named_edge(&v, &y, Segment::line(len, heading((k + 2) % 4)).unwrap()).unwrap();
        g.meta.roads.push(RoadMeta { entrance: v, exit: y, lanes: 1 });
    }
    g
}

/// A roundabout ring of radius `radius` with `n` arms, travelled
/// counterclockwise: `ex_k -> en_k -> ex_{k+1}`, each arc sweeping `pi / n`.
pub fn build_roundabout(n: usize, radius: f64) -> Result<MetricGraph> {
    let mut g = MetricGraph::new();
    let step = PI / n as f64;
    let names: Vec<String> =
        (1..=n).flat_map(|k| [format!("ex{k}"), format!("en{k}")]).collect();
    for name in &names {
        g.add_vertex(name)?;
    }
    for i in 0..2 * n {
        let seg = Segment::arc(radius, PI / 2.0 + i as f64 * step, step)?;
        g.add_named_edge(&names[i], &names[(i + 1) % (2 * n)], seg)?;
    }
    g.meta.pattern = Some("roundabout".into());
    g.meta.junctions.push(JunctionMeta {
        entrances: (1..=n).map(|k| format!("en{k}")).collect(),
        exits: (1..=n).map(|k| format!("ex{k}")).collect(),
        vertices: Vec::new(),
    });
    Ok(g)
}

/// The roundabout with a radial approach road into each `en_k` and a
/// departure road out of each `ex_k`.
pub fn roundabout_with_roads(n: usize, radius: f64, len: f64) -> Result<MetricGraph> {
    let mut g = build_roundabout(n, radius)?;
    let step = PI / n as f64;
    for k in 1..=n {
        let alpha = (2 * k - 1) as f64 * step;
        let (a, en) = (format!("a{k}"), format!("en{k}"));
        g.add_named_edge(&a, &en, Segment::line(len, alpha + PI)?)?;
        g.meta.roads.push(RoadMeta { entrance: a, exit: en, lanes: 1 });
        let beta = (2 * k - 2) as f64 * step;
        let (ex, b) = (format!("ex{k}"), format!("b{k}"));
        g.add_named_edge(&ex, &b, Segment::line(len, beta)?)?;
        g.meta.roads.push(RoadMeta { entrance: ex, exit: b, lanes: 1 });
    }
    Ok(g)
}

/// Two parallel lines of length `a` joined by half turns of radius `r`:
/// `x1 -line-> x2 -arc-> x3 -line-> x4 -arc-> x1`.
pub fn build_ring(a: f64, r: f64, phi: f64) -> MetricGraph {
    let mut g = MetricGraph::new();
    g.add_named_edge("x1", "x2", Segment::line(a, phi).unwrap()).unwrap();
    g.add_named_edge("x2", "x3", Segment::arc(r, phi, PI).unwrap()).unwrap();
    g.add_named_edge("x3", "x4", Segment::line(a, phi + PI).unwrap()).unwrap();
    g.add_named_edge("x4", "x1", Segment::arc(r, phi + PI, PI).unwrap()).unwrap();
    g.meta.pattern = Some("ring".into());
    g
}

/// Vertex names of the first junction recorded in the map metadata, falling
/// back to the first junction found by [`decompose_map`].
pub fn junction_names(g: &MetricGraph) -> Option<JunctionMeta> {
    if let Some(j) = g.meta.junctions.first() {
        return Some(j.clone());
    }
    let s = decompose_map(g);
    let j = s.junctions.first()?;
    let names = |vs: &[VertexId]| vs.iter().map(|&v| g.name(v).to_string()).collect::<Vec<_>>();
    let inner: BTreeSet<VertexId> = j.vertices.iter().copied().collect();
    Some(JunctionMeta {
        entrances: names(&j.entrances),
        exits: names(&j.exits),
        vertices: names(&inner.into_iter().collect::<Vec<_>>()),
    })
}
