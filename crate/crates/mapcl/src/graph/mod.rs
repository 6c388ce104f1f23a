//! Directed metric graphs whose edges carry segments.

mod geometry;
mod maps;
mod rides;
mod transform;

pub use geometry::{check_consistency, circuit_sides, Addressing, Violation};
pub use maps::{
    build_fork, build_intersection, build_junction, build_merger, build_ring, build_road, build_roundabout,
    decompose_map, example_intersection, intersection_with_roads, junction_names, roundabout_with_roads,
    straight_road, Connection, JunctionPart, MapStructure, RoadPart,
};
pub use rides::{acyclic_paths, distance, distance_by_rides, rides, Ride};
pub use transform::{abstract_graph, contract, is_contraction, isomorphic, refine, Abstraction};

use crate::segment::{approx, SegError, SegKind, Segment};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("invalid position: {0}")]
    Position(String),
    #[error(transparent)]
    Segment(#[from] SegError),
    #[error("graph is not weakly connected")]
    NotConnected,
    #[error("graph carries no geometry")]
    NotGeometric,
    #[error("malformed map: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub seg: Segment,
}

/// Road and junction annotations carried alongside a map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roads: Vec<RoadMeta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub junctions: Vec<JunctionMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadMeta {
    pub entrance: String,
    pub exit: String,
    #[serde(default = "one")]
    pub lanes: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionMeta {
    pub entrances: Vec<String>,
    pub exits: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<String>,
}

impl JunctionMeta {
    /// Every vertex of the junction.
    pub fn all_vertices(&self) -> Vec<String> {
        let mut all = self.entrances.clone();
        for v in self.exits.iter().chain(&self.vertices) {
            if !all.contains(v) {
                all.push(v.clone());
            }
        }
        all
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricGraph {
    names: Vec<String>,
    index: BTreeMap<String, VertexId>,
    edges: Vec<Edge>,
    pub meta: MapMeta,
}

/// A point of a metric graph: a vertex, or a strictly interior offset on an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphPosition {
    Vertex(VertexId),
    OnEdge(EdgeId, f64),
}

impl MetricGraph {
    pub fn new() -> MetricGraph {
        MetricGraph::default()
    }

    pub fn add_vertex(&mut self, name: &str) -> Result<VertexId> {
        if self.index.contains_key(name) {
            return Err(GraphError::Invalid(format!("duplicate vertex `{name}`")));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Returns the vertex named `name`, creating it when absent.
    pub fn vertex(&mut self, name: &str) -> VertexId {
        match self.index.get(name) {
            Some(&v) => v,
            None => self.add_vertex(name).unwrap(),
        }
    }

    pub fn add_edge(&mut self, src: VertexId, dst: VertexId, seg: Segment) -> Result<EdgeId> {
        if src >= self.names.len() || dst >= self.names.len() {
            return Err(GraphError::UnknownVertex(format!("{src} or {dst}")));
        }
        if !(seg.len() > 0.0) {
            return Err(GraphError::Invalid("edges must have positive length".into()));
        }
        if let Some(k) = self.kind() {
            if k != seg.kind() {
                return Err(GraphError::Invalid("all edges must carry segments of one kind".into()));
            }
        }
        if self.edges.iter().any(|e| e.src == src && e.dst == dst && e.seg.equiv(&seg)) {
            return Err(GraphError::Invalid(format!(
                "duplicate segment between `{}` and `{}`",
                self.names[src], self.names[dst]
            )));
        }
        self.edges.push(Edge { src, dst, seg });
        Ok(EdgeId(self.edges.len() - 1))
    }

    pub fn add_named_edge(&mut self, src: &str, dst: &str, seg: Segment) -> Result<EdgeId> {
        let (s, d) = (self.vertex(src), self.vertex(dst));
        self.add_edge(s, d, seg)
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.names.len()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.edge_ids().filter(move |&e| self.edges[e.0].src == v)
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.edge_ids().filter(move |&e| self.edges[e.0].dst == v)
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_edges(v).count()
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_edges(v).count()
    }

    /// The common segment kind of all edges, if any edge exists.
    pub fn kind(&self) -> Option<SegKind> {
        self.edges.first().map(|e| e.seg.kind())
    }

    /// Edge identifier `src->dst#k`, where `k` counts earlier parallel edges.
    pub fn edge_label(&self, e: EdgeId) -> String {
        let Edge { src, dst, .. } = self.edges[e.0];
        let k = self.edges[..e.0].iter().filter(|f| f.src == src && f.dst == dst).count();
        format!("{}->{}#{}", self.names[src], self.names[dst], k)
    }

    pub fn edge_by_label(&self, label: &str) -> Option<EdgeId> {
        let (pair, k) = match label.rsplit_once('#') {
            Some((p, k)) => (p, k.parse::<usize>().ok()?),
            None => (label, 0),
        };
        let (s, d) = pair.split_once("->")?;
        let (s, d) = (self.vertex_id(s)?, self.vertex_id(d)?);
        self.edge_ids().filter(|&e| self.edges[e.0].src == s && self.edges[e.0].dst == d).nth(k)
    }

    /// The unique edge out of `v` labeled `seg`, if exactly one exists.
    pub fn unique_out(&self, v: VertexId, seg: &Segment) -> Option<EdgeId> {
        let mut it = self.out_edges(v).filter(|&e| self.edges[e.0].seg.equiv(seg));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    pub fn unique_in(&self, v: VertexId, seg: &Segment) -> Option<EdgeId> {
        let mut it = self.in_edges(v).filter(|&e| self.edges[e.0].seg.equiv(seg));
        let first = it.next()?;
        it.next().is_none().then_some(first)
    }

    /// Position at offset `a` on `e`; endpoints collapse to vertices.
    pub fn position(&self, e: EdgeId, a: f64) -> Result<GraphPosition> {
        let edge = self.edges.get(e.0).ok_or_else(|| GraphError::UnknownEdge(format!("{}", e.0)))?;
        let len = edge.seg.len();
        if approx(a, 0.0) {
            return Ok(GraphPosition::Vertex(edge.src));
        }
        if approx(a, len) {
            return Ok(GraphPosition::Vertex(edge.dst));
        }
        if a < 0.0 || a > len {
            return Err(GraphError::Position(format!("offset {a} outside (0, {len})")));
        }
        Ok(GraphPosition::OnEdge(e, a))
    }

    /// Equality of positions up to the length tolerance.
    pub fn same_position(&self, p: &GraphPosition, q: &GraphPosition) -> bool {
        match (p, q) {
            (GraphPosition::Vertex(v), GraphPosition::Vertex(w)) => v == w,
            (GraphPosition::OnEdge(e, a), GraphPosition::OnEdge(f, b)) => e == f && approx(*a, *b),
            _ => false,
        }
    }

    /// The subgraph with the same vertices and the edges selected by `keep`;
    /// the second component maps old edge ids to new ones.
    pub fn restrict(&self, keep: impl Fn(EdgeId) -> bool) -> (MetricGraph, Vec<Option<EdgeId>>) {
        let mut g = MetricGraph { names: self.names.clone(), index: self.index.clone(), edges: Vec::new(), meta: self.meta.clone() };
        let mut map = vec![None; self.edges.len()];
        for e in self.edge_ids() {
            if keep(e) {
                g.edges.push(self.edges[e.0].clone());
                map[e.0] = Some(EdgeId(g.edges.len() - 1));
            }
        }
        (g, map)
    }

    /// Lanes recorded for the road from `entrance` to `exit`.
    pub fn lanes(&self, entrance: VertexId, exit: VertexId) -> Option<u32> {
        self.meta
            .roads
            .iter()
            .find(|r| r.entrance == self.names[entrance] && r.exit == self.names[exit])
            .map(|r| r.lanes)
    }

    pub fn pos_to_json(&self, p: &GraphPosition) -> serde_json::Value {
        match p {
            GraphPosition::Vertex(v) => serde_json::json!({ "vertex": self.names[*v] }),
            GraphPosition::OnEdge(e, a) => serde_json::json!({ "edge": self.edge_label(*e), "offset": a }),
        }
    }

    pub fn pos_from_json(&self, v: &serde_json::Value) -> Result<GraphPosition> {
        if let Some(name) = v.get("vertex").and_then(|x| x.as_str()) {
            return self.vertex_id(name).map(GraphPosition::Vertex).ok_or_else(|| GraphError::UnknownVertex(name.into()));
        }
        let label = v
            .get("edge")
            .and_then(|x| x.as_str())
            .ok_or_else(|| GraphError::Json(format!("position without vertex or edge: {v}")))?;
        let e = self.edge_by_label(label).ok_or_else(|| GraphError::UnknownEdge(label.into()))?;
        let a = v.get("offset").and_then(|x| x.as_f64()).ok_or_else(|| GraphError::Json("missing offset".into()))?;
        self.position(e, a)
    }

    pub fn fmt_position(&self, p: &GraphPosition) -> String {
        match p {
            GraphPosition::Vertex(v) => self.names[*v].clone(),
            GraphPosition::OnEdge(e, a) => format!("({}, {a})", self.edge_label(*e)),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let file = MapFile {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeFile { src: self.names[e.src].clone(), dst: self.names[e.dst].clone(), seg: e.seg.clone() })
                .collect(),
            meta: self.meta.clone(),
        };
        serde_json::to_value(file).expect("maps serialize")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<MetricGraph> {
        let file: MapFile = serde_json::from_value(v.clone()).map_err(|e| GraphError::Json(e.to_string()))?;
        let mut g = MetricGraph::new();
        for name in &file.vertices {
            g.add_vertex(name)?;
        }
        for e in file.edges {
            let s = g.vertex_id(&e.src).ok_or_else(|| GraphError::UnknownVertex(e.src.clone()))?;
            let d = g.vertex_id(&e.dst).ok_or_else(|| GraphError::UnknownVertex(e.dst.clone()))?;
            g.add_edge(s, d, e.seg)?;
        }
        g.meta = file.meta;
        Ok(g)
    }

    pub fn from_json_str(text: &str) -> Result<MetricGraph> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        MetricGraph::from_json(&v)
    }
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
    #[serde(default)]
    meta: MapMeta,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    src: String,
    dst: String,
    seg: Segment,
}

impl fmt::Display for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.edge_ids() {
            let edge = self.edge(e);
            writeln!(f, "{} -{}-> {}", self.names[edge.src], edge.seg, self.names[edge.dst])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64) -> Segment {
        Segment::interval(a).unwrap()
    }

    #[test]
    fn rejects_duplicate_parallel_segments() {
        let mut g = MetricGraph::new();
        g.add_named_edge("a", "b", iv(1.0)).unwrap();
        g.add_named_edge("a", "b", iv(2.0)).unwrap();
        assert!(g.add_named_edge("a", "b", iv(1.0)).is_err());
    }

    #[test]
    fn rejects_zero_length_and_mixed_kinds() {
        let mut g = MetricGraph::new();
        assert!(g.add_named_edge("a", "b", iv(0.0)).is_err());
        g.add_named_edge("a", "b", iv(1.0)).unwrap();
        assert!(g.add_named_edge("b", "a", Segment::line(1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn edge_labels_count_parallel_edges() {
        let mut g = MetricGraph::new();
        g.add_named_edge("a", "b", iv(1.0)).unwrap();
        let e = g.add_named_edge("a", "b", iv(2.0)).unwrap();
        assert_eq!(g.edge_label(e), "a->b#1");
        assert_eq!(g.edge_by_label("a->b#1"), Some(e));
        assert_eq!(g.edge_by_label("a->b"), Some(EdgeId(0)));
    }

    #[test]
    fn positions_collapse_at_endpoints() {
        let mut g = MetricGraph::new();
        let e = g.add_named_edge("a", "b", iv(2.0)).unwrap();
        assert_eq!(g.position(e, 0.0).unwrap(), GraphPosition::Vertex(0));
        assert_eq!(g.position(e, 2.0).unwrap(), GraphPosition::Vertex(1));
        assert_eq!(g.position(e, 1.0).unwrap(), GraphPosition::OnEdge(e, 1.0));
        assert!(g.position(e, 3.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = example_intersection(1.0, 0.5);
        let back = MetricGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        let p = GraphPosition::OnEdge(EdgeId(3), 0.5);
        assert_eq!(g.pos_from_json(&g.pos_to_json(&p)).unwrap(), p);
    }
}
