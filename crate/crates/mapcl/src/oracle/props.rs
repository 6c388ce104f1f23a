use super::Report;
use crate::graph::{abstract_graph, contract, distance, is_contraction, refine, rides, Abstraction, EdgeId, GraphPosition, MetricGraph};
use crate::segment::{abstract_ci, Segment};
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI};

fn random_segment(rng: &mut impl Rng, curves: bool) -> Segment {
    let len = rng.gen_range(1..=3) as f64;
    if !curves {
        return Segment::interval(len).expect("positive");
    }
    let phi = [0.0, FRAC_PI_2, PI, -FRAC_PI_2][rng.gen_range(0..4)];
    if rng.gen_bool(0.6) {
        Segment::line(len, phi).expect("positive")
    } else {
        let theta = if rng.gen_bool(0.5) { FRAC_PI_2 } else { -FRAC_PI_2 };
        Segment::arc(len, phi, theta).expect("positive")
    }
}

/// A random graph with 2 to 5 vertices and 2 to 7 edges.
pub fn random_graph(rng: &mut impl Rng, curves: bool) -> MetricGraph {
    let n = rng.gen_range(2..=5);
    let mut g = MetricGraph::new();
    for i in 0..n {
        g.add_vertex(&format!("v{i}")).expect("fresh name");
    }
    for _ in 0..rng.gen_range(2..=7) {
        let (s, d) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let _ = g.add_edge(s, d, random_segment(rng, curves));
    }
    g
}

/// A point strictly inside `(0, len)` at a quarter of the length.
fn interior(rng: &mut impl Rng, len: f64) -> f64 {
    len * rng.gen_range(1..4) as f64 / 4.0
}

/// Vertices plus one interior point on every edge.
fn sample_positions(rng: &mut impl Rng, g: &MetricGraph) -> Vec<GraphPosition> {
    let mut out: Vec<GraphPosition> = g.vertices().map(GraphPosition::Vertex).collect();
    for e in g.edge_ids() {
        out.push(GraphPosition::OnEdge(e, interior(rng, g.edge(e).seg.len())));
    }
    out
}

/// Where a position of `g` lands after `refine(g, e, cuts)`.
fn refined_position(g: &MetricGraph, fine: &MetricGraph, e: EdgeId, cuts: &[f64], p: &GraphPosition) -> GraphPosition {
    match *p {
        GraphPosition::Vertex(v) => GraphPosition::Vertex(v),
        GraphPosition::OnEdge(f, a) if f.0 < e.0 => GraphPosition::OnEdge(f, a),
        GraphPosition::OnEdge(f, a) if f.0 > e.0 => GraphPosition::OnEdge(EdgeId(f.0 - 1), a),
        GraphPosition::OnEdge(_, a) => {
            let first = g.edge_count() - 1;
            let k = cuts.iter().filter(|&&c| c < a).count();
            let start = if k == 0 { 0.0 } else { cuts[k - 1] };
            fine.position(EdgeId(first + k), a - start).expect("offset inside the piece")
        }
    }
}

fn same_distance(x: f64, y: f64) -> bool {
    (x.is_infinite() && y.is_infinite()) || (x - y).abs() <= 1e-9 * x.abs().max(1.0)
}

fn same_labels(a: &[Segment], b: &[Segment]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| y.equiv(x))) && b.iter().all(|y| a.iter().any(|x| x.equiv(y)))
}

/// Refines a random edge of a random graph at one or two cuts. Distances
/// and ride labels between all sampled positions must be unchanged, and
/// contracting the cut vertices must give back the original graph.
pub fn refine_round_trips(rng: &mut impl Rng, trials: usize) -> Vec<Report> {
    let mut iso = Report::new("refinement isometry");
    let mut bisim = Report::new("refinement ride bisimulation");
    let mut round = Report::new("refine then contract");
    for trial in 0..trials {
        let g = random_graph(rng, trial % 2 == 1);
        let e = EdgeId(rng.gen_range(0..g.edge_count()));
        let len = g.edge(e).seg.len();
        let mut cuts: Vec<f64> = (0..rng.gen_range(1..=2)).map(|_| interior(rng, len)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let fine = refine(&g, e, &cuts).expect("cuts are interior");
        let ps = sample_positions(rng, &g);
        let mapped: Vec<GraphPosition> = ps.iter().map(|p| refined_position(&g, &fine, e, &cuts, p)).collect();
        for (i, p) in ps.iter().enumerate() {
            for (j, q) in ps.iter().enumerate() {
                let (d0, d1) = (distance(&g, p, q), distance(&fine, &mapped[i], &mapped[j]));
                iso.record(same_distance(d0, d1), || format!("trial {trial}: d({p:?}, {q:?}) = {d0} but {d1} after refining"));
                let l0: Vec<Segment> = rides(&g, p, q).into_iter().map(|r| r.label).collect();
                let l1: Vec<Segment> = rides(&fine, &mapped[i], &mapped[j]).into_iter().map(|r| r.label).collect();
                bisim.record(same_labels(&l0, &l1), || format!("trial {trial}: {} vs {} rides from {p:?} to {q:?}", l0.len(), l1.len()));
            }
        }
        round.record(is_contraction(&fine, &g), || format!("trial {trial}: contracting the cuts does not restore the graph"));
    }
    vec![iso, bisim, round]
}

/// A curve graph with contractible chains whose abstraction, before and
/// after contraction, keeps every edge.
fn chained_curve_graph(rng: &mut impl Rng) -> MetricGraph {
    loop {
        let mut g = random_graph(rng, true);
        for _ in 0..rng.gen_range(1..=3) {
            let e = EdgeId(rng.gen_range(0..g.edge_count()));
            let cut = interior(rng, g.edge(e).seg.len());
            g = refine(&g, e, &[cut]).expect("interior cut");
        }
        let keeps = |h: &MetricGraph| abstract_graph(h, Abstraction::CurveToInterval).expect("curve graph").edge_count() == h.edge_count();
        if keeps(&g) && keeps(&contract(&g)) {
            return g;
        }
    }
}

/// Abstracts random curve graphs to intervals. Every ride must have an
/// abstract counterpart over the same pieces, and abstracting the
/// contraction must give a contraction of the abstraction.
pub fn abstraction_cases(rng: &mut impl Rng, trials: usize) -> Vec<Report> {
    let mut sim = Report::new("abstraction ride simulation");
    let mut comm = Report::new("contraction commutes with abstraction");
    for trial in 0..trials {
        let g = chained_curve_graph(rng);
        let a = abstract_graph(&g, Abstraction::CurveToInterval).expect("curve graph");
        let ps = sample_positions(rng, &g);
        for p in &ps {
            for q in &ps {
                let abstract_rides = rides(&a, p, q);
                for r in rides(&g, p, q) {
                    let image = r.label.curve().map(abstract_ci);
                    let ok = abstract_rides.iter().any(|s| {
                        s.pieces.len() == r.pieces.len() && image.as_ref().is_some_and(|i| i.equiv(&s.label))
                    });
                    sim.record(ok, || format!("trial {trial}: ride {:?} from {p:?} to {q:?} has no image", r.pieces));
                }
            }
        }
        let coarse = contract(&g);
        let ac = abstract_graph(&coarse, Abstraction::CurveToInterval).expect("curve graph");
        comm.record(is_contraction(&a, &ac), || format!("trial {trial}: abstraction of the contraction is not a contraction"));
    }
    vec![sim, comm]
}
