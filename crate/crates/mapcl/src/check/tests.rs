use super::*;
use crate::graph::{build_ring, build_roundabout, example_intersection, straight_road, EdgeId};
use crate::world::{Object, Vehicle};
use std::f64::consts::{FRAC_PI_2, PI};

fn interval_graph(edges: &[(&str, &str, f64)]) -> MetricGraph {
    let mut g = MetricGraph::new();
    for (a, b, l) in edges {
        g.add_named_edge(a, b, Segment::interval(*l).unwrap()).unwrap();
    }
    g
}

fn holds(g: &MetricGraph, src: &str) -> bool {
    check(g, &parse(src).unwrap()).unwrap()
}

fn vertex(g: &MetricGraph, name: &str) -> (String, Value) {
    (name.to_string(), Value::Vertex(g.vertex_id(name).unwrap()))
}

#[test]
fn fwd_resolves_in_the_middle_of_an_edge() {
    let g = interval_graph(&[("u", "v", 4.0)]);
    let p = PosTerm::Fwd(Ref::var("u"), interval(num(4.0)), num(2.0));
    assert_eq!(eval_pos(&g, &[vertex(&g, "u")], &p).unwrap(), Some(GraphPosition::OnEdge(EdgeId(0), 2.0)));
}

#[test]
fn fwd_uniqueness_counts_equal_segments_only() {
    let g = interval_graph(&[("u", "v", 4.0), ("u", "v", 5.0)]);
    let p = PosTerm::Fwd(Ref::var("u"), interval(num(4.0)), num(1.0));
    assert_eq!(eval_pos(&g, &[vertex(&g, "u")], &p).unwrap(), Some(GraphPosition::OnEdge(EdgeId(0), 1.0)));
    let twin = interval_graph(&[("u", "v", 4.0), ("u", "w", 4.0)]);
    assert_eq!(eval_pos(&twin, &[vertex(&twin, "u")], &p).unwrap(), None);
}

#[test]
fn fwd_at_the_far_end_fails() {
    let g = interval_graph(&[("u", "v", 4.0)]);
    let p = PosTerm::Fwd(Ref::var("u"), interval(num(4.0)), num(4.0));
    assert_eq!(eval_pos(&g, &[vertex(&g, "u")], &p).unwrap(), None);
}

#[test]
fn edge_atom_needs_exactly_one_edge() {
    let one = interval_graph(&[("u", "v", 1.0)]);
    let two = interval_graph(&[("u", "v", 1.0), ("v", "w", 2.0)]);
    assert!(holds(&one, "edge(@u, interval(1), @v)"));
    assert!(!holds(&two, "edge(@u, interval(1), @v)"));
    assert!(holds(&two, "edge(@u, interval(1), @v) ++ edge(@v, interval(2), @w)"));
    assert!(holds(&two, "C(edge(@u, interval(1), @v))"));
}

#[test]
fn universal_over_vertices_when_every_vertex_meets_an_atom() {
    let loops = interval_graph(&[("u", "u", 2.0), ("u", "u", 1.0)]);
    assert!(!holds(&loops, "forall vertex y. edge(@u, interval(2), y)"));
    assert!(holds(&loops, "exists vertex y. !edge(@u, interval(2), y)"));
    let one = interval_graph(&[("u", "u", 2.0)]);
    assert!(holds(&one, "forall vertex y. edge(@u, interval(2), y)"));
}

#[test]
fn coalescing_is_not_idempotent() {
    let twins = interval_graph(&[("u", "v", 1.0), ("w", "z", 1.0)]);
    let phi = "exists vertex x. exists vertex y. edge(x, interval(1), y)";
    assert!(!holds(&twins, phi));
    assert!(holds(&twins, &format!("({phi}) ++ ({phi})")));
}

#[test]
fn coalescing_allows_overlap() {
    let g = interval_graph(&[("u", "v", 1.0)]);
    assert!(holds(&g, "edge(@u, interval(1), @v) ++ edge(@u, interval(1), @v)"));
    assert!(holds(&g, "edge(@u, interval(1), @v) ++ true"));
}

#[test]
fn real_quantifier_over_distances() {
    let g = straight_road(100.0, 2);
    assert!(holds(&g, "exists real t. dist(@x, @y) = t && t > 99"));
    assert!(holds(&g, "forall real t. dist(@x, @y) = t => t = 100"));
    assert!(!holds(&g, "exists real t. dist(@y, @x) = t"));
}

#[test]
fn segment_quantifier_over_rides() {
    let g = interval_graph(&[("u", "v", 3.0), ("v", "w", 4.0)]);
    assert!(holds(&g, "exists seg z. ride(@u, z, @w) && len(z) = 7"));
    assert!(holds(&g, "forall seg z. ride(@u, z, @w) => z = interval(3) ^ interval(4)"));
}

#[test]
fn unbounded_reals_fall_back_to_the_solver() {
    let g = interval_graph(&[("u", "v", 3.0)]);
    assert!(holds(&g, "exists real t. t > 3 && t < 4"));
    assert!(!holds(&g, "exists real t. t > 4 && t < 3"));
    assert!(holds(&g, "forall real t. t >= 0 || t < 0"));
}

#[test]
fn solver_fallback_can_be_disabled() {
    let g = interval_graph(&[("u", "v", 3.0)]);
    let opts = CheckOptions { solver_fallback: false, ..CheckOptions::default() };
    let c = Checker::new(&g).unwrap().with_options(opts);
    let err = c.check(&parse("exists real t. t > 3 && t < 4").unwrap()).unwrap_err();
    assert!(matches!(err, CheckError::Unsupported(_)), "{err}");
}

#[test]
fn ring_satisfies_its_spec() {
    let g = build_ring(10.0, 2.0, 0.0);
    let spec = ring_spec();
    assert!(check(&g, &spec).unwrap());
    assert!(check(&g, &to_top_down(&spec).unwrap()).unwrap());
    assert!(check(&g, &to_weak_top_down(&spec).unwrap()).unwrap());
    let c = Checker::new(&g).unwrap();
    let w = c.witness(&spec).unwrap().unwrap();
    assert_eq!(w[0], ("a".to_string(), Value::Real(10.0)));
    assert_eq!(w[1], ("r".to_string(), Value::Real(2.0)));
}

#[test]
fn rotated_ring_finds_its_heading() {
    let g = build_ring(10.0, 2.0, 0.75);
    let w = Checker::new(&g).unwrap().witness(&ring_spec()).unwrap().unwrap();
    let Value::Real(phi) = w[2].1 else { panic!() };
    assert!(crate::segment::angle_eq(phi, 0.75));
}

#[test]
fn broken_ring_fails_its_spec() {
    let mut g = MetricGraph::new();
    g.add_named_edge("x1", "x2", Segment::line(10.0, 0.0).unwrap()).unwrap();
    g.add_named_edge("x2", "x3", Segment::arc(2.0, 0.0, PI).unwrap()).unwrap();
    g.add_named_edge("x3", "x4", Segment::line(11.0, PI).unwrap()).unwrap();
    g.add_named_edge("x4", "x1", Segment::arc(2.0, PI, PI).unwrap()).unwrap();
    assert!(!check(&g, &ring_spec()).unwrap());
}

#[test]
fn roundabout_satisfies_its_spec_and_bottom_up_form() {
    let g = build_roundabout(3, 20.0).unwrap();
    assert!(check(&g, &roundabout_spec(3)).unwrap());
    assert!(!check(&g, &roundabout_spec(2)).unwrap());
    assert!(check(&g, &bottom_up(&g).unwrap()).unwrap());
}

#[test]
fn intersection_satisfies_its_bottom_up_form() {
    let g = example_intersection(5.0, 3.0);
    assert!(check(&g, &bottom_up(&g).unwrap()).unwrap());
    let h = example_intersection(5.0, 4.0);
    assert!(!check(&h, &bottom_up(&g).unwrap()).unwrap());
}

#[test]
fn junction_predicates_on_the_intersection() {
    let g = example_intersection(5.0, 3.0);
    let j = "{@u1, @u2, @u3, @u4, @v1, @v2, @v3, @v4}";
    assert!(holds(&g, &format!("right_of(@u2, @u1, {j})")));
    assert!(!holds(&g, &format!("right_of(@u1, @u1, {j})")));
    assert!(holds(&g, &format!("opposite(@u1, @u3, {j})")));
    assert!(!holds(&g, &format!("opposite(@u1, @u2, {j})")));
}

#[test]
fn angle_predicates_need_curves() {
    let g = interval_graph(&[("u", "v", 3.0)]);
    let err = check(&g, &parse("right_of(@u, @v, {@u, @v})").unwrap()).unwrap_err();
    assert!(matches!(err, CheckError::Unsupported(_)));
}

fn state_with(g: &MetricGraph, it: Segment, pos: GraphPosition) -> WorldState {
    let mut s = WorldState::new(0.0);
    s.insert("c", Object::Vehicle(Vehicle { it, pos, sp: 10.0, wt: 0.0, ln: 1.0, weight: None, parked: false }));
    let _ = g;
    s
}

#[test]
fn turn_right_matches_the_itinerary() {
    let g = example_intersection(5.0, 3.0);
    let u1 = g.vertex_id("u1").unwrap();
    let it = Segment::arc(5.0, 0.0, -FRAC_PI_2).unwrap().concat(&Segment::line(50.0, -FRAC_PI_2).unwrap()).unwrap();
    let s = state_with(&g, it, GraphPosition::Vertex(u1));
    let j = "{@u1, @u2, @u3, @u4, @v1, @v2, @v3, @v4}";
    let f = |src: String| check_m2cl(&g, &s, &parse(&src).unwrap()).unwrap();
    assert!(f(format!("turn_right(@c, {j})")));
    assert!(!f(format!("turn_left(@c, {j})")));
    assert!(!f(format!("go_straight(@c, {j})")));
    assert!(f("arc_ahead(@c, 5)".into()));
    assert!(f("exists real r. arc_ahead(@c, r) && r < 6".into()));
    assert!(f("passes(@c, @v2)".into()));
    assert!(!f("passes(@c, @v3)".into()));
}

#[test]
fn objects_meet_along_itineraries() {
    let g = straight_road(100.0, 1);
    let e = EdgeId(0);
    let mut s = state_with(&g, Segment::line(90.0, 0.0).unwrap(), GraphPosition::OnEdge(e, 10.0));
    s.insert("d", Object::Vehicle(Vehicle {
        it: Segment::line(10.0, 0.0).unwrap(),
        pos: GraphPosition::OnEdge(e, 40.0),
        sp: 4.0,
        wt: 0.0,
        ln: 1.0,
        weight: None,
        parked: false,
    }));
    let f = |src: &str| check_m2cl(&g, &s, &parse(src).unwrap()).unwrap();
    assert!(f("meets(@c, 30, @d)"));
    assert!(!f("meets(@d, 30, @c)"));
    assert!(f("exists real d. meets(@c, d, @d) && d < 31"));
    assert!(f("exists vehicle y. exists vehicle z. meets(y, 30, z)"));
    assert!(f("inside(@c, {@x, @y}, 1)"));
    assert!(!f("inside(@c, {@x, @y}, 2)"));
    assert!(f("on_edges(@d, {@x, @y})"));
    assert!(f("@c.sp > @d.sp && safe_dist(@c, @d) > 0"));
}

#[test]
fn safe_distance_formula() {
    let g = straight_road(100.0, 1);
    let mut s = state_with(&g, Segment::line(90.0, 0.0).unwrap(), GraphPosition::OnEdge(EdgeId(0), 10.0));
    s.insert("d", Object::Vehicle(Vehicle {
        it: Segment::line(10.0, 0.0).unwrap(),
        pos: GraphPosition::OnEdge(EdgeId(0), 40.0),
        sp: 4.0,
        wt: 0.0,
        ln: 1.0,
        weight: None,
        parked: false,
    }));
    let expected = (100.0 - 16.0) / 12.0 + 5.0;
    let src = format!("safe_dist(@c, @d) = {expected}");
    assert!(check_m2cl(&g, &s, &parse(&src).unwrap()).unwrap());
}

#[test]
fn residue_of_a_ride_on_one_edge() {
    let g = interval_graph(&[("u", "v", 3.0)]);
    let f = parse("exists seg z. ride(@u, z, @v)").unwrap();
    let r = residue(&g, &[], &f).unwrap();
    let lra = crate::arith::tr1(&r).unwrap();
    assert!(crate::arith::solve(&lra).is_sat());
    let bad = parse("exists seg z. ride(@u, z, @v) && len(z) = 4").unwrap();
    let r = residue(&g, &[], &bad).unwrap();
    assert!(!crate::arith::solve(&crate::arith::tr1(&r).unwrap()).is_sat());
}

#[test]
fn residue_of_a_trivial_distance_is_true() {
    let g = interval_graph(&[("u", "v", 3.0)]);
    let r = residue(&g, &[], &parse("dist(@u, @u) = 0").unwrap()).unwrap();
    assert!(crate::arith::solve(&crate::arith::tr1(&r).unwrap()).is_sat());
}

#[test]
fn residue_agrees_with_ground_evaluation() {
    let g = interval_graph(&[("u", "v", 3.0), ("v", "w", 2.0), ("u", "w", 5.0)]);
    for src in [
        "dist(@u, @w) = 5",
        "dist(@u, @w) = 4",
        "ride(@u, interval(5), @w)",
        "ride(@u, interval(3) ^ interval(2), @w)",
        "C(edge(@u, interval(3), @v))",
        "edge(@u, interval(3), @v) ++ edge(@v, interval(2), @w) ++ edge(@u, interval(5), @w)",
        "exists vertex x. C(edge(x, interval(2), @w))",
    ] {
        let f = parse(src).unwrap();
        let direct = check(&g, &f).unwrap();
        let r = residue(&g, &[], &f).unwrap();
        let via = crate::arith::solve(&crate::arith::tr1(&r).unwrap()).is_sat();
        assert_eq!(direct, via, "{src}");
    }
}

#[test]
fn explain_shows_witnesses() {
    let g = interval_graph(&[("u", "v", 3.0)]);
    let c = Checker::new(&g).unwrap();
    let t = explain(&c, &parse("exists vertex x. C(edge(x, interval(3), @v)) && !(dist(x, @v) = 2)").unwrap()).unwrap();
    assert!(t.starts_with("(exists #t (x u) (and #t (atom #t"), "{t}");
}

#[test]
fn coalesce_cap_is_reported() {
    let mut g = MetricGraph::new();
    for k in 0..20 {
        g.add_named_edge(&format!("a{k}"), &format!("b{k}"), Segment::interval(1.0).unwrap()).unwrap();
    }
    let f = parse("C(true) ++ C(true)").unwrap();
    let opts = CheckOptions { coalesce_cap: 8, ..CheckOptions::default() };
    let err = Checker::new(&g).unwrap().with_options(opts).check(&f).unwrap_err();
    assert!(matches!(err, CheckError::CoalesceCap { .. }), "{err}");
}

#[test]
fn subsets_by_size() {
    assert_eq!(subsets_of_size(0b1011, 2), vec![0b0011, 0b1001, 0b1010]);
    assert_eq!(subsets_of_size(0b1011, 0), vec![0]);
    assert!(subsets_of_size(0b1, 2).is_empty());
}
