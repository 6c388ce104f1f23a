//! Fixtures: the two-scene overtaking scenario on a two-lane road, and for
//! every library rule a run that satisfies it and a run that violates it.

use super::{RuleConsts, Scene};
use crate::graph::{build_ring, EdgeId, intersection_with_roads, junction_names, roundabout_with_roads, straight_road, GraphPosition, JunctionMeta, MetricGraph};
use crate::syntax::{parse, Color, Sort};
use crate::world::{Action, Light, Object, Rule, Run, Scenario, Sign, Vehicle, WorldState};

fn path_edges(g: &MetricGraph, path: &[&str]) -> Vec<EdgeId> {
    path.windows(2)
        .map(|w| {
            let (u, v) = (g.vertex_id(w[0]).expect("route vertex"), g.vertex_id(w[1]).expect("route vertex"));
            g.out_edges(u).find(|&e| g.edge(e).dst == v).expect("route edge")
        })
        .collect()
}

/// A vehicle that has travelled `s` along `path`. Its itinerary is the rest
/// of the path up to the first vertex where the path is not smooth.
pub fn on_route(g: &MetricGraph, path: &[&str], s: f64, sp: f64, wt: f64) -> Vehicle {
    let edges = path_edges(g, path);
    let mut at = s;
    let mut i = 0;
    while i < edges.len() && at >= g.edge(edges[i]).seg.len() {
        at -= g.edge(edges[i]).seg.len();
        i += 1;
    }
    let last = edges.last().expect("route with an edge");
    let (pos, mut it) = if i == edges.len() {
        (GraphPosition::Vertex(g.edge(*last).dst), g.edge(*last).seg.zero_like())
    } else {
        let seg = &g.edge(edges[i]).seg;
        (g.position(edges[i], at).expect("inside the edge"), seg.split(at, seg.len()).expect("inside the edge"))
    };
    for e in edges.iter().skip(i + 1) {
        match it.concat(&g.edge(*e).seg) {
            Ok(longer) => it = longer,
            Err(_) => break,
        }
    }
    Vehicle { it, pos, sp, wt, ln: 1.0, weight: None, parked: false }
}

/// Distance, speed and waiting time at step `k` of a vehicle that drives at
/// `v` from `s0` to `stop`, waits there, and leaves at `v2` from step `go`.
pub fn stop_and_go(k: usize, s0: f64, v: f64, stop: f64, go: Option<usize>, v2: f64) -> (f64, f64, f64) {
    let arrive = ((stop - s0) / v).ceil().max(0.0) as usize;
    if k < arrive {
        return (s0 + v * k as f64, v, 0.0);
    }
    match go {
        Some(go) if k >= go => (stop + v2 * (k - go) as f64, v2, 0.0),
        _ => (stop, 0.0, (k - arrive) as f64),
    }
}

/// A run with one state per second for `n` seconds.
pub fn run_of(g: &MetricGraph, n: usize, frame: impl Fn(usize) -> Vec<(&'static str, Object)>) -> Run {
    let states = (0..n)
        .map(|k| {
            let mut s = WorldState::new(k as f64);
            for (id, o) in frame(k) {
                s.insert(id, o);
            }
            s
        })
        .collect();
    Run::new(g.clone(), states).expect("consistent frames")
}

fn vehicle(c: Vehicle) -> Object {
    Object::Vehicle(c)
}

fn sign_at(g: &MetricGraph, v: &str) -> Object {
    Object::Sign(Sign { pos: GraphPosition::Vertex(g.vertex_id(v).expect("vertex")), kind: "stop".into() })
}

fn light_at(g: &MetricGraph, v: &str, cl: Color) -> Object {
    Object::Light(Light { pos: GraphPosition::Vertex(g.vertex_id(v).expect("vertex")), cl })
}

/// A satisfying and a violating run for one rule.
pub struct RuleCase {
    pub rule: &'static str,
    pub junction: JunctionMeta,
    pub consts: RuleConsts,
    pub good: Run,
    pub bad: Run,
    /// First state of the violating run from which the rule fails.
    pub violation: usize,
}

/// Length of the approach and departure roads of the junction maps.
pub const ROAD: f64 = 100.0;

/// The intersection map used by the junction rules: turn radius 5, lane gap 2.
pub fn junction_map() -> MetricGraph {
    intersection_with_roads(5.0, 2.0, ROAD)
}

pub fn roundabout_map() -> MetricGraph {
    roundabout_with_roads(4, 10.0, ROAD).expect("four arms")
}

fn no_junction() -> JunctionMeta {
    JunctionMeta { entrances: Vec::new(), exits: Vec::new(), vertices: Vec::new() }
}

/// Arrival at an entrance at step 3 from 6 m out at 2 m/s.
fn arrive(k: usize, go: Option<usize>) -> (f64, f64, f64) {
    stop_and_go(k, ROAD - 6.0, 2.0, ROAD, go, 2.0)
}

pub fn rule_cases() -> Vec<RuleCase> {
    let road = straight_road(500.0, 1);
    let ring = build_ring(10.0, 2.0, 0.0);
    let jx = junction_map();
    let rb = roundabout_map();
    let (jm, rm) = (junction_names(&jx).expect("junction"), junction_names(&rb).expect("junction"));
    let k = RuleConsts::default();
    let mut out = Vec::new();
    let mut case = |rule, junction: &JunctionMeta, consts: &RuleConsts, good, bad, violation| {
        out.push(RuleCase { rule, junction: junction.clone(), consts: consts.clone(), good, bad, violation });
    };
    let on_road = |s: f64, sp: f64| vehicle(on_route(&road, &["x", "y"], s, sp, 0.0));

    // follower at 20 m/s closes on a leader at 5 m/s 100 m ahead: safe
    // distance (400 - 25) / 12 + 10 = 41.25 exceeds the gap 100 - 15k first at k = 4
    case(
        "safe-distance",
        &no_junction(),
        &k,
        run_of(&road, 6, |k| vec![("a", on_road(10.0 + 10.0 * k as f64, 10.0)), ("b", on_road(110.0 + 10.0 * k as f64, 10.0))]),
        run_of(&road, 6, |k| vec![("a", on_road(10.0 + 20.0 * k as f64, 20.0)), ("b", on_road(110.0 + 5.0 * k as f64, 5.0))]),
        4,
    );

    // constant 15 m/s toward a sign 90 m ahead: 90 - 15k < 225/12 + 7.5 first at k = 5
    let braking = [(10.0, 15.0), (25.0, 12.0), (37.0, 9.0), (46.0, 6.0), (52.0, 3.0), (55.0, 0.0)];
    let st = Object::Sign(Sign { pos: road.position(crate::graph::EdgeId(0), 100.0).expect("on the road"), kind: "stop".into() });
    let st2 = st.clone();
    case(
        "stop-sign-distance",
        &no_junction(),
        &k,
        run_of(&road, 6, move |k| vec![("c", on_road(braking[k].0, braking[k].1)), ("st", st.clone())]),
        run_of(&road, 6, move |k| vec![("c", on_road(10.0 + 15.0 * k as f64, 15.0)), ("st", st2.clone())]),
        5,
    );

    // 1000 kg at 3 m/s on a radius-2 arc sits on the bound C = 4500; at 4 m/s
    // the arc starts the itinerary at k = 2 (5 + 4k passes 10)
    let on_ring = |s: f64, sp: f64| {
        let mut c = on_route(&ring, &["x1", "x2", "x3", "x4"], s, sp, 0.0);
        c.weight = Some(1000.0);
        vehicle(c)
    };
    case(
        "centrifugal",
        &no_junction(),
        &RuleConsts { c_max: 4500.0, ..k.clone() },
        run_of(&ring, 4, |k| vec![("c", on_ring(5.0 + 3.0 * k as f64, 3.0))]),
        run_of(&ring, 4, |k| vec![("c", on_ring(5.0 + 4.0 * k as f64, 4.0))]),
        2,
    );

    let straight1 = ["w1", "u1", "v3", "y3"];
    let at = |path: &[&str], p: (f64, f64, f64)| vehicle(on_route(&jx, path, p.0, p.1, p.2));

    // arrives at the stop sign at k = 3 with the junction empty; the bad run never enters
    case(
        "all-way-stop-proceed",
        &jm,
        &k,
        run_of(&jx, 8, |k| vec![("c", at(&straight1, arrive(k, Some(5)))), ("st", sign_at(&jx, "u1"))]),
        run_of(&jx, 8, |k| vec![("c", at(&straight1, arrive(k, None))), ("st", sign_at(&jx, "u1"))]),
        3,
    );

    // approaching at 5 m/s, within 30 m of the sign from k = 2; another
    // vehicle occupies the junction until k = 10; the bad run enters at k = 9
    let other = |k: usize| at(&["u2", "v4", "y4"], (2.0 + k as f64, 1.0, 0.0));
    case(
        "all-way-stop-yield",
        &jm,
        &k,
        run_of(&jx, 14, |k| {
            vec![("c", at(&straight1, stop_and_go(k, 60.0, 5.0, ROAD, Some(11), 5.0))), ("o", other(k)), ("st", sign_at(&jx, "u1"))]
        }),
        run_of(&jx, 14, |k| {
            vec![("c", at(&straight1, stop_and_go(k, 60.0, 5.0, ROAD, Some(8), 5.0))), ("o", other(k)), ("st", sign_at(&jx, "u1"))]
        }),
        2,
    );

    // both arrive at k = 3; u2 is on the right of u1; the bad run lets u1 go first
    let from_u2 = ["w2", "u2", "v4", "y4"];
    case(
        "right-of-way",
        &jm,
        &k,
        run_of(&jx, 12, |k| vec![("c", at(&from_u2, arrive(k, Some(5)))), ("d", at(&straight1, arrive(k, Some(8))))]),
        run_of(&jx, 12, |k| vec![("c", at(&from_u2, arrive(k, Some(8)))), ("d", at(&straight1, arrive(k, Some(5))))]),
        3,
    );

    // opposite entrances u1 and u3, both straight, arriving at k = 3
    let straight3 = ["w3", "u3", "v1", "y1"];
    case(
        "opposite-straight",
        &jm,
        &k,
        run_of(&jx, 14, |k| vec![("c", at(&straight1, arrive(k, Some(3)))), ("d", at(&straight3, arrive(k, Some(3))))]),
        run_of(&jx, 14, |k| vec![("c", at(&straight1, arrive(k, Some(3)))), ("d", at(&straight3, arrive(k, Some(10))))]),
        3,
    );

    // u1 turns right and u3 turns left into v2; the bad run lets the left turn go and the right turn never
    let right1 = ["w1", "u1", "v2", "y2"];
    let left3 = ["w3", "u3", "v2", "y2"];
    case(
        "opposite-turn",
        &jm,
        &k,
        run_of(&jx, 10, |k| vec![("c", at(&right1, arrive(k, Some(3)))), ("d", at(&left3, arrive(k, Some(8))))]),
        run_of(&jx, 10, |k| vec![("c", at(&right1, arrive(k, None))), ("d", at(&left3, arrive(k, Some(3))))]),
        3,
    );

    // a circulating vehicle 1 m past ex1 reaches en1 at k = 7; the entering
    // vehicle waits at en1 from k = 3 and enters at k = 9, or at k = 4 in the bad run
    let enter1 = ["a1", "en1", "ex2", "b2"];
    let at_rb = |path: &[&str], p: (f64, f64, f64)| vehicle(on_route(&rb, path, p.0, p.1, p.2));
    let circ = |k: usize| at_rb(&["ex1", "en1", "ex2", "b2"], (1.0 + k as f64, 1.0, 0.0));
    case(
        "roundabout-yield",
        &rm,
        &k,
        run_of(&rb, 12, |k| vec![("c", at_rb(&enter1, arrive(k, Some(9)))), ("o", circ(k))]),
        run_of(&rb, 12, |k| vec![("c", at_rb(&enter1, arrive(k, Some(4)))), ("o", circ(k))]),
        3,
    );

    // no circulating traffic; the bad run never enters
    case(
        "roundabout-enter",
        &rm,
        &k,
        run_of(&rb, 8, |k| vec![("c", at_rb(&enter1, arrive(k, Some(5))))]),
        run_of(&rb, 8, |k| vec![("c", at_rb(&enter1, arrive(k, None)))]),
        3,
    );

    // 12 m/s toward a light at u1: within 30 m at k = 6 (28 m) and under the
    // safe distance 144/12 + 6 = 18 at k = 7 (16 m); the good run brakes by 2 m/s per second
    let slowing = [(40.0, 12.0), (52.0, 10.0), (62.0, 8.0), (70.0, 6.0), (76.0, 4.0), (80.0, 2.0), (82.0, 0.0), (82.0, 0.0), (82.0, 0.0)];
    case(
        "light-distance",
        &jm,
        &k,
        run_of(&jx, 9, |k| vec![("c", at(&straight1, (slowing[k].0, slowing[k].1, 0.0))), ("l", light_at(&jx, "u1", Color::Red))]),
        run_of(&jx, 8, |k| vec![("c", at(&straight1, (12.0 * k as f64, 12.0, 0.0))), ("l", light_at(&jx, "u1", Color::Red))]),
        7,
    );

    // green light at u1; within 30 m from k = 2; the bad run stops at the light
    case(
        "green-light-entry",
        &jm,
        &k,
        run_of(&jx, 12, |k| vec![("c", at(&straight1, (60.0 + 5.0 * k as f64, 5.0, 0.0))), ("l", light_at(&jx, "u1", Color::Green))]),
        run_of(&jx, 12, |k| vec![("c", at(&straight1, stop_and_go(k, 60.0, 5.0, ROAD, None, 0.0))), ("l", light_at(&jx, "u1", Color::Green))]),
        2,
    );
    out
}

/// The overtaking scenario: a two-lane road, its two scenes, a state for
/// each, and the rule that moves the overtaking vehicle back to lane 1.
pub struct Overtaking {
    pub map: MetricGraph,
    pub scenes: [Scene; 2],
    pub states: [WorldState; 2],
    pub scenario: Scenario,
}

fn lane_car(g: &MetricGraph, s: f64, sp: f64, ln: f64) -> Object {
    let mut c = on_route(g, &["x", "y"], s, sp, 0.0);
    c.ln = ln;
    Object::Vehicle(c)
}

pub fn overtaking() -> Overtaking {
    let g = straight_road(5000.0, 2);
    let vars = [("x", Sort::Vertex), ("s", Sort::Seg), ("y", Sort::Vertex)];
    let map = "road(x, s, y, 2)";
    let scene = |lane2: u8, dynamic: &str| {
        let add = format!("inside(@ego, {{x, y}}, 1) && inside(@c1, {{x, y}}, 1) && inside(@c2, {{x, y}}, {lane2})");
        Scene::parse(&vars, map, &add, dynamic).expect("scene syntax")
    };
    let speeds = "@ego.sp = 100 && @c1.sp = 100 && @c2.sp = 110";
    let first = scene(2, &format!("meets(@ego, 84, @c1) && meets(@c2, 100, @ego) && {speeds}"));
    let second = scene(1, &format!("meets(@ego, 20, @c2) && meets(@c2, 64, @c1) && {speeds}"));
    let state = |ego: f64, c1: f64, c2: f64, lane2: f64| {
        let mut s = WorldState::new(0.0);
        s.insert("ego", lane_car(&g, ego, 100.0, 1.0));
        s.insert("c1", lane_car(&g, c1, 100.0, 1.0));
        s.insert("c2", lane_car(&g, c2, 110.0, lane2));
        s
    };
    let scenario = Scenario {
        rules: vec![Rule {
            guard: parse("exists real d. meets(@ego, d, @c2) && d >= 10").expect("guard syntax"),
            commands: vec![("c2".into(), Action::Lane { ln: 1.0 })],
        }],
    };
    Overtaking {
        states: [state(1000.0, 1084.0, 900.0, 2.0), state(1000.0, 1084.0, 1020.0, 1.0)],
        map: g,
        scenes: [first, second],
        scenario,
    }
}
