use super::*;
use crate::graph::{build_ring, distance, straight_road};
use crate::world::Sign;
use proptest::prelude::*;
use std::f64::consts::PI;

fn car(g: &MetricGraph, at: f64, it: Segment, sp: f64) -> Object {
    let pos = g.position(crate::graph::EdgeId(0), at).unwrap();
    Object::Vehicle(Vehicle { it, pos, sp, wt: 0.0, ln: 1.0, weight: None, parked: false })
}

fn offset(p: &GraphPosition) -> f64 {
    match *p {
        GraphPosition::OnEdge(_, a) => a,
        GraphPosition::Vertex(v) => panic!("at vertex {v}"),
    }
}

fn none() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

#[test]
fn constant_speed_travel() {
    let g = straight_road(100.0, 1);
    let mut s = WorldState::new(0.0);
    s.insert("c", car(&g, 40.0, Segment::line(60.0, 0.0).unwrap(), 10.0));
    let n = step(&g, &s, 0.5, &none()).unwrap();
    let c = n.vehicle("c").unwrap();
    assert_eq!(offset(&c.pos), 45.0);
    assert!((c.it.len() - 55.0).abs() < 1e-12);
    assert_eq!(c.sp, 10.0);
    assert_eq!(n.t, 0.5);
}

#[test]
fn waiting_time_accumulates_and_resets() {
    let g = straight_road(100.0, 1);
    let mut s = WorldState::new(0.0);
    s.insert("c", car(&g, 40.0, Segment::line(60.0, 0.0).unwrap(), 0.0));
    let s1 = step(&g, &s, 1.0, &none()).unwrap();
    assert_eq!(s1.vehicle("c").unwrap().wt, 1.0);
    let s2 = step(&g, &s1, 1.0, &none()).unwrap();
    assert_eq!(s2.vehicle("c").unwrap().wt, 2.0);
    let go = BTreeMap::from([("c".to_string(), 2.0)]);
    let s3 = step(&g, &s2, 1.0, &go).unwrap();
    assert_eq!(s3.vehicle("c").unwrap().wt, 0.0);
    assert_eq!(s3.vehicle("c").unwrap().sp, 2.0);
}

#[test]
fn braking_below_zero_stops() {
    let g = straight_road(100.0, 1);
    let mut s = WorldState::new(0.0);
    s.insert("c", car(&g, 10.0, Segment::line(90.0, 0.0).unwrap(), 1.0));
    let n = step(&g, &s, 1.0, &BTreeMap::from([("c".to_string(), -6.0)])).unwrap();
    assert_eq!(n.vehicle("c").unwrap().sp, 0.0);
    assert_eq!(offset(&n.vehicle("c").unwrap().pos), 11.0);
}

#[test]
fn following_the_itinerary_through_a_vertex() {
    let g = build_ring(10.0, 2.0, 0.0);
    let x1 = g.vertex_id("x1").unwrap();
    let it = Segment::line(10.0, 0.0).unwrap().concat(&Segment::arc(2.0, 0.0, PI).unwrap()).unwrap();
    let from = GraphPosition::Vertex(x1);
    let (to, covered) = advance(&g, &from, &it, 12.0);
    assert_eq!(covered, 12.0);
    let head = it.split(0.0, 12.0).unwrap();
    assert!(rides(&g, &from, &to).iter().any(|r| r.label.equiv(&head)), "{to:?}");
}

#[test]
fn exhausted_itinerary_parks() {
    let g = straight_road(100.0, 1);
    let mut s = WorldState::new(0.0);
    s.insert("c", car(&g, 90.0, Segment::line(10.0, 0.0).unwrap(), 15.0));
    let n = step(&g, &s, 1.0, &BTreeMap::from([("c".to_string(), 1.0)])).unwrap();
    let c = n.vehicle("c").unwrap();
    assert!(c.parked);
    assert_eq!(c.sp, 0.0);
    assert_eq!(c.pos, GraphPosition::Vertex(g.vertex_id("y").unwrap()));
    assert_eq!(c.it.len(), 0.0);
    let later = step(&g, &n, 1.0, &BTreeMap::from([("c".to_string(), 3.0)])).unwrap();
    assert_eq!(later.vehicle("c").unwrap().sp, 0.0);
}

#[test]
fn invalid_steps_are_rejected() {
    let g = straight_road(100.0, 1);
    let s = WorldState::new(0.0);
    assert!(matches!(step(&g, &s, 0.0, &none()), Err(SimError::Step(_))));
    assert!(matches!(step(&g, &s, 1.0, &BTreeMap::from([("ghost".to_string(), 1.0)])), Err(SimError::UnknownVehicle(_))));
}

fn stop_sign_world(sp: f64) -> (MetricGraph, WorldState) {
    let g = straight_road(200.0, 1);
    let mut s = WorldState::new(0.0);
    s.insert("c", car(&g, 10.0, Segment::line(190.0, 0.0).unwrap(), sp));
    let st = g.position(crate::graph::EdgeId(0), 100.0).unwrap();
    s.insert("st", Object::Sign(Sign { pos: st, kind: "stop".into() }));
    (g, s)
}

fn stop_rule(g: &MetricGraph) -> Scenario {
    let v = json!({"rules": [{
        "guard": "exists real d. meets(@c, d, @st)",
        "commands": [{"vehicle": "c", "action": "move_at", "cnt": 0, "d": "d"}]
    }]});
    Scenario::from_json(g, &v).unwrap()
}

#[test]
fn stop_sign_rule_stops_at_the_sign() {
    let (g, s) = stop_sign_world(15.0);
    let run = run_scenario(&g, &s, &stop_rule(&g), &SimConfig::default(), 30.0).unwrap();
    let last = run.states.last().unwrap().vehicle("c").unwrap();
    assert_eq!(last.sp, 0.0);
    let gap = 100.0 - offset(&last.pos);
    assert!((0.0..=0.1).contains(&gap.abs()), "stopped {gap} m before the sign");
    assert_eq!(run.events.len(), 1);
    assert_eq!(run.events[0].kind, EventKind::Fired);
}

#[test]
fn infeasible_stop_is_a_violation_and_brakes() {
    let (g, s) = stop_sign_world(40.0);
    let run = run_scenario(&g, &s, &stop_rule(&g), &SimConfig::default(), 10.0).unwrap();
    assert!(matches!(run.events[0].kind, EventKind::Infeasible(_)), "{:?}", run.events);
    let second = run.states[1].vehicle("c").unwrap();
    assert!((second.sp - (40.0 - 6.0 * 0.1)).abs() < 1e-9);
    assert_eq!(run.states.last().unwrap().vehicle("c").unwrap().sp, 0.0);
}

#[test]
fn empty_scenario_coasts() {
    let (g, s) = stop_sign_world(7.0);
    let run = run_scenario(&g, &s, &Scenario::default(), &SimConfig::default(), 2.0).unwrap();
    assert_eq!(run.states.len(), 21);
    let mut coast = s.clone();
    for st in &run.states[1..] {
        coast = step(&g, &coast, 0.1, &none()).unwrap();
        assert_eq!(coast.objects, st.objects);
        assert!((coast.t - st.t).abs() < 1e-12);
    }
    assert!(run.events.is_empty());
}

#[test]
fn guards_fire_on_rising_edges_only() {
    let (g, s) = stop_sign_world(5.0);
    let v = json!({"rules": [
        {"guard": "true", "commands": [{"vehicle": "c", "action": "lane", "ln": 2}]},
        {"guard": "true", "commands": [{"vehicle": "c", "action": "lane", "ln": 3}]}
    ]});
    let sc = Scenario::from_json(&g, &v).unwrap();
    let run = run_scenario(&g, &s, &sc, &SimConfig::default(), 1.0).unwrap();
    assert_eq!(run.events.len(), 1);
    assert_eq!(run.events[0].rule, 0);
    assert!(run.states[1..].iter().all(|w| w.vehicle("c").unwrap().ln == 2.0));
}

#[test]
fn move_to_holds_speed_within_bounds() {
    let (g, s) = stop_sign_world(5.0);
    let v = json!({"rules": [{"guard": "true", "commands": [
        {"vehicle": "c", "action": "move_to", "cnt": [8, 9], "p": {"vertex": "y"}}
    ]}]});
    let sc = Scenario::from_json(&g, &v).unwrap();
    let run = run_scenario(&g, &s, &sc, &SimConfig::default(), 10.0).unwrap();
    let speeds: Vec<f64> = run.states.iter().map(|w| w.vehicle("c").unwrap().sp).collect();
    assert_eq!(&speeds[..3], &[5.0, 5.0 + 0.3, 5.0 + 0.6]);
    assert!(speeds[20..].iter().all(|&v| (8.0..=9.0).contains(&v)), "{speeds:?}");
}

#[test]
fn trace_round_trip() {
    let (g, s) = stop_sign_world(15.0);
    let run = run_scenario(&g, &s, &stop_rule(&g), &SimConfig::default(), 1.0).unwrap();
    let text = run.to_jsonl();
    assert_eq!(text.lines().count(), 11);
    let back = Run::from_jsonl(g.clone(), &text).unwrap();
    assert_eq!(back.states, run.states);
    let first = text.lines().next().unwrap();
    assert!(Run::from_jsonl(g, &format!("{first}\n{first}\n")).is_err());
}

#[test]
fn malformed_scenarios_are_rejected() {
    let g = straight_road(10.0, 1);
    for v in [
        json!({}),
        json!({"rules": [{"commands": []}]}),
        json!({"rules": [{"guard": "true", "commands": [{"vehicle": "c", "action": "fly"}]}]}),
        json!({"rules": [{"guard": "true", "commands": [{"vehicle": "c", "action": "move_at", "cnt": [3, 1], "d": 1}]}]}),
    ] {
        assert!(Scenario::from_json(&g, &v).is_err(), "{v}");
    }
}

fn ring_state(sp: f64, at: f64) -> (MetricGraph, WorldState) {
    let g = build_ring(10.0, 2.0, 0.0);
    let it = Segment::line(10.0, 0.0).unwrap().concat(&Segment::arc(2.0, 0.0, PI).unwrap()).unwrap();
    let x1 = g.vertex_id("x1").unwrap();
    let (pos, _) = advance(&g, &GraphPosition::Vertex(x1), &it, at);
    let it = it.split(at, it.len()).unwrap();
    let mut s = WorldState::new(0.0);
    s.insert("c", Object::Vehicle(Vehicle { it, pos, sp, wt: 0.0, ln: 1.0, weight: None, parked: false }));
    (g, s)
}

proptest! {
    #[test]
    fn position_and_itinerary_stay_coherent(sp in 0.0..4.0f64, ctrl in -6.0..3.0f64, dt in 0.05..1.0f64, at in 0.5..9.0f64) {
        let (g, s) = ring_state(sp, at);
        let n = step(&g, &s, dt, &BTreeMap::from([("c".to_string(), ctrl)])).unwrap();
        let (c0, c1) = (s.vehicle("c").unwrap(), n.vehicle("c").unwrap());
        prop_assert!(distance(&g, &c0.pos, &c1.pos) <= sp * dt + 1e-9);
        prop_assert!((c0.it.len() - c1.it.len() - sp * dt).abs() < 1e-9);
        prop_assert!(c1.sp >= 0.0);
        prop_assert_eq!(c1.wt > 0.0, sp == 0.0 && c1.sp == 0.0);
    }

    #[test]
    fn halving_the_step_moves_within_second_order(sp in 0.5..4.0f64, ctrl in -1.0..1.0f64, dt in 0.1..1.0f64) {
        let (g, s) = ring_state(sp, 1.0);
        let u = BTreeMap::from([("c".to_string(), ctrl)]);
        let one = step(&g, &s, dt, &u).unwrap();
        let two = step(&g, &step(&g, &s, dt / 2.0, &u).unwrap(), dt / 2.0, &u).unwrap();
        let (a, b) = (one.vehicle("c").unwrap(), two.vehicle("c").unwrap());
        prop_assert!((a.it.len() - b.it.len()).abs() <= 0.5 * ctrl.abs() * dt * dt + 1e-9);
    }
}
