use super::cases::{overtaking, rule_cases, run_of};
use super::*;
use crate::graph::{example_intersection, junction_names, straight_road, EdgeId, MetricGraph};
use crate::syntax::{parse, parse_temporal};
use crate::world::{run_scenario, Object, SimConfig, Vehicle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn road_car(g: &MetricGraph, s: f64, sp: f64) -> Object {
    let len = g.edge(EdgeId(0)).seg.len();
    let it = crate::segment::Segment::line(len - s, 0.0).unwrap();
    Object::Vehicle(Vehicle { it, pos: g.position(EdgeId(0), s).unwrap(), sp, wt: 0.0, ln: 1.0, weight: None, parked: false })
}

/// A run on a 1000 m road where vehicle `a` drives at the listed speeds
/// from 10 m and `b` stays parked at 500 m.
fn speed_run(speeds: &[f64]) -> Run {
    let g = straight_road(1000.0, 1);
    let speeds = speeds.to_vec();
    let h = g.clone();
    run_of(&h, speeds.len(), move |k| {
        let s: f64 = 10.0 + speeds[..k].iter().sum::<f64>();
        vec![("a", road_car(&g, s, speeds[k])), ("b", road_car(&g, 500.0, 0.0))]
    })
}

fn verdict(run: &Run, src: &str, three: bool) -> Report {
    let phi = parse_temporal(src).unwrap();
    monitor(run, &phi, &MonitorOptions { three_valued: three, ..Default::default() }).unwrap()
}

#[test]
fn until_and_next_on_a_short_run() {
    let run = speed_run(&[1.0, 2.0, 3.0, 0.0]);
    let v = |src: &str| verdict(&run, src, false).verdict;
    assert_eq!(v("@a.sp < 3 until @a.sp = 3"), Verdict::True);
    assert_eq!(v("@a.sp < 2 until @a.sp = 3"), Verdict::False);
    assert_eq!(v("next @a.sp = 2"), Verdict::True);
    assert_eq!(v("next next next @a.sp = 0"), Verdict::True);
    assert_eq!(v("next next next next true"), Verdict::False);
    assert_eq!(verdict(&run, "next next next next true", true).verdict, Verdict::Unknown);
    assert_eq!(v("eventually @a.sp = 0"), Verdict::True);
    assert_eq!(v("always @a.sp > 0"), Verdict::False);
    assert_eq!(v("@a.sp > 0 until @a.sp > 5"), Verdict::False);
    assert_eq!(verdict(&run, "@a.sp > 0 until @a.sp > 5", true).verdict, Verdict::False);
    assert_eq!(verdict(&run, "@a.sp >= 0 until @a.sp > 5", true).verdict, Verdict::Unknown);
    assert_eq!(verdict(&run, "always @a.sp >= 0", true).verdict, Verdict::True);
}

#[test]
fn violations_carry_index_time_and_witness() {
    let run = speed_run(&[1.0, 2.0, 7.0, 8.0, 1.0]);
    let r = verdict(&run, "forall vehicle c. always c.sp <= 5", false);
    assert_eq!(r.verdict, Verdict::False);
    assert_eq!(r.index, Some(2));
    assert_eq!(r.t_violation, Some(2.0));
    assert_eq!(r.witness, vec![("c".to_string(), "a".to_string())]);
    let j = r.to_json("limit");
    assert_eq!(j["rule"], "limit");
    assert_eq!(j["verdict"], "false");
    assert_eq!(j["witness"]["c"], "a");
    assert_eq!(j["t_violation"], 2.0);
    let ok = verdict(&run, "forall vehicle c. always c.sp <= 9", false);
    assert_eq!((ok.verdict, ok.index, ok.t_violation), (Verdict::True, None, None));
}

#[test]
fn the_earliest_violation_over_objects_is_reported() {
    let g = straight_road(1000.0, 1);
    let run = run_of(&g, 5, |k| {
        let a = if k >= 3 { 9.0 } else { 1.0 };
        let b = if k >= 1 { 9.0 } else { 1.0 };
        vec![("a", road_car(&g, 10.0 + 10.0 * k as f64, a)), ("b", road_car(&g, 400.0 + 10.0 * k as f64, b))]
    });
    let r = verdict(&run, "forall vehicle c. always c.sp <= 5", false);
    assert_eq!(r.index, Some(1));
    assert_eq!(r.witness, vec![("c".to_string(), "b".to_string())]);
}

#[test]
fn right_of_and_opposite_on_the_example_intersection() {
    let g = example_intersection(5.0, 2.0);
    let j = junction_names(&g).unwrap();
    let jv = format!("{{{}}}", j.all_vertices().iter().map(|v| format!("@{v}")).collect::<Vec<_>>().join(", "));
    let c = crate::check::Checker::new(&g).unwrap();
    let holds = |src: &str| c.check(&parse(&src.replace("J", &jv)).unwrap()).unwrap();
    assert!(holds("right_of(@u2, @u1, J)"));
    assert!(!holds("right_of(@u1, @u2, J)"));
    assert!(!holds("right_of(@u3, @u1, J)"));
    assert!(holds("opposite(@u1, @u3, J)"));
    assert!(holds("opposite(@u2, @u4, J)"));
    assert!(!holds("opposite(@u1, @u2, J)"));
}

#[test]
fn the_library_has_twelve_rules() {
    let g = example_intersection(5.0, 2.0);
    let lib = rule_library(&junction_names(&g).unwrap(), &RuleConsts::default());
    assert_eq!(lib.len(), 12);
    let mut names: Vec<&str> = lib.iter().map(|r| r.name).collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), 12);
    assert!(lib.iter().all(|r| r.params.iter().any(|(k, _)| k == "entrances")));
}

fn rule(case: &cases::RuleCase) -> TemporalFormula {
    rule_library(&case.junction, &case.consts).into_iter().find(|r| r.name == case.rule).unwrap().formula
}

#[test]
fn every_rule_accepts_its_good_run_and_rejects_its_bad_run() {
    let cases = rule_cases();
    assert_eq!(cases.len(), 12);
    let opts = MonitorOptions::default();
    for case in &cases {
        let phi = rule(case);
        let good = monitor(&case.good, &phi, &opts).unwrap();
        assert_eq!(good.verdict, Verdict::True, "{} on its good run: {good:?}", case.rule);
        let bad = monitor(&case.bad, &phi, &opts).unwrap();
        assert_eq!(bad.verdict, Verdict::False, "{} on its bad run", case.rule);
        assert_eq!(bad.index, Some(case.violation), "{} violation index", case.rule);
        assert!(!bad.witness.is_empty(), "{}", case.rule);
    }
}

#[test]
fn the_centrifugal_bound_is_inclusive() {
    let case = rule_cases().into_iter().find(|c| c.rule == "centrifugal").unwrap();
    let tight = RuleConsts { c_max: case.consts.c_max - 0.01, ..case.consts.clone() };
    let phi = rule_library(&case.junction, &tight).into_iter().find(|r| r.name == "centrifugal").unwrap().formula;
    assert_eq!(monitor(&case.good, &phi, &MonitorOptions::default()).unwrap().verdict, Verdict::False);
}

#[test]
fn overtaking_scenes_hold_in_their_states() {
    let o = overtaking();
    let opts = crate::check::CheckOptions::default();
    for top_down in [false, true] {
        for (i, scene) in o.scenes.iter().enumerate() {
            for (j, state) in o.states.iter().enumerate() {
                let v = check_scene(&o.map, state, scene, top_down, &opts).unwrap();
                // the top-down reading is vacuous for variables off the road
                if top_down {
                    assert!(v.holds, "scene {i} in state {j}, top-down");
                    continue;
                }
                assert_eq!(v.holds, i == j, "scene {i} in state {j}");
                if v.holds {
                    assert_eq!(v.witness.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(), ["x", "s", "y"]);
                }
            }
        }
    }
}

#[test]
fn an_unrelated_vehicle_does_not_change_a_scene() {
    let o = overtaking();
    let opts = crate::check::CheckOptions::default();
    for (scene, state) in o.scenes.iter().zip(&o.states) {
        let mut more = state.clone();
        more.insert("far", road_car(&o.map, 4000.0, 30.0));
        assert!(check_scene(&o.map, &more, scene, false, &opts).unwrap().holds);
    }
}

#[test]
fn overtaking_run_reaches_the_second_scene() {
    let o = overtaking();
    let cfg = SimConfig::default();
    let run = run_scenario(&o.map, &o.states[0], &o.scenario, &cfg, 15.0).unwrap();
    assert_eq!(run.events.len(), 1);
    assert!((run.events[0].t - 11.0).abs() < 0.15, "lane change at {}", run.events[0].t);
    let hits: Vec<f64> = run
        .states
        .iter()
        .filter(|s| check_scene(&o.map, s, &o.scenes[1], false, &cfg.check).unwrap().holds)
        .map(|s| s.t)
        .collect();
    assert!(!hits.is_empty());
    assert!(hits.iter().all(|t| (t - 12.0).abs() < 0.05), "{hits:?}");
}

/// Direct evaluation by the definitions over all suffixes, obligations
/// left open at the end of the run being false.
fn naive(run: &Run, f: &TemporalFormula, env: &mut Vec<(String, crate::check::Value)>, i: usize) -> bool {
    let n = run.states.len();
    match f {
        TemporalFormula::State(phi) => {
            crate::check::Checker::new(&run.map).unwrap().with_state(&run.states[i]).check_in(env, phi).unwrap()
        }
        TemporalFormula::Next(a) => i + 1 < n && naive(run, a, env, i + 1),
        TemporalFormula::Until(a, b) => (i..n).any(|j| naive(run, b, env, j) && (i..j).all(|k| naive(run, a, env, k))),
        TemporalFormula::Eventually(b) => (i..n).any(|j| naive(run, b, env, j)),
        TemporalFormula::Always(a) => (i..n).all(|j| naive(run, a, env, j)),
        TemporalFormula::Not(a) => !naive(run, a, env, i),
        TemporalFormula::And(a, b) => naive(run, a, env, i) && naive(run, b, env, i),
        TemporalFormula::Or(a, b) => naive(run, a, env, i) || naive(run, b, env, i),
        TemporalFormula::Implies(a, b) => !naive(run, a, env, i) || naive(run, b, env, i),
        TemporalFormula::Exists(kind, v, a) | TemporalFormula::Forall(kind, v, a) => {
            let objs: Vec<usize> = (0..run.states[0].objects.len())
                .filter(|&o| kind.is_none_or(|k| run.states[0].objects[o].1.kind() == k))
                .collect();
            let mut each = objs.into_iter().map(|o| {
                env.push((v.clone(), crate::check::Value::Obj(o)));
                let r = naive(run, a, env, i);
                env.pop();
                r
            });
            if matches!(f, TemporalFormula::Forall(..)) {
                each.all(|r| r)
            } else {
                each.any(|r| r)
            }
        }
    }
}

const ATOMS: [&str; 6] = [
    "c.sp >= 2",
    "c.sp = 0",
    "c.wt > 0",
    "exists real d. meets(c, d, @b) && d <= 30",
    "@a.sp < @b.sp",
    "c != @a",
];

fn random_formula(rng: &mut impl Rng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return format!("({})", ATOMS[rng.gen_range(0..ATOMS.len())]);
    }
    let op = rng.gen_range(0..8);
    let a = random_formula(rng, depth - 1);
    let b = random_formula(rng, depth - 1);
    match op {
        0 => format!("(next {a})"),
        1 => format!("({a} until {b})"),
        2 => format!("(eventually {a})"),
        3 => format!("(always {a})"),
        4 => format!("!{a}"),
        5 => format!("({a} && {b})"),
        6 => format!("({a} || {b})"),
        _ => format!("({a} => {b})"),
    }
}

fn random_run(rng: &mut impl Rng) -> Run {
    let g = straight_road(2000.0, 1);
    let n = rng.gen_range(1..7);
    let mut frames: Vec<Vec<(f64, f64, f64)>> = Vec::new();
    let mut pos = [rng.gen_range(0.0..50.0), rng.gen_range(40.0..100.0)];
    let mut wt = [0.0, 0.0];
    for _ in 0..n {
        let mut frame = Vec::new();
        for c in 0..2 {
            let sp = [0.0, 1.0, 2.0, 5.0][rng.gen_range(0..4)];
            frame.push((pos[c], sp, wt[c]));
            wt[c] = if sp == 0.0 { wt[c] + 1.0 } else { 0.0 };
            pos[c] += sp;
        }
        frames.push(frame);
    }
    let h = g.clone();
    run_of(&h, n, move |k| {
        ["a", "b"]
            .iter()
            .zip(&frames[k])
            .map(|(id, &(s, sp, wt))| {
                let Object::Vehicle(mut v) = road_car(&g, s, sp) else { unreachable!() };
                v.wt = wt;
                (*id, Object::Vehicle(v))
            })
            .collect()
    })
}

#[test]
fn the_monitor_agrees_with_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = [0usize; 2];
    for _ in 0..300 {
        let run = random_run(&mut rng);
        let src = format!("forall vehicle c. {}", random_formula(&mut rng, 3));
        let phi = parse_temporal(&src).unwrap();
        let want = naive(&run, &phi, &mut Vec::new(), 0);
        let two = monitor(&run, &phi, &MonitorOptions::default()).unwrap();
        assert_eq!(two.verdict == Verdict::True, want, "{src}");
        assert_ne!(two.verdict, Verdict::Unknown, "{src}");
        let three = monitor(&run, &phi, &MonitorOptions { three_valued: true, ..Default::default() }).unwrap();
        if three.verdict != Verdict::Unknown {
            assert_eq!(three.verdict, two.verdict, "three-valued verdict refines: {src}");
        }
        seen[want as usize] += 1;
    }
    assert!(seen[0] > 30 && seen[1] > 30, "{seen:?}");
}

fn suffix(run: &Run, j: usize) -> Run {
    Run::new(run.map.clone(), run.states[j..].to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn always_is_the_conjunction_over_suffixes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let run = random_run(&mut rng);
        let body = random_formula(&mut rng, 2);
        let inner = parse_temporal(&format!("forall vehicle c. {body}")).unwrap();
        let outer = parse_temporal(&format!("always forall vehicle c. {body}")).unwrap();
        let opts = MonitorOptions::default();
        let all = (0..run.states.len()).all(|j| monitor(&suffix(&run, j), &inner, &opts).unwrap().verdict == Verdict::True);
        let r = monitor(&run, &outer, &opts).unwrap();
        prop_assert_eq!(r.verdict == Verdict::True, all);
        if let Some(k) = r.index {
            prop_assert!(monitor(&suffix(&run, k), &inner, &opts).unwrap().verdict == Verdict::False);
            for j in 0..k {
                prop_assert!(monitor(&suffix(&run, j), &inner, &opts).unwrap().verdict == Verdict::True);
            }
        }
    }

    #[test]
    fn positive_formulas_only_sharpen_with_more_states(seed in any::<u64>(), keep in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let run = random_run(&mut rng);
        let src = format!("forall vehicle c. {}", random_formula(&mut rng, 2).replace('!', "").replace("=>", "||"));
        let phi = parse_temporal(&src).unwrap();
        let opts = MonitorOptions { three_valued: true, ..Default::default() };
        let cut = Run::new(run.map.clone(), run.states[..keep.min(run.states.len())].to_vec()).unwrap();
        let short = monitor(&cut, &phi, &opts).unwrap().verdict;
        let full = monitor(&run, &phi, &opts).unwrap().verdict;
        // a prefix decides only what every extension agrees with, except
        // that invariants are provisionally true on a prefix
        if short == Verdict::False {
            prop_assert_eq!(full, Verdict::False, "{}", src);
        }
    }

    #[test]
    fn scene_parts_are_independent_of_unrelated_vehicles(at in 2500.0..4900.0f64, sp in 0.0..150.0f64) {
        let o = overtaking();
        let opts = crate::check::CheckOptions::default();
        let mut more = o.states[0].clone();
        more.insert("far", road_car(&o.map, at, sp));
        prop_assert!(check_scene(&o.map, &more, &o.scenes[0], false, &opts).unwrap().holds);
        prop_assert!(!check_scene(&o.map, &more, &o.scenes[1], false, &opts).unwrap().holds);
    }
}

#[test]
fn formula_sources_in_tests_parse() {
    for a in ATOMS {
        assert!(crate::syntax::parse_with(a, &[("c", crate::syntax::Sort::Obj(Some(ObjKind::Vehicle)))]).is_ok(), "{a}");
    }
}
