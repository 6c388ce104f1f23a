use mapcl::monitor::cases::{overtaking, rule_cases};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mapcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapcl")).args(args).env_remove("MAPCL_CONFIG").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stderr_kind(o: &Output) -> String {
    let v: Value = serde_json::from_slice(&o.stderr).expect("stderr is JSON");
    v["error"]["kind"].as_str().expect("error kind").to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&mapcl(&["--help"])), 0);
    assert_eq!(code(&mapcl(&["--version"])), 0);
    assert_eq!(code(&mapcl(&["monitor", "--help"])), 0);
}

#[test]
fn generated_maps_satisfy_their_specifications() {
    let cases = [
        ("intersection", ""),
        ("intersection", "len=20"),
        ("roundabout", "n=3"),
        ("merger", "n=3,len=5"),
        ("fork", "n=2"),
        ("ring", "a=8,r=1.5"),
    ];
    for (pattern, params) in cases {
        let dir = scratch(&format!("gen-{pattern}-{}", params.replace([',', '='], "_")));
        let out = mapcl(&["gen", "--pattern", pattern, "--params", params, "--out-dir", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{pattern} {params}: {}", String::from_utf8_lossy(&out.stderr));
        let map = dir.join("map.json");
        for spec in ["bottom_up.mcl", "top_down.mcl", "weak_top_down.mcl"] {
            let out = mapcl(&["model-check", map.to_str().unwrap(), dir.join(spec).to_str().unwrap()]);
            assert_eq!(code(&out), 0, "{pattern} {params} {spec}: {}", String::from_utf8_lossy(&out.stdout));
        }
    }
}

#[test]
fn gen_without_a_directory_prints_every_file() {
    let out = mapcl(&["gen", "--pattern", "ring"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    for key in ["map.json", "bottom_up.mcl", "top_down.mcl", "weak_top_down.mcl"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn model_check_reports_false_with_exit_one() {
    let dir = scratch("false");
    let gen = mapcl(&["gen", "--pattern", "ring", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&gen), 0);
    let phi = put(&dir, "phi.mcl", "exists vertex x. edge(x, interval(12345), x)");
    assert_eq!(code(&mapcl(&["model-check", dir.join("map.json").to_str().unwrap(), &phi])), 1);
}

#[test]
fn input_errors_exit_four_with_a_json_error() {
    let dir = scratch("errors");
    let gen = mapcl(&["gen", "--pattern", "ring", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&gen), 0);
    let map = dir.join("map.json").display().to_string();
    let broken = put(&dir, "broken.mcl", "exists vertex x. edge(x,");
    let out = mapcl(&["model-check", &map, &broken]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_kind(&out), "formula");
    let missing = dir.join("missing.mcl").display().to_string();
    assert_eq!(code(&mapcl(&["model-check", &map, &missing])), 4);
    let bad_map = put(&dir, "bad.json", "{\"vertices\": 3}");
    assert_eq!(code(&mapcl(&["check-map", &bad_map])), 4);
    assert_eq!(code(&mapcl(&["gen", "--pattern", "roundabout", "--params", "spokes=3"])), 4);
}

#[test]
fn config_overrides_are_validated() {
    let dir = scratch("config");
    let gen = mapcl(&["gen", "--pattern", "ring", "--out-dir", dir.to_str().unwrap()]);
    let map = dir.join("map.json").display().to_string();
    assert_eq!(code(&gen), 0);
    let spec = dir.join("bottom_up.mcl").display().to_string();
    let out = mapcl(&["--set", "rules.no_such_key=1", "model-check", &map, &spec]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_kind(&out), "config");
    assert_eq!(code(&mapcl(&["--set", "rules.d_min=-1", "model-check", &map, &spec])), 4);
    let file = put(&dir, "mapcl.toml", "[rules]\nd_min = 20\n");
    assert_eq!(code(&mapcl(&["--config", &file, "--set", "caps.fm_atoms=40", "model-check", &map, &spec])), 0);
}

#[test]
fn sat_on_a_contradiction_is_unsat_and_emits_smt() {
    let dir = scratch("sat");
    let spec = put(&dir, "spec.txt", "vertices: x1 x2\nedge x1 -> x2 : s12\n");
    let phi = put(&dir, "phi.mcl", "s12 = interval(2) && !(s12 = interval(2))");
    let smt = dir.join("out.smt2");
    let out = mapcl(&["sat", "--spec", &spec, "--formula", &phi, "--emit-smt", smt.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stdout));
    let script = std::fs::read_to_string(&smt).expect("script written");
    assert!(script.contains("(check-sat)"));
    let ok = put(&dir, "ok.mcl", "edge(x1, s12, x2) && len(s12) = 3");
    assert_eq!(code(&mapcl(&["sat", "--spec", &spec, "--formula", &ok])), 0);
}

#[test]
fn recorded_rule_runs_monitor_through_the_cli() {
    let dir = scratch("rules");
    let case = rule_cases().into_iter().find(|c| c.rule == "safe-distance").expect("case");
    let map = put(&dir, "map.json", &serde_json::to_string(&case.good.map.to_json()).unwrap());
    let good = put(&dir, "good.jsonl", &case.good.to_jsonl());
    let bad = put(&dir, "bad.jsonl", &case.bad.to_jsonl());
    assert_eq!(code(&mapcl(&["monitor", &map, &good, "--rule", "safe-distance"])), 0);
    let out = mapcl(&["monitor", &map, &bad, "--rule", "safe-distance"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["t_violation"].as_f64(), Some(case.bad.states[case.violation].t));
    let out = mapcl(&["monitor", &map, &good, "--rule", "no-such-rule"]);
    assert_eq!(code(&out), 4);
    assert_eq!(stderr_kind(&out), "rule");
}

#[test]
fn simulate_then_monitor_round_trip_is_deterministic() {
    let dir = scratch("sim");
    let o = overtaking();
    let map = put(&dir, "map.json", &serde_json::to_string(&o.map.to_json()).unwrap());
    let init = put(&dir, "init.json", &serde_json::to_string(&o.states[0].to_json(&o.map)).unwrap());
    let scenario = json!({"rules": [{
        "guard": "exists real d. meets(@ego, d, @c2) && d >= 10",
        "commands": [{"vehicle": "c2", "action": "lane", "ln": 1}],
    }]});
    let scenario = put(&dir, "scenario.json", &scenario.to_string());
    let traces: Vec<Vec<u8>> = ["a.jsonl", "b.jsonl"]
        .iter()
        .map(|name| {
            let path = dir.join(name);
            let out = mapcl(&["simulate", &map, &init, &scenario, "--dt", "0.5", "--horizon", "15", "-o", path.to_str().unwrap()]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
            std::fs::read(&path).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
    let trace = dir.join("a.jsonl").display().to_string();
    let lane = put(&dir, "lane.ltl", "eventually @c2.ln = 1");
    assert_eq!(code(&mapcl(&["monitor", &map, &trace, "--formula", &lane])), 0);
    let never = put(&dir, "never.ltl", "always @c2.ln = 2");
    assert_eq!(code(&mapcl(&["monitor", &map, &trace, "--formula", &never])), 1);
    let open = put(&dir, "open.ltl", "eventually @c2.ln = 3");
    assert_eq!(code(&mapcl(&["monitor", &map, &trace, "--formula", &open, "--three-valued"])), 2);
}
