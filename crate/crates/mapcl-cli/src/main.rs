mod config;
mod gen;

use clap::{Parser, Subcommand};
use config::Config;
use mapcl::arith::{export_smtlib, SatResult};
use mapcl::check::{CheckError, Checker};
use mapcl::graph::{check_consistency, circuit_sides, junction_names, EdgeId, JunctionMeta, MetricGraph};
use mapcl::monitor::{monitor, rule_library, MonitorOptions, Verdict};
use mapcl::sat::{sat, CompleteSpec, SatError, SatOptions};
use mapcl::syntax::{parse, parse_temporal};
use mapcl::world::{run_scenario, Run, Scenario, WorldState};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mapcl", version, about = "Map checking, configuration logic and traffic-rule monitoring")]
struct Cli {
    /// TOML configuration file; defaults to $MAPCL_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Configuration override such as `rules.d_min=20`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometric consistency of a map: exit 0 with a vertex addressing, or 2 with a violated circuit.
    CheckMap {
        map: PathBuf,
        /// Also report both sides of the circuit through these vertices, e.g. `u2,v4,u1,v3,u2`.
        #[arg(long, value_delimiter = ',')]
        circuit: Vec<String>,
    },
    /// Model checks a formula on a map: exit 0 true, 1 false, 3 unsupported.
    ModelCheck {
        map: PathBuf,
        formula: PathBuf,
        /// Objects placed on the map.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Satisfiability over a complete graph specification: exit 0 sat, 1 unsat, 3 unknown.
    Sat {
        #[arg(long, required_unless_present = "n_sweep")]
        spec: Option<PathBuf>,
        #[arg(long)]
        formula: PathBuf,
        /// Writes the arithmetic problem as an SMT-LIB script.
        #[arg(long)]
        emit_smt: Option<PathBuf>,
        /// Tries complete specs with 1..=N vertices and one slot per ordered pair.
        #[arg(long, conflicts_with = "spec")]
        n_sweep: Option<usize>,
    },
    /// Runs a scenario from an initial state and writes the trace as JSON lines.
    Simulate {
        map: PathBuf,
        init: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monitors a trace: exit 0 true, 1 false, 2 unknown.
    Monitor {
        map: PathBuf,
        trace: PathBuf,
        #[arg(long, required_unless_present = "formula", conflicts_with = "formula")]
        rule: Option<String>,
        /// File holding a temporal formula.
        #[arg(long)]
        formula: Option<PathBuf>,
        #[arg(long)]
        three_valued: bool,
    },
    /// Generates a map and its bottom-up and top-down specifications.
    Gen {
        #[arg(long)]
        pattern: gen::Pattern,
        /// Comma separated `key=value` pattern parameters.
        #[arg(long, default_value = "")]
        params: String,
        /// Directory for map.json, bottom_up.mcl and top_down.mcl; stdout when absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// A failed invocation: exit code, error kind and message.
struct Fail(u8, &'static str, String);

fn input(kind: &'static str) -> impl Fn(String) -> Fail {
    move |msg| Fail(4, kind, msg)
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail(4, "io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    std::fs::write(path, text).map_err(|e| Fail(4, "io", format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<MetricGraph, Fail> {
    MetricGraph::from_json_str(&read(path)?).map_err(|e| Fail(4, "map", e.to_string()))
}

fn load_json(path: &Path) -> Result<Value, Fail> {
    serde_json::from_str(&read(path)?).map_err(|e| Fail(4, "json", format!("{}: {e}", path.display())))
}

fn check_fail(e: CheckError) -> Fail {
    match e {
        CheckError::Unbound(_) => Fail(4, "formula", e.to_string()),
        _ => Fail(3, "unsupported", e.to_string()),
    }
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn check_map(cfg: &Config, map: &Path, circuit: &[String]) -> Result<u8, Fail> {
    let g = load_map(map)?;
    let mut out = match check_consistency(&g).map_err(|e| Fail(4, "map", e.to_string()))? {
        Ok(chi) => {
            let addressing: serde_json::Map<String, Value> =
                g.vertices().map(|v| (g.name(v).to_string(), json!([chi[v].0, chi[v].1]))).collect();
            json!({"consistent": true, "addressing": addressing})
        }
        Err(v) if v.residual.iter().all(|r| r.abs() <= cfg.tolerances.point) => json!({"consistent": true}),
        Err(v) => json!({"consistent": false, "violation": {"circuit": v.circuit, "residual": v.residual}}),
    };
    if !circuit.is_empty() {
        let mut edges = Vec::new();
        for w in circuit.windows(2) {
            let id = |n: &String| g.vertex_id(n).ok_or_else(|| Fail(4, "circuit", format!("unknown vertex `{n}`")));
            let (a, b) = (id(&w[0])?, id(&w[1])?);
            let along = |s, d| g.edge_ids().find(|&e: &EdgeId| g.edge(e).src == s && g.edge(e).dst == d);
            let step = match (along(a, b), along(b, a)) {
                (Some(e), _) => (e, true),
                (None, Some(e)) => (e, false),
                _ => return Err(Fail(4, "circuit", format!("no edge between `{}` and `{}`", w[0], w[1]))),
            };
            edges.push(step);
        }
        let (fwd, bwd) = circuit_sides(&g, &edges);
        let labels: Vec<Value> = edges.iter().map(|&(e, f)| json!({"edge": g.edge_label(e), "forward": f})).collect();
        out["circuit"] = json!({"edges": labels, "forward": [fwd.0, fwd.1], "backward": [bwd.0, bwd.1]});
    }
    let ok = out["consistent"] == json!(true);
    print(&out);
    Ok(if ok { 0 } else { 2 })
}

fn model_check(cfg: &Config, map: &Path, formula: &Path, state: Option<&Path>) -> Result<u8, Fail> {
    let g = load_map(map)?;
    let phi = parse(&read(formula)?).map_err(|e| Fail(4, "formula", e.to_string()))?;
    let state = match state {
        Some(p) => Some(WorldState::from_json(&g, &load_json(p)?).map_err(|e| Fail(4, "state", e.to_string()))?),
        None => None,
    };
    let mut c = Checker::new(&g).map_err(check_fail)?.with_options(cfg.check());
    if let Some(s) = &state {
        c = c.with_state(s);
    }
    let holds = c.check(&phi).map_err(check_fail)?;
    print(&json!({"verdict": holds}));
    Ok(if holds { 0 } else { 1 })
}

fn sat_code(r: &SatResult) -> u8 {
    match r {
        SatResult::Sat { .. } => 0,
        SatResult::Unsat => 1,
        SatResult::Unknown { .. } => 3,
    }
}

fn sat_fail(e: SatError) -> Fail {
    match e {
        SatError::Spec { .. } => Fail(4, "spec", e.to_string()),
        SatError::Parse(_) => Fail(4, "formula", e.to_string()),
        _ => Fail(3, "unsupported", e.to_string()),
    }
}

/// The complete spec on `n` vertices with one slot per ordered pair.
fn sweep_spec(n: usize) -> String {
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut text = format!("vertices: {}\n", names.join(" "));
    for i in 1..=n {
        for j in 1..=n {
            text.push_str(&format!("edge x{i} -> x{j} : s_{i}_{j}\n"));
        }
    }
    text
}

fn run_sat(cfg: &Config, spec: Option<&Path>, formula: &Path, emit: Option<&Path>, sweep: Option<usize>) -> Result<u8, Fail> {
    let src = read(formula)?;
    let opts = SatOptions { atom_cap: cfg.caps.fm_atoms, ..Default::default() };
    if let Some(n) = sweep {
        if n == 0 {
            return Err(Fail(4, "args", "--n-sweep needs at least one vertex".into()));
        }
        let phi = parse(&src).map_err(|e| Fail(4, "formula", e.to_string()))?;
        let mut rows = Vec::new();
        let mut code = 1;
        for k in 1..=n {
            let spec = CompleteSpec::parse(&sweep_spec(k)).map_err(sat_fail)?;
            let out = sat(&spec, &phi, &opts).map_err(sat_fail)?;
            let mut row = out.result.to_json();
            row["n"] = json!(k);
            rows.push(row);
            match out.result {
                SatResult::Sat { .. } => {
                    code = 0;
                    break;
                }
                SatResult::Unknown { .. } => code = 3,
                SatResult::Unsat => {}
            }
        }
        print(&json!({"sweep": rows, "note": "bounded search over vertex counts; outside the completeness theorem"}));
        return Ok(code);
    }
    let spec = CompleteSpec::parse(&read(spec.expect("clap requires --spec"))?).map_err(sat_fail)?;
    let phi = spec.parse_formula(&src).map_err(sat_fail)?;
    let out = sat(&spec, &phi, &opts).map_err(sat_fail)?;
    if let Some(p) = emit {
        write(p, &export_smtlib(&out.lra))?;
    }
    print(&out.result.to_json());
    Ok(sat_code(&out.result))
}

fn simulate(cfg: &Config, paths: [&Path; 3], dt: Option<f64>, horizon: f64, output: Option<&Path>) -> Result<u8, Fail> {
    let [map, init, scenario] = paths;
    let g = load_map(map)?;
    let init = WorldState::from_json(&g, &load_json(init)?).map_err(|e| Fail(4, "state", e.to_string()))?;
    let scenario = Scenario::from_json(&g, &load_json(scenario)?).map_err(|e| Fail(4, "scenario", e.to_string()))?;
    let mut sim = cfg.sim();
    if let Some(dt) = dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Fail(4, "args", format!("--dt must be positive, got {dt}")));
        }
        sim.dt = dt;
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Fail(4, "args", format!("--horizon must be nonnegative, got {horizon}")));
    }
    let run = run_scenario(&g, &init, &scenario, &sim, horizon).map_err(|e| Fail(4, "simulation", e.to_string()))?;
    match output {
        Some(p) => {
            write(p, &run.to_jsonl())?;
            print(&json!({"states": run.states.len(), "events": run.events_json()}));
        }
        None => print!("{}", run.to_jsonl()),
    }
    Ok(0)
}

fn run_monitor(cfg: &Config, map: &Path, trace: &Path, rule: Option<&str>, formula: Option<&Path>, three: bool) -> Result<u8, Fail> {
    let g = load_map(map)?;
    let run = Run::from_jsonl(g.clone(), &read(trace)?).map_err(|e| Fail(4, "trace", e.to_string()))?;
    let (name, phi) = match (rule, formula) {
        (Some(r), _) => {
            let j = junction_names(&g).unwrap_or(JunctionMeta { entrances: Vec::new(), exits: Vec::new(), vertices: Vec::new() });
            let lib = rule_library(&j, &cfg.rule_consts());
            let names: Vec<&str> = lib.iter().map(|s| s.name).collect();
            let spec = lib
                .iter()
                .find(|s| s.name == r)
                .ok_or_else(|| Fail(4, "rule", format!("unknown rule `{r}`; known: {}", names.join(", "))))?;
            (r.to_string(), spec.formula.clone())
        }
        (None, Some(p)) => ("formula".to_string(), parse_temporal(&read(p)?).map_err(|e| Fail(4, "formula", e.to_string()))?),
        (None, None) => return Err(Fail(4, "args", "give --rule or --formula".into())),
    };
    let opts = MonitorOptions { three_valued: three, check: cfg.check() };
    let report = monitor(&run, &phi, &opts).map_err(check_fail)?;
    print(&report.to_json(&name));
    Ok(match report.verdict {
        Verdict::True => 0,
        Verdict::False => 1,
        Verdict::Unknown => 2,
    })
}

fn dispatch(cli: Cli) -> Result<u8, Fail> {
    let path = cli.config.or_else(|| std::env::var_os("MAPCL_CONFIG").map(PathBuf::from));
    let cfg = Config::load(path.as_deref(), &cli.overrides).map_err(input("config"))?;
    match cli.command {
        Command::CheckMap { map, circuit } => check_map(&cfg, &map, &circuit),
        Command::ModelCheck { map, formula, state } => model_check(&cfg, &map, &formula, state.as_deref()),
        Command::Sat { spec, formula, emit_smt, n_sweep } => run_sat(&cfg, spec.as_deref(), &formula, emit_smt.as_deref(), n_sweep),
        Command::Simulate { map, init, scenario, dt, horizon, output } => {
            simulate(&cfg, [&map, &init, &scenario], dt, horizon, output.as_deref())
        }
        Command::Monitor { map, trace, rule, formula, three_valued } => {
            run_monitor(&cfg, &map, &trace, rule.as_deref(), formula.as_deref(), three_valued)
        }
        Command::Gen { pattern, params, out_dir } => gen::run(pattern, &params, out_dir.as_deref()).map_err(input("gen")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({"error": {"kind": "args", "message": e.to_string()}}));
            return ExitCode::from(4);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, kind, message)) => {
            eprintln!("{}", json!({"error": {"kind": kind, "message": message}}));
            ExitCode::from(code)
        }
    }
}
