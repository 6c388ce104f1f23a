use super::{Object, Vehicle, WorldState};
use crate::check::{prefix_of, CheckError, CheckOptions, Checker, Value, ITINERARY_TOL};
use crate::graph::{rides, GraphError, GraphPosition, MetricGraph};
use crate::segment::Segment;
use crate::syntax::{parse_with, Arith, Formula, Sort};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid step: {0}")]
    Step(String),
    #[error("unknown vehicle `{0}`")]
    UnknownVehicle(String),
    #[error("malformed scenario: {0}")]
    Scenario(String),
    #[error("malformed trace: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    /// Largest acceleration a command may ask for, in m/s².
    pub accel: f64,
    /// Largest braking deceleration, in m/s².
    pub brake: f64,
    /// Options for evaluating guards.
    pub check: CheckOptions,
}

impl Default for SimConfig {
    fn default() -> SimConfig {
        SimConfig { dt: 0.1, accel: 3.0, brake: 6.0, check: CheckOptions::default() }
    }
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= ITINERARY_TOL * 1f64.max(x.abs()).max(y.abs())
}

/// The rest of `it` after its first `d` units, empty when used up.
fn drop_prefix(it: &Segment, d: f64) -> Segment {
    let len = it.len();
    if d <= 0.0 {
        return it.clone();
    }
    if d >= len || near(d, len) {
        return it.zero_like();
    }
    it.split(d, len).unwrap_or_else(|_| it.zero_like())
}

/// Follows the itinerary `it` from `pos` for at most `d`. Returns the
/// position reached and the distance covered, which falls short of `d` at
/// a dead end or where no outgoing edge continues the itinerary. At a vertex
/// the first edge in edge order that continues the itinerary is taken.
pub fn advance(g: &MetricGraph, pos: &GraphPosition, it: &Segment, d: f64) -> (GraphPosition, f64) {
    let d = d.min(it.len());
    let mut cursor = match *pos {
        GraphPosition::OnEdge(e, a) => Some((e, a)),
        GraphPosition::Vertex(_) => None,
    };
    let mut here = *pos;
    let mut covered = 0.0;
    let mut rest = it.clone();
    while d - covered > ITINERARY_TOL * d.max(1.0) {
        let left = d - covered;
        let (e, a) = match cursor {
            Some(c) => c,
            None => {
                let GraphPosition::Vertex(v) = here else { unreachable!() };
                let next = g.out_edges(v).find(|&e| {
                    let seg = &g.edge(e).seg;
                    let piece = if seg.len() <= left { Ok(seg.clone()) } else { seg.split(0.0, left) };
                    piece.is_ok_and(|p| prefix_of(&rest, &p))
                });
                match next {
                    Some(e) => (e, 0.0),
                    None => break,
                }
            }
        };
        let len = g.edge(e).seg.len();
        let room = len - a;
        if left < room && !near(left, room) {
            here = GraphPosition::OnEdge(e, a + left);
            covered = d;
            break;
        }
        here = GraphPosition::Vertex(g.edge(e).dst);
        covered += room;
        rest = drop_prefix(&rest, room);
        cursor = None;
    }
    (here, covered.min(d))
}

/// One update of every vehicle: each moves `sp·dt` along its itinerary and
/// then takes the speed `max(0, sp + ctrl·dt)`. A vehicle whose itinerary
/// runs out parks where it stops.
pub fn step(g: &MetricGraph, state: &WorldState, dt: f64, controls: &BTreeMap<String, f64>) -> Result<WorldState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::Step(format!("time step {dt} must be positive")));
    }
    for id in controls.keys() {
        if state.vehicle(id).is_none() {
            return Err(SimError::UnknownVehicle(id.clone()));
        }
    }
    let mut next = state.clone();
    next.t = state.t + dt;
    for (id, obj) in next.objects.iter_mut() {
        let Object::Vehicle(c) = obj else { continue };
        let ctrl = controls.get(id).copied().unwrap_or(0.0);
        move_vehicle(g, c, dt, ctrl);
    }
    Ok(next)
}

fn move_vehicle(g: &MetricGraph, c: &mut Vehicle, dt: f64, ctrl: f64) {
    let was = c.sp;
    if c.parked {
        c.sp = 0.0;
        c.wt += dt;
        return;
    }
    let want = c.sp * dt;
    let (pos, covered) = advance(g, &c.pos, &c.it, want);
    c.pos = pos;
    c.it = drop_prefix(&c.it, covered);
    if covered < want && !near(covered, want) {
        c.sp = 0.0;
        c.parked = true;
    } else {
        c.sp = (c.sp + ctrl * dt).max(0.0);
    }
    if c.sp > 0.0 {
        c.wt = 0.0;
    } else if was == 0.0 {
        c.wt += dt;
    } else {
        c.wt = 0.0;
    }
}

/// A control command for one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Reach a speed in `cnt` after travelling `d`, with `d` evaluated under
    /// the guard's witness.
    MoveAt { cnt: (f64, f64), d: Arith },
    /// Keep the speed within `cnt` until reaching `p`.
    MoveTo { cnt: (f64, f64), p: GraphPosition },
    /// Switch to lane `ln`.
    Lane { ln: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub guard: Formula,
    pub commands: Vec<(String, Action)>,
}

/// Guarded commands, earlier rules taking precedence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub rules: Vec<Rule>,
}

/// Names and sorts of the leading existential quantifiers of `f`.
fn leading_binders(f: &Formula) -> Vec<(String, Sort)> {
    let mut out = Vec::new();
    let mut f = f;
    while let Formula::Exists(s, v, body) = f {
        out.push((v.clone(), *s));
        f = body;
    }
    out
}

fn parse_arith(src: &str, scope: &[(String, Sort)]) -> Result<Arith> {
    let scope: Vec<(&str, Sort)> = scope.iter().map(|(v, s)| (v.as_str(), *s)).collect();
    match parse_with(&format!("{src} = 0"), &scope) {
        Ok(Formula::Cmp(_, a, _)) => Ok(a),
        Ok(_) => Err(SimError::Scenario(format!("`{src}` is not a number term"))),
        Err(e) => Err(SimError::Scenario(format!("`{src}`: {e}"))),
    }
}

fn speed_bounds(v: &Json) -> Result<(f64, f64)> {
    let bad = || SimError::Scenario(format!("speed constraint {v} must be a number or [lo, hi]"));
    let (lo, hi) = match v {
        Json::Number(n) => {
            let x = n.as_f64().ok_or_else(bad)?;
            (x, x)
        }
        Json::Array(xs) if xs.len() == 2 => (xs[0].as_f64().ok_or_else(bad)?, xs[1].as_f64().ok_or_else(bad)?),
        _ => return Err(bad()),
    };
    if lo < 0.0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

impl Scenario {
    /// Reads `{"rules": [{"guard": "...", "commands": [{"vehicle", "action", ...}]}]}`
    /// where `action` is `move_at` (`cnt`, `d`), `move_to` (`cnt`, `p`) or `lane` (`ln`).
    pub fn from_json(g: &MetricGraph, v: &Json) -> Result<Scenario> {
        let bad = |m: String| SimError::Scenario(m);
        let rules = v.get("rules").and_then(Json::as_array).ok_or_else(|| bad("`rules` must be a list".into()))?;
        let mut out = Scenario::default();
        for (i, r) in rules.iter().enumerate() {
            let src = r.get("guard").and_then(Json::as_str).ok_or_else(|| bad(format!("rule {i} has no guard")))?;
            let guard = parse_with(src, &[]).map_err(|e| bad(format!("rule {i}: {e}")))?;
            let scope = leading_binders(&guard);
            let mut commands = Vec::new();
            for c in r.get("commands").and_then(Json::as_array).into_iter().flatten() {
                let vehicle = c.get("vehicle").and_then(Json::as_str).ok_or_else(|| bad(format!("rule {i}: command without vehicle")))?;
                let field = |k: &str| c.get(k).ok_or_else(|| bad(format!("rule {i}: `{k}` missing")));
                let action = match c.get("action").and_then(Json::as_str) {
                    Some("move_at") => {
                        let d = match field("d")? {
                            Json::String(s) => parse_arith(s, &scope)?,
                            Json::Number(n) => Arith::Const(n.as_f64().unwrap_or(f64::NAN)),
                            other => return Err(bad(format!("rule {i}: distance {other}"))),
                        };
                        Action::MoveAt { cnt: speed_bounds(field("cnt")?)?, d }
                    }
                    Some("move_to") => Action::MoveTo { cnt: speed_bounds(field("cnt")?)?, p: g.pos_from_json(field("p")?)? },
                    Some("lane") => Action::Lane {
                        ln: field("ln")?.as_f64().ok_or_else(|| bad(format!("rule {i}: lane must be a number")))?,
                    },
                    other => return Err(bad(format!("rule {i}: unknown action {other:?}"))),
                };
                commands.push((vehicle.to_string(), action));
            }
            out.rules.push(Rule { guard, commands });
        }
        Ok(out)
    }
}

/// What happened to a command.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Fired,
    /// The command cannot be met within the acceleration bounds; the vehicle brakes.
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub rule: usize,
    pub vehicle: String,
    pub kind: EventKind,
}

/// A map with a time-ordered sequence of states over it.
#[derive(Debug, Clone)]
pub struct Run {
    pub map: MetricGraph,
    pub states: Vec<WorldState>,
    pub events: Vec<Event>,
}

impl Run {
    /// Checks that timestamps increase and every state has the same objects.
    pub fn new(map: MetricGraph, states: Vec<WorldState>) -> Result<Run> {
        let ids = |s: &WorldState| s.objects.iter().map(|(k, _)| k.clone()).collect::<Vec<_>>();
        if states.is_empty() {
            return Err(SimError::Trace("a run needs at least one state".into()));
        }
        for w in states.windows(2) {
            if w[1].t <= w[0].t {
                return Err(SimError::Trace(format!("time {} does not increase past {}", w[1].t, w[0].t)));
            }
            if ids(&w[0]) != ids(&w[1]) {
                return Err(SimError::Trace(format!("objects change at time {}", w[1].t)));
            }
        }
        Ok(Run { map, states, events: Vec::new() })
    }

    /// One state per line.
    pub fn to_jsonl(&self) -> String {
        self.states.iter().map(|s| format!("{}\n", s.to_json(&self.map))).collect()
    }

    pub fn from_jsonl(map: MetricGraph, text: &str) -> Result<Run> {
        let mut states = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Json = serde_json::from_str(line).map_err(|e| SimError::Trace(format!("line {}: {e}", i + 1)))?;
            states.push(WorldState::from_json(&map, &v)?);
        }
        Run::new(map, states)
    }

    pub fn events_json(&self) -> Json {
        Json::Array(
            self.events
                .iter()
                .map(|e| match &e.kind {
                    EventKind::Fired => json!({"t": e.t, "rule": e.rule, "vehicle": e.vehicle, "event": "fired"}),
                    EventKind::Infeasible(why) => {
                        json!({"t": e.t, "rule": e.rule, "vehicle": e.vehicle, "event": "violation", "reason": why})
                    }
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Target {
    At { v: f64, d: f64, covered: f64 },
    To { lo: f64, hi: f64, d: f64, covered: f64 },
    Brake,
}

/// Length along the vehicle's itinerary from its position to `p`.
fn along(g: &MetricGraph, c: &Vehicle, p: &GraphPosition) -> Option<f64> {
    if g.same_position(&c.pos, p) {
        return Some(0.0);
    }
    rides(g, &c.pos, p)
        .into_iter()
        .filter(|r| prefix_of(&c.it, &r.label))
        .map(|r| r.label.len())
        .min_by(f64::total_cmp)
}

fn clamp_speed(v0: f64, lo: f64, hi: f64) -> f64 {
    v0.clamp(lo, hi)
}

impl Target {
    fn control(&mut self, sp: f64, dt: f64, cfg: &SimConfig) -> f64 {
        match self {
            Target::At { v, d, covered } => {
                let rem = *d - *covered;
                // discrete forward scheme: reaching v within rem needs the
                // constant-acceleration formula shifted by half a step
                let denom = rem - (sp - *v) * dt / 2.0;
                if near(sp, *v) && rem <= ITINERARY_TOL {
                    0.0
                } else if denom <= ITINERARY_TOL {
                    (*v - sp) / dt
                } else {
                    ((*v * *v - sp * sp) / (2.0 * denom)).clamp(-cfg.brake, cfg.accel)
                }
            }
            Target::To { lo, hi, .. } => {
                if sp < *lo {
                    ((*lo - sp) / dt).min(cfg.accel)
                } else if sp > *hi {
                    -((sp - *hi) / dt).min(cfg.brake)
                } else {
                    0.0
                }
            }
            Target::Brake => -cfg.brake,
        }
    }

    /// Accounts for `moved` metres; `true` once the target is met.
    fn advance(&mut self, moved: f64, sp: f64) -> bool {
        match self {
            Target::At { v, d, covered } => {
                *covered += moved;
                *covered >= *d - ITINERARY_TOL && near(sp, *v)
            }
            Target::To { d, covered, .. } => {
                *covered += moved;
                *covered >= *d - ITINERARY_TOL
            }
            Target::Brake => false,
        }
    }
}

fn plan(g: &MetricGraph, c: &Vehicle, action: &Action, env: &[(String, Value)], checker: &Checker, cfg: &SimConfig) -> Result<std::result::Result<Target, String>> {
    Ok(match action {
        Action::MoveAt { cnt, d } => {
            let Some(d) = checker.eval_arith(env, d)? else {
                return Ok(Err("distance term is undefined".into()));
            };
            let v = clamp_speed(c.sp, cnt.0, cnt.1);
            if d <= 0.0 {
                return Ok(if near(v, c.sp) { Ok(Target::At { v, d: 0.0, covered: 0.0 }) } else { Err(format!("distance {d} leaves no room")) });
            }
            let a = (v * v - c.sp * c.sp) / (2.0 * d);
            if a < -cfg.brake - 1e-9 || a > cfg.accel + 1e-9 {
                Err(format!("needs acceleration {a:.3} m/s²"))
            } else {
                Ok(Target::At { v, d, covered: 0.0 })
            }
        }
        Action::MoveTo { cnt, p } => match along(g, c, p) {
            Some(d) => Ok(Target::To { lo: cnt.0, hi: cnt.1, d, covered: 0.0 }),
            None => Err(format!("{} is not on the itinerary", g.fmt_position(p))),
        },
        Action::Lane { .. } => unreachable!(),
    })
}

/// Runs the scenario from `init` until `horizon` seconds have elapsed.
/// Every cycle evaluates each guard on the current state; a rule fires
/// when its guard turns true, and its commands replace the targets of its
/// vehicles unless an earlier rule already commanded them in this cycle.
pub fn run_scenario(g: &MetricGraph, init: &WorldState, scenario: &Scenario, cfg: &SimConfig, horizon: f64) -> Result<Run> {
    if !(cfg.dt > 0.0) {
        return Err(SimError::Step(format!("time step {} must be positive", cfg.dt)));
    }
    for (id, _) in scenario.rules.iter().flat_map(|r| &r.commands) {
        if init.vehicle(id).is_none() {
            return Err(SimError::UnknownVehicle(id.clone()));
        }
    }
    let mut run = Run { map: g.clone(), states: vec![init.clone()], events: Vec::new() };
    let mut latched = vec![false; scenario.rules.len()];
    let mut targets: BTreeMap<String, Target> = BTreeMap::new();
    let steps = ((horizon - init.t) / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    for k in 1..=steps {
        let mut state = run.states.last().expect("nonempty").clone();
        let checker = Checker::new(g)?.with_state(&state).with_options(cfg.check.clone());
        let mut commanded = BTreeSet::new();
        let mut lanes = Vec::new();
        for (i, rule) in scenario.rules.iter().enumerate() {
            let witness = checker.witness(&rule.guard)?;
            let rising = witness.is_some() && !latched[i];
            latched[i] = witness.is_some();
            let Some(env) = witness.filter(|_| rising) else { continue };
            for (id, action) in &rule.commands {
                if !commanded.insert(id.clone()) {
                    continue;
                }
                if let Action::Lane { ln } = action {
                    lanes.push((id.clone(), *ln));
                    run.events.push(Event { t: state.t, rule: i, vehicle: id.clone(), kind: EventKind::Fired });
                    continue;
                }
                let c = state.vehicle(id).expect("checked above");
                let kind = match plan(g, c, action, &env, &checker, cfg)? {
                    Ok(t) => {
                        targets.insert(id.clone(), t);
                        EventKind::Fired
                    }
                    Err(why) => {
                        targets.insert(id.clone(), Target::Brake);
                        EventKind::Infeasible(why)
                    }
                };
                run.events.push(Event { t: state.t, rule: i, vehicle: id.clone(), kind });
            }
        }
        drop(checker);
        let mut controls = BTreeMap::new();
        for (id, t) in targets.iter_mut() {
            let sp = state.vehicle(id).map_or(0.0, |c| c.sp);
            controls.insert(id.clone(), t.control(sp, cfg.dt, cfg));
        }
        for (id, ln) in lanes {
            state.vehicle_mut(&id).expect("checked above").ln = ln;
        }
        let mut next = step(g, &state, cfg.dt, &controls)?;
        next.t = init.t + k as f64 * cfg.dt;
        targets.retain(|id, t| {
            let (before, after) = (state.vehicle(id).expect("vehicle"), next.vehicle(id).expect("vehicle"));
            !t.advance(before.sp * cfg.dt, after.sp) && !after.parked
        });
        run.states.push(next);
    }
    Ok(run)
}

#[cfg(test)]
mod tests;
