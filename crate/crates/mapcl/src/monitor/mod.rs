//! Scenes, runtime verification of temporal formulas over finite runs, and
//! a library of system properties and traffic rules.

pub mod cases;
mod rules;
mod scene;

pub use rules::{rule_library, RuleConsts, RuleSpec};
pub use scene::{check_scene, Scene, SceneVerdict};

use crate::check::{CheckError, CheckOptions, Checker, Value};
use crate::syntax::{ObjKind, TemporalFormula};
use crate::world::Run;
use serde_json::{json, Map, Value as Json};
use std::collections::HashMap;

/// Three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    fn not(self) -> Verdict {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unknown => Verdict::Unknown,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MonitorOptions {
    /// Report truncated obligations as unknown instead of false.
    pub three_valued: bool,
    pub check: CheckOptions,
}

/// A verdict with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub verdict: Verdict,
    /// Index of the state where a false verdict is decided.
    pub index: Option<usize>,
    /// Time of that state.
    pub t_violation: Option<f64>,
    /// Objects bound by the quantifiers that decided the verdict.
    pub witness: Vec<(String, String)>,
}

impl Report {
    pub fn to_json(&self, rule: &str) -> Json {
        let witness: Map<String, Json> = self.witness.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({"rule": rule, "verdict": self.verdict.name(), "witness": witness, "t_violation": self.t_violation})
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Out {
    v: Verdict,
    at: usize,
    wit: Vec<(String, usize)>,
}

impl Out {
    fn new(v: Verdict, at: usize) -> Out {
        Out { v, at, wit: Vec::new() }
    }
}

fn and(a: Out, b: Out) -> Out {
    match (a.v, b.v) {
        (Verdict::False, _) => a,
        (_, Verdict::False) => b,
        (Verdict::True, Verdict::True) => Out { v: Verdict::True, at: a.at, wit: [a.wit, b.wit].concat() },
        _ => Out::new(Verdict::Unknown, a.at),
    }
}

fn or(a: Out, b: Out) -> Out {
    match (a.v, b.v) {
        (Verdict::True, _) => a,
        (_, Verdict::True) => b,
        (Verdict::False, Verdict::False) => Out { v: Verdict::False, at: b.at, wit: [a.wit, b.wit].concat() },
        _ => Out::new(Verdict::Unknown, b.at),
    }
}

type Env = Vec<(String, usize)>;

struct Monitor<'a> {
    run: &'a Run,
    opts: &'a MonitorOptions,
    checkers: Vec<Checker<'a>>,
    memo: HashMap<(usize, Env, usize), Out>,
}

impl<'a> Monitor<'a> {
    fn new(run: &'a Run, opts: &'a MonitorOptions) -> Result<Monitor<'a>, CheckError> {
        let checkers = run
            .states
            .iter()
            .map(|s| Ok(Checker::new(&run.map)?.with_state(s).with_options(opts.check.clone())))
            .collect::<Result<_, CheckError>>()?;
        Ok(Monitor { run, opts, checkers, memo: HashMap::new() })
    }

    fn len(&self) -> usize {
        self.run.states.len()
    }

    /// The value of an obligation cut off by the end of the trace.
    fn truncated(&self) -> Verdict {
        if self.opts.three_valued {
            Verdict::Unknown
        } else {
            Verdict::False
        }
    }

    fn objects(&self, kind: Option<ObjKind>) -> Vec<usize> {
        let first = &self.run.states[0];
        (0..first.objects.len()).filter(|&i| kind.is_none_or(|k| first.objects[i].1.kind() == k)).collect()
    }

    fn eval(&mut self, f: &TemporalFormula, env: &mut Env, i: usize) -> Result<Out, CheckError> {
        let key = (f as *const TemporalFormula as usize, env.clone(), i);
        if let Some(o) = self.memo.get(&key) {
            return Ok(o.clone());
        }
        let out = match f {
            TemporalFormula::State(phi) => {
                let bind: Vec<(String, Value)> = env.iter().map(|(k, o)| (k.clone(), Value::Obj(*o))).collect();
                let holds = self.checkers[i].check_in(&bind, phi)?;
                Out::new(if holds { Verdict::True } else { Verdict::False }, i)
            }
            TemporalFormula::Next(a) => {
                if i + 1 < self.len() {
                    self.eval(a, env, i + 1)?
                } else {
                    Out::new(self.truncated(), i)
                }
            }
            TemporalFormula::Until(a, b) => self.until(f, Some(a), b, env, i)?,
            TemporalFormula::Eventually(b) => self.until(f, None, b, env, i)?,
            TemporalFormula::Always(a) => {
                let mut k = self.len() - 1;
                let mut next = Out::new(Verdict::True, k);
                loop {
                    let key_k = (key.0, env.clone(), k);
                    let here = match self.memo.get(&key_k) {
                        Some(o) if k > i => o.clone(),
                        _ => {
                            let mut here = self.eval(a, env, k)?;
                            if here.v == Verdict::False {
                                here.at = k;
                            }
                            let o = and(here, next);
                            self.memo.insert(key_k, o.clone());
                            o
                        }
                    };
                    if k == i {
                        break here;
                    }
                    next = here;
                    k -= 1;
                }
            }
            TemporalFormula::Not(a) => {
                let o = self.eval(a, env, i)?;
                Out { v: o.v.not(), at: if o.v == Verdict::True { i } else { o.at }, wit: o.wit }
            }
            TemporalFormula::And(a, b) => {
                let x = self.eval(a, env, i)?;
                if x.v == Verdict::False {
                    x
                } else {
                    and(x, self.eval(b, env, i)?)
                }
            }
            TemporalFormula::Or(a, b) => {
                let x = self.eval(a, env, i)?;
                if x.v == Verdict::True {
                    x
                } else {
                    or(x, self.eval(b, env, i)?)
                }
            }
            TemporalFormula::Implies(a, b) => {
                let x = self.eval(a, env, i)?;
                if x.v == Verdict::False {
                    Out::new(Verdict::True, i)
                } else {
                    let y = self.eval(b, env, i)?;
                    match (x.v, y.v) {
                        (_, Verdict::True) => y,
                        (Verdict::True, Verdict::False) => Out { v: Verdict::False, at: y.at, wit: [x.wit, y.wit].concat() },
                        _ => Out::new(Verdict::Unknown, y.at),
                    }
                }
            }
            TemporalFormula::Exists(kind, v, a) | TemporalFormula::Forall(kind, v, a) => {
                let universal = matches!(f, TemporalFormula::Forall(..));
                let mut best: Option<Out> = None;
                let mut unknown = false;
                for o in self.objects(*kind) {
                    env.push((v.clone(), o));
                    let mut r = self.eval(a, env, i);
                    env.pop();
                    if let Ok(r) = &mut r {
                        r.wit.insert(0, (v.clone(), o));
                    }
                    let r = r?;
                    let decisive = if universal { Verdict::False } else { Verdict::True };
                    if r.v == decisive {
                        // the earliest violation, or the first satisfying object
                        if best.as_ref().is_none_or(|b| universal && r.at < b.at) {
                            best = Some(r);
                        }
                        if !universal {
                            break;
                        }
                    } else if r.v == Verdict::Unknown {
                        unknown = true;
                    }
                }
                match best {
                    Some(b) => b,
                    None if unknown => Out::new(Verdict::Unknown, i),
                    None if universal => Out::new(Verdict::True, i),
                    None => Out::new(Verdict::False, self.len() - 1),
                }
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    /// `a until b` (or `eventually b` when `a` is absent), by the backward
    /// recurrence u(k) = b(k) or (a(k) and u(k+1)).
    fn until(&mut self, f: &TemporalFormula, a: Option<&TemporalFormula>, b: &TemporalFormula, env: &mut Env, i: usize) -> Result<Out, CheckError> {
        let id = f as *const TemporalFormula as usize;
        let n = self.len();
        let mut next = Out::new(self.truncated(), n - 1);
        let mut k = n - 1;
        loop {
            let key_k = (id, env.clone(), k);
            let here = match self.memo.get(&key_k) {
                Some(o) if k > i => o.clone(),
                _ => {
                    let hold = match a {
                        Some(a) => self.eval(a, env, k)?,
                        None => Out::new(Verdict::True, k),
                    };
                    let o = or(self.eval(b, env, k)?, and(hold, next));
                    self.memo.insert(key_k, o.clone());
                    o
                }
            };
            if k == i {
                return Ok(here);
            }
            next = here;
            k -= 1;
        }
    }
}

/// Evaluates `phi` on the run from its first state. Object quantifiers
/// range over the run's objects; state formulas are model checked on the
/// current state. Without `three_valued`, obligations left open at the end
/// of the run are false.
pub fn monitor(run: &Run, phi: &TemporalFormula, opts: &MonitorOptions) -> Result<Report, CheckError> {
    let mut m = Monitor::new(run, opts)?;
    let out = m.eval(phi, &mut Vec::new(), 0)?;
    let failed = out.v == Verdict::False;
    let first = &run.states[0];
    Ok(Report {
        verdict: out.v,
        index: failed.then_some(out.at),
        t_violation: failed.then(|| run.states[out.at].t),
        witness: out.wit.into_iter().map(|(k, o)| (k, first.objects[o].0.clone())).collect(),
    })
}

#[cfg(test)]
mod tests;
