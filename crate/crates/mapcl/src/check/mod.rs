//! Model checking of formulas on a concrete metric graph, optionally together
//! with a world state supplying objects.
//!
//! Subgraphs are edge masks over the ambient graph. Real and segment
//! quantifiers are instantiated over finite candidate sets when the formula
//! guarantees that suffices, and otherwise decided through the residue.

mod cands;
mod eval;
mod objects;
mod preds;
mod residue;
mod trace;

pub use objects::eliminate_objects;
pub use preds::{prefix_of, ITINERARY_TOL};
pub use residue::{residue, substitute};
pub use trace::explain;

use crate::graph::{GraphPosition, MetricGraph};
use crate::sat::{submasks, Mask};
use crate::segment::Segment;
use crate::syntax::*;
use crate::world::WorldState;
use cands::Cands;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("unsupported fragment: {0}")]
    Unsupported(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{0} edges exceed the limit of 64")]
    TooManyEdges(usize),
    #[error("coalescing over {edges} edges exceeds the cap of {cap}")]
    CoalesceCap { edges: usize, cap: usize },
    #[error("solver gave no answer: {0}")]
    Undecided(String),
}

pub type Result<T> = std::result::Result<T, CheckError>;

/// The value of a variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Seg(Segment),
    Vertex(usize),
    /// Index into the world state's objects.
    Obj(usize),
}

impl Value {
    fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => crate::segment::approx(*a, *b),
            (Value::Seg(a), Value::Seg(b)) => a.equiv(b),
            (a, b) => a == b,
        }
    }
}

/// Variable bindings, innermost last. A `None` value marks a variable whose
/// value is left open while computing candidates.
pub(crate) type Env = Vec<(String, Option<Value>)>;

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Largest edge count over which an unbounded coalescing is enumerated.
    pub coalesce_cap: usize,
    /// Decide real and segment quantifiers with the arithmetic solver when
    /// candidates do not suffice.
    pub solver_fallback: bool,
    pub atom_cap: usize,
    /// Braking deceleration used by `safe_dist`.
    pub brake: f64,
    /// Reaction time used by `safe_dist`.
    pub reaction: f64,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            coalesce_cap: 16,
            solver_fallback: true,
            atom_cap: crate::arith::DEFAULT_ATOM_CAP,
            brake: 6.0,
            reaction: 0.5,
        }
    }
}

struct Sub {
    g: MetricGraph,
    map: Vec<Option<crate::graph::EdgeId>>,
}

pub struct Checker<'a> {
    g: &'a MetricGraph,
    state: Option<&'a WorldState>,
    opts: CheckOptions,
    subs: RefCell<HashMap<Mask, Rc<Sub>>>,
}

fn popcount(m: Mask) -> usize {
    m.count_ones() as usize
}

/// Submasks of `m` with exactly `k` edges.
fn subsets_of_size(m: Mask, k: usize) -> Vec<Mask> {
    let bits: Vec<u32> = (0..64).filter(|b| m & (1u64 << b) != 0).collect();
    let n = bits.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().fold(0u64, |acc, &i| acc | (1u64 << bits[i])));
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Smallest and largest edge count of a subgraph satisfying `f`.
fn edge_bounds(f: &Formula) -> (usize, usize) {
    const INF: usize = usize::MAX;
    match f {
        Formula::Edge(..) | Formula::Road(..) => (1, 1),
        Formula::Coalesce(a, b) => {
            let (la, ha) = edge_bounds(a);
            let (lb, hb) = edge_bounds(b);
            (la.max(lb), ha.saturating_add(hb))
        }
        Formula::And(a, b) => {
            let (la, ha) = edge_bounds(a);
            let (lb, hb) = edge_bounds(b);
            (la.max(lb), ha.min(hb))
        }
        Formula::Or(a, b) => {
            let (la, ha) = edge_bounds(a);
            let (lb, hb) = edge_bounds(b);
            (la.min(lb), ha.max(hb))
        }
        Formula::False => (INF, 0),
        Formula::Closure(a) => (edge_bounds(a).0, INF),
        Formula::Exists(_, _, a) | Formula::Forall(_, _, a) => edge_bounds(a),
        _ => (0, INF),
    }
}

impl<'a> Checker<'a> {
    pub fn new(g: &'a MetricGraph) -> Result<Checker<'a>> {
        if g.edge_count() > 64 {
            return Err(CheckError::TooManyEdges(g.edge_count()));
        }
        Ok(Checker { g, state: None, opts: CheckOptions::default(), subs: RefCell::new(HashMap::new()) })
    }

    pub fn with_state(mut self, state: &'a WorldState) -> Checker<'a> {
        self.state = Some(state);
        self
    }

    pub fn with_options(mut self, opts: CheckOptions) -> Checker<'a> {
        self.opts = opts;
        self
    }

    pub fn graph(&self) -> &MetricGraph {
        self.g
    }

    pub fn full_mask(&self) -> Mask {
        match self.g.edge_count() {
            64 => u64::MAX,
            n => (1u64 << n) - 1,
        }
    }

    fn sub(&self, m: Mask) -> Rc<Sub> {
        if let Some(s) = self.subs.borrow().get(&m) {
            return s.clone();
        }
        let (g, map) = self.g.restrict(|e| m & (1u64 << e.0) != 0);
        let s = Rc::new(Sub { g, map });
        self.subs.borrow_mut().insert(m, s.clone());
        s
    }

    /// Maps a position of the ambient graph into the subgraph of `m`.
    fn to_sub(sub: &Sub, p: &GraphPosition) -> Option<GraphPosition> {
        match *p {
            GraphPosition::Vertex(v) => Some(GraphPosition::Vertex(v)),
            GraphPosition::OnEdge(e, a) => sub.map[e.0].map(|f| GraphPosition::OnEdge(f, a)),
        }
    }

    /// Whether the closed formula holds on the whole graph.
    pub fn check(&self, f: &Formula) -> Result<bool> {
        self.check_in(&[], f)
    }

    /// Whether `f` holds with its free variables bound by `env`.
    pub fn check_in(&self, env: &[(String, Value)], f: &Formula) -> Result<bool> {
        let env: Env = env.iter().map(|(k, v)| (k.clone(), Some(v.clone()))).collect();
        self.holds(self.full_mask(), &env, f)
    }

    /// The value of an arithmetic term under `env`, or `None` when undefined.
    pub fn eval_arith(&self, env: &[(String, Value)], a: &Arith) -> Result<Option<f64>> {
        let env: Env = env.iter().map(|(k, v)| (k.clone(), Some(v.clone()))).collect();
        self.arith(&env, a)
    }

    /// Bindings for the leading existential quantifiers of `f` under which the
    /// rest holds, or `None` if `f` is false.
    pub fn witness(&self, f: &Formula) -> Result<Option<Vec<(String, Value)>>> {
        let mut env = Env::new();
        let found = self.witness_rec(self.full_mask(), &mut env, f)?;
        Ok(found.then(|| env.into_iter().map(|(k, v)| (k, v.expect("bound"))).collect()))
    }

    fn witness_rec(&self, m: Mask, env: &mut Env, f: &Formula) -> Result<bool> {
        let Formula::Exists(sort, v, body) = f else {
            return self.holds(m, env, f);
        };
        for val in self.domain(m, env, *sort, v, body, true)? {
            env.push((v.clone(), Some(val)));
            if self.witness_rec(m, env, body)? {
                return Ok(true);
            }
            env.pop();
        }
        Ok(false)
    }

    pub(crate) fn holds(&self, m: Mask, env: &Env, f: &Formula) -> Result<bool> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Not(a) => !self.holds(m, env, a)?,
            Formula::And(a, b) => self.holds(m, env, a)? && self.holds(m, env, b)?,
            Formula::Or(a, b) => self.holds(m, env, a)? || self.holds(m, env, b)?,
            Formula::Implies(a, b) => !self.holds(m, env, a)? || self.holds(m, env, b)?,
            Formula::Coalesce(a, b) => self.coalesce(m, env, a, b)?,
            Formula::Closure(a) => self.closure(m, env, a)?,
            Formula::Exists(sort, v, body) => self.quantify(m, env, *sort, v, body, true)?,
            Formula::Forall(sort, v, body) => self.quantify(m, env, *sort, v, body, false)?,
            atom => self.atom(m, env, atom)?,
        })
    }

    fn coalesce(&self, m: Mask, env: &Env, a: &Formula, b: &Formula) -> Result<bool> {
        let n = popcount(m);
        let (la, ha) = edge_bounds(a);
        let (lb, hb) = edge_bounds(b);
        let lo = la.max(n.saturating_sub(hb));
        let hi = ha.min(n);
        if lo > hi {
            return Ok(false);
        }
        let count: f64 = (lo..=hi).map(|k| binomial(n, k)).sum();
        if count > (1u64 << self.opts.coalesce_cap.min(63)) as f64 {
            return Err(CheckError::CoalesceCap { edges: n, cap: self.opts.coalesce_cap });
        }
        let mut memo_a: HashMap<Mask, bool> = HashMap::new();
        let mut memo_b: HashMap<Mask, bool> = HashMap::new();
        for k in lo..=hi {
            for e1 in subsets_of_size(m, k) {
                let rest = m & !e1;
                let r = popcount(rest);
                let (slo, shi) = (lb.saturating_sub(r), hb.saturating_sub(r).min(k));
                if slo > shi || (hb != usize::MAX && r > hb) {
                    continue;
                }
                let extra: Vec<Mask> = if shi >= k {
                    if k > self.opts.coalesce_cap {
                        return Err(CheckError::CoalesceCap { edges: n, cap: self.opts.coalesce_cap });
                    }
                    submasks(e1).filter(|s| popcount(*s) >= slo).collect()
                } else {
                    (slo..=shi).flat_map(|j| subsets_of_size(e1, j)).collect()
                };
                for s in extra {
                    let e2 = rest | s;
                    let hb_ok = match memo_b.get(&e2) {
                        Some(&x) => x,
                        None => {
                            let x = self.holds(e2, env, b)?;
                            memo_b.insert(e2, x);
                            x
                        }
                    };
                    if !hb_ok {
                        continue;
                    }
                    let ha_ok = match memo_a.get(&e1) {
                        Some(&x) => x,
                        None => {
                            let x = self.holds(e1, env, a)?;
                            memo_a.insert(e1, x);
                            x
                        }
                    };
                    if ha_ok {
                        return Ok(true);
                    }
                    break;
                }
            }
        }
        Ok(false)
    }

    fn closure(&self, m: Mask, env: &Env, a: &Formula) -> Result<bool> {
        let n = popcount(m);
        let (la, ha) = edge_bounds(a);
        let hi = ha.min(n);
        if la > hi {
            return Ok(false);
        }
        let count: f64 = (la..=hi).map(|k| binomial(n, k)).sum();
        if count > (1u64 << self.opts.coalesce_cap.min(63)) as f64 {
            return Err(CheckError::CoalesceCap { edges: n, cap: self.opts.coalesce_cap });
        }
        for k in la..=hi {
            for e1 in subsets_of_size(m, k) {
                if self.holds(e1, env, a)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn quantify(&self, m: Mask, env: &Env, sort: Sort, v: &str, body: &Formula, existential: bool) -> Result<bool> {
        let values = match self.domain(m, env, sort, v, body, existential) {
            Ok(vals) => vals,
            Err(CheckError::Unsupported(why)) if matches!(sort, Sort::Real | Sort::Seg) => {
                let q = if existential { exists(sort, v, body.clone()) } else { forall(sort, v, body.clone()) };
                return self.decide_by_residue(m, env, &q, &why);
            }
            Err(e) => return Err(e),
        };
        let mut inner = env.clone();
        inner.push((v.to_string(), None));
        for val in values {
            inner.last_mut().expect("pushed").1 = Some(val);
            if self.holds(m, &inner, body)? == existential {
                return Ok(existential);
            }
        }
        Ok(!existential)
    }

    /// Values of `v` sufficient to decide `∃v. body` (or `∀v. body`).
    fn domain(&self, m: Mask, env: &Env, sort: Sort, v: &str, body: &Formula, existential: bool) -> Result<Vec<Value>> {
        match sort {
            Sort::Obj(kind) => Ok(self
                .state
                .map(|s| {
                    s.objects
                        .iter()
                        .enumerate()
                        .filter(|(_, (_, o))| kind.is_none_or(|k| o.kind() == k))
                        .map(|(i, _)| Value::Obj(i))
                        .collect()
                })
                .unwrap_or_default()),
            Sort::Vertex => {
                if self.g.vertex_count() == 0 {
                    return Ok(Vec::new());
                }
                match self.candidates(m, env, sort, v, body, existential)? {
                    Some(vals) => Ok(vals),
                    None => Ok(self.g.vertices().map(Value::Vertex).collect()),
                }
            }
            Sort::Real | Sort::Seg => match self.candidates(m, env, sort, v, body, existential)? {
                Some(vals) => Ok(vals),
                None => self.atom_values(m, env, sort, v, body),
            },
        }
    }

    fn candidates(&self, m: Mask, env: &Env, sort: Sort, v: &str, body: &Formula, existential: bool) -> Result<Option<Vec<Value>>> {
        let mut inner = env.clone();
        inner.push((v.to_string(), None));
        let c = self.cands(m, &inner, sort, v, body, existential)?;
        let (mut vals, fresh) = match c {
            Cands::Indep => (Vec::new(), true),
            Cands::Strong(vals) => (vals, false),
            Cands::Weak(vals, fresh) => (vals, fresh),
            Cands::Fail(_) => return Ok(None),
        };
        if fresh {
            let mut avoid = vals.clone();
            let _ = self.collect_atom_sets(m, &inner, sort, v, body, &mut avoid)?;
            match self.fresh_value(sort, &avoid) {
                Some(x) => vals.push(x),
                None => vals = cands::merge(vals, avoid),
            }
        }
        Ok(Some(vals))
    }

    /// Every value some atom can accept, plus one value no atom accepts.
    fn atom_values(&self, m: Mask, env: &Env, sort: Sort, v: &str, body: &Formula) -> Result<Vec<Value>> {
        let mut inner = env.clone();
        inner.push((v.to_string(), None));
        let mut vals = Vec::new();
        if let Some(atom) = self.collect_atom_sets(m, &inner, sort, v, body, &mut vals)? {
            return Err(CheckError::Unsupported(format!("no finite candidates for `{v}` in `{atom}`")));
        }
        if let Some(x) = self.fresh_value(sort, &vals) {
            vals.push(x);
        }
        Ok(vals)
    }

    fn fresh_value(&self, sort: Sort, avoid: &[Value]) -> Option<Value> {
        const OFF: f64 = 0.618_033_988_749_894_8;
        match sort {
            Sort::Real => {
                let big = avoid.iter().filter_map(|v| if let Value::Real(x) = v { Some(x.abs()) } else { None }).fold(0.0, f64::max);
                Some(Value::Real(big + 1.0 + OFF))
            }
            Sort::Seg => {
                let big = avoid.iter().filter_map(|v| if let Value::Seg(s) = v { Some(s.len()) } else { None }).fold(0.0, f64::max);
                let len = big + 1.0 + OFF;
                let seg = match self.g.edges().first().map(|e| &e.seg) {
                    Some(Segment::Curve(_)) => Segment::line(len, OFF).ok()?,
                    Some(Segment::Region(r)) => Segment::Region(crate::segment::Region {
                        center: Segment::line(len, OFF).ok()?.curve()?.clone(),
                        width: r.width,
                    }),
                    _ => Segment::Interval { len },
                };
                Some(Value::Seg(seg))
            }
            Sort::Vertex => self.g.vertices().map(Value::Vertex).find(|x| !avoid.contains(x)),
            Sort::Obj(_) => None,
        }
    }

    fn decide_by_residue(&self, m: Mask, env: &Env, q: &Formula, why: &str) -> Result<bool> {
        if !self.opts.solver_fallback {
            return Err(CheckError::Unsupported(why.to_string()));
        }
        residue::decide(self, m, env, q).map_err(|e| match e {
            CheckError::Unsupported(more) => CheckError::Unsupported(format!("{why}; {more}")),
            other => other,
        })
    }
}

/// Whether the closed formula holds on `g`.
pub fn check(g: &MetricGraph, f: &Formula) -> Result<bool> {
    Checker::new(g)?.check(f)
}

/// Whether the closed formula holds on `g` in the given world state.
pub fn check_m2cl(g: &MetricGraph, state: &WorldState, f: &Formula) -> Result<bool> {
    Checker::new(g)?.with_state(state).check(f)
}

/// The position denoted by `p`, or `None` when it fails to evaluate.
pub fn eval_pos(g: &MetricGraph, env: &[(String, Value)], p: &PosTerm) -> Result<Option<GraphPosition>> {
    let c = Checker::new(g)?;
    let env: Env = env.iter().map(|(k, v)| (k.clone(), Some(v.clone()))).collect();
    c.pos(c.full_mask(), &env, p)
}

#[cfg(test)]
mod tests;
