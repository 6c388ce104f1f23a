use crate::check::{CheckError, CheckOptions, Checker, Value};
use crate::graph::MetricGraph;
use crate::syntax::{and, closure, exists, implies, parse_with, Formula, ParseError, Sort};
use crate::world::WorldState;

/// A map part, an addressing part and a dynamic part sharing existentially
/// quantified variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub vars: Vec<(String, Sort)>,
    pub psi_map: Formula,
    pub psi_add: Formula,
    pub psi_dyn: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneVerdict {
    pub holds: bool,
    /// Values of the scene variables, printed.
    pub witness: Vec<(String, String)>,
}

impl Scene {
    /// Parses the three parts with `vars` in scope. An empty part is `true`.
    pub fn parse(vars: &[(&str, Sort)], map: &str, add: &str, dynamic: &str) -> Result<Scene, ParseError> {
        let part = |src: &str| if src.trim().is_empty() { Ok(Formula::True) } else { parse_with(src, vars) };
        Ok(Scene {
            vars: vars.iter().map(|(v, s)| (v.to_string(), *s)).collect(),
            psi_map: part(map)?,
            psi_add: part(add)?,
            psi_dyn: part(dynamic)?,
        })
    }

    /// The closed formula: the conjunction of the parts, or with
    /// `top_down` the map's closure implying the other two.
    pub fn formula(&self, top_down: bool) -> Formula {
        let rest = and(self.psi_add.clone(), self.psi_dyn.clone());
        let body = if top_down {
            implies(closure(self.psi_map.clone()), rest)
        } else {
            and(self.psi_map.clone(), rest)
        };
        self.vars.iter().rev().fold(body, |f, (v, s)| exists(*s, v, f))
    }
}

fn show(g: &MetricGraph, state: &WorldState, v: &Value) -> String {
    match v {
        Value::Real(x) => x.to_string(),
        Value::Seg(s) => s.to_string(),
        Value::Vertex(u) => g.name(*u).to_string(),
        Value::Obj(o) => state.objects[*o].0.clone(),
    }
}

/// Whether the scene holds in `state`, with values for its variables.
pub fn check_scene(g: &MetricGraph, state: &WorldState, scene: &Scene, top_down: bool, opts: &CheckOptions) -> Result<SceneVerdict, CheckError> {
    let c = Checker::new(g)?.with_state(state).with_options(opts.clone());
    Ok(match c.witness(&scene.formula(top_down))? {
        Some(w) => SceneVerdict { holds: true, witness: w.iter().map(|(k, v)| (k.clone(), show(g, state, v))).collect() },
        None => SceneVerdict { holds: false, witness: Vec::new() },
    })
}
