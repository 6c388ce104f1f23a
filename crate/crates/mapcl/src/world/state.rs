use crate::graph::{GraphError, GraphPosition, MetricGraph};
use crate::segment::Segment;
use crate::syntax::{Color, ObjKind};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    /// Remaining itinerary.
    pub it: Segment,
    pub pos: GraphPosition,
    pub sp: f64,
    pub wt: f64,
    pub ln: f64,
    pub weight: Option<f64>,
    /// Set once the itinerary is used up.
    pub parked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Light {
    pub pos: GraphPosition,
    pub cl: Color,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sign {
    pub pos: GraphPosition,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Vehicle(Vehicle),
    Light(Light),
    Sign(Sign),
}

impl Object {
    pub fn kind(&self) -> ObjKind {
        match self {
            Object::Vehicle(_) => ObjKind::Vehicle,
            Object::Light(_) => ObjKind::Light,
            Object::Sign(_) => ObjKind::Sign,
        }
    }

    pub fn pos(&self) -> GraphPosition {
        match self {
            Object::Vehicle(v) => v.pos,
            Object::Light(l) => l.pos,
            Object::Sign(s) => s.pos,
        }
    }

    pub fn as_vehicle(&self) -> Option<&Vehicle> {
        match self {
            Object::Vehicle(v) => Some(v),
            _ => None,
        }
    }
}

/// Objects sorted by identifier, at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorldState {
    pub t: f64,
    pub objects: Vec<(String, Object)>,
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::Red => "red",
        Color::Green => "green",
    }
}

fn bad(msg: impl Into<String>) -> GraphError {
    GraphError::Json(msg.into())
}

fn num(v: &Value, key: &str) -> Result<Option<f64>, GraphError> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => x.as_f64().map(Some).ok_or_else(|| bad(format!("`{key}` must be a number"))),
    }
}

impl WorldState {
    pub fn new(t: f64) -> WorldState {
        WorldState { t, objects: Vec::new() }
    }

    /// Inserts or replaces an object, keeping identifiers sorted.
    pub fn insert(&mut self, id: &str, obj: Object) {
        match self.objects.binary_search_by(|(k, _)| k.as_str().cmp(id)) {
            Ok(i) => self.objects[i].1 = obj,
            Err(i) => self.objects.insert(i, (id.to_string(), obj)),
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.objects.binary_search_by(|(k, _)| k.as_str().cmp(id)).ok()
    }

    pub fn get(&self, id: &str) -> Option<&Object> {
        self.index_of(id).map(|i| &self.objects[i].1)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Object> {
        self.index_of(id).map(|i| &mut self.objects[i].1)
    }

    pub fn vehicle(&self, id: &str) -> Option<&Vehicle> {
        self.get(id).and_then(Object::as_vehicle)
    }

    pub fn vehicle_mut(&mut self, id: &str) -> Option<&mut Vehicle> {
        match self.get_mut(id) {
            Some(Object::Vehicle(v)) => Some(v),
            _ => None,
        }
    }

    pub fn to_json(&self, g: &MetricGraph) -> Value {
        let mut objects = Map::new();
        for (id, o) in &self.objects {
            let v = match o {
                Object::Vehicle(c) => {
                    let mut m = json!({
                        "type": "vehicle",
                        "it": c.it,
                        "pos": g.pos_to_json(&c.pos),
                        "sp": c.sp,
                        "wt": c.wt,
                        "ln": c.ln,
                    });
                    if let Some(w) = c.weight {
                        m["weight"] = json!(w);
                    }
                    if c.parked {
                        m["parked"] = json!(true);
                    }
                    m
                }
                Object::Light(l) => json!({"type": "light", "pos": g.pos_to_json(&l.pos), "cl": color_name(l.cl)}),
                Object::Sign(s) => json!({"type": "sign", "pos": g.pos_to_json(&s.pos), "kind": s.kind}),
            };
            objects.insert(id.clone(), v);
        }
        json!({"t": self.t, "objects": objects})
    }

    pub fn from_json(g: &MetricGraph, v: &Value) -> Result<WorldState, GraphError> {
        let t = num(v, "t")?.unwrap_or(0.0);
        let mut state = WorldState::new(t);
        let objs = match v.get("objects") {
            Some(Value::Object(m)) => m,
            None => return Ok(state),
            Some(_) => return Err(bad("`objects` must be a map from identifiers to objects")),
        };
        for (id, o) in objs {
            let ty = o.get("type").and_then(Value::as_str).unwrap_or("vehicle");
            let pos = g.pos_from_json(o.get("pos").ok_or_else(|| bad(format!("object `{id}` has no position")))?)?;
            let obj = match ty {
                "vehicle" => {
                    let it = match o.get("it") {
                        Some(s) => serde_json::from_value(s.clone()).map_err(|e| bad(format!("object `{id}`: {e}")))?,
                        None => g.edges().first().map(|e| e.seg.zero_like()).unwrap_or(Segment::Interval { len: 0.0 }),
                    };
                    let sp = num(o, "sp")?.unwrap_or(0.0);
                    if sp < 0.0 {
                        return Err(bad(format!("object `{id}` has negative speed")));
                    }
                    Object::Vehicle(Vehicle {
                        it,
                        pos,
                        sp,
                        wt: num(o, "wt")?.unwrap_or(0.0),
                        ln: num(o, "ln")?.unwrap_or(1.0),
                        weight: num(o, "weight")?,
                        parked: o.get("parked").and_then(Value::as_bool).unwrap_or(false),
                    })
                }
                "light" => {
                    let cl = match o.get("cl").and_then(Value::as_str) {
                        Some("red") => Color::Red,
                        Some("green") => Color::Green,
                        _ => return Err(bad(format!("light `{id}` needs `cl` red or green"))),
                    };
                    Object::Light(Light { pos, cl })
                }
                "sign" => Object::Sign(Sign {
                    pos,
                    kind: o.get("kind").and_then(Value::as_str).unwrap_or("stop").to_string(),
                }),
                other => return Err(bad(format!("object `{id}` has unknown type `{other}`"))),
            };
            state.insert(id, obj);
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::straight_road;

    #[test]
    fn json_round_trip() {
        let g = straight_road(100.0, 2);
        let mut s = WorldState::new(1.5);
        let e = g.edge_ids().next().unwrap();
        s.insert(
            "ego",
            Object::Vehicle(Vehicle {
                it: Segment::Interval { len: 60.0 },
                pos: g.position(e, 40.0).unwrap(),
                sp: 10.0,
                wt: 0.0,
                ln: 1.0,
                weight: Some(1500.0),
                parked: false,
            }),
        );
        s.insert("st", Object::Sign(Sign { pos: GraphPosition::Vertex(1), kind: "stop".into() }));
        s.insert("l1", Object::Light(Light { pos: GraphPosition::Vertex(0), cl: Color::Red }));
        let v = s.to_json(&g);
        assert_eq!(WorldState::from_json(&g, &v).unwrap(), s);
        let ids: Vec<&str> = s.objects.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(ids, ["ego", "l1", "st"]);
    }

    #[test]
    fn rejects_negative_speed() {
        let g = straight_road(10.0, 1);
        let v = json!({"t": 0, "objects": {"c": {"type": "vehicle", "pos": {"vertex": "x"}, "sp": -1}}});
        assert!(WorldState::from_json(&g, &v).is_err());
    }
}
