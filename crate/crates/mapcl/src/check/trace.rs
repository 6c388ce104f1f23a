use super::{Checker, Env, Result, Value};
use crate::sat::Mask;
use crate::syntax::*;

fn verdict(b: bool) -> &'static str {
    if b {
        "#t"
    } else {
        "#f"
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl Checker<'_> {
    fn show(&self, v: &Value) -> String {
        match v {
            Value::Real(x) => format!("{x}"),
            Value::Seg(s) => quote(&serde_json::to_string(s).unwrap_or_default()),
            Value::Vertex(x) => self.g.name(*x).to_string(),
            Value::Obj(i) => self.state.map_or_else(|| format!("#{i}"), |s| s.objects[*i].0.clone()),
        }
    }

    fn trace(&self, m: Mask, env: &mut Env, f: &Formula) -> Result<(bool, String)> {
        let node = |op: &str, b: bool, kids: Vec<String>| format!("({op} {} {})", verdict(b), kids.join(" "));
        Ok(match f {
            Formula::Not(a) => {
                let (x, s) = self.trace(m, env, a)?;
                (!x, node("not", !x, vec![s]))
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                let (x, sa) = self.trace(m, env, a)?;
                let (y, sb) = self.trace(m, env, b)?;
                let (op, r) = match f {
                    Formula::And(..) => ("and", x && y),
                    Formula::Or(..) => ("or", x || y),
                    _ => ("implies", !x || y),
                };
                (r, node(op, r, vec![sa, sb]))
            }
            Formula::Exists(sort @ (Sort::Vertex | Sort::Obj(_)), v, body) | Formula::Forall(sort @ (Sort::Vertex | Sort::Obj(_)), v, body) => {
                let existential = matches!(f, Formula::Exists(..));
                let op = if existential { "exists" } else { "forall" };
                for val in self.domain(m, env, *sort, v, body, existential)? {
                    env.push((v.clone(), Some(val.clone())));
                    let found = self.holds(m, env, body)? == existential;
                    if found {
                        let (_, s) = self.trace(m, env, body)?;
                        env.pop();
                        return Ok((existential, format!("({op} {} ({v} {}) {s})", verdict(existential), self.show(&val))));
                    }
                    env.pop();
                }
                (!existential, format!("({op} {} {v})", verdict(!existential)))
            }
            other => {
                let b = self.holds(m, env, other)?;
                (b, format!("(atom {} {})", verdict(b), quote(&other.to_string())))
            }
        })
    }
}

/// The verdict of `f` as an s-expression over its boolean structure: each
/// node carries `#t` or `#f`, vertex and object quantifiers show the binding
/// that decides them, and remaining subformulas appear as quoted atoms.
pub fn explain(c: &Checker, f: &Formula) -> Result<String> {
    let mut env = Env::new();
    Ok(c.trace(c.full_mask(), &mut env, f)?.1)
}
