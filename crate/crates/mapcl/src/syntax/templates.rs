use super::ast::*;
use super::parser::is_identifier;
use crate::graph::MetricGraph;
use crate::segment::{Prim, Segment};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("formula is not a coalescing of edge atoms")]
    NotCoalescing,
    #[error("segment {0} has no term syntax")]
    NoTerm(String),
}

/// The term denoting a concrete segment.
pub fn seg_term(s: &Segment) -> Result<SegTerm, TemplateError> {
    match s {
        Segment::Interval { len } => Ok(interval(num(*len))),
        Segment::Curve(c) if !c.is_empty() => Ok(c
            .prims
            .iter()
            .map(|p| match *p {
                Prim::Line(a, phi) => line(num(a), num(phi)),
                Prim::Arc(r, phi, theta) => arc(num(r), num(phi), num(theta)),
            })
            .reduce(concat)
            .unwrap()),
        _ => Err(TemplateError::NoTerm(s.to_string())),
    }
}

fn vertex_var(g: &MetricGraph, v: usize) -> String {
    let name = g.name(v);
    let clash = g.names().iter().enumerate().any(|(i, n)| i != v && n == name);
    if is_identifier(name) && !name.starts_with("v_") && !clash {
        name.to_string()
    } else {
        format!("v_{v}")
    }
}

/// Existentially quantifies every vertex over the coalescing of one atom per edge.
pub fn bottom_up(g: &MetricGraph) -> Result<Formula, TemplateError> {
    let vars: Vec<String> = g.vertices().map(|v| vertex_var(g, v)).collect();
    let atoms = g
        .edges()
        .iter()
        .map(|e| Ok(edge(&vars[e.src], seg_term(&e.seg)?, &vars[e.dst])))
        .collect::<Result<Vec<_>, TemplateError>>()?;
    let body = coalesce_all(atoms).unwrap_or(Formula::True);
    Ok(vars.iter().rev().fold(body, |f, v| exists(Sort::Vertex, v, f)))
}

fn wrap(prefix: &[(Sort, String)], body: Formula) -> Formula {
    prefix.iter().rev().fold(body, |f, (s, v)| exists(*s, v, f))
}

/// A closed ring: two parallel lines joined by two half circles.
pub fn ring_spec() -> Formula {
    let a = || real_var("a");
    let r = || real_var("r");
    let phi = || real_var("phi");
    let phi_pi = || add(real_var("phi"), num(std::f64::consts::PI));
    let body = coalesce_all([
        edge("x1", line(a(), phi()), "x2"),
        edge("x2", arc(r(), phi(), num(std::f64::consts::PI)), "x3"),
        edge("x3", line(a(), phi_pi()), "x4"),
        edge("x4", arc(r(), phi_pi(), num(std::f64::consts::PI)), "x1"),
    ])
    .unwrap();
    let mut prefix = vec![(Sort::Real, "a".into()), (Sort::Real, "r".into()), (Sort::Real, "phi".into())];
    prefix.extend((1..=4).map(|k| (Sort::Vertex, format!("x{k}"))));
    wrap(&prefix, body)
}

/// A roundabout with `n` entrances: arcs from each exit to the next entrance and on to the following exit.
pub fn roundabout_spec(n: usize) -> Formula {
    let mut prefix = Vec::new();
    for k in 1..=n {
        prefix.push((Sort::Vertex, format!("ex{k}")));
        prefix.push((Sort::Vertex, format!("en{k}")));
    }
    let mut atoms = Vec::new();
    for k in 1..=n {
        prefix.push((Sort::Seg, format!("s{k}")));
        atoms.push(edge(&format!("ex{k}"), seg_var(&format!("s{k}")), &format!("en{k}")));
    }
    for k in 1..=n {
        let next = k % n + 1;
        let s = format!("s{k}_{next}");
        prefix.push((Sort::Seg, s.clone()));
        atoms.push(edge(&format!("en{k}"), seg_var(&s), &format!("ex{next}")));
    }
    wrap(&prefix, coalesce_all(atoms).unwrap_or(Formula::True))
}

/// An intersection with `n` entrances and exits and one edge per listed `(entrance, exit)` pair, counted from 1.
pub fn intersection_spec(n: usize, connections: &[(usize, usize)]) -> Formula {
    let mut prefix = Vec::new();
    for k in 1..=n {
        prefix.push((Sort::Vertex, format!("en{k}")));
    }
    for k in 1..=n {
        prefix.push((Sort::Vertex, format!("ex{k}")));
    }
    let mut atoms = Vec::new();
    for &(k, j) in connections {
        let s = format!("s{k}_{j}");
        prefix.push((Sort::Seg, s.clone()));
        atoms.push(edge(&format!("en{k}"), seg_var(&s), &format!("ex{j}")));
    }
    wrap(&prefix, coalesce_all(atoms).unwrap_or(Formula::True))
}

/// A single road from `en` to `ex`.
pub fn road_spec() -> Formula {
    wrap(
        &[(Sort::Vertex, "en".into()), (Sort::Vertex, "ex".into()), (Sort::Seg, "s".into())],
        edge("en", seg_var("s"), "ex"),
    )
}

/// Splits a formula into its leading quantifiers and the atoms of its coalescing matrix.
pub fn split_coalescing(f: &Formula) -> Result<(Vec<(bool, Sort, String)>, Vec<Formula>), TemplateError> {
    let mut prefix = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Formula::Exists(s, v, b) => {
                prefix.push((false, *s, v.clone()));
                cur = b;
            }
            Formula::Forall(s, v, b) => {
                prefix.push((true, *s, v.clone()));
                cur = b;
            }
            _ => break,
        }
    }
    let mut atoms = Vec::new();
    collect_atoms(cur, &mut atoms)?;
    Ok((prefix, atoms))
}

fn collect_atoms(f: &Formula, out: &mut Vec<Formula>) -> Result<(), TemplateError> {
    match f {
        Formula::Coalesce(a, b) => {
            collect_atoms(a, out)?;
            collect_atoms(b, out)
        }
        Formula::Edge(..) | Formula::Road(..) => {
            out.push(f.clone());
            Ok(())
        }
        _ => Err(TemplateError::NotCoalescing),
    }
}

fn requantify(prefix: &[(bool, Sort, String)], body: Formula) -> Formula {
    prefix.iter().rev().fold(body, |f, (univ, s, v)| if *univ { forall(*s, v, f) } else { exists(*s, v, f) })
}

/// Requires every atom to hold in some subgraph.
pub fn to_top_down(zeta: &Formula) -> Result<Formula, TemplateError> {
    let (prefix, atoms) = split_coalescing(zeta)?;
    Ok(requantify(&prefix, and_all(atoms.into_iter().map(closure))))
}

/// Chains the closures of consecutive atoms by implication, wrapping around at the end.
pub fn to_weak_top_down(zeta: &Formula) -> Result<Formula, TemplateError> {
    let (prefix, atoms) = split_coalescing(zeta)?;
    let xi: Vec<Formula> = atoms.into_iter().map(closure).collect();
    let n = xi.len();
    let body = and_all((0..n).map(|k| implies(xi[k].clone(), xi[(k + 1) % n].clone())));
    Ok(requantify(&prefix, body))
}
