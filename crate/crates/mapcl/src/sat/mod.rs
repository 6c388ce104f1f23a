//! Satisfiability of formulas over a complete graph specification: a fixed
//! vertex set and named edge slots whose segments are unknown intervals.

mod translate;

pub use translate::{submasks, Mask, SymEdge, SymGraph, TranslateError, Translator};

use crate::arith::{self, SatResult};
use crate::syntax::*;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SatError {
    #[error("spec line {line}: {msg}")]
    Spec { line: usize, msg: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Arith(#[from] arith::TranslateError),
    #[error("undecided: {0}")]
    Unknown(String),
}

/// Vertices `x₁…xₙ` and, per ordered vertex pair, a list of slot variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompleteSpec {
    pub vertices: Vec<String>,
    /// `(src, dst, slot)` in declaration order.
    pub slots: Vec<(usize, usize, String)>,
    pub reals: Vec<String>,
    pub segs: Vec<String>,
}

impl CompleteSpec {
    /// Parses lines `vertices: x1 x2`, `edge x1 -> x2 : s121`, and optional
    /// `reals: …` and `segs: …` declaring further free variables.
    pub fn parse(text: &str) -> Result<CompleteSpec, SatError> {
        let mut spec = CompleteSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let err = |msg: String| SatError::Spec { line: i + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("vertices:") {
                spec.vertices.extend(rest.split_whitespace().map(str::to_string));
            } else if let Some(rest) = line.strip_prefix("reals:") {
                spec.reals.extend(rest.split_whitespace().map(str::to_string));
            } else if let Some(rest) = line.strip_prefix("segs:") {
                spec.segs.extend(rest.split_whitespace().map(str::to_string));
            } else if let Some(rest) = line.strip_prefix("edge ") {
                let (ends, slot) = rest.split_once(':').ok_or_else(|| err("expected `edge x -> y : s`".into()))?;
                let (src, dst) = ends.split_once("->").ok_or_else(|| err("expected `->`".into()))?;
                let find = |name: &str| {
                    spec.vertices.iter().position(|v| v == name.trim()).ok_or_else(|| err(format!("unknown vertex `{}`", name.trim())))
                };
                let (s, d) = (find(src)?, find(dst)?);
                let slot = slot.trim();
                if !is_identifier(slot) {
                    return Err(err(format!("bad slot name `{slot}`")));
                }
                spec.slots.push((s, d, slot.to_string()));
            } else {
                return Err(err(format!("unrecognized line `{line}`")));
            }
        }
        let mut names: Vec<&String> = spec.vertices.iter().chain(spec.slots.iter().map(|s| &s.2)).chain(&spec.reals).chain(&spec.segs).collect();
        let total = names.len();
        names.sort();
        names.dedup();
        if names.len() != total {
            return Err(SatError::Spec { line: 0, msg: "names must be pairwise distinct".into() });
        }
        if spec.vertices.is_empty() {
            return Err(SatError::Spec { line: 0, msg: "at least one vertex is required".into() });
        }
        Ok(spec)
    }

    /// The variables a formula over this spec may use freely.
    pub fn scope(&self) -> Vec<(&str, Sort)> {
        let mut out: Vec<(&str, Sort)> = self.vertices.iter().map(|v| (v.as_str(), Sort::Vertex)).collect();
        out.extend(self.slots.iter().map(|s| (s.2.as_str(), Sort::Seg)));
        out.extend(self.reals.iter().map(|v| (v.as_str(), Sort::Real)));
        out.extend(self.segs.iter().map(|v| (v.as_str(), Sort::Seg)));
        out
    }

    pub fn parse_formula(&self, src: &str) -> Result<Formula, SatError> {
        Ok(parse_with(src, &self.scope())?)
    }

    /// Name of the real variable holding a slot's length.
    pub fn length_var(slot: &str) -> String {
        format!("{slot}'len")
    }

    pub fn sym_graph(&self) -> SymGraph {
        SymGraph {
            n: self.vertices.len(),
            edges: self
                .slots
                .iter()
                .map(|(s, d, name)| SymEdge { src: *s, dst: *d, label: seg_var(name), len: real_var(&Self::length_var(name)) })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SatOptions {
    pub atom_cap: usize,
    /// Restricts every slot length to one of these values.
    pub slot_lengths: Option<Vec<f64>>,
}

impl Default for SatOptions {
    fn default() -> SatOptions {
        SatOptions { atom_cap: arith::DEFAULT_ATOM_CAP, slot_lengths: None }
    }
}

#[derive(Debug, Clone)]
pub struct SatOutcome {
    pub result: SatResult,
    pub residue: Formula,
    pub lra: arith::Lra,
}

/// The segment-logic formula equisatisfiable with the spec together with `phi`.
pub fn residue(spec: &CompleteSpec, phi: &Formula, opts: &SatOptions) -> Result<Formula, SatError> {
    let g = spec.sym_graph();
    let mu: HashMap<String, usize> = spec.vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let mut tr = Translator::new(&g)?;
    let body = tr.tr(g.mask_all(), &mu, phi)?;
    let mut side = Vec::new();
    for (a, (s, d, x)) in spec.slots.iter().enumerate() {
        for (s2, d2, y) in &spec.slots[a + 1..] {
            if (s, d) == (s2, d2) {
                side.push(not(Formula::SegEq(seg_var(x), seg_var(y))));
            }
        }
    }
    for (_, _, x) in &spec.slots {
        let l = real_var(&CompleteSpec::length_var(x));
        side.push(Formula::LenEq(seg_var(x), l.clone()));
        side.push(Formula::Cmp(CmpOp::Gt, l.clone(), num(0.0)));
        if let Some(vals) = &opts.slot_lengths {
            side.push(or_all(vals.iter().map(|v| Formula::Cmp(CmpOp::Eq, l.clone(), num(*v)))));
        }
    }
    side.push(body);
    Ok(and_all(side))
}

pub fn sat(spec: &CompleteSpec, phi: &Formula, opts: &SatOptions) -> Result<SatOutcome, SatError> {
    let residue = residue(spec, phi, opts)?;
    let lra = arith::tr1(&residue)?;
    let result = arith::solve_with_cap(&lra, opts.atom_cap);
    Ok(SatOutcome { result, residue, lra })
}

/// Whether every model of the spec satisfying `phi1` also satisfies `phi2`.
pub fn entails(spec: &CompleteSpec, phi1: &Formula, phi2: &Formula, opts: &SatOptions) -> Result<bool, SatError> {
    match sat(spec, &and(phi1.clone(), not(phi2.clone())), opts)?.result {
        SatResult::Sat { .. } => Ok(false),
        SatResult::Unsat => Ok(true),
        SatResult::Unknown { reason } => Err(SatError::Unknown(reason)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loop_slot() {
        let spec = CompleteSpec::parse("vertices: x1\nedge x1 -> x1 : s111\n").unwrap();
        let phi = spec.parse_formula("exists seg z. edge(x1, z, x1)").unwrap();
        let out = sat(&spec, &phi, &SatOptions::default()).unwrap();
        assert!(out.result.is_sat());
    }

    #[test]
    fn closure_with_length() {
        let spec = CompleteSpec::parse("vertices: x1 x2\nedge x1 -> x2 : s121\nsegs: z\n").unwrap();
        let phi = spec.parse_formula("C(edge(x1, z, x2)) && len(z) = 3").unwrap();
        let SatResult::Sat { witness } = sat(&spec, &phi, &SatOptions::default()).unwrap().result else { panic!() };
        assert_eq!(witness[&arith::seg_length_var("z")], arith::q(3.0));
    }

    #[test]
    fn contradiction_is_unsat() {
        let spec = CompleteSpec::parse("vertices: x1 x2\nedge x1 -> x2 : s121\n").unwrap();
        let phi = spec.parse_formula("exists seg z. edge(x1, z, x2)").unwrap();
        let out = sat(&spec, &and(phi.clone(), not(phi)), &SatOptions::default()).unwrap();
        assert_eq!(out.result, SatResult::Unsat);
    }

    #[test]
    fn chain_ride_spells_concatenation() {
        let spec = CompleteSpec::parse("vertices: x1 x2 x3\nedge x1 -> x2 : a\nedge x2 -> x3 : b\n").unwrap();
        let phi = spec.parse_formula("ride(x1, a ^ b, x3)").unwrap();
        assert!(sat(&spec, &phi, &SatOptions::default()).unwrap().result.is_sat());
        let psi = spec.parse_formula("exists seg z. ride(x1, z, x3) && len(z) = 5 && len(a) = 2 && len(b) = 2").unwrap();
        assert_eq!(sat(&spec, &psi, &SatOptions::default()).unwrap().result, SatResult::Unsat);
    }

    #[test]
    fn parallel_slots_differ() {
        let spec = CompleteSpec::parse("vertices: x1 x2\nedge x1 -> x2 : a\nedge x1 -> x2 : b\n").unwrap();
        let phi = spec.parse_formula("len(a) = 2 && len(b) = 2").unwrap();
        assert_eq!(sat(&spec, &phi, &SatOptions::default()).unwrap().result, SatResult::Unsat);
    }

    #[test]
    fn distance_is_the_shortest_ride() {
        let spec = CompleteSpec::parse("vertices: x1 x2\nedge x1 -> x2 : a\nedge x1 -> x2 : b\n").unwrap();
        let opts = SatOptions::default();
        let phi = spec.parse_formula("len(a) = 2 && len(b) = 3 && dist(x1, x2) = 2").unwrap();
        assert!(sat(&spec, &phi, &opts).unwrap().result.is_sat());
        let psi = spec.parse_formula("len(a) = 2 && len(b) = 3 && dist(x1, x2) = 3").unwrap();
        assert_eq!(sat(&spec, &psi, &opts).unwrap().result, SatResult::Unsat);
    }

    #[test]
    fn spec_errors_carry_lines() {
        let err = CompleteSpec::parse("vertices: x1\nedge x1 -> x9 : s\n").unwrap_err();
        assert!(matches!(err, SatError::Spec { line: 2, .. }));
    }
}
