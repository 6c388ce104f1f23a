use crate::arith::{q, seg_length_var, Q};
use crate::check::{CheckError, CheckOptions, Checker, Value};
use crate::graph::MetricGraph;
use crate::sat::CompleteSpec;
use crate::segment::Segment;
use crate::syntax::*;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

/// Every graph matching the spec whose slot lengths are drawn from
/// `lengths`, paired with the bindings of vertex and slot names.
pub fn spec_models(spec: &CompleteSpec, lengths: &[f64]) -> Vec<(MetricGraph, Vec<(String, Value)>)> {
    let k = spec.slots.len();
    let mut out = Vec::new();
    let total = lengths.len().pow(k as u32);
    'next: for code in 0..total {
        let mut g = MetricGraph::new();
        let mut bindings = Vec::new();
        for (i, v) in spec.vertices.iter().enumerate() {
            g.add_vertex(v).expect("spec vertices are distinct");
            bindings.push((v.clone(), Value::Vertex(i)));
        }
        let mut c = code;
        for (src, dst, name) in &spec.slots {
            let seg = Segment::interval(lengths[c % lengths.len()]).expect("positive length");
            c /= lengths.len();
            if g.add_edge(*src, *dst, seg.clone()).is_err() {
                continue 'next;
            }
            bindings.push((name.clone(), Value::Seg(seg)));
        }
        out.push((g, bindings));
    }
    out
}

/// Satisfiability of `phi` together with the spec, by model checking every
/// graph of [`spec_models`]. Quantified reals and segments are decided from
/// their candidate values alone, never by the arithmetic solver.
pub fn brute_force_sat(spec: &CompleteSpec, phi: &Formula, lengths: &[f64]) -> Result<bool, CheckError> {
    let opts = CheckOptions { solver_fallback: false, ..CheckOptions::default() };
    let mut undecided = None;
    for (g, bindings) in spec_models(spec, lengths) {
        match Checker::new(&g)?.with_options(opts.clone()).check_in(&bindings, phi) {
            Ok(true) => return Ok(true),
            Ok(false) => {}
            Err(e) => undecided = Some(e),
        }
    }
    undecided.map_or(Ok(false), Err)
}

fn arith(a: &Arith, reals: &BTreeMap<String, Q>) -> Option<Q> {
    match a {
        Arith::Const(c) => Some(q(*c)),
        Arith::Var(v) => reals.get(v).cloned(),
        Arith::Add(x, y) => Some(arith(x, reals)? + arith(y, reals)?),
        Arith::Mul(x, y) => Some(arith(x, reals)? * arith(y, reals)?),
        _ => None,
    }
}

fn seg_len(s: &SegTerm, reals: &BTreeMap<String, Q>, segs: &BTreeMap<String, Q>) -> Option<Q> {
    match s {
        SegTerm::Var(z) => segs.get(z).cloned(),
        SegTerm::Ctor(Ctor::Interval, args) => arith(&args[0], reals).filter(|a| !a.is_negative()),
        SegTerm::Concat(a, b) => Some(seg_len(a, reals, segs)? + seg_len(b, reals, segs)?),
        _ => None,
    }
}

/// Direct evaluation of a quantifier-free interval segment-logic formula,
/// with segments given by their lengths. `None` when a term is undefined.
pub fn sl_eval(f: &Formula, reals: &BTreeMap<String, Q>, segs: &BTreeMap<String, Q>) -> Option<bool> {
    Some(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Cmp(op, a, b) => {
            let (x, y) = (arith(a, reals)?, arith(b, reals)?);
            match op {
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Eq => x == y,
                CmpOp::Ge => x >= y,
                CmpOp::Gt => x > y,
            }
        }
        Formula::LenEq(s, t) => seg_len(s, reals, segs)? == arith(t, reals)?,
        Formula::SegEq(a, b) => seg_len(a, reals, segs)? == seg_len(b, reals, segs)?,
        Formula::Not(a) => !sl_eval(a, reals, segs)?,
        Formula::And(a, b) => sl_eval(a, reals, segs)? && sl_eval(b, reals, segs)?,
        Formula::Or(a, b) => sl_eval(a, reals, segs)? || sl_eval(b, reals, segs)?,
        Formula::Implies(a, b) => !sl_eval(a, reals, segs)? || sl_eval(b, reals, segs)?,
        _ => return None,
    })
}

/// Grid values tried for real variables.
pub fn real_grid() -> Vec<Q> {
    (-4..=4).map(|i| q(i as f64 / 2.0)).collect()
}

/// Grid values tried for segment lengths.
pub fn seg_grid() -> Vec<Q> {
    (0..=4).map(|i| q(i as f64 / 2.0)).collect()
}

/// A grid assignment satisfying the formula, if any.
pub fn grid_search(f: &Formula, reals: &[String], segs: &[String]) -> Option<(BTreeMap<String, Q>, BTreeMap<String, Q>)> {
    let (rg, sg) = (real_grid(), seg_grid());
    let mut idx = vec![0usize; reals.len() + segs.len()];
    loop {
        let r: BTreeMap<String, Q> = reals.iter().zip(&idx).map(|(v, &i)| (v.clone(), rg[i].clone())).collect();
        let s: BTreeMap<String, Q> = segs.iter().zip(&idx[reals.len()..]).map(|(v, &i)| (v.clone(), sg[i].clone())).collect();
        if sl_eval(f, &r, &s) == Some(true) {
            return Some((r, s));
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return None;
            }
            idx[k] += 1;
            let size = if k < reals.len() { rg.len() } else { sg.len() };
            if idx[k] < size {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Splits a solver witness into real values and segment lengths, defaulting to zero.
pub fn split_witness(witness: &BTreeMap<String, Q>, reals: &[String], segs: &[String]) -> (BTreeMap<String, Q>, BTreeMap<String, Q>) {
    let get = |k: &str| witness.get(k).cloned().unwrap_or_else(Q::zero);
    (
        reals.iter().map(|v| (v.clone(), get(v))).collect(),
        segs.iter().map(|z| (z.clone(), get(&seg_length_var(z)))).collect(),
    )
}
